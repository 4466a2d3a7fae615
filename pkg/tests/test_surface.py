import numpy as np
import pytest

from maxperiodic.curve import CurvePoint, path_to_point
from maxperiodic.surface import (cone_asymptotics, convergence_demo, end_data,
                                 graph_height, immersion_at,
                                 pde_convergence_slope, period_closure_table,
                                 s2_jacobian, s2_of_params, spacelike_check)
from maxperiodic.weierstrass import TransportState, transport_phi

BRANCH = [-2.0, -1.0, 0.5, 2.0]


def test_closure_certificates(std_model):
    assert std_model.closure["period_closure_max"] < 1e-6
    assert std_model.closure["exp_single_valuedness"] < 1e-8


def test_anchor_consistency(std_curve, std_W, std_model):
    # X at a probe point from the mesh agrees with a direct routed
    # integration from the basepoint (independent homotopic path)
    z = 1.2 + 1.4j
    Xm = immersion_at(std_model, np.asarray([z]))[0]
    path = path_to_point(std_curve, CurvePoint(z, 1),
                         obstacles=std_W.obstacles, clearance=0.4)
    val, _ = transport_phi(std_W, path, TransportState(0.0, 0.0))
    assert np.max(np.abs(Xm - np.real(val))) < 1e-6


def test_basepoint_maps_to_q0(std_model, std_mark):
    assert std_mark.basepoint_consistency < 1e-6
    # stored q0 is the input marked point
    assert np.allclose(std_model.q0, 0.0)


def test_mark_spreads(std_mark):
    assert all(s < 1e-6 for s in std_mark.spreads)
    assert std_mark.points.shape == (2, 3)
    assert std_mark.eps0 == 1


def test_mark_order_permutation(std_mark):
    # relabeling the mark permutes the same underlying point set
    pts = {tuple(np.round(p, 8)) for p in std_mark.points}
    perm = std_mark.points[::-1]
    assert {tuple(np.round(p, 8)) for p in perm} == pts


def test_vertex_normals_match_gradient(std_model):
    # the stored normal sigma(g) determines grad u = (n1, n2)/n3; check
    # against finite differences of the resampled graph
    normals = std_model.normals()
    k = np.argsort(np.abs(std_model.mesh.z - (0.9 + 1.1j)))[0]
    n = normals[k]
    x1, x2 = std_model.x1_wrapped[k], std_model.X[k, 1]
    eps = 1e-5
    up, _ = graph_height(std_model, [[x1 + eps, x2], [x1 - eps, x2],
                                     [x1, x2 + eps], [x1, x2 - eps]])
    g1 = (up[0] - up[1]) / (2 * eps)
    g2 = (up[2] - up[3]) / (2 * eps)
    assert g1 == pytest.approx(n[0] / n[2], abs=1e-6)
    assert g2 == pytest.approx(n[1] / n[2], abs=1e-6)
    # and |grad u| = 2|g|/(1 + |g|^2)
    ag = abs(std_model.g_vertex[k])
    assert np.hypot(g1, g2) == pytest.approx(2 * ag / (1 + ag ** 2), abs=1e-6)


def test_metric_factor_positive_off_ovals(std_model):
    lam = std_model.metric_factor()
    d = np.array([std_model.W.curve.dist_to_slits(z)
                  for z in std_model.mesh.z])
    inner = d > 0.1
    assert np.all(lam[inner] > 0)
    # and the factor decays approaching the ovals
    assert lam[d < 0.02].mean() < lam[inner].mean()


def test_graph_single_valued(std_model, std_mark):
    # no two mesh vertices share a base point while differing in height
    pts = np.c_[std_model.x1_wrapped, std_model.X[:, 1]]
    u = std_model.X[:, 2]
    from scipy.spatial import cKDTree
    tree = cKDTree(pts)
    pairs = tree.query_pairs(1e-4, output_type="ndarray")
    if len(pairs):
        assert np.max(np.abs(u[pairs[:, 0]] - u[pairs[:, 1]])) < 1e-3


def test_wrap_consistency_across_faces(std_model):
    # the unwrapped x1 of a full annulus necessarily jumps by one period
    # across a seam; every face edge must be within 0.5 of an integer shift
    # and all but the thin seam must have shift 0
    tris = std_model.mesh.tris
    x1 = std_model.X[:, 0]
    jumps = []
    for i, j in ((0, 1), (1, 2), (2, 0)):
        d = x1[tris[:, i]] - x1[tris[:, j]]
        assert np.max(np.abs(d - np.rint(d))) < 0.5
        jumps.append(np.rint(d) != 0)
    seam = np.any(np.stack(jumps), axis=0)
    assert seam.mean() < 0.05


def test_end_data(std_model):
    ed = end_data(std_model)
    assert np.allclose(ed.normal_e1, [0.0, 0.0, -1.0])
    assert -1.0 < ed.c < 1.0
    # Scherk residuals decay monotonically toward each end
    s1 = ed.scherk_residuals_e1
    assert all(s1[i] > s1[i + 1] for i in range(len(s1) - 1))


def test_pde_slope(std_model):
    slope, table = pde_convergence_slope(std_model, (0.0, 1.0, 0.5, 0.95),
                                         0.02, 3)
    assert abs(slope - 2.0) <= 0.3
    rs = [r for _, r in table]
    assert rs[0] > rs[1] > rs[2]


def test_spacelike(std_model, std_mark):
    cones = [tuple(p[:2]) for p in std_mark.points]
    out = spacelike_check(std_model, (0.0, 1.0, -0.8, 1.0), 0.025, cones)
    assert out["far_field_max_gradient"] < 1.0
    for trend in out["ring_gradients"]:
        assert trend[0] < trend[1] < trend[2] <= 1.0 + 1e-9


def test_cone_slopes(std_model, std_mark):
    table = cone_asymptotics(std_model, std_mark)
    for rows in table:
        means = [r["slope_mean"] for r in rows]
        spreads = [r["slope_spread"] for r in rows]
        assert means[0] < means[1] < means[2]
        assert abs(means[2] - 1.0) < 1e-2
        assert spreads[2] < spreads[0]


def test_period_closure_cycles(std_W, std_periods, std_mark):
    rows = period_closure_table(std_W, std_periods)
    names = [r["cycle"] for r in rows]
    assert names == ["a_1", "b_1", "end_0"]
    by = {r["cycle"]: r for r in rows}
    assert by["a_1"]["lattice_distance"] < 1e-6
    assert by["end_0"]["lattice_distance"] < 1e-6
    assert np.allclose(by["end_0"]["re_period"], [1.0, 0.0, 0.0], atol=1e-6)
    # mirror-symmetric b-cycles satisfy Re period = 2 (q_j - q_0) instead of
    # lying in the translation lattice
    d = std_mark.points[1] - std_mark.points[0]
    d[0] -= np.rint(d[0] - 0.5)
    expect = 2.0 * d
    got = np.asarray(by["b_1"]["re_period"])
    got[0] -= np.rint(got[0] - expect[0])
    assert np.max(np.abs(got - expect)) < 1e-5


def test_s2_translation_equivariance(std_divisor):
    v0, _ = s2_of_params(BRANCH, (0.0, 0.0, 0.0), 1, 1,
                         seed_divisor=std_divisor)
    v1, _ = s2_of_params(BRANCH, (0.0, 0.3, 0.0), 1, 1,
                         seed_divisor=std_divisor)
    shift = v1 - v0
    assert shift[1] == pytest.approx(0.3, abs=1e-8)
    assert shift[4] == pytest.approx(0.3, abs=1e-8)
    assert abs(shift[0]) < 1e-8 and abs(shift[2]) < 1e-8
    assert abs(shift[-1]) < 1e-10      # c depends only on g(inf)


def test_s2_matches_mesh_mark(std_mark, std_divisor):
    v, _ = s2_of_params(BRANCH, (0.0, 0.0, 0.0), 1, 1,
                        seed_divisor=std_divisor)
    q1 = v[3:6]
    assert np.max(np.abs(q1 - std_mark.points[1])) < 1e-6


def test_s2_jacobian_gauge_direction(std_divisor):
    J, sv, base = s2_jacobian(BRANCH, (0.0, 0.0, 0.0), 1, 1)
    # the conformal rescaling of the branch points is an exact gauge
    # direction, so the 7x7 Jacobian has rank 6 with a clean spectral gap
    assert len(sv) == 7
    assert sv[5] > 1e-3
    assert sv[6] < 1e-6 * sv[0]
    gauge = np.concatenate([np.asarray(BRANCH), np.zeros(3)])
    gauge /= np.linalg.norm(gauge)
    assert np.linalg.norm(J @ gauge) < 1e-6


def test_convergence_demo_constant_sequence(std_divisor):
    out = convergence_demo([BRANCH, BRANCH], (0.0, 0.0, 0.0), 1, 1,
                           h=0.08, mesh_vertices=3200)
    assert out["sup_errors"][0] < 1e-9
    assert out["mark_errors"][0] < 1e-9
