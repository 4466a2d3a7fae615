import numpy as np
import pytest

from maxperiodic.curve import (ContourPath, CurvePoint, RealHyperellipticCurve,
                               Segment, branch_point_loop, circle_path,
                               confocal_loop, continue_w_along,
                               holomorphic_basis_raw, integrate_form,
                               mirror_involution, paper_nu, path_to_point,
                               residue_at, route, third_kind_pair)
from maxperiodic.errors import ValidationError


@pytest.fixture(scope="module")
def curve():
    return RealHyperellipticCurve([-2.0, -1.0, 0.5, 2.0])


def test_curve_constraints():
    with pytest.raises(ValidationError):
        RealHyperellipticCurve([-2.0, -1.0, 2.0, 0.5])   # not sorted
    with pytest.raises(ValidationError):
        RealHyperellipticCurve([-2.0, -1.0, 1.5, 2.0])   # 1 not inside slit
    with pytest.raises(ValidationError):
        RealHyperellipticCurve([-2.0, 1.0, 1.5, 2.0])    # only one negative


def test_eval_w_product(curve):
    assert complex(curve.eval_w(3.0 + 0j)) == pytest.approx(np.sqrt(50.0))
    # real positive beyond the last branch point
    for x in (2.5, 4.0, 10.0):
        w = complex(curve.eval_w(x + 0j))
        assert w.imag == pytest.approx(0.0, abs=1e-14) and w.real > 0


def test_eval_w_slit_imaginary(curve):
    w = complex(curve.eval_w(np.asarray([1.2]), slit_side=1)[0])
    assert abs(w.real) < 1e-14 and w.imag != 0
    wm = complex(curve.eval_w(np.asarray([1.2]), slit_side=-1)[0])
    assert wm == pytest.approx(np.conj(w))


def test_two_sheets(curve):
    z = 0.3 + 0.8j
    assert complex(curve.eval_w(z, sheet=-1)) == pytest.approx(
        -complex(curve.eval_w(z, sheet=1)))


def test_w_squared_identity(curve):
    rng = np.random.default_rng(0)
    z = rng.normal(size=40) + 1j * rng.normal(size=40)
    w = curve.eval_w(z)
    prod = np.ones_like(z)
    for c in curve.branch:
        prod *= z - c
    assert np.max(np.abs(w ** 2 - prod)) < 1e-10 * np.max(np.abs(prod))


def test_mirror_involution(curve):
    p = CurvePoint(0.4 + 0.7j, 1)
    j = mirror_involution(p)
    assert j.z == pytest.approx(np.conj(p.z)) and j.sheet == -1
    assert mirror_involution(j) == p
    # J swaps sheets over real z right of all branch points (w real there)
    q = CurvePoint(3.0 + 0j, 1)
    assert mirror_involution(q).sheet == -1
    assert complex(curve.eval_w(3.0 + 0j)).imag == pytest.approx(0.0)


def test_mirror_fixes_slit_points(curve):
    # on a slit, (x, w_upper) has J-image (x, -conj(w_upper)) = itself
    w = complex(curve.eval_w(np.asarray([1.3]), slit_side=1)[0])
    assert -np.conj(w) == pytest.approx(w)


def test_holomorphic_basis(curve):
    forms = holomorphic_basis_raw(curve)
    assert len(forms) == 1
    n2 = RealHyperellipticCurve([-4.0, -3.0, -2.0, -1.0, 0.5, 2.0])
    forms2 = holomorphic_basis_raw(n2)
    assert len(forms2) == 2
    z = np.asarray([1.5 + 2.0j])
    w = n2.eval_w(z)
    assert complex(forms2[1].eval_zw(z, w)[0]) == pytest.approx(
        complex(z[0] * forms2[0].eval_zw(z, w)[0]))


def test_branch_point_loop_integral(curve):
    om = holomorphic_basis_raw(curve)[0]
    # closed curve loop around a branch point: zero by the residue theorem
    val, err = integrate_form(om, branch_point_loop(curve, -2.0, 0.3), curve)
    assert abs(val) < 1e-10
    # single-turn circles shrink to zero like sqrt(radius)
    mags = []
    for r in (0.2, 0.05, 0.0125):
        v, _ = integrate_form(om, circle_path(-2.0, r), curve)
        mags.append(abs(v))
    assert mags[0] > mags[1] > mags[2]
    assert mags[2] < 0.5 * mags[0]


def test_third_kind_pair_residues(curve):
    P = CurvePoint(0.3 + 0.8j, 1)
    Q = CurvePoint(-0.5 - 0.6j, 1)
    om = third_kind_pair(curve, P, Q)
    assert complex(residue_at(om, P)) == pytest.approx(1.0, abs=1e-8)
    assert complex(residue_at(om, Q)) == pytest.approx(-1.0, abs=1e-8)
    # no other poles: residues at the mirror points vanish
    assert abs(residue_at(om, mirror_involution(P))) < 1e-9
    assert abs(residue_at(om, mirror_involution(Q))) < 1e-9
    # residue theorem: declared residues sum to zero
    assert sum(om.residues.values()) == pytest.approx(0.0)


def test_third_kind_pair_rejects_bad_poles(curve):
    P = CurvePoint(0.3 + 0.8j, 1)
    with pytest.raises(ValidationError):
        third_kind_pair(curve, P, P)
    with pytest.raises(ValidationError):
        third_kind_pair(curve, CurvePoint(-2.0 + 0j, 1), P)


def test_third_kind_infinity_pole(curve):
    P = CurvePoint(0.3 + 0.8j, 1)
    om = third_kind_pair(curve, P, CurvePoint.infinity(1))
    assert complex(residue_at(om, P)) == pytest.approx(1.0, abs=1e-8)
    # residue at inf+ is -1: check via a large circle (sum of enclosed
    # residues on both sheets is minus the two infinity residues)
    loop = ContourPath([
        Segment("arc", (0j, 30.0, 30.0, 0.0, 2 * np.pi), 1),
        Segment("arc", (0j, 30.0, 30.0, 0.0, 2 * np.pi), -1)])
    val, _ = integrate_form(om, loop, curve, tol=1e-11)
    assert complex(val) / (2j * np.pi) == pytest.approx(1.0, abs=1e-7)


def test_paper_nu_divisor(curve):
    nu = paper_nu(curve)
    # simple poles over 0 with opposite residues summing to zero
    r0p = complex(residue_at(nu, CurvePoint(0j, 1), radius=0.05))
    r0m = complex(residue_at(nu, CurvePoint(0j, -1), radius=0.05))
    assert r0p + r0m == pytest.approx(0.0, abs=1e-9)
    assert abs(r0p) > 0.1
    # double zeros at c_1, c_2: the coefficient scales like dist^1 against
    # dz/w (which itself vanishes to order 1 in z - c at a branch point)
    for c in curve.branch[:2]:
        vals = []
        for eps in (1e-2, 1e-3):
            z = np.asarray([c + eps * 1j])
            w = curve.eval_w(z)
            vals.append(abs(nu.eval_zw(z, w)[0] / (1.0 / w[0])))
        assert vals[1] < 0.2 * vals[0]
    # degree bookkeeping: canonical divisor degree 2n-2
    deg = sum(nu.zero_divisor.values()) - sum(nu.pole_divisor.values())
    assert deg == 2 * curve.n - 2


def test_nu_mirror_antisymmetry(curve):
    nu = paper_nu(curve)
    rng = np.random.default_rng(3)
    z = rng.normal(size=100) + 1j * rng.normal(size=100)
    w = curve.eval_w(z)
    assert np.max(np.abs(nu.pullback_conjugate(z, w) + nu.eval_zw(z, w))) \
        < 1e-12


def test_symmetry_tags_random_samples(curve):
    rng = np.random.default_rng(4)
    z = rng.normal(size=100) + 1j * rng.normal(size=100)
    w = curve.eval_w(z)
    for form in holomorphic_basis_raw(curve):
        pc = form.pullback_conjugate(z, w)
        v = form.eval_zw(z, w)
        assert form.symmetry == "odd"
        assert np.max(np.abs(pc + v)) < 1e-12 * max(1, np.max(np.abs(v)))


def test_cauchy_sanity_w_override(curve):
    # genus-0 sanity: w == 1 override, dz/z around the origin
    val, err = integrate_form(lambda z, w: 1.0 / z,
                              circle_path(0.0, 0.05, sheet=0), curve)
    assert complex(val) == pytest.approx(2j * np.pi, abs=1e-10)
    assert err < 1e-10


def test_reversed_path_negates(curve):
    om = holomorphic_basis_raw(curve)[0]
    path = path_to_point(curve, CurvePoint(1.5 + 1.0j, 1))
    v1, _ = integrate_form(om, path, curve)
    v2, _ = integrate_form(om, path.reversed(), curve)
    assert complex(v2) == pytest.approx(-complex(v1), abs=1e-10)


def test_pair_loop_residue(curve):
    P = CurvePoint(0.3 + 0.8j, 1)
    Q = CurvePoint(-0.5 - 0.6j, 1)
    om = third_kind_pair(curve, P, Q)
    val, _ = integrate_form(om, circle_path(P.z, 0.1, sheet=1), curve)
    assert complex(val) == pytest.approx(2j * np.pi, abs=1e-8)


def test_sheet_continuity_on_loops(curve):
    # transporting w by continuity around closed slit-avoiding loops returns
    # the start value
    for loop in (circle_path(0.0, 5.0), confocal_loop(curve, 0, 0.4),
                 circle_path(1.5j, 0.7)):
        decl, cont = continue_w_along(curve, loop)
        assert abs(decl - cont) < 1e-10 * max(1.0, abs(decl))


def test_route_clearance(curve):
    margin = 1e-3 * max(b - a for a, b in curve.slits)
    pts = route(curve, 1.0, -0.3 - 1.2j, side0=1)
    for i in range(len(pts) - 1):
        mid = 0.5 * (pts[i] + pts[i + 1])
        seg_len = abs(pts[i + 1] - pts[i])
        for t in np.linspace(0.05, 0.95, 19):
            q = pts[i] + t * (pts[i + 1] - pts[i])
            d_end = min(abs(q - pts[0]), abs(q - pts[-1]))
            if d_end > 5 * margin:
                assert curve.dist_to_slits(q) > margin


def test_route_avoids_obstacles(curve):
    obstacle = 1.0 + 1.0j
    pts = route(curve, 1.0, 1.0 + 2.0j, side0=1, obstacles=[obstacle],
                clearance=0.3)
    for i in range(len(pts) - 1):
        for t in np.linspace(0, 1, 33):
            q = pts[i] + t * (pts[i + 1] - pts[i])
            assert abs(q - obstacle) > 0.25
