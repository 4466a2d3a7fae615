"""Immersion over the mesh, singular points, ends, and diagnostics.

The immersion X = q0 + Re int Phi is accumulated over a spanning tree of the
mesh edges; every edge integral uses spectral transport of the exponents of
g and f, so the full mesh costs one batched kernel sweep.  Non-tree edges
yield period-closure certificates.  Grid diagnostics evaluate the graph
function u(x1, x2) by Newton inversion of the immersion anchored at mesh
vertices, so no interpolation error enters the PDE residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .curve import CurvePoint, confocal_loop, path_to_point, slit_fatness
from .domain import minkowski_inner, stereographic
from .errors import DiagnosticsFailure, QuadratureError, ValidationError
from .meshing import SurfaceMesh, build_curve_mesh
from .weierstrass import TransportState, partial_matrices, transport_phi

TWO_PI_I = 2.0j * math.pi


# ---------------------------------------------------------------------------
# batched edge transport
# ---------------------------------------------------------------------------

def _edge_nodes(z0s, z1s, order):
    x, T, S = partial_matrices(order)
    t = 0.5 * (x + 1.0)
    z = z0s[:, None] + (z1s - z0s)[:, None] * t[None, :]
    dz = 0.5 * (z1s - z0s)[:, None] * np.ones_like(t)[None, :]
    return z, dz, T, S


def _edge_increments(W, z0s, z1s, order=12):
    """Exponent increments over straight edges; returns cached node data."""
    z, dz, T, S = _edge_nodes(z0s, z1s, order)
    w = kernels.w_branch(z, W.curve.branch)
    th_g, th_f = W.exponent_forms()
    vg = th_g.eval_zw(z, w) * dz
    vf = th_f.eval_zw(z, w) * dz
    return {"z": z, "w": w, "dz": dz, "vg": vg, "vf": vf, "T": T, "S": S,
            "dIg": vg @ T, "dIf": vf @ T}


def _edge_phi(W, cache, Ig0, If0):
    part_g = Ig0[:, None] + cache["vg"] @ cache["S"].T
    part_f = If0[:, None] + cache["vf"] @ cache["S"].T
    phi = W.phi_from_state(cache["z"], cache["w"], part_g, part_f)
    return np.tensordot(phi * cache["dz"], cache["T"], axes=([2], [0]))


def _adaptive_edge(W, z0, z1, lg, lf, tol=1e-11, depth=0, max_depth=30):
    """Recursive transport over one edge: order 12 against order 24, bisect
    until agreement.  Needed only near branch points, where the exponent
    integrands peak like (z - c)^(-1/2)."""
    z0s = np.asarray([z0], dtype=complex)
    z1s = np.asarray([z1], dtype=complex)
    lo = _edge_increments(W, z0s, z1s, 12)
    hi = _edge_increments(W, z0s, z1s, 24)
    st = np.asarray([lg]), np.asarray([lf])
    phi_lo = _edge_phi(W, lo, *st)[:, 0]
    phi_hi = _edge_phi(W, hi, *st)[:, 0]
    err = max(abs(lo["dIg"][0] - hi["dIg"][0]),
              abs(lo["dIf"][0] - hi["dIf"][0]),
              float(np.max(np.abs(phi_lo - phi_hi))))
    if err < tol or depth >= max_depth:
        return phi_hi, complex(hi["dIg"][0]), complex(hi["dIf"][0])
    zm = 0.5 * (z0 + z1)
    p1, g1, f1 = _adaptive_edge(W, z0, zm, lg, lf, 0.5 * tol, depth + 1,
                                max_depth)
    p2, g2, f2 = _adaptive_edge(W, zm, z1, lg + g1, lf + f1, 0.5 * tol,
                                depth + 1, max_depth)
    return p1 + p2, g1 + g2, f1 + f2


def _edge_phi_closed_form(W, z0s, z1s, order=12):
    z, dz, T, S = _edge_nodes(z0s, z1s, order)
    phi = W.phi_coefs(z)
    return np.tensordot(phi * dz, T, axes=([2], [0]))


def _bfs_tree(n_vertices, edges, anchor):
    adj = [[] for _ in range(n_vertices)]
    for ei, (a, b) in enumerate(edges):
        adj[a].append((b, ei, +1))
        adj[b].append((a, ei, -1))
    parent_edge = np.full(n_vertices, -1)
    parent_sign = np.zeros(n_vertices, dtype=int)
    parent = np.full(n_vertices, -1)
    order = [anchor]
    seen = np.zeros(n_vertices, dtype=bool)
    seen[anchor] = True
    head = 0
    while head < len(order):
        v = order[head]
        head += 1
        for u, ei, sgn in adj[v]:
            if not seen[u]:
                seen[u] = True
                parent[u] = v
                parent_edge[u] = ei
                parent_sign[u] = sgn
                order.append(u)
    return order, parent, parent_edge, parent_sign, seen


@dataclass
class SurfaceModel:
    W: object
    mesh: SurfaceMesh
    q0: np.ndarray
    X: np.ndarray                 # (V, 3) unwrapped ambient points
    g_vertex: np.ndarray | None
    Ig: np.ndarray | None
    If: np.ndarray | None
    closure: dict
    periodic: bool = True
    _domain_tree: object = None
    _image_tree: object = None
    _image_ids: np.ndarray = None

    @property
    def x1_wrapped(self):
        if self.periodic:
            return np.mod(self.X[:, 0], 1.0)
        return self.X[:, 0]

    def normals(self):
        if self.g_vertex is None:
            return None
        g = self.g_vertex
        m2 = np.abs(g) ** 2
        d = m2 - 1.0
        return np.stack([2.0 * g.imag / d, -2.0 * g.real / d,
                         (m2 + 1.0) / d], axis=1)

    def metric_factor(self):
        """Conformal factor of the induced metric against |dz|."""
        if self.g_vertex is None or self.If is None:
            return None
        z = self.mesh.z
        w = kernels.w_branch(z, self.W.curve.branch)
        om = self.W.phi30.ref.form.eval_zw(z, w)
        p3 = self.W.r_chi * self.W.phi30.scale * np.exp(self.If) * om
        ag = np.abs(self.g_vertex)
        return 0.5 * np.abs(1.0 / ag - ag) * np.abs(p3)


def integrate_immersion(W, q0, mesh: SurfaceMesh, order=12,
                        closure_tol=1e-5, n_closure=None):
    """X at every mesh vertex via spanning-tree accumulation of edge
    integrals of Phi; aborts when the period-closure residual on non-tree
    edges exceeds closure_tol."""
    q0 = np.asarray(q0, dtype=float)
    E = mesh.edges
    z0s, z1s = mesh.z[E[:, 0]], mesh.z[E[:, 1]]

    if getattr(W, "needs_transport", False):
        cache = _edge_increments(W, z0s, z1s, order)
        check = _edge_increments(W, z0s, z1s, order + 8)
        inc_err = np.maximum(np.abs(cache["dIg"] - check["dIg"]),
                             np.abs(cache["dIf"] - check["dIf"]))
        bad = np.where(inc_err > 1e-11)[0]
        cache["dIg"][:] = check["dIg"]
        cache["dIf"][:] = check["dIf"]
        for ei in bad:
            _, dg, df = _adaptive_edge(W, complex(z0s[ei]), complex(z1s[ei]),
                                       0.0, 0.0)
            cache["dIg"][ei] = dg
            cache["dIf"][ei] = df
        order_v, parent, parent_edge, parent_sign, seen = _bfs_tree(
            mesh.n_vertices, E, mesh.anchor)
        if not np.all(seen):
            raise ValidationError("mesh is not connected")
        Ig = np.zeros(mesh.n_vertices, dtype=complex)
        If = np.zeros(mesh.n_vertices, dtype=complex)
        # anchor exponents by routed integration from the basepoint
        st = W.state_at(CurvePoint(complex(mesh.z[mesh.anchor]), 1))
        Ig[mesh.anchor], If[mesh.anchor] = st.log_g, st.log_f
        for v in order_v[1:]:
            ei, sgn = parent_edge[v], parent_sign[v]
            Ig[v] = Ig[parent[v]] + sgn * cache["dIg"][ei]
            If[v] = If[parent[v]] + sgn * cache["dIf"][ei]
        edge_phi = _edge_phi(W, cache, Ig[E[:, 0]], If[E[:, 0]])  # (3, E)
        edge_phi = edge_phi.T
        for ei in bad:
            phi, _, _ = _adaptive_edge(W, complex(z0s[ei]), complex(z1s[ei]),
                                       complex(Ig[E[ei, 0]]),
                                       complex(If[E[ei, 0]]))
            edge_phi[ei] = phi
        # anchor position by transported integration from the basepoint
        path = path_to_point(W.curve, CurvePoint(complex(mesh.z[mesh.anchor]),
                                                 1),
                             obstacles=W.obstacles,
                             clearance=0.03 * W.curve.span)
        val, _ = transport_phi(W, path, TransportState(0.0, 0.0))
        X = np.zeros((mesh.n_vertices, 3))
        X[mesh.anchor] = q0 + np.real(val)
        g_vertex = W.theta_chi * np.exp(Ig)
    else:
        edge_phi = _edge_phi_closed_form(W, z0s, z1s, order).T
        order_v, parent, parent_edge, parent_sign, seen = _bfs_tree(
            mesh.n_vertices, E, mesh.anchor)
        if not np.all(seen):
            raise ValidationError("mesh is not connected")
        Ig = If = None
        X = np.zeros((mesh.n_vertices, 3))
        X[mesh.anchor] = q0 + W.x_exact_offset(mesh.z[mesh.anchor])
        g_vertex = W.g_of(mesh.z)

    re_phi = np.real(edge_phi)
    for v in order_v[1:]:
        ei, sgn = parent_edge[v], parent_sign[v]
        X[v] = X[parent[v]] + sgn * re_phi[ei]

    # closure on non-tree edges (fundamental cycles of the mesh graph)
    tree_mask = np.zeros(len(E), dtype=bool)
    for v in order_v[1:]:
        tree_mask[parent_edge[v]] = True
    extra = np.where(~tree_mask)[0]
    if n_closure is not None and len(extra) > n_closure:
        step = max(1, len(extra) // n_closure)
        extra = extra[::step]
    resid = X[E[extra, 0]] + re_phi[extra] - X[E[extra, 1]]
    periodic = mesh.periodic
    if periodic:
        resid[:, 0] -= np.rint(resid[:, 0])
    closure = {"period_closure_max": float(np.max(np.abs(resid)))
               if len(extra) else 0.0,
               "n_closure_edges": int(len(extra))}
    if Ig is not None and len(extra):
        cyc = Ig[E[extra, 0]] + cache["dIg"][extra] - Ig[E[extra, 1]]
        k = cyc / TWO_PI_I
        closure["exp_single_valuedness"] = float(
            np.max(np.abs(k - np.rint(k.real))))
    if closure["period_closure_max"] > closure_tol:
        raise QuadratureError(
            "period closure residual "
            f"{closure['period_closure_max']:.3e} exceeds {closure_tol:g}")

    model = SurfaceModel(W, mesh, q0, X, g_vertex, Ig, If, closure, periodic)
    model._domain_tree = cKDTree(np.c_[mesh.z.real, mesh.z.imag])
    pts = np.c_[model.x1_wrapped, X[:, 1]]
    if periodic:
        reps = [pts + np.array([k, 0.0]) for k in (-1.0, 0.0, 1.0)]
        model._image_tree = cKDTree(np.vstack(reps))
        model._image_ids = np.tile(np.arange(mesh.n_vertices), 3)
    else:
        model._image_tree = cKDTree(pts)
        model._image_ids = np.arange(mesh.n_vertices)
    return model


# ---------------------------------------------------------------------------
# pointwise immersion and graph inversion
# ---------------------------------------------------------------------------

def _segments_cross_slits(curve, z0, z1):
    if curve is None:
        return np.zeros(np.shape(z0), dtype=bool)
    bad = np.zeros(np.shape(z0), dtype=bool)
    for a, b in curve.slits:
        straddle = (z0.imag > 0) != (z1.imag > 0)
        denom = z0.imag - z1.imag
        t = np.where(denom != 0, z0.imag / np.where(denom == 0, 1.0, denom),
                     0.5)
        x = z0.real + t * (z1.real - z0.real)
        bad |= straddle & (x >= a) & (x <= b)
    return bad


def immersion_at(model: SurfaceModel, z_targets, order=12, return_phi=False):
    """X at arbitrary domain points, each integrated from its nearest safe
    mesh vertex; optionally also the Phi coefficients at the endpoints."""
    W, mesh = model.W, model.mesh
    z_targets = np.atleast_1d(np.asarray(z_targets, dtype=complex))
    K = len(z_targets)
    _, idx = model._domain_tree.query(np.c_[z_targets.real, z_targets.imag],
                                      k=8)
    idx = np.atleast_2d(idx)
    anchor = idx[:, 0].copy()
    curve = getattr(W, "curve", None)
    bad = _segments_cross_slits(curve, mesh.z[anchor], z_targets)
    for i in np.where(bad)[0]:
        for cand in idx[i]:
            if not _segments_cross_slits(curve, mesh.z[cand:cand + 1],
                                         z_targets[i:i + 1])[0]:
                anchor[i] = cand
                break
        else:
            raise ValidationError("no slit-safe anchor for target "
                                  f"{z_targets[i]:.4g}")
    z0s = mesh.z[anchor]
    if getattr(W, "needs_transport", False):
        cache = _edge_increments(W, z0s, z_targets, order)
        Ig0, If0 = model.Ig[anchor], model.If[anchor]
        phi_int = _edge_phi(W, cache, Ig0, If0).T
        X = model.X[anchor] + np.real(phi_int)
        if return_phi:
            Ig1 = Ig0 + cache["dIg"]
            If1 = If0 + cache["dIf"]
            w1 = kernels.w_branch(z_targets, W.curve.branch)
            phi_end = W.phi_from_state(z_targets, w1, Ig1, If1)
            return X, phi_end
        return X
    phi_int = _edge_phi_closed_form(W, z0s, z_targets, order).T
    X = model.X[anchor] + np.real(phi_int)
    if return_phi:
        return X, W.phi_coefs(z_targets)
    return X


def graph_height(model: SurfaceModel, targets_xy, tol=1e-9, hard_tol=1e-12,
                 max_iter=24, full_output=False):
    """u(x1, x2) by Newton inversion of the horizontal projection of X.

    Targets are points on the base cylinder (or plane); seeds come from the
    nearest mesh vertex in image space.  Iteration continues to hard_tol so
    that second differences of u stay truncation-dominated; points are
    accepted at tol."""
    targets = np.atleast_2d(np.asarray(targets_xy, dtype=float))
    K = len(targets)
    _, j = model._image_tree.query(targets)
    seed_v = model._image_ids[j]
    z = model.mesh.z[seed_v].astype(complex)
    u = model.X[seed_v, 2].copy()
    ok = np.zeros(K, dtype=bool)
    span = getattr(model.W, "curve", None)
    cap = 0.5 * (span.span if span is not None else 1.0)

    for _ in range(max_iter):
        X, phi = immersion_at(model, z, return_phi=True)
        r1 = X[:, 0] - targets[:, 0]
        if model.periodic:
            r1 -= np.rint(r1)
        r2 = X[:, 1] - targets[:, 1]
        res = np.hypot(r1, r2)
        u = X[:, 2]
        ok = res < tol
        if np.all(res < hard_tol):
            break
        a11, a12 = np.real(phi[0]), -np.imag(phi[0])
        a21, a22 = np.real(phi[1]), -np.imag(phi[1])
        det = a11 * a22 - a12 * a21
        det = np.where(np.abs(det) < 1e-300, 1e-300, det)
        dx = (-r1 * a22 + r2 * a12) / det
        dy = (-a11 * r2 + a21 * r1) / det
        step = dx + 1j * dy
        mag = np.abs(step)
        scale = np.where(mag > cap, cap / np.where(mag == 0, 1.0, mag), 1.0)
        z = z + np.where(res < hard_tol, 0.0, step * scale)
    if full_output:
        return u, z, ok
    return u, ok


# ---------------------------------------------------------------------------
# singular points and ends
# ---------------------------------------------------------------------------

@dataclass
class Mark:
    points: np.ndarray          # (n+1, 3), x1 wrapped; q0 first
    eps0: int
    spreads: list
    basepoint_consistency: float


def _fit_ray_limit(levels, values):
    """Limit at level -> 0 along a confocal ray.

    The immersion reflects through the cone point across the oval
    (X(-s) = 2q - X(s)), so X - q is odd in s; fit [1, s, s^3, s^5]."""
    s = np.asarray(levels, dtype=float)
    A = np.stack([np.ones_like(s), s, s ** 3, s ** 5], axis=1)
    coef, *_ = np.linalg.lstsq(A, np.asarray(values), rcond=None)
    return coef[0]


def extract_mark(model: SurfaceModel, eps0=None, n_rings=5,
                 spread_tol=1e-6) -> Mark:
    """Cone points as uniform limits of X along each slit oval.

    q_j is extrapolated along fixed-angle confocal rays; the spread over the
    rays certifies that the whole oval maps to one point."""
    mesh, W = model.mesh, model.W
    curve = W.curve
    n = curve.n
    pts = np.zeros((n + 1, 3))
    spreads = []
    order_slits = [curve.n] + list(range(n))   # a_0 first, then a_1..a_n
    for out_idx, slit in enumerate(order_slits):
        rings = model.mesh.slit_rings[slit][:n_rings]
        if len(rings) < 3:
            raise ValidationError("not enough rings for cone extrapolation")
        # common angles: use the coarsest ring's angle set
        base_angles = rings[-1].angles
        ray_limits = []
        for th in base_angles[:: max(1, len(base_angles) // 24)]:
            levels, vals = [], []
            for rg in rings:
                k = int(np.argmin(np.abs(np.mod(rg.angles - th + math.pi,
                                                2 * math.pi) - math.pi)))
                if abs(np.mod(rg.angles[k] - th + math.pi, 2 * math.pi)
                       - math.pi) > 1e-9:
                    continue
                levels.append(rg.level)
                vals.append(model.X[rg.vertices[k]])
            if len(levels) < 3:
                continue
            vals = np.asarray(vals)
            if model.periodic:
                vals = vals.copy()
                vals[:, 0] -= np.rint(vals[:, 0] - vals[0, 0])
            ray_limits.append([_fit_ray_limit(levels, vals[:, i])
                               for i in range(3)])
        ray_limits = np.asarray(ray_limits)
        if model.periodic:
            ray_limits[:, 0] -= np.rint(ray_limits[:, 0] - ray_limits[0, 0])
        q = ray_limits.mean(axis=0)
        spread = float(np.max(np.abs(ray_limits - q)))
        spreads.append(spread)
        if model.periodic:
            q[0] = np.mod(q[0], 1.0)
        pts[out_idx] = q
    if eps0 is None:
        eps0 = getattr(W, "eps0", 1)
    base_cons = float(np.max(np.abs(
        _wrap_diff(pts[0], model.q0, model.periodic))))
    return Mark(pts, int(eps0), spreads, base_cons)


def _wrap_diff(a, b, periodic):
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    if periodic:
        d[..., 0] -= np.rint(d[..., 0])
    return d


@dataclass
class EndData:
    normal_e1: np.ndarray
    height_e1: float
    scherk_residuals_e1: list
    normal_e2: np.ndarray
    c: float
    offset_e2: float
    scherk_residuals_e2: list


def end_data(model: SurfaceModel) -> EndData:
    """Limit normals, asymptotic heights/offsets and Scherk residuals.

    E1 (z -> 0) has normal (0,0,-1) since g(0) = 0; its height is the limit
    of x3.  E2 (z -> inf) has normal sigma(g(inf)) with vanishing first
    component; the scalar coordinate c = g(inf) lies in (-1, 1), and the
    Lorentz pairing of X with the normal converges at the end."""
    W = model.W
    inner = model.mesh.end_rings["inner"]
    outer = model.mesh.end_rings["outer"]

    # E1: fit x3(r) -> h1 with a linear-in-r correction
    levels = [rg.level for rg in inner]
    means = [float(np.mean(model.X[rg.vertices, 2])) for rg in inner]
    A = np.stack([np.ones(len(levels)), np.asarray(levels)], axis=1)
    coef, *_ = np.linalg.lstsq(A, np.asarray(means), rcond=None)
    h1 = float(coef[0])
    scherk1 = [float(np.max(np.abs(model.X[rg.vertices, 2] - h1)))
               for rg in sorted(inner, key=lambda rg: -rg.level)]

    gi = complex(W.g_at_infinity())
    if abs(gi.imag) > 1e-6:
        raise DiagnosticsFailure(
            f"limit normal at E2 is off the x1 = 0 plane (Im g = {gi.imag:.2e})")
    c = float(gi.real)
    n2 = stereographic(complex(c))
    n2v = np.asarray(tuple(n2), dtype=float)
    pair = []
    for rg in sorted(outer, key=lambda rg: rg.level):
        vals = minkowski_inner(model.X[rg.vertices], n2v)
        pair.append((rg.level, float(np.mean(vals)), vals))
    A = np.stack([np.ones(len(pair)), 1.0 / np.asarray([p[0] for p in pair])],
                 axis=1)
    coef, *_ = np.linalg.lstsq(A, np.asarray([p[1] for p in pair]),
                               rcond=None)
    off = float(coef[0])
    scherk2 = [float(np.max(np.abs(p[2] - off))) for p in pair]
    return EndData(np.array([0.0, 0.0, -1.0]), h1, scherk1, n2v, c, off,
                   scherk2)


# ---------------------------------------------------------------------------
# grid diagnostics
# ---------------------------------------------------------------------------

def sample_grid(model, window, h, cone_points=None, cone_radius=None):
    """u on a regular (x1, x2) grid; cone disks of radius 2h (or the given
    radius) are masked out, as are non-converged targets."""
    x1a, x1b, x2a, x2b = window
    if model.periodic and abs((x1b - x1a) - 1.0) < 1e-12:
        nx = int(round(1.0 / h))
        x1s = x1a + np.arange(nx) * (1.0 / nx)
        periodic_x1 = True
    else:
        x1s = np.arange(x1a, x1b + 0.5 * h, h)
        periodic_x1 = False
    x2s = np.arange(x2a, x2b + 0.5 * h, h)
    X1, X2 = np.meshgrid(x1s, x2s)
    targets = np.c_[X1.ravel(), X2.ravel()]
    u, ok = graph_height(model, targets)
    u = u.reshape(X1.shape)
    ok = ok.reshape(X1.shape)
    if cone_points is not None:
        rad = 2.0 * h if cone_radius is None else cone_radius
        for q in cone_points:
            d1 = X1 - q[0]
            if model.periodic:
                d1 -= np.rint(d1)
            ok &= (d1 ** 2 + (X2 - q[1]) ** 2) > rad ** 2
    return {"x1": x1s, "x2": x2s, "u": u, "ok": ok,
            "periodic_x1": periodic_x1, "h": h}


def pde_residual(grid):
    """Sup of |(1-u1^2) u22 + 2 u1 u2 u12 + (1-u2^2) u11| over interior
    nodes with full stencils, by centered differences."""
    u, ok, h = grid["u"], grid["ok"], grid["h"]

    def shift(a, di, dj):
        out = np.roll(a, (-di, -dj), axis=(0, 1))
        return out

    if grid["periodic_x1"]:
        valid = ok.copy()
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                valid &= shift(ok, di, dj)
        interior = np.zeros_like(ok)
        interior[1:-1, :] = True
        valid &= interior
    else:
        valid = np.zeros_like(ok)
        valid[1:-1, 1:-1] = ok[1:-1, 1:-1]
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                valid[1:-1, 1:-1] &= shift(ok, di, dj)[1:-1, 1:-1]
    u1 = (shift(u, 0, 1) - shift(u, 0, -1)) / (2 * h)
    u2 = (shift(u, 1, 0) - shift(u, -1, 0)) / (2 * h)
    u11 = (shift(u, 0, 1) - 2 * u + shift(u, 0, -1)) / h ** 2
    u22 = (shift(u, 1, 0) - 2 * u + shift(u, -1, 0)) / h ** 2
    u12 = (shift(u, 1, 1) - shift(u, 1, -1) - shift(u, -1, 1)
           + shift(u, -1, -1)) / (4 * h ** 2)
    R = (1 - u1 ** 2) * u22 + 2 * u1 * u2 * u12 + (1 - u2 ** 2) * u11
    if not np.any(valid):
        raise DiagnosticsFailure("no valid grid nodes for the PDE residual")
    return float(np.max(np.abs(R[valid]))), {"gradient_sq": u1 ** 2 + u2 ** 2,
                                             "valid": valid}


def pde_convergence_slope(model, window, h0, refinements=3, cone_points=None,
                          cone_radius=None):
    """log-log slope of the PDE residual over dyadic grid refinements.

    The cone-disk exclusion is frozen well clear of the coarsest stencils so
    that all grids sample essentially the same region and the truncation
    rate is visible (the cone-adjacent fourth derivatives grow like the
    inverse cube of the distance)."""
    if cone_radius is None:
        cone_radius = 5.0 * h0
    hs, rs = [], []
    for k in range(refinements):
        h = h0 / (2 ** k)
        grid = sample_grid(model, window, h, cone_points,
                           cone_radius=cone_radius)
        r, _ = pde_residual(grid)
        hs.append(h)
        rs.append(r)
    slope = np.polyfit(np.log(hs), np.log(rs), 1)[0]
    return float(slope), list(zip(hs, rs))


def spacelike_check(model, window, h, cone_points, ring_radii=None):
    """|grad u| < 1 off the cone disks; ring averages approach 1 at cones."""
    grid = sample_grid(model, window, h, cone_points)
    _, aux = pde_residual(grid)
    gsq = aux["gradient_sq"][aux["valid"]]
    far_max = float(np.sqrt(np.max(gsq)))
    trends = []
    if ring_radii is None:
        ring_radii = [0.1, 0.05, 0.01]
    for q in cone_points:
        vals = []
        for r in ring_radii:
            th = np.linspace(0, 2 * math.pi, 48, endpoint=False)
            tx = np.c_[q[0] + r * np.cos(th), q[1] + r * np.sin(th)]
            txp = np.c_[q[0] + (r + 1e-4) * np.cos(th),
                        q[1] + (r + 1e-4) * np.sin(th)]
            u0, ok0 = graph_height(model, tx)
            u1, ok1 = graph_height(model, txp)
            du = np.abs(u1 - u0) / 1e-4
            vals.append(float(np.mean(du[ok0 & ok1])))
        trends.append(vals)
    return {"far_field_max_gradient": far_max, "ring_radii": ring_radii,
            "ring_gradients": trends}


def cone_asymptotics(model, mark: Mark, ring_radii=None, n_dirs=32):
    """Radial slope of u around each cone point: (u(ring) - u(q)) / r.

    The mean slope tends to 1 and the per-direction spread to 0 as the ring
    shrinks onto the cone."""
    if ring_radii is None:
        ring_radii = [0.1, 0.05, 0.01]
    table = []
    for qi, q in enumerate(mark.points):
        rows = []
        for r in ring_radii:
            th = np.linspace(0, 2 * math.pi, n_dirs, endpoint=False)
            tx = np.c_[q[0] + r * np.cos(th), q[1] + r * np.sin(th)]
            u, ok = graph_height(model, tx)
            slopes = np.abs(u - q[2]) / r
            rows.append({"r": r, "slope_mean": float(np.mean(slopes[ok])),
                         "slope_spread": float(np.ptp(slopes[ok]))})
        table.append(rows)
    return table


# ---------------------------------------------------------------------------
# period-closure table over the canonical cycles
# ---------------------------------------------------------------------------

def period_closure_table(W, periods):
    """Re of the loop integral of Phi over the 2n+1 cycles a_1..a_n,
    b_1..b_n and the end loop around z = 0, with the distance of each to
    the group lattice Z (1,0,0)."""
    from .homology import build_basis
    from .weierstrass import end_cycle, phi_loop_integral
    curve = W.curve
    rows = []
    for j in range(curve.n):
        s = slit_fatness(curve, j, clear_points=[o.real for o in W.obstacles])
        loop = confocal_loop(curve, j, s)
        val = np.real(phi_loop_integral(W, loop))
        rows.append(("a_%d" % (j + 1), val))
    basis = build_basis(curve, obstacles=W.obstacles,
                        clearance=0.04 * curve.span)
    if periods.basis.orientation < 0:
        for bc in basis.b_cycles:
            bc.path = bc.path.reversed()
    for j, bc in enumerate(basis.b_cycles):
        val = np.real(phi_loop_integral(W, bc.path))
        rows.append(("b_%d" % (j + 1), val))
    val = np.real(phi_loop_integral(W, end_cycle(curve)))
    rows.append(("end_0", val))
    out = []
    for name, v in rows:
        dist = float(np.sqrt((v[0] - np.rint(v[0])) ** 2 + v[1] ** 2
                             + v[2] ** 2))
        out.append({"cycle": name, "re_period": [float(x) for x in v],
                    "lattice_distance": dist})
    return out


# ---------------------------------------------------------------------------
# the coordinate chart s2 = (mark, c) and its finite-difference Jacobian
# ---------------------------------------------------------------------------

def s2_probe(W, q0, sigmas=(0.02, 0.03, 0.045, 0.0675, 0.10125)):
    """Mark and end coordinate without building a mesh: X is probed along
    the top confocal ray of each slit and extrapolated to the oval."""
    curve = W.curve
    n = curve.n
    pts = np.zeros((n + 1, 3))
    order_slits = [curve.n] + list(range(n))
    for out_idx, slit in enumerate(order_slits):
        a, b = curve.slits[slit]
        m, L = 0.5 * (a + b), 0.5 * (b - a)
        smax = 0.8 * slit_fatness(curve, slit,
                                  clear_points=[o.real for o in W.obstacles])
        svals = [s * smax / 0.10125 for s in sigmas]
        vals = []
        for s in svals:
            z = m + 1j * L * math.sinh(s)
            path = path_to_point(curve, CurvePoint(complex(z), 1),
                                 obstacles=W.obstacles,
                                 clearance=0.03 * curve.span)
            val, _ = transport_phi(W, path, TransportState(0.0, 0.0))
            vals.append(np.asarray(q0, dtype=float) + np.real(val))
        vals = np.asarray(vals)
        vals[:, 0] -= np.rint(vals[:, 0] - vals[0, 0])
        pts[out_idx] = [_fit_ray_limit(svals, vals[:, i]) for i in range(3)]
    pts[:, 0] = np.mod(pts[:, 0], 1.0)
    c = float(np.real(W.g_at_infinity()))
    return pts, c


def s2_vector(pts, c):
    return np.concatenate([pts.ravel(), [c]])


def s2_of_params(branch, q0, eps0=1, section_index=None, divisor=None,
                 seed_divisor=None):
    """Full fast pipeline from parameters to the s2 tuple.

    Either a section index (divisor solved by Jacobi inversion, with an
    optional continuation seed) or an explicit divisor must be given."""
    from .curve import RealHyperellipticCurve
    from .homology import dual_basis_and_periods
    from .jacobian import JacobianLattice, solve_divisor, spinor_sections
    from .jacobian import Divisor as Dv
    from .weierstrass import build_weierstrass

    curve = RealHyperellipticCurve(branch)
    pd = dual_basis_and_periods(curve)
    lat = JacobianLattice(pd.Pi)
    if divisor is None:
        secs = spinor_sections(curve, pd, lat)
        sec = secs[section_index]
        if seed_divisor is not None:
            divisor = _continue_divisor(curve, pd, lat, sec, seed_divisor)
        else:
            divisor = solve_divisor(curve, pd, sec, lat)
    W = build_weierstrass(curve, pd, divisor, eps0=eps0, q0=q0, certify=False)
    pts, c = s2_probe(W, q0)
    return s2_vector(pts, c), {"divisor": divisor, "W": W}


def _continue_divisor(curve, periods, lattice, section, seed):
    from .jacobian import _newton, abel_map_point, Divisor as Dv
    target = (section.point.rep
              - abel_map_point(curve, periods, CurvePoint(0j, 1)))
    cache = {}

    def phi_pt(z, sheet):
        key = (complex(z), sheet)
        if key not in cache:
            cache[key] = abel_map_point(curve, periods,
                                        CurvePoint(complex(z), sheet))
        return cache[key]

    zs = [complex(p.z) for p, m in seed.points for _ in range(m)]
    sol = _newton(curve, periods, lattice, zs, [1] * len(zs), target,
                  1e-10, 60, phi_pt)
    if sol is None:
        raise ValidationError("divisor continuation failed")
    return Dv.of(*(CurvePoint(z, 1) for z in sol[0]))


def s2_jacobian(branch, q0, eps0=1, section_index=1, h_branch=2e-4,
                h_q0=1e-4):
    """Central finite-difference Jacobian of s2 with respect to the naive
    input parameters (the 2n+2 branch points and the 3 components of q0);
    returns (J, singular values, base s2)."""
    branch = np.asarray(branch, dtype=float)
    q0 = np.asarray(q0, dtype=float)
    base, aux = s2_of_params(branch, q0, eps0, section_index)
    seed = aux["divisor"]
    n_out = len(base)
    params = len(branch) + 3
    J = np.zeros((n_out, params))

    def wrap_to(v, ref):
        v = v.copy()
        n1 = (len(v) - 1) // 3
        for j in range(n1):
            v[3 * j] = ref[3 * j] + (v[3 * j] - ref[3 * j]
                                     - np.rint(v[3 * j] - ref[3 * j]))
        return v

    col = 0
    for i in range(len(branch)):
        for s, sign in ((h_branch, 1.0), (-h_branch, -1.0)):
            b2 = branch.copy()
            b2[i] += s
            v, _ = s2_of_params(b2, q0, eps0, section_index,
                                seed_divisor=seed)
            J[:, col] += sign * wrap_to(v, base) / (2 * h_branch)
        col += 1
    for i in range(3):
        for s, sign in ((h_q0, 1.0), (-h_q0, -1.0)):
            q2 = q0.copy()
            q2[i] += s
            v, _ = s2_of_params(branch, q2, eps0, section_index,
                                seed_divisor=seed)
            J[:, col] += sign * wrap_to(v, base) / (2 * h_q0)
        col += 1
    sv = np.linalg.svd(J, compute_uv=False)
    return J, sv, base


# ---------------------------------------------------------------------------
# convergence demo
# ---------------------------------------------------------------------------

def convergence_demo(branch_list, q0, eps0=1, section_index=1, window=None,
                     h=0.05, mesh_vertices=5200):
    """u_k on a fixed window for parameter sets converging to the last one;
    reports sup-window errors and mark convergence."""
    from .curve import RealHyperellipticCurve
    from .homology import dual_basis_and_periods
    from .jacobian import JacobianLattice, solve_divisor, spinor_sections
    from .meshing import MeshSpec
    from .weierstrass import build_weierstrass

    models = []
    marks = []
    seed = None
    for branch in branch_list:
        curve = RealHyperellipticCurve(branch)
        pd = dual_basis_and_periods(curve)
        lat = JacobianLattice(pd.Pi)
        secs = spinor_sections(curve, pd, lat)
        sec = secs[section_index]
        if seed is None:
            D = solve_divisor(curve, pd, sec, lat)
        else:
            D = _continue_divisor(curve, pd, lat, sec, seed)
        seed = D
        W = build_weierstrass(curve, pd, D, eps0=eps0, q0=q0, certify=False)
        mesh = build_curve_mesh(curve,
                                spec=MeshSpec(target_vertices=mesh_vertices),
                                obstacles=W.obstacles)
        model = integrate_immersion(W, q0, mesh)
        models.append(model)
        marks.append(extract_mark(model))
    if window is None:
        q = marks[-1].points
        window = (0.0, 1.0, float(np.min(q[:, 1]) - 0.6),
                  float(np.max(q[:, 1]) + 0.6))
    grids = [sample_grid(m, window, h,
                         cone_points=[tuple(p[:2]) for p in mk.points])
             for m, mk in zip(models, marks)]
    ref = grids[-1]
    sups = []
    for gkey in grids[:-1]:
        both = gkey["ok"] & ref["ok"]
        sups.append(float(np.max(np.abs(gkey["u"][both] - ref["u"][both]))))
    mark_err = [float(np.max(np.abs(_wrap_diff(mk.points, marks[-1].points,
                                               True))))
                for mk in marks[:-1]]
    return {"window": window, "sup_errors": sups, "mark_errors": mark_err}
