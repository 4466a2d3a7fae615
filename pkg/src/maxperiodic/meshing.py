"""Domain meshes: confocal refinement around the slits, exponential annuli
toward the punctures, Delaunay triangulation with slit-aware pruning.

The slit patches use confocal elliptic coordinates, so the innermost rings
hug the ovals from both sides and cone-point data can be extrapolated along
fixed-angle rays; the grading ratio between rings is 1.3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay

from .curve import slit_fatness


@dataclass
class MeshSpec:
    target_vertices: int = 20000
    sigma_min: float = 0.012
    grading: float = 1.3
    n_theta: int = 64
    r_min: float | None = None       # inner end radius (puncture at 0)
    r_max: float | None = None       # outer end radius (puncture at inf)
    obstacle_radius_frac: float = 0.015


@dataclass
class Ring:
    level: float                 # sigma for slit rings, radius for end rings
    vertices: np.ndarray         # indices ordered by angle
    angles: np.ndarray


@dataclass
class SurfaceMesh:
    z: np.ndarray                # (V,) complex
    tris: np.ndarray             # (T, 3) int
    edges: np.ndarray            # (E, 2) int
    anchor: int
    slit_rings: dict             # slit index -> [Ring] innermost first
    end_rings: dict              # "inner"/"outer" -> [Ring]
    periodic: bool = True
    meta: dict = field(default_factory=dict)

    @property
    def n_vertices(self):
        return len(self.z)


def _edges_of(tris):
    e = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    e = np.sort(e, axis=1)
    return np.unique(e, axis=0)


def _prune_slit_crossings(zs, tris, slits):
    """Drop triangles with an edge crossing a slit segment on the real axis."""
    keep = np.ones(len(tris), dtype=bool)
    for (a, b) in slits:
        for i, j in ((0, 1), (1, 2), (2, 0)):
            p = zs[tris[:, i]]
            q = zs[tris[:, j]]
            straddle = (p.imag > 0) != (q.imag > 0)
            denom = p.imag - q.imag
            t = np.where(np.abs(denom) > 0, p.imag / np.where(denom == 0, 1.0,
                                                              denom), 0.5)
            x = p.real + t * (q.real - p.real)
            cross = straddle & (x >= a - 1e-12) & (x <= b + 1e-12)
            # edges touching the axis exactly at the slit (both on it) too
            on_axis = (p.imag == 0) & (q.imag == 0)
            inside = on_axis & (np.minimum(p.real, q.real) < b) & \
                (np.maximum(p.real, q.real) > a)
            keep &= ~(cross | inside)
    return tris[keep]


def _component_of(tris, n_vertices, seed_vertex):
    """Vertex mask of the triangle-connected component containing the seed."""
    parent = np.arange(n_vertices)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for t in tris:
        a = find(t[0])
        for v in t[1:]:
            b = find(v)
            parent[b] = a
    root = find(seed_vertex)
    return np.fromiter((find(i) == root for i in range(n_vertices)),
                       dtype=bool, count=n_vertices)


def build_curve_mesh(curve, spec: MeshSpec = None, obstacles=()) -> SurfaceMesh:
    """Mesh of the + sheet domain: slit complement with the punctures 0 and
    infinity excised at r_min / r_max."""
    if spec is None:
        spec = MeshSpec()
    span = curve.span
    r_min = spec.r_min
    if r_min is None:
        gap0 = min(abs(curve.branch[2 * curve.n]), curve.branch[2 * curve.n + 1])
        r_min = 0.08 * gap0
    r_max = spec.r_max if spec.r_max is not None else 6.0 * span

    points = []
    ring_info = []    # (kind, key, level, start_index, count)

    # confocal patches around each slit
    sigma_maxes = []
    for idx, (a, b) in enumerate(curve.slits):
        m, L = 0.5 * (a + b), 0.5 * (b - a)
        smax = 0.9 * slit_fatness(curve, idx,
                                  clear_points=[o.real for o in obstacles])
        sigma_maxes.append(smax)
        n_rings = max(4, int(math.log(smax / spec.sigma_min)
                             / math.log(spec.grading)) + 1)
        sig = spec.sigma_min * spec.grading ** np.arange(n_rings)
        sig = sig[sig <= smax]
        if len(sig) < 4:
            sig = np.linspace(spec.sigma_min, smax, 4)
        for s in sig:
            th = np.linspace(0.0, 2.0 * math.pi, spec.n_theta, endpoint=False)
            zs = m + L * np.cosh(s) * np.cos(th) + 1j * L * np.sinh(s) * np.sin(th)
            ring_info.append(("slit", idx, float(s), len(points), len(zs), th))
            points.extend(zs.tolist())

    # global polar grid with exponential grading toward both punctures
    budget = max(spec.target_vertices - len(points), 800)
    n_ang = max(36, spec.n_theta // 2 * 2)
    n_rad = max(10, budget // n_ang)
    radii = np.exp(np.linspace(math.log(r_min), math.log(r_max), n_rad))
    for k, rr in enumerate(radii):
        th = np.linspace(0.0, 2.0 * math.pi, n_ang, endpoint=False)
        th = th + (0.5 * (rr / r_max) * (2 * math.pi / n_ang))  # stagger
        zs = rr * np.exp(1j * th)
        if k < 4:
            ring_info.append(("end", "inner", float(rr), len(points), len(zs),
                              th))
        if k >= len(radii) - 4:
            ring_info.append(("end", "outer", float(rr), len(points), len(zs),
                              th))
        points.extend(zs.tolist())

    # rings around obstacle points (divisor points and their conjugates);
    # the punctures at 0 and infinity are already excised by the annulus
    rad_obs = spec.obstacle_radius_frac * span
    obstacles = [complex(o) for o in obstacles
                 if r_min + rad_obs < abs(complex(o)) < r_max - rad_obs]
    for o in obstacles:
        for rr in (rad_obs, 2.2 * rad_obs):
            th = np.linspace(0.0, 2.0 * math.pi, 16, endpoint=False)
            points.extend((complex(o) + rr * np.exp(1j * th)).tolist())

    pts = np.asarray(points, dtype=complex)

    # drop points inside slit patches (except the patch's own), near slits,
    # outside the annulus, or inside obstacle cores
    keep = np.ones(len(pts), dtype=bool)
    owner = np.full(len(pts), -1)
    for kind, key, level, start, count, th in ring_info:
        if kind == "slit":
            owner[start:start + count] = key
    for idx, (a, b) in enumerate(curve.slits):
        m, L = 0.5 * (a + b), 0.5 * (b - a)
        u = (pts - m) / L
        sig = np.abs(np.real(np.arccosh(u.astype(complex))))
        inside = sig < sigma_maxes[idx] * 0.999
        keep &= ~(inside & (owner != idx))
    r = np.abs(pts)
    keep &= (r >= r_min * 0.999) & (r <= r_max * 1.001)
    for o in obstacles:
        keep &= ~(np.abs(pts - complex(o)) < 0.9 * rad_obs)
    keep_idx = np.where(keep)[0]
    remap = -np.ones(len(pts), dtype=int)
    remap[keep_idx] = np.arange(len(keep_idx))
    pts = pts[keep_idx]

    tris = Delaunay(np.c_[pts.real, pts.imag]).simplices
    tris = _prune_slit_crossings(pts, tris, curve.slits)
    tris = _drop_outer_caps(pts, tris, r_max)
    # Delaunay bridges the excised holes (inner annulus, obstacle cores)
    # with chords running through the poles; drop those triangles
    cen = pts[tris].mean(axis=1)
    keep_t = np.abs(cen) > r_min * 0.995
    for o in obstacles:
        keep_t &= np.abs(cen - complex(o)) > 0.75 * rad_obs
    tris = tris[keep_t]

    # anchor near the basepoint lift
    anchor_target = complex(curve.basepoint_z, 0.35 * (curve.slits[-1][1]
                                                       - curve.slits[-1][0]))
    anchor = int(np.argmin(np.abs(pts - anchor_target)))
    mask = _component_of(tris, len(pts), anchor)
    tris = tris[np.all(mask[tris], axis=1)]
    pts, tris, anchor, remap2 = _compact(pts, tris, anchor)

    mesh = SurfaceMesh(pts, tris, _edges_of(tris), anchor, {}, {},
                       periodic=True,
                       meta={"r_min": r_min, "r_max": r_max})
    for kind, key, level, start, count, th in ring_info:
        ids = remap[np.arange(start, start + count)]
        ok = ids >= 0
        ids = np.where(ok, remap2[np.where(ok, ids, 0)], -1)
        ok = ids >= 0
        ring = Ring(level, ids[ok], th[ok])
        if kind == "slit":
            mesh.slit_rings.setdefault(key, []).append(ring)
        else:
            mesh.end_rings.setdefault(key, []).append(ring)
    for rings in mesh.slit_rings.values():
        rings.sort(key=lambda rg: rg.level)
    return mesh


def _compact(pts, tris, anchor):
    """Drop vertices not used by any triangle and reindex."""
    used = np.zeros(len(pts), dtype=bool)
    used[tris.ravel()] = True
    used[anchor] = True
    remap = -np.ones(len(pts), dtype=int)
    remap[used] = np.arange(used.sum())
    return pts[used], remap[tris], int(remap[anchor]), remap


def _drop_outer_caps(pts, tris, r_max):
    """Delaunay convexifies the outer boundary; drop triangles whose
    circumradius-scale edges hug the outer circle chordally."""
    r = np.abs(pts)
    outer = r > 0.98 * r_max
    return tris[~np.all(outer[tris], axis=1)]


def build_annulus_mesh(r_inner, r_outer, cone_at=1.0, spec: MeshSpec = None,
                       grade_to_cone=True) -> SurfaceMesh:
    """Polar mesh of an annulus r_inner < |z| < cone_at (closed-form
    surfaces); rings get geometrically denser toward the cone circle."""
    if spec is None:
        spec = MeshSpec(target_vertices=6000)
    n_ang = spec.n_theta
    budget = max(spec.target_vertices, 600)
    n_rad = max(12, budget // n_ang)
    if grade_to_cone:
        # geometric approach to the cone circle from inside
        t = np.linspace(0.0, 1.0, n_rad)
        lam = 4.0
        s = (1.0 - np.exp(-lam * t)) / (1.0 - math.exp(-lam))
        radii = np.exp(math.log(r_inner)
                       + (math.log(cone_at * 0.999) - math.log(r_inner)) * s)
    else:
        radii = np.exp(np.linspace(math.log(r_inner), math.log(r_outer),
                                   n_rad))
    points = []
    ring_info = []
    for k, rr in enumerate(radii):
        th = np.linspace(0.0, 2.0 * math.pi, n_ang, endpoint=False)
        th = th + 0.5 * (k % 2) * (2 * math.pi / n_ang)
        zs = rr * np.exp(1j * th)
        ring_info.append((float(rr), len(points), len(zs), th))
        points.extend(zs.tolist())
    pts = np.asarray(points, dtype=complex)
    tris = Delaunay(np.c_[pts.real, pts.imag]).simplices
    # remove the inner disk fan (triangles inside the inner hole)
    cen = pts[tris].mean(axis=1)
    tris = tris[np.abs(cen) > r_inner]
    anchor = int(np.argmin(np.abs(pts - radii[len(radii) // 2])))
    pts, tris, anchor, remap = _compact(pts, tris, anchor)
    mesh = SurfaceMesh(pts, tris, _edges_of(tris), anchor, {}, {},
                       periodic=False,
                       meta={"r_min": r_inner, "r_max": float(radii[-1])})
    rings = [Ring(rr, remap[np.arange(start, start + count)], th)
             for rr, start, count, th in ring_info]
    mesh.end_rings["inner"] = [rings[0]]
    mesh.end_rings["outer"] = [rings[-1]]
    # cone rings: the outermost few (closest to the cone circle)
    mesh.slit_rings[0] = [Ring(1.0 - rg.level / cone_at, rg.vertices,
                               rg.angles)
                          for rg in rings[-6:]][::-1]
    return mesh


def export_obj(fh, X, tris, replicas=1, period_vector=(1.0, 0.0, 0.0),
               header_lines=()):
    """ASCII OBJ with optional fundamental-domain replication along the
    translation vector."""
    for line in header_lines:
        fh.write(f"# {line}\n")
    V = len(X)
    pv = np.asarray(period_vector, dtype=float)
    for k in range(replicas):
        shift = k * pv
        for v in X:
            p = v + shift
            fh.write(f"v {p[0]:.9g} {p[1]:.9g} {p[2]:.9g}\n")
    for k in range(replicas):
        off = 1 + k * V
        for t in tris:
            fh.write(f"f {t[0] + off} {t[1] + off} {t[2] + off}\n")
