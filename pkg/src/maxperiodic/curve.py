"""Real hyperelliptic model of the double, differentials, and contour quadrature.

The curve is w^2 = prod(z - c_i) with real branch points
c_1 < ... < c_{2n} < 0 < c_{2n+1} < c_{2n+2} and c_{2n+1} < 1 < c_{2n+2}.
The fixed branch w+ is the product of principal square roots sqrt(z - c_i);
the individual cuts cancel pairwise except over the slits
S_i = [c_{2i+1}, c_{2i+2}], so w+ is holomorphic on the slit complement and
real positive on (c_{2n+2}, inf).  The + sheet over the slit complement plays
the role of the planar half of the double; the mirror involution is
J(z, w) = (conj z, -conj w), which fixes the slit ovals pointwise and swaps
sheets over the real gaps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import QuadratureError, ValidationError

DEFAULT_TOL = 1e-10
GL_ORDER = 16
MAX_DEPTH = 18

_gl_cache = {}


def gl_nodes(order):
    if order not in _gl_cache:
        x, w = np.polynomial.legendre.leggauss(order)
        _gl_cache[order] = (x, w)
    return _gl_cache[order]


# ---------------------------------------------------------------------------
# curve and points
# ---------------------------------------------------------------------------

class RealHyperellipticCurve:
    """Genus-n curve w^2 = prod(z - c_i) with the ordering constraints above."""

    def __init__(self, branch):
        branch = np.asarray(branch, dtype=float)
        if branch.ndim != 1 or len(branch) < 4 or len(branch) % 2 != 0:
            raise ValidationError("need an even number >= 4 of branch points")
        n = len(branch) // 2 - 1
        if not np.all(np.diff(branch) > 0):
            raise ValidationError("branch points must be strictly increasing")
        if not (branch[2 * n - 1] < 0.0 < branch[2 * n]):
            raise ValidationError("exactly 2n branch points must be negative")
        if not (branch[2 * n] < 1.0 < branch[2 * n + 1]):
            raise ValidationError("basepoint 1 must lie inside the last slit "
                                  "(c_{2n+1} < 1 < c_{2n+2})")
        self.branch = branch
        self.n = n
        # slit i = [c_{2i+1}, c_{2i+2}], i = 0..n (1-based paper indexing)
        self.slits = [(branch[2 * i], branch[2 * i + 1]) for i in range(n + 1)]
        self.basepoint_z = 1.0

    # -- geometry helpers ---------------------------------------------------

    @property
    def span(self):
        return self.branch[-1] - self.branch[0]

    def slit_of_basepoint(self):
        return self.n  # the positive slit [c_{2n+1}, c_{2n+2}] contains 1

    def gap_points(self):
        """One interior point per real gap of the slit complement (excluding 0
        only by chance); used as corridor gates when routing across the axis."""
        b = self.branch
        pts = [b[0] - 0.5 * self.span]
        for i in range(1, self.n + 1):
            pts.append(0.5 * (b[2 * i - 1] + b[2 * i]))
        pts.append(b[-1] + 0.5 * self.span)
        return pts

    def min_gap(self):
        b = self.branch
        return min(b[2 * i] - b[2 * i - 1] for i in range(1, self.n + 1))

    def dist_to_slits(self, z):
        z = complex(z)
        d = np.inf
        for a, b in self.slits:
            x = min(max(z.real, a), b)
            d = min(d, abs(z - complex(x, 0.0)))
        return d

    def on_slit(self, x, margin=0.0):
        for idx, (a, b) in enumerate(self.slits):
            if a - margin <= x <= b + margin:
                return idx
        return None

    # -- branch evaluation ----------------------------------------------------

    def eval_w(self, z, sheet=1, slit_side=None):
        """w on the given sheet.  For real z inside a slit pass slit_side=+-1
        to resolve the one-sided limit; off slits the global branch is used."""
        if slit_side is not None:
            return sheet * kernels.w_branch_slit(np.real(z), self.branch, slit_side)
        z = np.asarray(z, dtype=complex)
        if z.ndim == 0:
            zr = complex(z)
            if zr.imag == 0.0 and self.on_slit(zr.real) is not None:
                raise ValidationError(
                    "evaluation on a slit requires an explicit side flag")
        return sheet * kernels.w_branch(z, self.branch)

    def point_w(self, p: "CurvePoint"):
        if not p.is_finite:
            raise ValidationError("w is infinite at the ends")
        return complex(self.eval_w(p.z, sheet=p.sheet))

    def basepoint(self):
        """Marked point on the oval over z = 1, taken as the limit from the
        upper half plane on the + sheet."""
        return CurvePoint(complex(self.basepoint_z), 1)


@dataclass(frozen=True)
class CurvePoint:
    """Point (z, sheet) with sheet * w+(z); z=None encodes the point over inf."""

    z: complex | None
    sheet: int

    @property
    def is_finite(self):
        return self.z is not None

    @staticmethod
    def infinity(sheet):
        return CurvePoint(None, sheet)

    def __repr__(self):
        zs = "inf" if self.z is None else f"{self.z:.6g}"
        return f"({zs},{'+' if self.sheet > 0 else '-'})"


def mirror_involution(p: CurvePoint) -> CurvePoint:
    """J(z, w) = (conj z, -conj w); swaps sheets since w+(conj z) = conj w+(z)."""
    if not p.is_finite:
        return CurvePoint.infinity(-p.sheet)
    return CurvePoint(np.conj(p.z), -p.sheet)


# ---------------------------------------------------------------------------
# differential forms
# ---------------------------------------------------------------------------

def _poly_scale(coeffs, s):
    return tuple(s * np.asarray(coeffs, dtype=complex))


@dataclass(frozen=True)
class Term:
    """One rational summand (A(z) + B(z) w) / (C(z) w^k), k in {0, 1}."""

    A: tuple
    B: tuple | None
    C: tuple
    k: int

    def packed(self):
        return (np.asarray(self.A, dtype=complex),
                None if self.B is None else np.asarray(self.B, dtype=complex),
                np.asarray(self.C, dtype=complex), self.k)

    def scaled(self, s):
        return Term(_poly_scale(self.A, s),
                    None if self.B is None else _poly_scale(self.B, s),
                    self.C, self.k)


class DifferentialForm:
    """Meromorphic 1-form R(z, w) dz given by a sum of rational terms.

    `residues` maps declared pole points to residues, `symmetry` is one of
    'even' (pullback-conjugate fixes the form), 'odd' (negates it) or None.
    """

    def __init__(self, curve, terms, symmetry=None, residues=None, name=""):
        self.curve = curve
        self.terms = [t if isinstance(t, Term) else Term(*t) for t in terms]
        self.symmetry = symmetry
        self.residues = dict(residues or {})
        self.name = name
        self._packed = None

    def packed(self):
        if self._packed is None:
            self._packed = [t.packed() for t in self.terms]
        return self._packed

    def eval_zw(self, z, w):
        return kernels.eval_terms(z, w, self.packed())

    def __add__(self, other):
        res = dict(self.residues)
        for p, r in other.residues.items():
            res[p] = res.get(p, 0.0) + r
        sym = self.symmetry if self.symmetry == other.symmetry else None
        return DifferentialForm(self.curve, self.terms + other.terms, sym, res)

    def __mul__(self, s):
        return DifferentialForm(self.curve, [t.scaled(s) for t in self.terms],
                                self.symmetry if (np.imag(s) == 0) else None,
                                {p: s * r for p, r in self.residues.items()},
                                self.name)

    __rmul__ = __mul__

    def __sub__(self, other):
        return self + (other * (-1.0))

    def pullback_conjugate(self, z, w):
        """conj(R(conj z, -conj w)): equals +R for 'even' forms, -R for 'odd'."""
        return np.conj(self.eval_zw(np.conj(np.asarray(z, dtype=complex)),
                                    -np.conj(np.asarray(w, dtype=complex))))


def holomorphic_basis_raw(curve):
    """The n forms z^{k-1} dz / w, k = 1..n; J-pullback = -conjugate."""
    if curve.n < 1:
        raise ValidationError("positive genus required")
    forms = []
    for k in range(curve.n):
        A = tuple(0.0 if j != k else 1.0 for j in range(k + 1))
        forms.append(DifferentialForm(curve, [Term(A, None, (1.0,), 1)],
                                      symmetry="odd", name=f"z^{k} dz/w"))
    return forms


def third_kind_combo(curve, points_residues):
    """Form with simple poles at the given points and prescribed residues.

    The residues must sum to zero.  Each finite point contributes the
    classical hyperelliptic kernel (w + w_P) / (2 (z - z_P)) dz/w, whose
    stray residues -1/2 at the two points over infinity cancel in the sum;
    a pole over infinity itself is realized by -+ z^n dz / (2 w).
    """
    pts = [(p, complex(r)) for p, r in points_residues]
    if abs(sum(r for _, r in pts)) > 1e-12:
        raise ValidationError("third-kind residues must sum to zero")
    terms = []
    residues = {}
    for point, r in pts:
        if point.is_finite:
            zp = complex(point.z)
            if min(abs(zp - c) for c in curve.branch) < 1e-12:
                raise ValidationError("third-kind poles must avoid branch points")
            wp = curve.point_w(point)
            terms.append(Term((r * 0.5 * wp,), (r * 0.5,), (-zp, 1.0), 1))
        else:
            # z^n dz/(2w) has residues -1/2 at inf+ and +1/2 at inf-
            A = [0.0] * curve.n + [0.5]
            s = r * (-point.sheet)
            terms.append(Term(tuple(s * a for a in A), None, (1.0,), 1))
        residues[point] = residues.get(point, 0.0) + r
    return DifferentialForm(curve, terms, residues=residues, name="third-kind")


def third_kind_pair(curve, P: CurvePoint, Q: CurvePoint):
    """Form with simple poles exactly at P (residue +1) and Q (residue -1)."""
    if P == Q:
        raise ValidationError("third-kind poles must be distinct")
    form = third_kind_combo(curve, [(P, 1.0), (Q, -1.0)])
    form.name = f"omega[{P},{Q}]"
    return form


def paper_nu(curve):
    """The meromorphic form prod_{i<=n+1}(z - c_i) dz / (z w): double zeros at
    the first n+1 branch points, simple poles over 0 and infinity."""
    num = np.array([1.0 + 0j])
    for c in curve.branch[: curve.n + 1]:
        num = np.convolve(num, np.array([-c, 1.0], dtype=complex))
    zeros = {CurvePoint(complex(c), 1): 2 for c in curve.branch[: curve.n + 1]}
    poles = [CurvePoint(0j, 1), CurvePoint(0j, -1),
             CurvePoint.infinity(1), CurvePoint.infinity(-1)]
    form = DifferentialForm(curve, [Term(tuple(num), None, (0.0, 1.0), 1)],
                            symmetry="odd", name="nu")
    form.zero_divisor = zeros
    form.pole_divisor = {p: 1 for p in poles}
    return form


# ---------------------------------------------------------------------------
# contour paths
# ---------------------------------------------------------------------------

class Segment:
    """Smooth parametrized piece z(t), t in [0, 1], on a fixed sheet.

    sheet=0 overrides w to 1 (genus-0 sanity checks); slit_side selects the
    one-sided limit of w for traces along a slit.
    """

    def __init__(self, kind, params, sheet=1, slit_side=None):
        self.kind = kind
        self.params = params
        self.sheet = sheet
        self.slit_side = slit_side

    def z(self, t):
        t = np.asarray(t, dtype=float)
        p = self.params
        if self.kind == "line":
            return p[0] + (p[1] - p[0]) * t
        if self.kind == "arc":
            c, rx, ry, th0, th1 = p
            th = th0 + (th1 - th0) * t
            return c + rx * np.cos(th) + 1j * ry * np.sin(th)
        if self.kind == "confocal":
            m, L, s, th0, th1 = p
            th = th0 + (th1 - th0) * t
            return m + L * np.cosh(s) * np.cos(th) + 1j * L * np.sinh(s) * np.sin(th)
        if self.kind == "sqrt_end":
            z0, b = p
            return b + (z0 - b) * (1.0 - t) ** 2
        if self.kind == "inf":
            return p[0] / (1.0 - t)
        if self.kind == "reversed":
            return p[0].z(1.0 - t)
        raise ValueError(self.kind)

    def dz(self, t):
        t = np.asarray(t, dtype=float)
        p = self.params
        if self.kind == "line":
            return np.full(t.shape, p[1] - p[0])
        if self.kind == "arc":
            c, rx, ry, th0, th1 = p
            th = th0 + (th1 - th0) * t
            return (-rx * np.sin(th) + 1j * ry * np.cos(th)) * (th1 - th0)
        if self.kind == "confocal":
            m, L, s, th0, th1 = p
            th = th0 + (th1 - th0) * t
            return (-L * np.cosh(s) * np.sin(th)
                    + 1j * L * np.sinh(s) * np.cos(th)) * (th1 - th0)
        if self.kind == "sqrt_end":
            z0, b = p
            return -2.0 * (z0 - b) * (1.0 - t)
        if self.kind == "inf":
            return p[0] / (1.0 - t) ** 2
        if self.kind == "reversed":
            return -p[0].dz(1.0 - t)
        raise ValueError(self.kind)

    def reversed(self):
        return Segment("reversed", (self,), self.sheet, self.slit_side)

    @property
    def endpoints(self):
        return complex(self.z(0.0)), None if self.kind == "inf" else complex(self.z(1.0))


class ContourPath:
    """Piecewise-smooth path; crossings record (slit index, x) sheet flips."""

    def __init__(self, segments, crossings=None):
        self.segments = list(segments)
        self.crossings = list(crossings or [])

    def reversed(self):
        return ContourPath([s.reversed() for s in reversed(self.segments)],
                           list(self.crossings))

    @staticmethod
    def from_points(points, sheet=1):
        segs = [Segment("line", (complex(points[i]), complex(points[i + 1])), sheet)
                for i in range(len(points) - 1)]
        return ContourPath(segs)


def circle_path(center, radius, sheet=1, orientation=1):
    th1 = 2.0 * math.pi * orientation
    return ContourPath([Segment("arc", (complex(center), radius, radius, 0.0, th1),
                                sheet)])


def confocal_loop(curve, slit_idx, s=0.35, sheet=1):
    """Counterclockwise confocal ellipse around a slit on one sheet.

    s controls fatness; the loop must clear neighboring slits, 0 and 1."""
    a, b = curve.slits[slit_idx]
    m, L = 0.5 * (a + b), 0.5 * (b - a)
    return ContourPath([Segment("confocal", (m, L, s, 0.0, 2.0 * math.pi), sheet)])


def slit_fatness(curve, slit_idx, clear_points=()):
    """Largest safe confocal parameter s for a loop around slit_idx, keeping
    clearance from other slits, the origin, and the given points."""
    a, b = curve.slits[slit_idx]
    m, L = 0.5 * (a + b), 0.5 * (b - a)
    smax = 1.0
    obstacles = [0.0]
    for j, (aa, bb) in enumerate(curve.slits):
        if j != slit_idx:
            obstacles.extend([aa, bb])
    obstacles.extend(clear_points)
    for x in obstacles:
        # confocal coordinate of the obstacle: s_obs = Re acosh((x-m)/L)
        u = (complex(x) - m) / L
        s_obs = abs(np.arccosh(u + 0j).real)
        if s_obs > 1e-9:
            smax = min(smax, 0.5 * s_obs)
    return max(smax, 1e-3)


# ---------------------------------------------------------------------------
# routing on the + sheet
# ---------------------------------------------------------------------------

def _seg_dist(p0, p1, a, b):
    """Distance between 2D segments p0p1 and the real interval [a, b]."""
    def pts(c0, c1, k=9):
        t = np.linspace(0.0, 1.0, k)
        return c0 + (c1 - c0) * t

    # exact distance via candidate pairs is overkill; dense sampling on both
    # with projection gives a tight conservative estimate for routing
    best = np.inf
    for q in pts(p0, p1):
        x = min(max(q.real, a), b)
        best = min(best, abs(q - complex(x, 0.0)))
    for x in np.linspace(a, b, 9):
        q = complex(x, 0.0)
        d = p1 - p0
        L2 = abs(d) ** 2
        t = 0.0 if L2 == 0 else min(max(((q - p0) * np.conj(d)).real / L2, 0.0), 1.0)
        best = min(best, abs(p0 + t * d - q))
    return best


def _point_seg_dist(q, p0, p1):
    d = p1 - p0
    L2 = abs(d) ** 2
    t = 0.0 if L2 == 0 else min(max(((q - p0) * np.conj(d)).real / L2, 0.0), 1.0)
    return abs(p0 + t * d - q), t


def _segment_clear(curve, p0, p1, margin):
    """True when the open segment keeps `margin` clearance from every slit;
    proximity localized at an endpoint (an on-slit or near-slit target) is
    forgiven there."""
    L = abs(p1 - p0)
    for a, b in curve.slits:
        # exact axis crossing inside the slit x-range
        if (p0.imag > 0) != (p1.imag > 0) and p0.imag != p1.imag:
            t = p0.imag / (p0.imag - p1.imag)
            x = p0.real + t * (p1.real - p0.real)
            if a - margin <= x <= b + margin:
                if min(t, 1.0 - t) * L > 4.0 * margin:
                    return False
        # proximity without crossing: candidate closest pairs
        cands = []
        for q in (complex(a, 0.0), complex(b, 0.0)):
            d, t = _point_seg_dist(q, p0, p1)
            cands.append((d, min(t, 1.0 - t) * L))
        for q, tend in ((p0, 0.0), (p1, 0.0)):
            x = min(max(q.real, a), b)
            d = abs(q - complex(x, 0.0))
            cands.append((d, 0.0))
        for d, end_dist in cands:
            if d < margin and end_dist > 4.0 * margin:
                return False
    return True


def route(curve, z0, z1, side0=None, side1=None, obstacles=(), clearance=0.05):
    """Waypoints of a slit-avoiding polyline from z0 to z1 on one sheet.

    side0/side1 pick the half plane used to leave/enter a point that lies on
    the real axis (required when the point sits on a slit); on-slit endpoints
    leave their slit vertically before any lateral motion.  Obstacle points
    are cleared by a perpendicular detour.
    """
    z0, z1 = complex(z0), complex(z1)
    H = 0.75 * curve.span
    margin = 1e-3 * max(b - a for a, b in curve.slits)
    lift = 0.12 * curve.span

    def on_slit(z):
        return z.imag == 0.0 and curve.on_slit(z.real, margin) is not None

    def half(z, side, other, other_side):
        if side is not None:
            return side
        if z.imag > 0:
            return 1
        if z.imag < 0:
            return -1
        # real point in a gap: adopt the other endpoint's half plane
        if other.imag != 0:
            return 1 if other.imag > 0 else -1
        if other_side is not None:
            return other_side
        return 1

    s0 = half(z0, side0, z1, side1)
    s1 = half(z1, side1, z0, s0)
    a0 = z0 + 1j * s0 * lift if on_slit(z0) else z0
    b1 = z1 + 1j * s1 * lift if on_slit(z1) else z1

    pts = [z0]
    if a0 != z0:
        pts.append(a0)
    direct = _segment_clear(curve, a0, b1, margin)
    if not direct:
        pts.append(complex(a0.real, s0 * H))
        if s0 != s1:
            gates = curve.gap_points()
            scores = [abs(g - a0.real) + abs(g - b1.real) for g in gates]
            g = gates[int(np.argmin(scores))]
            pts.append(complex(g, s0 * H))
            pts.append(complex(g, s1 * H))
        pts.append(complex(b1.real, s1 * H))
    if b1 != z1:
        pts.append(b1)
    pts.append(z1)

    # collapse duplicate consecutive waypoints
    out = [pts[0]]
    for p in pts[1:]:
        if abs(p - out[-1]) > 1e-14:
            out.append(p)
    return _avoid_obstacles(curve, out, obstacles, clearance, margin)


def _avoid_obstacles(curve, pts, obstacles, clearance, margin, rounds=4):
    obstacles = [complex(o) for o in obstacles]
    for _ in range(rounds):
        moved = False
        new = [pts[0]]
        for i in range(len(pts) - 1):
            p0, p1 = pts[i], pts[i + 1]
            inserted = None
            for o in obstacles:
                if abs(p0 - o) < 1e-12 or abs(p1 - o) < 1e-12:
                    continue
                d = p1 - p0
                L2 = abs(d) ** 2
                if L2 == 0:
                    continue
                t = min(max(((o - p0) * np.conj(d)).real / L2, 0.0), 1.0)
                f = p0 + t * d
                if abs(f - o) < clearance and 0.0 < t < 1.0:
                    perp = 1j * d / abs(d)
                    off = f - o
                    sgn = 1.0 if (off * np.conj(perp)).real >= 0 else -1.0
                    cand = o + sgn * perp * 1.5 * clearance
                    if not _segment_clear(curve, p0, cand, margin) or \
                            not _segment_clear(curve, cand, p1, margin):
                        cand = o - sgn * perp * 1.5 * clearance
                    inserted = cand
                    break
            if inserted is not None:
                new.extend([inserted, p1])
                moved = True
            else:
                new.append(p1)
        pts = new
        if not moved:
            break
    return pts


def path_to_point(curve, target, sheet=1, side_end=None, obstacles=(),
                  clearance=0.05):
    """Path from the basepoint (1 on the oval a0, upper side) to a target.

    Targets may be generic points, branch points (square-root end segment) or
    the point over infinity on either sheet.  The basepoint itself is reached
    as an upper-half-plane limit, so the path leaves z=1 vertically.
    """
    bp = complex(curve.basepoint_z)
    if target is not None and not isinstance(target, CurvePoint):
        target = CurvePoint(complex(target), sheet)
    if target is not None:
        sheet = target.sheet
    # the basepoint (1, w+ upper limit) is reached from above on the + sheet
    # and from below on the - sheet, so a path on either sheet starts at the
    # same curve point by leaving z=1 into the matching half plane
    s0 = 1 if sheet == 1 else -1

    if target is not None and not target.is_finite:
        zfar = 1j * s0 * 2.5 * curve.span
        pts = route(curve, bp, zfar, side0=s0, obstacles=obstacles,
                    clearance=clearance)
        segs = [Segment("line", (pts[i], pts[i + 1]), sheet)
                for i in range(len(pts) - 1)]
        segs.append(Segment("inf", (zfar,), sheet))
        return ContourPath(segs)

    zt = complex(target.z)
    is_branch = min(abs(zt - c) for c in curve.branch) < 1e-12
    if is_branch:
        b = float(curve.branch[int(np.argmin(np.abs(curve.branch - zt.real)))])
        h = s0 * 0.25 * min(curve.min_gap(), 1.0)
        stand = complex(b, h)
        pts = route(curve, bp, stand, side0=s0, obstacles=obstacles,
                    clearance=clearance)
        segs = [Segment("line", (pts[i], pts[i + 1]), sheet)
                for i in range(len(pts) - 1)]
        segs.append(Segment("sqrt_end", (stand, complex(b)), sheet))
        return ContourPath(segs)

    side1 = side_end
    if side1 is None and zt.imag == 0.0 and curve.on_slit(zt.real) is not None:
        side1 = s0
    pts = route(curve, bp, zt, side0=s0, side1=side1, obstacles=obstacles,
                clearance=clearance)
    segs = [Segment("line", (pts[i], pts[i + 1]), sheet)
            for i in range(len(pts) - 1)]
    return ContourPath(segs)


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

def _seg_w(curve, seg, z):
    if seg.sheet == 0:
        return np.ones_like(np.asarray(z, dtype=complex))
    if seg.slit_side is not None:
        return seg.sheet * kernels.w_branch_slit(np.real(z), curve.branch,
                                                 seg.slit_side)
    return seg.sheet * kernels.w_branch(z, curve.branch)


def _eval_integrand(form, curve, seg, t):
    z = seg.z(t)
    w = _seg_w(curve, seg, z)
    if callable(form):
        vals = form(z, w)
    else:
        vals = form.eval_zw(z, w)
    return vals * seg.dz(t)


def _gl_on(form, curve, seg, a, b, order):
    x, wts = gl_nodes(order)
    t = a + 0.5 * (x + 1.0) * (b - a)
    vals = _eval_integrand(form, curve, seg, t)
    return 0.5 * (b - a) * np.sum(vals * wts, axis=-1)


def _adaptive(form, curve, seg, a, b, tol, depth, order):
    whole = _gl_on(form, curve, seg, a, b, order)
    mid = 0.5 * (a + b)
    left = _gl_on(form, curve, seg, a, mid, order)
    right = _gl_on(form, curve, seg, mid, b, order)
    err = np.max(np.abs(left + right - whole))
    # the per-half tolerance split bottoms out at the rounding floor
    floor = 4e-16 * (1.0 + np.max(np.abs(left)) + np.max(np.abs(right)))
    if err <= max(tol, floor) or (b - a) < 1e-13:
        return left + right, err
    if depth >= MAX_DEPTH:
        raise QuadratureError(
            f"quadrature tolerance {tol:g} unreachable on segment "
            f"{seg.kind} [{a:.3g},{b:.3g}] (err {err:.3g})")
    child_tol = max(0.5 * tol, 4e-15)
    lv, le = _adaptive(form, curve, seg, a, mid, child_tol, depth + 1, order)
    rv, re_ = _adaptive(form, curve, seg, mid, b, child_tol, depth + 1, order)
    return lv + rv, le + re_

def integrate_form(form, path, curve=None, tol=DEFAULT_TOL, order=GL_ORDER):
    """Adaptive Gauss-Legendre integral of a form (or callable f(z, w)) along
    a ContourPath.  Vector-valued callables integrate componentwise over the
    trailing node axis.  Returns (value, a-posteriori error estimate)."""
    if curve is None:
        curve = form.curve
    total = None
    err = 0.0
    for seg in path.segments:
        v, e = _adaptive(form, curve, seg, 0.0, 1.0, tol, 0, order)
        total = v if total is None else total + v
        err += e
    return total, err


def branch_point_loop(curve, b, radius):
    """Closed loop on the curve around a branch point: the z-circle traversed
    twice, once per sheet; continuity holds across the cut crossing."""
    return ContourPath([
        Segment("arc", (complex(b), radius, radius, 0.0, 2.0 * math.pi), 1),
        Segment("arc", (complex(b), radius, radius, 0.0, 2.0 * math.pi), -1),
    ])


def residue_at(form, point: CurvePoint, curve=None, radius=None, tol=1e-11):
    """Residue via a small positively oriented circle on the point's sheet."""
    if curve is None:
        curve = form.curve
    zp = complex(point.z)
    if radius is None:
        others = [abs(zp - c) for c in curve.branch]
        others.append(max(curve.dist_to_slits(zp), 1e-3))
        others.append(abs(zp) if abs(zp) > 0 else 1.0)
        radius = 0.25 * min(others)
    loop = circle_path(zp, radius, sheet=point.sheet)
    val, _ = integrate_form(form, loop, curve, tol=tol)
    return val / (2.0j * math.pi)


def continue_w_along(curve, path, samples_per_seg=400):
    """Transport w by continuity along the path and compare with the declared
    sheet at the end.  Returns (final declared w, final continued w)."""
    w_cont = None
    last = None
    for seg in path.segments:
        t = np.linspace(0.0, 1.0, samples_per_seg)
        z = seg.z(t)
        w_decl = _seg_w(curve, seg, z)
        if w_cont is None:
            w_cont = w_decl[0]
        for k in range(len(t)):
            cand = w_decl[k]
            w_cont = cand if abs(cand - w_cont) <= abs(-cand - w_cont) else -cand
        last = w_decl[-1]
    return last, w_cont
