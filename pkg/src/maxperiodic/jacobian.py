"""Jacobian variety, Abel-Jacobi map, spinor sections, divisor solving.

The lattice splits exactly into a real part (the unit vectors) and an
imaginary part (the columns of the period matrix), so reduction and lattice
distance factor into a per-coordinate fractional part and a small integer
least-squares problem against Im(Pi).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .curve import CurvePoint, integrate_form, mirror_involution, path_to_point
from .errors import SpinorObstruction, ValidationError

LATTICE_TOL = 1e-7


class JacobianLattice:
    """L = Z^n + i Im(Pi) Z^n; Pi is validated to be purely imaginary."""

    def __init__(self, Pi, im_tol=1e-8):
        Pi = np.asarray(Pi, dtype=complex)
        if np.max(np.abs(Pi.real)) > im_tol:
            raise ValidationError("period matrix is not purely imaginary")
        self.n = Pi.shape[0]
        self.Pi = Pi
        self.im = Pi.imag.copy()
        self._im_inv = np.linalg.inv(self.im)

    def _ils(self, y):
        """Nearest vector of Im(Pi) Z^n to y: Babai rounding refined by a
        +-1 neighborhood search (exact for the small n used here)."""
        m0 = np.rint(self._im_inv @ y).astype(int)
        best, best_d = m0, np.linalg.norm(y - self.im @ m0)
        for delta in itertools.product((-1, 0, 1), repeat=self.n):
            m = m0 + np.asarray(delta, dtype=int)
            d = np.linalg.norm(y - self.im @ m)
            if d < best_d - 1e-15:
                best, best_d = m, d
        return best, best_d

    def reduce(self, x):
        """Representative with real parts in [0,1) and imaginary parts
        reduced against Im(Pi) Z^n; returns (rep, k, m) with
        x = rep + k + i Im(Pi) m."""
        x = np.asarray(x, dtype=complex).reshape(self.n)
        k = np.floor(x.real).astype(int)
        m, _ = self._ils(x.imag)
        rep = (x.real - k) + 1j * (x.imag - self.im @ m)
        return rep, k, m

    def nearest_rep(self, x):
        """Minimal (centered) representative of x mod L."""
        x = np.asarray(x, dtype=complex).reshape(self.n)
        k = np.rint(x.real).astype(int)
        m, _ = self._ils(x.imag)
        return (x.real - k) + 1j * (x.imag - self.im @ m)

    def distance(self, x):
        return float(np.linalg.norm(self.nearest_rep(x)))

    def integer_coords(self, x):
        """(k, m, residual) such that x ~ k + i Im(Pi) m."""
        x = np.asarray(x, dtype=complex).reshape(self.n)
        k = np.rint(x.real).astype(int)
        m, _ = self._ils(x.imag)
        resid = np.linalg.norm((x.real - k) + 1j * (x.imag - self.im @ m))
        return k, m, float(resid)

    def half_points(self):
        """The 2^{2n} half-lattice offsets (eps + Pi delta) / 2, ordered
        lexicographically by the offset bits (eps, delta)."""
        out = []
        for bits in itertools.product((0, 1), repeat=2 * self.n):
            eps = np.asarray(bits[: self.n], dtype=float)
            dlt = np.asarray(bits[self.n:], dtype=float)
            out.append((bits, 0.5 * (eps + self.Pi @ dlt)))
        return out


@dataclass(frozen=True)
class JacobianPoint:
    rep: np.ndarray
    residual: float = 0.0

    def __repr__(self):
        return f"J{np.round(self.rep, 8)}"


@dataclass(frozen=True)
class Divisor:
    """Integral divisor: multiset of curve points with multiplicities."""

    points: tuple  # ((CurvePoint, mult), ...)

    @staticmethod
    def of(*pts):
        acc = {}
        for p in pts:
            if isinstance(p, tuple):
                p, mult = p
            else:
                mult = 1
            acc[p] = acc.get(p, 0) + mult
        return Divisor(tuple(sorted(acc.items(), key=lambda t: (
            float("inf") if t[0].z is None else t[0].z.real,
            0.0 if t[0].z is None else t[0].z.imag, t[0].sheet))))

    @property
    def degree(self):
        return sum(m for _, m in self.points)

    def support(self):
        return [p for p, _ in self.points]

    def mirror(self):
        return Divisor.of(*((mirror_involution(p), m) for p, m in self.points))

    def validate_in_omega(self, curve, margin=1e-9):
        """Support must lie in the open + sheet off the slits."""
        for p, _ in self.points:
            if not p.is_finite:
                raise ValidationError("divisor support must be finite")
            if p.sheet != 1:
                raise ValidationError("divisor support must be on the + sheet")
            z = complex(p.z)
            if z.imag == 0.0 and curve.on_slit(z.real, margin) is not None:
                raise ValidationError("divisor support must avoid the slits")


# ---------------------------------------------------------------------------
# Abel-Jacobi map
# ---------------------------------------------------------------------------

def abel_map_point(curve, periods, point, tol=1e-11):
    """Integral of the eta-vector from the basepoint (1 on the a_0 oval,
    upper side) to the point, along a slit-avoiding routed path."""
    if not isinstance(point, CurvePoint):
        point = CurvePoint(complex(point), 1)
    if point.is_finite and point.sheet == -1:
        # phi(J(p)) = conj(phi(p)); route on the + sheet to conj z instead
        v = abel_map_point(curve, periods,
                           CurvePoint(np.conj(point.z), 1), tol)
        return np.conj(v)
    path = path_to_point(curve, point)
    ev = periods.eta_stack()
    val, _ = integrate_form(ev, path, curve, tol=tol)
    return np.asarray(val, dtype=complex).reshape(curve.n)


def abel_map(curve, periods, divisor, tol=1e-11, lattice=None):
    """Abel-Jacobi image of a divisor, reduced mod the lattice."""
    if isinstance(divisor, CurvePoint):
        divisor = Divisor.of(divisor)
    total = np.zeros(curve.n, dtype=complex)
    for p, mult in divisor.points:
        total = total + mult * abel_map_point(curve, periods, p, tol)
    if lattice is None:
        lattice = JacobianLattice(periods.Pi)
    rep, _, _ = lattice.reduce(total)
    return JacobianPoint(rep)


def mirror_on_jacobian(lattice, point):
    """Induced mirror involution: componentwise conjugation, then reduction."""
    rep = point.rep if isinstance(point, JacobianPoint) else np.asarray(point)
    red, _, _ = lattice.reduce(np.conj(rep))
    return JacobianPoint(red)


def i_fix_residual(lattice, point):
    """Lattice distance between I(x) and x."""
    rep = point.rep if isinstance(point, JacobianPoint) else np.asarray(point)
    return lattice.distance(np.conj(rep) - rep)


# ---------------------------------------------------------------------------
# canonical point and spinor sections
# ---------------------------------------------------------------------------

def ends_divisor(curve):
    return Divisor.of(CurvePoint(0j, 1), CurvePoint(0j, -1),
                      CurvePoint.infinity(1), CurvePoint.infinity(-1))


def canonical_point_T(curve, periods, lattice=None, tol=1e-11):
    """phi of the canonical divisor, computed from the divisor of the
    meromorphic form prod_{i<=n+1}(z - c_i) dz/(z w)."""
    if lattice is None:
        lattice = JacobianLattice(periods.Pi)
    total = np.zeros(curve.n, dtype=complex)
    for c in curve.branch[: curve.n + 1]:
        total += 2.0 * abel_map_point(curve, periods, CurvePoint(complex(c), 1),
                                      tol)
    for p, m in ends_divisor(curve).points:
        total -= m * abel_map_point(curve, periods, p, tol)
    rep, _, _ = lattice.reduce(total)
    return JacobianPoint(rep)


def canonical_point_T_alt(curve, periods, lattice, p_aux=None, q_aux=None,
                          tol=1e-11):
    """Independence cross-check: same point from the divisor of
    nu * (z - p)/(z - q), which differs from (nu) by a principal divisor."""
    if p_aux is None:
        p_aux = complex(0.25 * (curve.branch[0] + 3 * curve.branch[-1]), 0.6)
    if q_aux is None:
        q_aux = complex(0.5 * (curve.branch[0] + curve.branch[-1]),
                        -0.8 * curve.span / 3)
    base = canonical_point_T(curve, periods, lattice, tol).rep.copy()
    extra = np.zeros(curve.n, dtype=complex)
    for zz, sign in ((p_aux, 1.0), (q_aux, -1.0)):
        for sheet in (1, -1):
            extra += sign * abel_map_point(curve, periods,
                                           CurvePoint(complex(zz), sheet), tol)
        # (z - p) has a double pole over infinity on each... the function
        # z - p has divisor p+ p- / inf+ inf-, so subtract both infinities
        extra -= sign * (abel_map_point(curve, periods,
                                        CurvePoint.infinity(1), tol)
                         + abel_map_point(curve, periods,
                                          CurvePoint.infinity(-1), tol))
    rep, _, _ = lattice.reduce(base + extra)
    return JacobianPoint(rep)


@dataclass(frozen=True)
class SpinorSection:
    index: int
    bits: tuple
    point: JacobianPoint
    i_fix_residual: float
    doubling_residual: float


def spinor_target(curve, periods, lattice, tol=1e-11):
    """T(v) + phi(0 inf J0 Jinf), the point whose halves are the sections."""
    T = canonical_point_T(curve, periods, lattice, tol)
    extra = np.zeros(curve.n, dtype=complex)
    for p, m in ends_divisor(curve).points:
        extra += m * abel_map_point(curve, periods, p, tol)
    rep, _, _ = lattice.reduce(T.rep + extra)
    return JacobianPoint(rep)


def spinor_sections(curve, periods, lattice=None, tol=1e-11,
                    i_fix_tol=LATTICE_TOL):
    """All 2^{2n} solutions of 2E = T + phi(0 inf J0 Jinf).

    The particular solution is the Abel image of the branch-point divisor
    c_1 ... c_{n+1}, which is fixed by the mirror involution; the others are
    its half-lattice translates, ordered lexicographically by offset bits."""
    if lattice is None:
        lattice = JacobianLattice(periods.Pi)
    l0 = np.zeros(curve.n, dtype=complex)
    for c in curve.branch[: curve.n + 1]:
        l0 += abel_map_point(curve, periods, CurvePoint(complex(c), 1), tol)
    target = spinor_target(curve, periods, lattice, tol)
    sections = []
    for idx, (bits, off) in enumerate(lattice.half_points()):
        rep, _, _ = lattice.reduce(l0 + off)
        e = JacobianPoint(rep)
        ifix = i_fix_residual(lattice, e)
        dbl = lattice.distance(2.0 * rep - target.rep)
        sections.append(SpinorSection(idx, bits, e, ifix, dbl))
    worst = max(s.i_fix_residual for s in sections)
    if worst > i_fix_tol:
        raise ValidationError(
            f"spinor sections fail mirror fixedness ({worst:.2e}); "
            "quadrature or orientation bug")
    return sections


def spinor_membership(curve, periods, divisor, lattice=None, sections=None,
                      tol=1e-11):
    """(best section index, membership residual) for a degree-n divisor.

    The residual is the lattice distance of 2 phi(D . 0) - T - phi(ends)."""
    if lattice is None:
        lattice = JacobianLattice(periods.Pi)
    if divisor.degree != curve.n:
        raise ValidationError("spinor membership needs a degree-n divisor")
    phi_d0 = np.zeros(curve.n, dtype=complex)
    for p, m in divisor.points:
        phi_d0 += m * abel_map_point(curve, periods, p, tol)
    phi_d0 += abel_map_point(curve, periods, CurvePoint(0j, 1), tol)
    target = spinor_target(curve, periods, lattice, tol)
    residual = lattice.distance(2.0 * phi_d0 - target.rep)
    best, best_d = -1, np.inf
    if sections is None:
        sections = spinor_sections(curve, periods, lattice, tol)
    for s in sections:
        d = lattice.distance(phi_d0 - s.point.rep)
        if d < best_d:
            best, best_d = s.index, d
    return best, residual


# ---------------------------------------------------------------------------
# divisor solving (Jacobi inversion restricted to the spinor condition)
# ---------------------------------------------------------------------------

def _eta_at(curve, periods, z, sheet=1):
    """Values of the eta coefficients at a point; the derivative of the
    Abel map by its definition."""
    z = complex(z)
    w = complex(curve.eval_w(np.asarray([z]), sheet=sheet)[0])
    pows = np.array([z ** l for l in range(curve.n)], dtype=complex)
    return periods.eta_coeffs @ pows / w


def _seed_grid(curve, nre=24, nim=12):
    b = curve.branch
    pad = 0.6 * curve.span
    xs = np.linspace(b[0] - pad, b[-1] + pad, nre)
    ys = np.linspace(0.08 * curve.span, 0.9 * curve.span, nim // 2)
    ys = np.concatenate([-ys, ys])
    pts = [complex(x, y) for x in xs for y in ys]
    return pts


def solve_divisor(curve, periods, section, lattice=None, tol=1e-11,
                  newton_tol=1e-10, max_iter=60):
    """Degree-n divisor D with phi(D . 0) = E_section, by Newton inversion
    of the Abel map seeded on a coarse grid.

    Solutions with support off the + sheet are reported as inadmissible via
    SpinorObstruction (not every section admits a divisor in the domain)."""
    if lattice is None:
        lattice = JacobianLattice(periods.Pi)
    target = (section.point.rep
              - abel_map_point(curve, periods, CurvePoint(0j, 1), tol))

    n = curve.n
    cache = {}

    def phi_pt(z, sheet):
        key = (complex(z), sheet)
        if key not in cache:
            cache[key] = abel_map_point(curve, periods,
                                        CurvePoint(complex(z), sheet), tol)
        return cache[key]

    def residual(zs, sheets):
        total = sum(phi_pt(z, s) for z, s in zip(zs, sheets))
        return lattice.nearest_rep(total - target)

    best = None
    for sheets in itertools.combinations_with_replacement((1, -1), n):
        seeds = _seed_grid(curve)
        scored = []
        for combo in _seed_combos(seeds, n):
            r = residual(combo, sheets)
            scored.append((float(np.linalg.norm(r)), combo))
        scored.sort(key=lambda t: t[0])
        for _, combo in scored[:6]:
            sol = _newton(curve, periods, lattice, list(combo), list(sheets),
                          target, newton_tol, max_iter, phi_pt)
            if sol is None:
                continue
            zs, res = sol
            cand = (float(res), zs, sheets)
            if best is None or cand[0] < best[0]:
                admissible = all(
                    s == 1 and curve.on_slit(z.real,
                                             1e-6 * curve.span) is None
                    if abs(z.imag) < 1e-9 else s == 1
                    for z, s in zip(zs, sheets))
                if admissible and cand[0] < newton_tol * 100:
                    div = Divisor.of(*(CurvePoint(z, 1) for z in zs))
                    div.validate_in_omega(curve)
                    return div
                best = cand
    msg = ("no admissible divisor in the + sheet for this section"
           if best is not None else "Newton inversion failed for all seeds")
    raise SpinorObstruction(msg, residual=None if best is None else best[0])


def _seed_combos(seeds, n, stride=3):
    if n == 1:
        for s in seeds:
            yield (s,)
    else:
        # decimate to keep the multivariate seeding affordable
        short = seeds[::stride]
        for combo in itertools.combinations(short, n):
            yield combo


def _newton(curve, periods, lattice, zs, sheets, target, newton_tol, max_iter,
            phi_pt):
    zs = [complex(z) for z in zs]
    n = len(zs)
    res = lattice.nearest_rep(sum(phi_pt(z, s) for z, s in zip(zs, sheets))
                              - target)
    norm = np.linalg.norm(res)
    for _ in range(max_iter):
        if norm < newton_tol:
            return zs, norm
        J = np.empty((n, n), dtype=complex)
        for i, (z, s) in enumerate(zip(zs, sheets)):
            try:
                J[:, i] = _eta_at(curve, periods, z, s)
            except Exception:
                return None
        try:
            step = np.linalg.solve(J, res)
        except np.linalg.LinAlgError:
            return None
        lam = 1.0
        for _ in range(20):
            trial = [z - lam * dz for z, dz in zip(zs, step)]
            if any(curve.dist_to_slits(z) < 1e-8 for z in trial):
                lam *= 0.5
                continue
            try:
                r2 = lattice.nearest_rep(
                    sum(phi_pt(z, s) for z, s in zip(trial, sheets)) - target)
            except Exception:
                lam *= 0.5
                continue
            n2 = np.linalg.norm(r2)
            if n2 < norm or lam < 1e-4:
                zs, res, norm = trial, r2, n2
                break
            lam *= 0.5
        else:
            return None
    return (zs, norm) if norm < newton_tol * 100 else None
