"""Reconstruction of the Gauss map g and height form phi3 from (curve, divisor).

Meromorphic functions with prescribed principal divisor are built as
exponentials of third-kind differentials corrected by dual-basis forms: the
correction coefficients are solved so that every cycle period of the
exponent lies in 2 pi i Z, with the integers reported.  Failure of the
integrality test is exactly the Abel/spinor obstruction and raises
SpinorObstruction.

The final normalization scales g by a unimodular constant and phi3 by a real
constant so that the real period of the Weierstrass integrand around the
puncture z = 0 is (+-1, 0, 0).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .curve import (ContourPath, CurvePoint, DifferentialForm, Segment,
                    circle_path, confocal_loop, integrate_form,
                    mirror_involution, path_to_point, slit_fatness,
                    third_kind_combo)
from .domain import MinkowskiVector, causal_class
from .errors import SpinorObstruction, ValidationError
from .homology import a_period, build_basis, oval_winding
from .jacobian import Divisor, JacobianLattice

TWO_PI_I = 2.0j * math.pi


# ---------------------------------------------------------------------------
# normalized third-kind differentials
# ---------------------------------------------------------------------------

@dataclass
class NormalizedThirdKind:
    form: DifferentialForm
    residue_table: dict
    a_period_certificate: float


def _a_normalize(curve, periods, raw, tol=1e-11):
    form = raw
    for i, slit in enumerate(periods.basis.a_slits):
        alpha = a_period(form, slit, curve, tol=tol)
        form = form - complex(alpha) * periods.eta_forms[i]
    cert = max(abs(a_period(form, s, curve, tol=tol))
               for s in periods.basis.a_slits) if curve.n else 0.0
    return form, float(cert)


def tau_form(curve, periods, D: Divisor, tol=1e-11) -> NormalizedThirdKind:
    """Simple poles with residue -m_j at each divisor point and +m_j at its
    mirror image; zero a-periods."""
    D.validate_in_omega(curve)
    pts = []
    for p, m in D.points:
        pts.append((p, -float(m)))
        pts.append((mirror_involution(p), float(m)))
    raw = third_kind_combo(curve, pts)
    form, cert = _a_normalize(curve, periods, raw, tol)
    return NormalizedThirdKind(form, dict(pts), cert)


def kappa_form(curve, periods, D1: Divisor, D2: Divisor,
               tol=1e-11) -> NormalizedThirdKind:
    """Simple poles with residue -m_j at the points of D1 and their mirrors,
    +n_h at the points of D2 and their mirrors; zero a-periods."""
    pts = []
    for p, m in D1.points:
        pts.append((p, -float(m)))
        pts.append((mirror_involution(p), -float(m)))
    for p, m in D2.points:
        pts.append((p, float(m)))
        pts.append((mirror_involution(p), float(m)))
    raw = third_kind_combo(curve, pts)
    form, cert = _a_normalize(curve, periods, raw, tol)
    return NormalizedThirdKind(form, dict(pts), cert)


# ---------------------------------------------------------------------------
# principal functions via exponentials
# ---------------------------------------------------------------------------

class PrincipalFunction:
    """f = exp(int exponent) with every period of the exponent in 2 pi i Z;
    f equals 1 at the basepoint and its principal divisor is num/den."""

    def __init__(self, curve, periods, exponent, m_ints, l_ints, residual,
                 obstacles):
        self.curve = curve
        self.periods = periods
        self.exponent = exponent
        self.m_ints = np.asarray(m_ints, dtype=int)
        self.l_ints = np.asarray(l_ints, dtype=int)
        self.residual = float(residual)
        self.obstacles = list(obstacles)
        self._log_cache = {}

    def log_value(self, point, tol=1e-11):
        """Integral of the exponent from the basepoint; branch depends on the
        path, the exponential does not."""
        if not isinstance(point, CurvePoint):
            point = CurvePoint(complex(point), 1)
        key = (point.z, point.sheet)
        if key not in self._log_cache:
            path = path_to_point(self.curve, point, obstacles=self.obstacles,
                                 clearance=0.03 * self.curve.span)
            val, _ = integrate_form(self.exponent, path, self.curve, tol=tol)
            self._log_cache[key] = complex(val)
        return self._log_cache[key]

    def value(self, point, tol=1e-11):
        return np.exp(self.log_value(point, tol))

    def value_on_slit(self, x, slit_side=1, tol=1e-11):
        """One-sided boundary value over a slit point: the path approaches
        vertically from the chosen side and the exponent is regular up to
        the boundary."""
        p = CurvePoint(complex(float(x)), 1)
        path = path_to_point(self.curve, p, side_end=slit_side,
                             obstacles=self.obstacles,
                             clearance=0.03 * self.curve.span)
        val, _ = integrate_form(self.exponent, path, self.curve, tol=tol)
        return np.exp(complex(val))

    def winding(self, loop, tol=1e-10):
        val, _ = integrate_form(self.exponent, loop, self.curve, tol=tol)
        return complex(val) / TWO_PI_I


def principal_function(curve, periods, numerator: Divisor, denominator: Divisor,
                       lattice=None, tol=1e-11,
                       lattice_tol=1e-7) -> PrincipalFunction:
    """Unique meromorphic function with divisor num/den and value 1 at the
    basepoint, certified single-valued.

    Raises SpinorObstruction when the Abel condition fails: the period
    defect of the exponent is then (approximately) the lattice distance of
    the divisor class."""
    if numerator.degree != denominator.degree:
        raise ValidationError("principal divisor must have degree zero")
    if lattice is None:
        lattice = JacobianLattice(periods.Pi)
    pts = [(p, float(m)) for p, m in numerator.points]
    pts += [(p, -float(m)) for p, m in denominator.points]
    raw = third_kind_combo(curve, pts)
    theta0, _ = _a_normalize(curve, periods, raw, tol)

    pole_zs = [complex(p.z) for p, _ in pts if p.is_finite]
    basis = build_basis(curve, obstacles=pole_zs,
                        clearance=0.04 * curve.span)
    if periods.basis.orientation < 0:
        for bc in basis.b_cycles:
            bc.path = bc.path.reversed()
    u = np.empty(curve.n, dtype=complex)
    for k, bc in enumerate(basis.b_cycles):
        beta, _ = integrate_form(theta0, bc.path, curve, tol=tol)
        u[k] = complex(beta) / TWO_PI_I
    l_ints, m_ints, resid = lattice.integer_coords(u)
    if resid > lattice_tol:
        raise SpinorObstruction(
            f"divisor is not principal: period defect {resid:.3e} "
            f"(lattice tolerance {lattice_tol:g})", residual=resid)

    theta = theta0
    for j in range(curve.n):
        if m_ints[j]:
            theta = theta - (TWO_PI_I * m_ints[j]) * periods.eta_forms[j]
    return PrincipalFunction(curve, periods, theta, m_ints, l_ints, resid,
                             pole_zs)


# ---------------------------------------------------------------------------
# reference holomorphic form (J-even, 2n-2 distinct zeros off the ovals)
# ---------------------------------------------------------------------------

@dataclass
class ReferenceForm:
    form: DifferentialForm
    coeffs: np.ndarray         # q(z) with form = q(z) dz / w
    zeros: list                # A_v: one point per mirror pair
    lam: np.ndarray


def reference_form(curve, periods, seed=0, max_attempts=64, margin_frac=1e-4):
    """Real combination of the dual basis with distinct zeros off the slits.

    For n = 1 the single dual form is zero-free and is returned directly."""
    n = curve.n
    if n == 1:
        form = periods.eta_forms[0]
        return ReferenceForm(form, periods.eta_coeffs[0].copy(), [],
                             np.array([1.0]))
    rng = np.random.default_rng(seed)
    margin = margin_frac * curve.span
    for _ in range(max_attempts):
        lam = rng.normal(size=n)
        coeffs = lam @ periods.eta_coeffs          # purely imaginary
        poly = np.asarray(coeffs, dtype=complex)
        if abs(poly[-1]) < 1e-12:
            continue
        roots = np.roots(poly[::-1])
        ok = len(roots) == n - 1
        for r in roots:
            if min(abs(r - c) for c in curve.branch) < margin:
                ok = False
            if abs(r.imag) < 1e-12 and curve.on_slit(r.real, margin) is not None:
                ok = False
        if ok and len(set(np.round(roots, 10))) == len(roots):
            form = DifferentialForm(curve, [], symmetry="even")
            acc = None
            for j in range(n):
                term = float(lam[j]) * periods.eta_forms[j]
                acc = term if acc is None else acc + term
            acc.symmetry = "even"
            zeros = [CurvePoint(complex(r), 1) for r in roots]
            return ReferenceForm(acc, np.asarray(coeffs), zeros, lam)
    raise ValidationError("no admissible reference form found")


# ---------------------------------------------------------------------------
# the Weierstrass pair
# ---------------------------------------------------------------------------

class GaussMap:
    """g = theta * exp(int theta_g); |g| = 1 on the ovals, |g| < 1 inside."""

    def __init__(self, pf: PrincipalFunction, unimodular=1.0 + 0j):
        self.pf = pf
        self.unimodular = complex(unimodular)

    def __call__(self, point):
        return self.unimodular * self.pf.value(point)

    def on_slit(self, x, slit_side=1):
        return self.unimodular * self.pf.value_on_slit(x, slit_side)


class HeightForm:
    """phi3 = scale * exp(int theta_f) * omega0; the dz-coefficient is
    evaluated pointwise from a transported exponent."""

    def __init__(self, curve, pf: PrincipalFunction, ref: ReferenceForm,
                 scale):
        self.curve = curve
        self.pf = pf
        self.ref = ref
        self.scale = complex(scale)

    def coef(self, point):
        """Coefficient against dz at a curve point."""
        if not isinstance(point, CurvePoint):
            point = CurvePoint(complex(point), 1)
        w = self.curve.point_w(point)
        om = complex(self.ref.form.eval_zw(np.asarray([point.z]),
                                           np.asarray([w]))[0])
        return self.scale * self.pf.value(point) * om


def build_g0(curve, periods, D: Divisor, lattice=None,
             tol=1e-11) -> PrincipalFunction:
    """Meromorphic function with divisor (D . 0) / J(D . 0), value 1 at the
    basepoint; the paper's unnormalized Gauss map."""
    D.validate_in_omega(curve)
    num = Divisor.of(*([(p, m) for p, m in D.points] + [CurvePoint(0j, 1)]))
    den = num.mirror()
    return principal_function(curve, periods, num, den, lattice, tol)


def build_phi30(curve, periods, D: Divisor, ref: ReferenceForm = None,
                lattice=None, tol=1e-11) -> HeightForm:
    """Height form with divisor D . J(D) / (inf . J(inf)), normalized so
    phi3/(dz/w) is real positive at the basepoint and J* phi3 = -conj phi3."""
    if ref is None:
        ref = reference_form(curve, periods)
    num = Divisor.of(*([(p, m) for p, m in D.points]
                       + [(p, m) for p, m in D.mirror().points]))
    den_pts = [CurvePoint.infinity(1), CurvePoint.infinity(-1)]
    for p in ref.zeros:
        den_pts.append(p)
        den_pts.append(mirror_involution(p))
    den = Divisor.of(*den_pts)
    f = principal_function(curve, periods, num, den, lattice, tol)

    # mu = i q(1): real since the dual-basis combination q has purely
    # imaginary coefficients; dividing by it pins phi3/(dz/w) = 1 at z = 1
    q1 = complex(np.polynomial.polynomial.polyval(1.0, ref.coeffs))
    mu = 1j * q1
    if abs(mu.imag) > 1e-8 * abs(mu):
        raise ValidationError("reference form is not mirror-even at the "
                              "basepoint")
    return HeightForm(curve, f, ref, 1j / mu.real)


# ---------------------------------------------------------------------------
# transported evaluation of Phi = (phi1, phi2, phi3)
# ---------------------------------------------------------------------------

_PARTIAL_CACHE = {}


def partial_matrices(M):
    """(nodes, weights row T, partial matrix S) for spectral integration on
    [-1, 1]: with values v at the nodes, S @ v are the integrals from -1 to
    each node and T @ v is the full integral."""
    if M in _PARTIAL_CACHE:
        return _PARTIAL_CACHE[M]
    x, _ = np.polynomial.legendre.leggauss(M)
    V = np.polynomial.legendre.legvander(x, M - 1)
    Vinv = np.linalg.inv(V)
    B = np.empty((M, M))
    Trow = np.empty(M)
    for k in range(M):
        ek = np.zeros(M)
        ek[k] = 1.0
        anti = np.polynomial.legendre.legint(ek)
        lo = np.polynomial.legendre.legval(-1.0, anti)
        B[:, k] = np.polynomial.legendre.legval(x, anti) - lo
        Trow[k] = np.polynomial.legendre.legval(1.0, anti) - lo
    S = B @ Vinv
    T = Trow @ Vinv
    _PARTIAL_CACHE[M] = (x, T, S)
    return _PARTIAL_CACHE[M]


@dataclass
class TransportState:
    log_g: complex
    log_f: complex


class WeierstrassData:
    """Evaluable certified pair (g, phi3) with the chi-normalization applied.

    g = theta_chi exp(I_g); phi3 = r_chi * phi3_scale * exp(I_f) * omega0.
    """

    needs_transport = True

    def __init__(self, curve, periods, divisor, g0, phi30, theta_chi, r_chi,
                 eps0, q0, w_x, integers, certificates=None):
        self.curve = curve
        self.periods = periods
        self.divisor = divisor
        self.g0 = g0
        self.phi30 = phi30
        self.theta_chi = complex(theta_chi)
        self.r_chi = float(r_chi)
        self.eps0 = int(eps0)
        self.q0 = np.asarray(q0, dtype=float)
        self.w_x = complex(w_x)
        self.integers = integers
        self.certificates = dict(certificates or {})
        self.obstacles = sorted(set(g0.obstacles) | set(phi30.pf.obstacles),
                                key=lambda z: (z.real, z.imag))

    # -- scalar evaluation ---------------------------------------------------

    def state_at(self, point, tol=1e-11):
        if not isinstance(point, CurvePoint):
            point = CurvePoint(complex(point), 1)
        return TransportState(self.g0.log_value(point, tol),
                              self.phi30.pf.log_value(point, tol))

    def g_of(self, point):
        return self.theta_chi * self.g0.value(point)

    def g_at_infinity(self, tol=1e-11):
        return self.theta_chi * self.g0.value(CurvePoint.infinity(1), tol)

    def phi3_coef(self, point):
        return self.r_chi * self.phi30.coef(point)

    def phi_from_state(self, z, w, state_log_g, state_log_f):
        """Phi coefficients from transported exponent values (vectorized)."""
        g = self.theta_chi * np.exp(state_log_g)
        om = self.phi30.ref.form.eval_zw(z, w)
        p3 = self.r_chi * self.phi30.scale * np.exp(state_log_f) * om
        inv = 1.0 / g
        phi1 = 0.5j * (inv - g) * p3
        phi2 = -0.5 * (inv + g) * p3
        return np.stack([phi1, phi2, p3])

    def exponent_forms(self):
        return self.g0.exponent, self.phi30.pf.exponent

    # -- serialization ---------------------------------------------------------

    def to_json_dict(self):
        return {
            "version": 1,
            "branch_points": [float(c) for c in self.curve.branch],
            "divisor": [[p.z.real, p.z.imag, p.sheet, m]
                        for p, m in self.divisor.points],
            "m_integers_g": self.integers["m_g"],
            "l_integers_g": self.integers["l_g"],
            "m_integers_f": self.integers["m_f"],
            "l_integers_f": self.integers["l_f"],
            "theta_chi": [self.theta_chi.real, self.theta_chi.imag],
            "r_chi": self.r_chi,
            "eps0": self.eps0,
            "q0": [float(v) for v in self.q0],
            "w_x": [self.w_x.real, self.w_x.imag],
            "certificates": {k: float(v) for k, v in self.certificates.items()},
        }


def _refine_path(path, curve, max_len):
    """Split long line/arc segments so the fixed-order transport converges."""
    segs = []
    for seg in path.segments:
        t = np.linspace(0.0, 1.0, 17)
        pts = seg.z(t)
        length = float(np.sum(np.abs(np.diff(pts))))
        pieces = max(1, int(math.ceil(length / max_len)))
        if seg.kind == "inf":
            pieces = max(pieces, 6)
        if pieces == 1:
            segs.append(seg)
            continue
        cuts = np.linspace(0.0, 1.0, pieces + 1)
        for i in range(pieces):
            segs.append(_subsegment(seg, cuts[i], cuts[i + 1]))
    return ContourPath(segs, path.crossings)


class _SubSegment(Segment):
    def __init__(self, base, a, b):
        self.base, self.a, self.b = base, a, b
        super().__init__("sub", None, base.sheet, base.slit_side)

    def z(self, t):
        return self.base.z(self.a + (self.b - self.a) * np.asarray(t))

    def dz(self, t):
        return self.base.dz(self.a + (self.b - self.a) * np.asarray(t)) * \
            (self.b - self.a)

    def reversed(self):
        return Segment("reversed", (self,), self.sheet, self.slit_side)


def _subsegment(seg, a, b):
    return _SubSegment(seg, a, b)


def transport_phi(W: WeierstrassData, path, state: TransportState,
                  order=16, max_len=None):
    """Integral of Phi along the path given the transport state at its start.

    Returns (integral 3-vector, end state).  The exponents of g and f are
    integrated spectrally on each (refined) segment so that Phi is available
    at the interior quadrature nodes."""
    curve = W.curve
    if max_len is None:
        max_len = 0.08 * curve.span
    path = _refine_path(path, curve, max_len)
    x, T, S = partial_matrices(order)
    th_g, th_f = W.exponent_forms()
    log_g, log_f = complex(state.log_g), complex(state.log_f)
    total = np.zeros(3, dtype=complex)
    for seg in path.segments:
        t = 0.5 * (x + 1.0)
        z = seg.z(t)
        from .curve import _seg_w
        w = _seg_w(curve, seg, z)
        dz = seg.dz(t) * 0.5   # dt measure on [-1,1] halves
        vg = th_g.eval_zw(z, w) * dz
        vf = th_f.eval_zw(z, w) * dz
        part_g = log_g + S @ vg
        part_f = log_f + S @ vf
        phi = W.phi_from_state(z, w, part_g, part_f)
        total = total + (phi * dz) @ T
        log_g = log_g + T @ vg
        log_f = log_f + T @ vf
    return total, TransportState(log_g, log_f)


def phi_loop_integral(W: WeierstrassData, path, anchor_point=None, order=16,
                      max_len=None):
    """Closed-loop integral of Phi; the transport state is seeded at the
    path start by routed integration from the basepoint."""
    start = complex(path.segments[0].z(0.0))
    sheet = path.segments[0].sheet
    if anchor_point is None:
        anchor_point = CurvePoint(start, sheet if sheet != 0 else 1)
    state = W.state_at(anchor_point)
    val, _ = transport_phi(W, path, state, order=order, max_len=max_len)
    return val


# ---------------------------------------------------------------------------
# flux and normalization
# ---------------------------------------------------------------------------

@dataclass
class FluxVector:
    vector: MinkowskiVector
    cycle_id: str

    @property
    def causal(self):
        return causal_class(self.vector)


def flux(curve, W: WeierstrassData, cycle, cycle_id="cycle") -> FluxVector:
    """Im of the loop integral of Phi along the cycle."""
    val = phi_loop_integral(W, cycle)
    return FluxVector(MinkowskiVector(*np.imag(val)), cycle_id)


def a0_cycle(curve, W_or_obstacles=None):
    """Loop homotopic to the boundary oval a_0 (the slit containing 1)."""
    obstacles = []
    if W_or_obstacles is not None:
        obstacles = getattr(W_or_obstacles, "obstacles", W_or_obstacles)
    s = slit_fatness(curve, curve.n, clear_points=[o.real for o in obstacles])
    return confocal_loop(curve, curve.n, s)


def end_cycle(curve, radius=None):
    """Loop around the puncture z = 0 on the + sheet."""
    if radius is None:
        gap = min(abs(curve.branch[2 * curve.n]), curve.branch[2 * curve.n + 1])
        radius = 0.5 * gap
    return circle_path(0.0, radius, sheet=1)


def _residue_phi_at_zero(W, radius=None, order=24):
    loop = end_cycle(W.curve, radius)
    val = phi_loop_integral(W, loop, order=order)
    return val / TWO_PI_I


class UnscaledData(WeierstrassData):
    """Pre-normalization container (theta = 1, r = 1)."""

    def __init__(self, curve, periods, divisor, g0, phi30, integers):
        super().__init__(curve, periods, divisor, g0, phi30, 1.0, 1.0, 1,
                         np.zeros(3), 0.0, integers)


def normalize_chi(curve, W0: UnscaledData, eps0: int, q0,
                  flux_tol=1e-7) -> WeierstrassData:
    """Compute V = Re[2 pi i Res_0 Phi0], flip phi3 so the third flux
    coordinate at a_0 is positive, then scale so the real period around 0
    is (eps0, 0, 0)."""
    if eps0 not in (-1, 1):
        raise ValidationError("eps0 must be +-1")
    f3 = flux(curve, W0, a0_cycle(curve, W0), "a0").vector.x3
    phi_sign = 1.0
    if f3 < 0:
        phi_sign = -1.0
        W0 = UnscaledData(curve, W0.periods, W0.divisor, W0.g0,
                          _flipped(W0.phi30), W0.integers)

    res0 = _residue_phi_at_zero(W0)
    V = np.real(TWO_PI_I * res0)
    w_x = complex(V[0], V[1])
    if abs(w_x) < 1e-12:
        raise ValidationError("degenerate input: vanishing residue at the end")
    if abs(V[2]) > flux_tol * abs(w_x):
        raise ValidationError(
            f"translation vector is not horizontal (V3 = {V[2]:.2e})")
    theta_chi = np.conj(w_x) / abs(w_x)
    r_chi = eps0 / abs(w_x)
    W = WeierstrassData(curve, W0.periods, W0.divisor, W0.g0, W0.phi30,
                        theta_chi, r_chi, eps0, q0, w_x, W0.integers)
    W.certificates["phi3_sign_flipped"] = 0.0 if phi_sign > 0 else 1.0
    per = np.real(TWO_PI_I * _residue_phi_at_zero(W))
    W.certificates["end_period_error"] = float(
        np.max(np.abs(per - np.array([eps0, 0.0, 0.0]))))
    W.certificates["V3_after_scaling"] = float(
        np.real(TWO_PI_I * _residue_phi_at_zero(W))[2])
    if W.certificates["end_period_error"] > 1e-6:
        raise ValidationError(
            "chi-normalization failed: end period error "
            f"{W.certificates['end_period_error']:.2e}")
    return W


def _flipped(phi30: HeightForm) -> HeightForm:
    return HeightForm(phi30.curve, phi30.pf, phi30.ref, -phi30.scale)


# ---------------------------------------------------------------------------
# assembled construction with certificates
# ---------------------------------------------------------------------------

def build_weierstrass(curve, periods, D: Divisor, eps0=1, q0=(0.0, 0.0, 0.0),
                      lattice=None, tol=1e-11, certify=True):
    """Full (g, phi3) construction for a spinor divisor, chi-normalized."""
    if lattice is None:
        lattice = JacobianLattice(periods.Pi)
    g0 = build_g0(curve, periods, D, lattice, tol)
    ref = reference_form(curve, periods)
    phi30 = build_phi30(curve, periods, D, ref, lattice, tol)
    integers = {
        "m_g": [int(v) for v in g0.m_ints],
        "l_g": [int(v) for v in g0.l_ints],
        "m_f": [int(v) for v in phi30.pf.m_ints],
        "l_f": [int(v) for v in phi30.pf.l_ints],
    }
    W0 = UnscaledData(curve, periods, D, g0, phi30, integers)
    W = normalize_chi(curve, W0, eps0, np.asarray(q0, dtype=float))
    if certify:
        W.certificates.update(certify_weierstrass(curve, W))
    return W


def certify_weierstrass(curve, W: WeierstrassData, n_slit_samples=24,
                        n_sym_samples=40, seed=3):
    """Numerical certificates: |g| = 1 on the ovals, g degree n+1 by winding,
    J-antisymmetry of phi3, conformality, metric positivity."""
    certs = {}
    # |g| on every slit (one-sided boundary values)
    worst = 0.0
    for a, b in curve.slits:
        pad = 0.02 * (b - a)
        for x in np.linspace(a + pad, b - pad, n_slit_samples):
            worst = max(worst, abs(abs(W.theta_chi
                                       * W.g0.value_on_slit(x, 1)) - 1.0))
    certs["gauss_modulus_on_ovals"] = float(worst)

    # degree by total oval winding of dlog g
    wind = 0.0
    for idx in range(curve.n + 1):
        wnd = oval_winding(W.g0.exponent, idx, curve) / TWO_PI_I
        wind += wnd.real
    certs["gauss_degree_winding"] = float(abs(wind))

    # J-antisymmetry of phi3 and conformality on random samples
    rng = np.random.default_rng(seed)
    zs = []
    while len(zs) < n_sym_samples:
        z = complex(rng.uniform(curve.branch[0] - 1.0, curve.branch[-1] + 1.0),
                    rng.uniform(-0.9 * curve.span, 0.9 * curve.span))
        if curve.dist_to_slits(z) > 0.05 * curve.span and abs(z) > 0.1:
            zs.append(z)
    sym_worst = 0.0
    conf_worst = 0.0
    metric_min = np.inf
    for z in zs:
        p = CurvePoint(z, 1)
        pj = mirror_involution(p)
        c1 = W.phi3_coef(p)
        c2 = W.phi3_coef(pj)
        sym_worst = max(sym_worst, abs(np.conj(c2) + c1) / max(abs(c1), 1e-30))
        g = W.g_of(p)
        phi1 = 0.5j * (1.0 / g - g) * c1
        phi2 = -0.5 * (1.0 / g + g) * c1
        conf = abs(phi1 ** 2 + phi2 ** 2 - c1 ** 2) / max(abs(c1) ** 2, 1e-30)
        conf_worst = max(conf_worst, conf)
        metric_min = min(metric_min,
                         0.5 * abs(1.0 / abs(g) - abs(g)) * abs(c1))
    certs["phi3_mirror_antisymmetry"] = float(sym_worst)
    certs["conformality"] = float(conf_worst)
    certs["metric_factor_min"] = float(metric_min)

    # phi3 nonvanishing on the ovals (min modulus scan of the coefficient)
    min_mod = np.inf
    for a, b in curve.slits:
        pad = 0.02 * (b - a)
        for x in np.linspace(a + pad, b - pad, n_slit_samples):
            fval = W.phi30.pf.value_on_slit(x, 1)
            w = complex(kernels.w_branch_slit(np.asarray([x]), curve.branch,
                                              1)[0])
            om = complex(W.phi30.ref.form.eval_zw(np.asarray([complex(x)]),
                                                  np.asarray([w]))[0])
            min_mod = min(min_mod, abs(W.r_chi * W.phi30.scale * fval * om))
    certs["phi3_min_modulus_on_ovals"] = float(min_mod)
    return certs
