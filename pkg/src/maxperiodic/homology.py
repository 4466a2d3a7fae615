"""Canonical homology on the slit model, dual holomorphic basis, periods.

The n+1 slit ovals are the fixed circles of the mirror involution; the oval
over the positive slit containing z = 1 plays the role of a_0 and is left
out of the basis.  The basis cycles are:

  a_j, j = 1..n : the oval over the j-th negative slit [c_{2j-1}, c_{2j}],
                  realized as a counterclockwise loop collapsed onto the cut;
  b_j           : an arc on the + sheet through the upper half plane joining
                  the a_0 slit to slit j, followed by its mirror image on the
                  - sheet through the lower half plane (two slit crossings).

a-periods use the collapse of the loop onto the cut: the top edge of the
slit is traversed right to left and the bottom edge left to right, so the
period is the integral over the slit of the branch discontinuity.  The
square-root endpoint singularities are removed exactly by the substitution
x = m - L cos(theta).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .curve import (ContourPath, DifferentialForm, Segment, Term, gl_nodes,
                    holomorphic_basis_raw, integrate_form)
from .errors import QuadratureError, ValidationError


@dataclass
class BCycle:
    path: ContourPath
    crossings: list  # [(slit_index, x)], exactly two entries
    waypoints_upper: list


@dataclass
class HomologyBasis:
    curve: object
    a_slits: list          # slit index of a_j, j = 1..n
    b_cycles: list         # BCycle per j
    orientation: int = 1   # +1 after the Im(Pi) > 0 normalization

    def intersection_matrix(self):
        """(a_j, b_h) from the crossing records: b_h crosses the oval of its
        target slit once and the a_0 oval once, and nothing else."""
        n = len(self.a_slits)
        mat = np.zeros((n, n), dtype=int)
        for h, bc in enumerate(self.b_cycles):
            crossed = {s for s, _ in bc.crossings}
            for j, slit in enumerate(self.a_slits):
                mat[j, h] = 1 if slit in crossed else 0
        return mat


def build_basis(curve, obstacles=(), clearance=0.05) -> HomologyBasis:
    """Concrete cycles; obstacle points (e.g. poles of a form to be
    integrated later) are cleared by re-routing the upper arcs."""
    n = curve.n
    a_slits = list(range(n))
    a0 = curve.slits[n]
    m0, L0 = 0.5 * (a0[0] + a0[1]), 0.5 * (a0[1] - a0[0])
    H = 0.6 * curve.span
    b_cycles = []
    for j in range(1, n + 1):
        slit = curve.slits[j - 1]
        mj = 0.5 * (slit[0] + slit[1])
        # spread the a_0 crossings so the b arcs stay pairwise disjoint
        x0 = m0 + 0.6 * L0 * (j - 0.5 * (n + 1)) / max(n, 1)
        h = H * (1.0 + 0.18 * (j - 1))
        upper = [complex(x0, 0.0), complex(x0, h), complex(mj, h),
                 complex(mj, 0.0)]
        upper = _clear_obstacles(curve, upper, obstacles, clearance)
        segs = [Segment("line", (upper[i], upper[i + 1]), 1)
                for i in range(len(upper) - 1)]
        lower = [np.conj(p) for p in upper[::-1]]
        segs += [Segment("line", (lower[i], lower[i + 1]), -1)
                 for i in range(len(lower) - 1)]
        path = ContourPath(segs, crossings=[(j - 1, mj), (n, x0)])
        b_cycles.append(BCycle(path, [(j - 1, mj), (n, x0)], upper))
    return HomologyBasis(curve, a_slits, b_cycles)


def _clear_obstacles(curve, pts, obstacles, clearance):
    from .curve import _avoid_obstacles
    margin = 1e-3 * max(b - a for a, b in curve.slits)
    return _avoid_obstacles(curve, pts, obstacles, clearance, margin)


# ---------------------------------------------------------------------------
# periods
# ---------------------------------------------------------------------------

def a_period(form, slit_idx, curve=None, tol=1e-11, order=48, max_order=768):
    """Counterclockwise period around the oval of a slit via cut collapse.

    Integrates R(x, w_bottom) - R(x, w_top) over the slit with the
    x = m - L cos(theta) substitution; doubles the order until two successive
    estimates agree to tol."""
    if curve is None:
        curve = form.curve
    a, b = curve.slits[slit_idx]
    m, L = 0.5 * (a + b), 0.5 * (b - a)
    ev = form.eval_zw if not callable(form) else form

    def estimate(p):
        x, wts = gl_nodes(p)
        th = 0.5 * (x + 1.0) * math.pi
        xs = m - L * np.cos(th)
        dxs = L * np.sin(th) * 0.5 * math.pi
        wtop = kernels.w_branch_slit(xs, curve.branch, +1)
        wbot = kernels.w_branch_slit(xs, curve.branch, -1)
        vals = ev(xs.astype(complex), wbot) - ev(xs.astype(complex), wtop)
        peak = float(np.max(np.abs(vals * dxs)))
        return np.sum(vals * dxs * wts, axis=-1), peak

    prev, peak = estimate(order)
    best, best_diff = prev, np.inf
    p = order
    while p < max_order:
        p *= 2
        cur, peak = estimate(p)
        diff = float(np.max(np.abs(cur - prev)))
        scale = max(1.0, float(np.max(np.abs(cur))))
        if diff < max(tol, 5e-14 * scale):
            return cur
        if diff < best_diff:
            best, best_diff = cur, diff
        prev = cur
    # spectral convergence stalled at the floating-point noise floor set by
    # the endpoint peak of the integrand; accept if the stall is at that level
    noise = 64.0 * np.finfo(float).eps * max(peak, 1.0)
    if best_diff < max(tol * 64.0, noise):
        return best
    raise QuadratureError(f"a-period did not converge on slit {slit_idx} "
                          f"(stall {best_diff:.2e})")


def a_period_loop(form, slit_idx, curve=None, s=None, tol=1e-11):
    """Fallback/cross-check: quadrature over a confocal loop off the cut."""
    from .curve import confocal_loop, slit_fatness
    if curve is None:
        curve = form.curve
    if s is None:
        s = slit_fatness(curve, slit_idx)
    val, _ = integrate_form(form, confocal_loop(curve, slit_idx, s), curve,
                            tol=tol)
    return val


def oval_winding(form, slit_idx, curve=None, tol=1e-10):
    """Integral over the full oval (upper edge left to right, lower edge
    right to left); equals minus the collapsed counterclockwise loop."""
    return -a_period(form, slit_idx, curve=curve, tol=tol)


@dataclass
class PeriodData:
    curve: object
    basis: HomologyBasis
    eta_coeffs: np.ndarray     # M with eta_j = sum_l M[j,l] z^l dz/w
    Pi: np.ndarray
    raw_a: np.ndarray
    raw_b: np.ndarray
    certificates: dict = field(default_factory=dict)
    eta_forms: list = field(default_factory=list)

    def eta_form(self, j):
        return self.eta_forms[j]

    def eta_stack(self):
        """Callable (z, w) -> (n, ...) values of all eta coefficients."""
        M = self.eta_coeffs

        def ev(z, w):
            z = np.asarray(z, dtype=complex)
            pows = np.stack([z ** l for l in range(M.shape[1])])
            return (M @ pows.reshape(M.shape[1], -1)).reshape((M.shape[0],)
                                                              + z.shape) / w
        return ev


def dual_basis_and_periods(curve, basis=None, tol=1e-11) -> PeriodData:
    """Dual basis eta_j with a-periods delta_jk, and the period matrix Pi.

    Pi is purely imaginary for this real structure; the b-cycle orientations
    are normalized so that Im(Pi) is positive definite."""
    if basis is None:
        basis = build_basis(curve)
    n = curve.n
    raw = holomorphic_basis_raw(curve)
    A = np.empty((n, n), dtype=complex)
    for k, slit in enumerate(basis.a_slits):
        for l, om in enumerate(raw):
            A[k, l] = a_period(om, slit, curve, tol=tol)
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > 1e12:
        raise ValidationError(
            f"raw a-period matrix numerically singular (cond {cond:.2e})")
    M = np.linalg.inv(A).T

    Braw = np.empty((n, n), dtype=complex)
    for j, bc in enumerate(basis.b_cycles):
        for l, om in enumerate(raw):
            Braw[j, l], _ = integrate_form(om, bc.path, curve, tol=tol)
    Pi = Braw @ M.T

    # fix orientation: flip every b-cycle if Im(Pi) is negative definite
    eig = np.linalg.eigvalsh(0.5 * (Pi.imag + Pi.imag.T))
    if np.all(eig < 0):
        for bc in basis.b_cycles:
            bc.path = bc.path.reversed()
            bc.waypoints_upper = bc.waypoints_upper[::-1]
        Braw = -Braw
        Pi = -Pi
        basis.orientation = -1

    eta_forms = []
    for j in range(n):
        eta_forms.append(DifferentialForm(
            curve, [Term(tuple(M[j]), None, (1.0,), 1)], symmetry="even",
            name=f"eta_{j + 1}"))

    certificates = {
        "delta_residual": _delta_certificate(curve, basis, eta_forms, tol),
        "re_pi": float(np.max(np.abs(Pi.real))),
        "symmetry": float(np.max(np.abs(Pi - Pi.T))),
        "raw_cond": float(cond),
    }
    return PeriodData(curve, basis, M, Pi, A, Braw, certificates, eta_forms)


def _delta_certificate(curve, basis, eta_forms, tol):
    worst = 0.0
    for k, slit in enumerate(basis.a_slits):
        for j, eta in enumerate(eta_forms):
            v = a_period(eta, slit, curve, tol=tol, order=96, max_order=1536)
            worst = max(worst, abs(v - (1.0 if j == k else 0.0)))
    return float(worst)


def export_period_table(pd: PeriodData, fh):
    """CSV rows per dual-basis form: a-periods then b-periods, re/im pairs."""
    n = pd.curve.n
    writer = csv.writer(fh)
    header = ["form"]
    for k in range(n):
        header += [f"a{k + 1}_re", f"a{k + 1}_im"]
    for k in range(n):
        header += [f"b{k + 1}_re", f"b{k + 1}_im"]
    writer.writerow(header)
    for j in range(n):
        row = [f"eta_{j + 1}"]
        for k in range(n):
            v = 1.0 if j == k else 0.0
            row += [f"{v:.17g}", "0"]
        for k in range(n):
            row += [f"{pd.Pi[k, j].real:.17g}", f"{pd.Pi[k, j].imag:.17g}"]
        writer.writerow(row)
