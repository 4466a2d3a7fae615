"""Pure-numpy implementations of the hot kernels.

Same contracts as the compiled extension in _kernels.pyx; selected at import
time by maxperiodic.kernels when the extension is unavailable (or when
MAXPERIODIC_PURE_PYTHON=1).
"""

import numpy as np

BACKEND = "python"


def w_branch(z, branch):
    """Branch w+(z) = prod_i sqrt(z - c_i), principal square roots.

    The individual cuts cancel pairwise off the slits [c_{2i+1}, c_{2i+2}],
    so the product is holomorphic exactly on the slit complement and is
    real positive on (c_{2n+2}, inf).
    """
    z = np.asarray(z, dtype=complex)
    w = np.ones_like(z)
    for c in branch:
        w = w * np.sqrt(z - c)
    return w


def w_branch_slit(x, branch, side):
    """One-sided limit of w+ on a slit: x real, side +1 for Im z -> 0+,
    side -1 for Im z -> 0-.  Factors with c_i > x contribute side*i*sqrt(c_i-x)."""
    x = np.asarray(x, dtype=float)
    w = np.ones(x.shape, dtype=complex)
    for c in branch:
        d = x - c
        pos = d >= 0.0
        f = np.where(pos, np.sqrt(np.abs(d)) + 0j, side * 1j * np.sqrt(np.abs(d)))
        w = w * f
    return w


def _polyval(coeffs, z):
    # low-order-first coefficients; scalar-friendly Horner
    acc = np.zeros_like(z)
    for c in coeffs[::-1]:
        acc = acc * z + c
    return acc


def eval_terms(z, w, terms):
    """Sum of rational terms (A(z) + B(z) w) / (C(z) w^k), k in {0, 1}.

    `terms` is a sequence of (A, B, C, k) with low-order-first complex
    coefficient arrays.  Returns the dz-coefficient of the form at (z, w).
    """
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    out = np.zeros_like(z)
    for A, B, C, k in terms:
        num = _polyval(A, z)
        if B is not None and len(B):
            num = num + _polyval(B, z) * w
        den = _polyval(C, z)
        if k:
            den = den * w
        out = out + num / den
    return out
