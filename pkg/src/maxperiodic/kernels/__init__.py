"""Kernel backend selection.

The compiled Cython extension is preferred when importable; the numpy
fallback has identical semantics.  Set MAXPERIODIC_PURE_PYTHON=1 to force
the fallback (used by the test matrix and the benchmark).
"""

import os

from . import _fallback

if os.environ.get("MAXPERIODIC_PURE_PYTHON") == "1":
    _impl = _fallback
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _fallback

BACKEND = _impl.BACKEND
w_branch = _impl.w_branch
w_branch_slit = _impl.w_branch_slit
eval_terms = _impl.eval_terms

__all__ = ["BACKEND", "w_branch", "w_branch_slit", "eval_terms"]
