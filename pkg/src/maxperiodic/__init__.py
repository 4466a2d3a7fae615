"""Singly periodic maximal surfaces in Lorentz-Minkowski 3-space.

Constructs complete maximal graphs over the cylinder from hyperelliptic
moduli data (real branch points + spinor divisor + mark point) and verifies
the checkable consequences: period certificates, spinor sections, the
Weierstrass pair, cone asymptotics, Scherk ends, and the coordinate chart.
"""

from .kernels import BACKEND as kernel_backend
from .curve import CurvePoint, RealHyperellipticCurve
from .domain import MinkowskiVector, minkowski_inner, stereographic
from .homology import dual_basis_and_periods
from .jacobian import Divisor, JacobianLattice, solve_divisor, spinor_sections
from .weierstrass import build_weierstrass
from .meshing import MeshSpec, build_curve_mesh
from .surface import extract_mark, integrate_immersion

__version__ = "0.1.0"

__all__ = [
    "kernel_backend", "RealHyperellipticCurve", "CurvePoint",
    "MinkowskiVector", "minkowski_inner", "stereographic",
    "dual_basis_and_periods", "Divisor", "JacobianLattice", "solve_divisor",
    "spinor_sections", "build_weierstrass", "MeshSpec", "build_curve_mesh",
    "integrate_immersion", "extract_mark", "__version__",
]
