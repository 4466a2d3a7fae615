"""Lorentzian vector algebra, the hyperbolic sphere, and circular-domain parameters.

The ambient space is R^3 with the indefinite inner product
dx1^2 + dx2^2 - dx3^2.  The zero vector counts as spacelike.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# strict-disjointness slack for the closed disks of a circular domain;
# keeps downstream quadrature away from near-touching configurations
EPS_GEOM = 1e-12


@dataclass(frozen=True)
class MinkowskiVector:
    x1: float
    x2: float
    x3: float

    def __iter__(self):
        return iter((self.x1, self.x2, self.x3))

    def __add__(self, other):
        return MinkowskiVector(self.x1 + other.x1, self.x2 + other.x2, self.x3 + other.x3)

    def __sub__(self, other):
        return MinkowskiVector(self.x1 - other.x1, self.x2 - other.x2, self.x3 - other.x3)

    def __mul__(self, t: float):
        return MinkowskiVector(t * self.x1, t * self.x2, t * self.x3)

    __rmul__ = __mul__

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.x3], dtype=float)

    @staticmethod
    def from_array(a) -> "MinkowskiVector":
        a = np.asarray(a, dtype=float)
        return MinkowskiVector(float(a[0]), float(a[1]), float(a[2]))


def minkowski_inner(u, v) -> float:
    """u1*v1 + u2*v2 - u3*v3 for vectors or arrays of shape (..., 3)."""
    ua, va = np.asarray(tuple(u) if isinstance(u, MinkowskiVector) else u, dtype=float), \
        np.asarray(tuple(v) if isinstance(v, MinkowskiVector) else v, dtype=float)
    return ua[..., 0] * va[..., 0] + ua[..., 1] * va[..., 1] - ua[..., 2] * va[..., 2]


def causal_class(u) -> str:
    """'spacelike' (>= 0, the zero vector included by convention),
    'timelike' (< 0) or 'lightlike' (= 0 with u != 0)."""
    ua = np.asarray(tuple(u) if isinstance(u, MinkowskiVector) else u, dtype=float)
    q = minkowski_inner(ua, ua)
    if q < 0.0:
        return "timelike"
    if q == 0.0 and np.any(ua != 0.0):
        return "lightlike"
    return "spacelike"


def stereographic(z) -> MinkowskiVector:
    """Stereographic parametrization of the hyperbolic sphere H^2.

    z = inf maps to (0,0,1); |z| < 1 lands on the x3 < 0 sheet.
    Unit-modulus input has no image and is rejected.
    """
    if z is None or (isinstance(z, complex) and (np.isinf(z.real) or np.isinf(z.imag))) or \
            (np.isscalar(z) and np.isinf(z)):
        return MinkowskiVector(0.0, 0.0, 1.0)
    z = complex(z)
    m2 = abs(z) ** 2
    d = m2 - 1.0
    if d == 0.0:
        raise ValidationError("stereographic projection undefined on |z| = 1")
    return MinkowskiVector(2.0 * z.imag / d, -2.0 * z.real / d, (m2 + 1.0) / d)


@dataclass(frozen=True)
class CircularDomainParams:
    """Parameters of a marked circular domain with n+1 holes.

    c0 is real > 1, r0 = c0 - 1 exactly, the closed disks D_j are pairwise
    disjoint and none contains 0.
    """

    n: int
    c0: float
    r0: float
    centers: tuple  # c1..cn, complex
    radii: tuple    # r1..rn, real > 0

    def disks(self):
        out = [(complex(self.c0), self.r0)]
        out.extend((complex(c), float(r)) for c, r in zip(self.centers, self.radii))
        return out


def tn_validate(v: CircularDomainParams):
    """Report-style validation of the circular-domain constraints.

    Returns (ok, message); message names the first violated constraint.
    """
    if v.n < 0 or len(v.centers) != v.n or len(v.radii) != v.n:
        return False, "hole count does not match center/radius lists"
    if not v.c0 > 1.0:
        return False, "c0 must be real > 1"
    if abs(v.r0 - (v.c0 - 1.0)) > EPS_GEOM:
        return False, "r0 != c0 - 1"
    disks = v.disks()
    for j, (c, r) in enumerate(disks):
        if r <= 0.0:
            return False, f"radius r{j} not positive"
        if abs(c) <= r + EPS_GEOM:
            return False, f"0 lies in closed disk D{j}"
    for i in range(len(disks)):
        for j in range(i + 1, len(disks)):
            ci, ri = disks[i]
            cj, rj = disks[j]
            if abs(ci - cj) <= ri + rj + EPS_GEOM:
                return False, f"closed disks D{i} and D{j} are not disjoint"
    return True, "ok"


def schwarz_reflect(v: CircularDomainParams, z: complex) -> complex:
    """Schwarz reflection about the circle |z - c0| = r0; an involution
    fixing that circle pointwise.  Pole at z = c0."""
    z = complex(z)
    if z == complex(v.c0):
        raise ValidationError("Schwarz reflection has a pole at c0")
    return v.c0 + v.r0 ** 2 / (np.conj(z) - v.c0)
