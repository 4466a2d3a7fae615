import numpy as np
import pytest

from maxperiodic.domain import (CircularDomainParams, causal_class,
                                minkowski_inner, schwarz_reflect,
                                stereographic, tn_validate)
from maxperiodic.errors import ValidationError


def test_inner_product_examples():
    assert minkowski_inner((1, 0, 0), (1, 0, 0)) == 1.0
    assert causal_class((1, 0, 0)) == "spacelike"
    assert minkowski_inner((0, 0, 1), (0, 0, 1)) == -1.0
    assert causal_class((0, 0, 1)) == "timelike"
    assert minkowski_inner((1, 0, 1), (1, 0, 1)) == 0.0
    assert causal_class((1, 0, 1)) == "lightlike"


def test_zero_vector_spacelike():
    assert causal_class((0.0, 0.0, 0.0)) == "spacelike"


def test_inner_symmetric_bilinear():
    rng = np.random.default_rng(0)
    for _ in range(50):
        u, v, w = rng.normal(size=(3, 3))
        a, b = rng.normal(size=2)
        assert minkowski_inner(u, v) == pytest.approx(minkowski_inner(v, u))
        assert minkowski_inner(a * u + b * w, v) == pytest.approx(
            a * minkowski_inner(u, v) + b * minkowski_inner(w, v))


def test_stereographic_poles():
    assert tuple(stereographic(np.inf)) == (0.0, 0.0, 1.0)
    assert tuple(stereographic(0.0)) == (0.0, 0.0, -1.0)


def test_stereographic_half():
    v = stereographic(0.5)
    assert tuple(v) == pytest.approx((0.0, 4.0 / 3.0, -5.0 / 3.0))
    assert minkowski_inner(v, v) == pytest.approx(-1.0, abs=1e-12)


def test_stereographic_quadric_property():
    rng = np.random.default_rng(1)
    for _ in range(60):
        z = complex(rng.normal(), rng.normal())
        if abs(abs(z) - 1.0) < 1e-3:
            continue
        v = stereographic(z)
        # 1e-12 absolute away from the circle, relative when the components
        # blow up approaching it
        scale = max(1.0, minkowski_inner(v, v) + 2.0 * v.x3 ** 2)
        assert abs(minkowski_inner(v, v) + 1.0) < 1e-12 * scale
        # |z| < 1 lands on the past sheet
        if abs(z) < 1:
            assert v.x3 < 0


def test_stereographic_rejects_unit_modulus():
    with pytest.raises(ValidationError):
        stereographic(np.exp(0.3j))


def _params(**kw):
    base = dict(n=1, c0=2.0, r0=1.0, centers=(-2.0 + 0j,), radii=(0.5,))
    base.update(kw)
    return CircularDomainParams(**base)


def test_tn_validate_examples():
    ok, msg = tn_validate(_params())
    assert ok, msg
    ok, msg = tn_validate(_params(r0=0.9))
    assert not ok and "r0" in msg
    ok, msg = tn_validate(_params(centers=(0.1 + 0j,)))
    assert not ok and "0 lies in" in msg


def test_tn_validate_disjointness():
    ok, msg = tn_validate(_params(centers=(2.5 + 0j,), radii=(0.6,)))
    assert not ok and "disjoint" in msg


def test_schwarz_reflection():
    v = _params()
    # the unit circle around c0 is fixed pointwise
    for th in np.linspace(0, 2 * np.pi, 9):
        z = v.c0 + v.r0 * np.exp(1j * th)
        assert schwarz_reflect(v, z) == pytest.approx(z)
    # the basepoint z = 1 lies on that circle
    assert schwarz_reflect(v, 1.0) == pytest.approx(1.0)
    # involution off the circle
    rng = np.random.default_rng(2)
    for _ in range(40):
        z = complex(rng.normal(2.0, 1.5), rng.normal(0, 1.5))
        if abs(z - v.c0) < 1e-6:
            continue
        zz = schwarz_reflect(v, schwarz_reflect(v, z))
        assert zz == pytest.approx(z, abs=1e-12)
        # fixed points are exactly the circle
        moved = abs(schwarz_reflect(v, z) - z)
        dist = abs(abs(z - v.c0) - v.r0)
        assert (moved < 1e-9) == (dist < 1e-9)
