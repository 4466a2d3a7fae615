import numpy as np
import pytest

from maxperiodic.curve import (CurvePoint, integrate_form, mirror_involution,
                               path_to_point)
from maxperiodic.errors import SpinorObstruction
from maxperiodic.jacobian import (Divisor, _eta_at, abel_map, abel_map_point,
                                  canonical_point_T, canonical_point_T_alt,
                                  mirror_on_jacobian, solve_divisor,
                                  spinor_membership, spinor_sections,
                                  spinor_target)


def test_abel_of_basepoint_is_zero(std_curve, std_periods, std_lattice):
    v = abel_map_point(std_curve, std_periods, std_curve.basepoint())
    assert std_lattice.distance(v) < 1e-10


def test_abel_path_independence(std_curve, std_periods, std_lattice):
    p = CurvePoint(1.5 + 1.2j, 1)
    vals = []
    for cl, obs in ((0.05, []), (0.4, [0.5 + 0.7j]), (0.9, [1.0 + 0.9j])):
        path = path_to_point(std_curve, p, obstacles=obs, clearance=cl)
        v, _ = integrate_form(std_periods.eta_stack(), path, std_curve,
                              tol=1e-11)
        vals.append(np.asarray(v).reshape(1))
    for v in vals[1:]:
        assert std_lattice.distance(v - vals[0]) < 1e-8


def test_mirror_pair_is_fixed(std_curve, std_periods, std_lattice):
    p = CurvePoint(0.7 + 0.9j, 1)
    v = abel_map_point(std_curve, std_periods, p) + \
        abel_map_point(std_curve, std_periods, mirror_involution(p))
    pt = std_lattice.reduce(v)[0]
    assert std_lattice.distance(np.conj(pt) - pt) < 1e-9


def test_mirror_involution_on_jacobian(std_lattice):
    x = np.asarray([0.3 + 0.0j])
    assert np.allclose(mirror_on_jacobian(std_lattice, x).rep, x)
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = rng.normal(size=1) + 1j * rng.normal(size=1)
        r1 = mirror_on_jacobian(std_lattice,
                                mirror_on_jacobian(std_lattice, x).rep).rep
        assert std_lattice.distance(r1 - x) < 1e-12


def test_mirror_commutes_with_abel(std_curve, std_periods, std_lattice):
    D = Divisor.of(CurvePoint(0.3 + 0.9j, 1), CurvePoint(-1.4 - 0.5j, 1))
    lhs = abel_map(std_curve, std_periods, D.mirror(), lattice=std_lattice)
    rhs = mirror_on_jacobian(
        std_lattice, abel_map(std_curve, std_periods, D, lattice=std_lattice))
    assert std_lattice.distance(lhs.rep - rhs.rep) < 1e-9


def test_reduction_idempotent(std_lattice):
    rng = np.random.default_rng(1)
    for _ in range(30):
        x = 5 * (rng.normal(size=1) + 1j * rng.normal(size=1))
        r1, _, _ = std_lattice.reduce(x)
        r2, _, _ = std_lattice.reduce(r1)
        assert np.allclose(r1, r2)
        assert 0 <= r1[0].real < 1


def test_canonical_point_two_forms(std_curve, std_periods, std_lattice):
    T1 = canonical_point_T(std_curve, std_periods, std_lattice)
    T2 = canonical_point_T_alt(std_curve, std_periods, std_lattice)
    assert std_lattice.distance(T1.rep - T2.rep) < 1e-8


def test_branch_divisor_doubling(std_curve, std_periods, std_lattice):
    l0 = sum(abel_map_point(std_curve, std_periods, CurvePoint(complex(c), 1))
             for c in std_curve.branch[: std_curve.n + 1])
    tgt = spinor_target(std_curve, std_periods, std_lattice)
    assert std_lattice.distance(2 * l0 - tgt.rep) < 1e-8


def test_spinor_sections_count_and_fixedness(std_sections):
    assert len(std_sections) == 4   # 2^{2n}, n = 1
    for s in std_sections:
        assert s.i_fix_residual < 1e-7
        assert s.doubling_residual < 1e-8


def test_spinor_sections_reproducible(std_curve, std_periods, std_lattice,
                                      std_sections):
    again = spinor_sections(std_curve, std_periods, std_lattice)
    for a, b in zip(std_sections, again):
        assert a.bits == b.bits
        assert np.allclose(a.point.rep, b.point.rep)


def test_solve_divisor_roundtrip(std_curve, std_periods, std_lattice,
                                 std_sections, std_divisor):
    best, resid = spinor_membership(std_curve, std_periods, std_divisor,
                                    std_lattice, sections=std_sections)
    assert resid < 1e-7
    assert best == 1


def test_random_divisor_not_member(std_curve, std_periods, std_lattice,
                                   std_sections):
    D = Divisor.of(CurvePoint(0.9 + 1.3j, 1))
    _, resid = spinor_membership(std_curve, std_periods, D, std_lattice,
                                 sections=std_sections)
    assert resid > 1e-3


def test_membership_residual_continuity(std_curve, std_periods, std_lattice,
                                        std_sections, std_divisor):
    # perturbing one divisor point changes the residual at a finite rate
    z0 = complex(std_divisor.points[0][0].z)
    res = []
    for eps in (0.0, 1e-3):
        D = Divisor.of(CurvePoint(z0 + eps * (1 + 1j), 1))
        _, r = spinor_membership(std_curve, std_periods, D, std_lattice,
                                 sections=std_sections)
        res.append(r)
    slope = abs(res[1] - res[0]) / 1e-3
    assert 1e-3 < slope < 1e3


def test_solved_divisor_not_special(std_curve, std_periods, std_divisor):
    # Jacobian of the Abel map at the solved divisor is nonsingular
    J = np.asarray([_eta_at(std_curve, std_periods,
                            complex(p.z), p.sheet)
                    for p, _ in std_divisor.points]).T
    cond = np.linalg.cond(J)
    assert np.isfinite(cond) and cond < 1e6


def test_inadmissible_section_reported(std_curve, std_periods, std_lattice,
                                       std_sections):
    with pytest.raises(SpinorObstruction):
        solve_divisor(std_curve, std_periods, std_sections[0], std_lattice)


def test_solve_divisor_n2():
    from maxperiodic.curve import RealHyperellipticCurve
    from maxperiodic.homology import dual_basis_and_periods
    from maxperiodic.jacobian import JacobianLattice

    cv = RealHyperellipticCurve([-6.0, -4.5, -3.0, -1.5, 0.5, 2.2])
    pd = dual_basis_and_periods(cv)
    lat = JacobianLattice(pd.Pi)
    secs = spinor_sections(cv, pd, lat)
    assert len(secs) == 16                  # 2^{2n}, n = 2
    D = solve_divisor(cv, pd, secs[2], lat)
    assert D.degree == 2
    _, resid = spinor_membership(cv, pd, D, lat, sections=secs)
    assert resid < 1e-7


def test_solution_continuity_under_branch_perturbation(std_divisor):
    from maxperiodic.curve import RealHyperellipticCurve
    from maxperiodic.homology import dual_basis_and_periods
    from maxperiodic.jacobian import JacobianLattice
    from maxperiodic.surface import _continue_divisor

    eps = 1e-4
    cv2 = RealHyperellipticCurve([-2.0 + eps, -1.0, 0.5, 2.0])
    pd2 = dual_basis_and_periods(cv2)
    lat2 = JacobianLattice(pd2.Pi)
    secs2 = spinor_sections(cv2, pd2, lat2)
    D2 = _continue_divisor(cv2, pd2, lat2, secs2[1], std_divisor)
    move = max(abs(complex(a.z) - complex(b.z))
               for (a, _), (b, _) in zip(D2.points, std_divisor.points))
    assert 0 < move < 100 * eps
