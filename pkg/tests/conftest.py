"""Shared fixtures: the standard n=1 build is expensive, so it is built once
per session and reused by the weierstrass/surface/acceptance tests."""

import numpy as np
import pytest

from maxperiodic.curve import RealHyperellipticCurve
from maxperiodic.homology import dual_basis_and_periods
from maxperiodic.jacobian import JacobianLattice, solve_divisor, spinor_sections
from maxperiodic.meshing import MeshSpec, build_curve_mesh
from maxperiodic.surface import extract_mark, integrate_immersion
from maxperiodic.weierstrass import build_weierstrass

STD_BRANCH = [-2.0, -1.0, 0.5, 2.0]


@pytest.fixture(scope="session")
def std_curve():
    return RealHyperellipticCurve(STD_BRANCH)


@pytest.fixture(scope="session")
def std_periods(std_curve):
    return dual_basis_and_periods(std_curve)


@pytest.fixture(scope="session")
def std_lattice(std_periods):
    return JacobianLattice(std_periods.Pi)


@pytest.fixture(scope="session")
def std_sections(std_curve, std_periods, std_lattice):
    return spinor_sections(std_curve, std_periods, std_lattice)


@pytest.fixture(scope="session")
def std_divisor(std_curve, std_periods, std_lattice, std_sections):
    return solve_divisor(std_curve, std_periods, std_sections[1], std_lattice)


@pytest.fixture(scope="session")
def std_W(std_curve, std_periods, std_divisor):
    return build_weierstrass(std_curve, std_periods, std_divisor, eps0=1,
                             q0=(0.0, 0.0, 0.0))


@pytest.fixture(scope="session")
def std_model(std_curve, std_W):
    mesh = build_curve_mesh(std_curve, MeshSpec(target_vertices=9000),
                            obstacles=std_W.obstacles)
    return integrate_immersion(std_W, np.zeros(3), mesh)


@pytest.fixture(scope="session")
def std_mark(std_model):
    return extract_mark(std_model)
