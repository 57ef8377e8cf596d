"""Shared fixtures: the shipped specs and their geometries at the default points."""
import numpy as np
import pytest

from crcartan.services.analysis import SHIPPED_POINTS, build_geometry, density_jet, resolve_spec

ORDER = 6


@pytest.fixture(scope="session")
def heisenberg_spec():
    return resolve_spec("heisenberg")


@pytest.fixture(scope="session")
def sphere_spec():
    return resolve_spec("sphere3")


@pytest.fixture(scope="session")
def heisenberg(heisenberg_spec):
    return build_geometry(heisenberg_spec, SHIPPED_POINTS["heisenberg"], ORDER)


@pytest.fixture(scope="session")
def heisenberg_offset(heisenberg_spec):
    """Heisenberg away from the origin, where z ≠ 0."""
    return build_geometry(heisenberg_spec, [0.1, 0.2, -0.1], ORDER)


@pytest.fixture(scope="session")
def sphere(sphere_spec):
    return build_geometry(sphere_spec, SHIPPED_POINTS["sphere3"], ORDER)


@pytest.fixture(scope="session")
def perturbed():
    return build_geometry(resolve_spec("heis_pert"), SHIPPED_POINTS["heis_pert"], ORDER)


@pytest.fixture(scope="session")
def heis2():
    return build_geometry(resolve_spec("heis2"), SHIPPED_POINTS["heis2"], ORDER)


@pytest.fixture(scope="session")
def heis2_perturbed():
    return build_geometry(resolve_spec("heis2_pert"), SHIPPED_POINTS["heis2_pert"], ORDER)


@pytest.fixture(scope="session")
def holo():
    spec = resolve_spec("heis_holo")
    point = SHIPPED_POINTS["heis_holo"]
    return build_geometry(spec, point, ORDER), density_jet(spec, point, ORDER + 1)


@pytest.fixture
def rng():
    return np.random.default_rng(7)


@pytest.fixture
def heisenberg_listing():
    """The Heisenberg chart with the opposite orientation of θ."""
    return (
        'manifold "heisenberg" { n = 1 complex z = (x, y) coords = [t, x, y] }\n'
        "theta  = d(t) + i*(conj(z)*d(z) - z*d(conj(z)))\n"
        "theta1 = sqrt(2)*d(z)\n"
    )
