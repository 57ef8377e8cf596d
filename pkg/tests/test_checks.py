import numpy as np
import pytest

from crcartan.core.errors import DomainError
from crcartan.services.checks import (
    FUNCTION_LIBRARY,
    SUITES,
    multi_indices,
    random_gauge,
    richardson_derivative,
    run_suite,
    sample_points,
)


def test_library_has_twenty_functions():
    assert len(FUNCTION_LIBRARY) == 20
    assert len(set(FUNCTION_LIBRARY)) == 20


def test_multi_indices_cover_degrees():
    indices = list(multi_indices(3, 3, min_degree=1))
    assert len(indices) == 19
    assert (0, 0, 0) not in indices
    assert all(1 <= sum(idx) <= 3 for idx in indices)


def test_richardson_on_cubic():
    def cubic(p):
        return p[0] ** 3 * p[1]

    point = np.array([0.5, 2.0])
    assert richardson_derivative(cubic, point, (2, 1)) == pytest.approx(3.0, abs=1e-8)
    assert richardson_derivative(cubic, point, (1, 0)) == pytest.approx(1.5, abs=1e-8)


def test_random_gauge_is_real_and_deterministic():
    first = random_gauge(np.random.default_rng(1), 3, 4)
    second = random_gauge(np.random.default_rng(1), 3, 4)
    assert first.imag().max_abs() == 0.0
    assert (first - second).max_abs() == 0.0


def test_sample_points_stay_near_shipped_point():
    points = sample_points("sphere3", np.random.default_rng(0), 4)
    assert len(points) == 4
    for point in points:
        assert np.max(np.abs(point - np.array([1.0, 0.4, 0.3]))) <= 0.15


def test_suite_registry():
    assert set(SUITES) == {"jets", "gauge-laws", "tractor", "cartan", "fefferman"}


def test_unknown_suite():
    with pytest.raises(KeyError):
        run_suite("nope")


def test_points_must_be_positive():
    with pytest.raises(DomainError, match="at least 1"):
        run_suite("jets", points=0)


def test_jets_suite_passes():
    ledger = run_suite("jets", seed=7, points=1)
    assert ledger.results
    assert ledger.all_passed, ledger.failed()


def test_suites_are_deterministic():
    first = run_suite("jets", seed=3, points=1).to_records()
    second = run_suite("jets", seed=3, points=1).to_records()
    assert first == second


@pytest.mark.slow
def test_tractor_suite_passes():
    ledger = run_suite("tractor", seed=7, points=1)
    assert ledger.all_passed, ledger.failed()


@pytest.mark.slow
@pytest.mark.parametrize("suite", ["gauge-laws", "cartan", "fefferman"])
def test_suite_passes_on_one_point(suite):
    ledger = run_suite(suite, seed=7, points=1)
    assert ledger.results
    assert ledger.all_passed, ledger.failed()


@pytest.mark.slow
def test_cartan_suite_lets_W_decide_in_two_dimensions():
    frame = run_suite("cartan", seed=7, points=1).frame()
    checks = set(frame.loc[frame["spec"].isin(["heis2", "heis2_pert"]), "check"])
    assert {"spherical.W", "non_spherical.W", "formula_vs_commutator"} <= checks
    assert not any(check.endswith(".Q") for check in checks)
