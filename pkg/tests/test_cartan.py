import numpy as np
import pytest

from crcartan.services.analysis import probe_tractors
from crcartan.services.cartan import (
    cartan_curvature_action,
    cartan_curvature_numeric,
    cartan_curvature_tensors,
    cartan_derivative,
    cartan_derivative_all,
    curvature_discrepancy,
    determinant_compatibility_residual,
    metric_compatibility_residual,
    parallel_prolongation_residual,
    sphericity,
)
from crcartan.services.gauge import rescale
from crcartan.services.jets import Jet
from crcartan.services.pseudohermitian import PHGeometry
from crcartan.services.tractor import Tractor


def heisenberg_parallel_field(geom, a=0.3, b=0.5 - 0.2j, c=0.7):
    """σ = (a + bz + cw, (b + 2icz̄)/√2, −ic) with w = t + i|z|²."""
    m, order = geom.m, geom.cf.order
    t, x, y = (Jet.variable(k, geom.cf.point[k], m, order) for k in range(3))
    z = x + y * 1j
    z_bar = x - y * 1j
    w = t + (x * x + y * y) * 1j
    ell = z * b + w * c + a
    tau = ((z_bar * (2j * c) + b) * (1.0 / np.sqrt(2.0))).reshape(1)
    psi = Jet.constant(-1j * c, m, order)
    return Tractor(ell=ell, tau=tau, psi=psi)


def test_parallel_field_on_heisenberg(heisenberg_offset):
    sigma = heisenberg_parallel_field(heisenberg_offset)
    for derivative in cartan_derivative_all(sigma, heisenberg_offset):
        assert derivative.max_abs() < 1e-10


def test_parallel_field_matches_its_prolongation(heisenberg_offset):
    sigma = heisenberg_parallel_field(heisenberg_offset)
    residuals = parallel_prolongation_residual(sigma, heisenberg_offset)
    assert max(residuals.values()) < 1e-10


def test_cartan_derivative_rejects_bad_direction(heisenberg_offset):
    sigma = heisenberg_parallel_field(heisenberg_offset)
    with pytest.raises(ValueError):
        cartan_derivative(sigma, heisenberg_offset.m, heisenberg_offset)


@pytest.mark.parametrize("fixture", ["heisenberg_offset", "sphere", "perturbed"])
def test_connection_preserves_metric_and_determinant(fixture, request):
    geom = request.getfixturevalue(fixture)
    s1, s2 = probe_tractors(geom, 1, 2)
    assert metric_compatibility_residual(geom, s1, s2) < 1e-8
    sigmas = probe_tractors(geom, 2, geom.n + 2)
    assert determinant_compatibility_residual(geom, sigmas) < 1e-8


@pytest.mark.parametrize("fixture", ["heisenberg_offset", "sphere"])
def test_spherical_models_have_no_curvature(fixture, request):
    geom = request.getfixturevalue(fixture)
    curvature = cartan_curvature_tensors(geom)
    assert max(curvature.norms().values()) < 1e-6
    verdict = sphericity(curvature)
    assert verdict.spherical
    assert verdict.deciding_tensor == "Q"
    assert verdict.to_dict()["verdict"] == "spherical-at-point"


@pytest.mark.parametrize("fixture", ["heisenberg_offset", "sphere"])
def test_commutator_curvature_vanishes_on_spherical_models(fixture, request):
    geom = request.getfixturevalue(fixture)
    (probe,) = probe_tractors(geom, 4, 1)
    gaps = curvature_discrepancy(geom, cartan_curvature_tensors(geom), probe)
    assert len(gaps) == geom.m * (geom.m - 1) // 2
    assert max(gaps.values()) < 1e-6


def test_sphericity_survives_rescaling(sphere):
    rng = np.random.default_rng(3)
    terms = {(1, 0, 0): 0.1 * rng.standard_normal(), (0, 1, 1): 0.05, (2, 0, 0): -0.05}
    f = Jet.from_terms(terms, sphere.m, sphere.cf.order + 1)
    rescaled = PHGeometry(rescale(sphere.cf, f))
    assert cartan_curvature_tensors(rescaled).norms()["Q"] < 1e-6


class TestPerturbedHeisenberg:
    def test_is_not_spherical(self, perturbed):
        curvature = cartan_curvature_tensors(perturbed)
        verdict = sphericity(curvature)
        assert curvature.norms()["Q"] > 1e-3
        assert not verdict.spherical
        assert verdict.to_dict()["verdict"] == "non-spherical-at-point"

    def test_curvature_symmetries(self, perturbed):
        residuals = cartan_curvature_tensors(perturbed).symmetry_residuals()
        assert residuals["Q_symmetric"] < 1e-9
        assert residuals["U_trace_free"] < 1e-7
        assert residuals["U_hermitian"] < 1e-7

    def test_commutator_has_no_ell_component(self, perturbed):
        (probe,) = probe_tractors(perturbed, 6, 1)
        for a, b in [(0, 1), (0, 2), (1, 2)]:
            numeric = cartan_curvature_numeric(perturbed, probe, a, b)
            assert abs(complex(numeric.ell.value)) < 1e-6

    def test_curvature_action_has_no_ell_component(self, perturbed):
        (probe,) = probe_tractors(perturbed, 6, 1)
        action = cartan_curvature_action(cartan_curvature_tensors(perturbed), probe)
        assert action.ell.max_abs() == 0.0
        assert action.tau.base_max_abs() > 0.0

    @pytest.mark.parametrize("seed", [6, 19])
    def test_closed_form_curvature_matches_commutator(self, perturbed, seed):
        (probe,) = probe_tractors(perturbed, seed, 1)
        gaps = curvature_discrepancy(perturbed, cartan_curvature_tensors(perturbed), probe)
        assert max(gaps.values()) < 1e-6

    def test_curvature_action_is_antisymmetric(self, perturbed):
        (probe,) = probe_tractors(perturbed, 6, 1)
        action = cartan_curvature_action(cartan_curvature_tensors(perturbed), probe)
        assert (action.tau + action.tau.transpose(1, 0, 2)).max_abs() == 0.0
        assert (action.psi + action.psi.T).max_abs() == 0.0


@pytest.mark.slow
class TestTwoDimensional:
    def test_flat_model_is_spherical_by_W(self, heis2):
        curvature = cartan_curvature_tensors(heis2)
        assert curvature.W.shape == (2, 2, 2, 2)
        assert max(curvature.norms().values()) < 1e-6
        verdict = sphericity(curvature)
        assert verdict.spherical
        assert verdict.deciding_tensor == "W"

    def test_perturbed_model_is_not_spherical(self, heis2_perturbed):
        curvature = cartan_curvature_tensors(heis2_perturbed)
        verdict = sphericity(curvature)
        assert verdict.deciding_tensor == "W"
        assert verdict.deciding_norm > 1e-3
        assert not verdict.spherical

    def test_curvature_symmetries(self, heis2_perturbed):
        residuals = cartan_curvature_tensors(heis2_perturbed).symmetry_residuals()
        assert max(residuals.values()) < 1e-7

    def test_closed_form_curvature_matches_commutator(self, heis2_perturbed):
        (probe,) = probe_tractors(heis2_perturbed, 6, 1)
        gaps = curvature_discrepancy(heis2_perturbed, cartan_curvature_tensors(heis2_perturbed), probe)
        assert len(gaps) == 10
        assert max(gaps.values()) < 1e-6

    def test_connection_preserves_metric(self, heis2_perturbed):
        s1, s2 = probe_tractors(heis2_perturbed, 1, 2)
        assert metric_compatibility_residual(heis2_perturbed, s1, s2) < 1e-8
