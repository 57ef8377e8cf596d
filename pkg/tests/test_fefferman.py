import numpy as np
import pytest

from crcartan.core.errors import DomainError
from crcartan.services.fefferman import (
    LorentzMetric,
    conformal_covariance_check,
    einstein_universe_metric,
    fefferman_metric,
    fefferman_sphere_expected,
    levi_civita_ricci,
    lightcone_residual,
    ricci_discrepancy,
    ricci_formula,
    scalar_curvature_expected,
)
from crcartan.services.gauge import rescale
from crcartan.services.jets import Jet
from crcartan.services.pseudohermitian import PHGeometry


def constant_metric(matrix, order=3):
    matrix = np.asarray(matrix, dtype=float)
    return LorentzMetric(components=Jet.constant(matrix, matrix.shape[0], order),
                         point=np.zeros(matrix.shape[0]))


def test_constant_minkowski_metric_is_ricci_flat():
    report = levi_civita_ricci(constant_metric(np.diag([-1.0, 1.0, 1.0, 1.0])))
    assert report.coordinates.base_max_abs() < 1e-14
    assert report.scalar == pytest.approx(0.0, abs=1e-14)


def test_degenerate_metric_is_domain_error():
    with pytest.raises(DomainError, match="degenerate"):
        levi_civita_ricci(constant_metric(np.diag([0.0, 1.0, 1.0, 1.0])))


class TestHeisenberg:
    def test_metric_is_lorentzian(self, heisenberg_offset):
        g = fefferman_metric(heisenberg_offset)
        assert g.dim == 4
        assert g.signature() == (3, 1)
        assert g.symmetry_residual() < 1e-12
        assert g.imaginary_residual() < 1e-12

    def test_ricci_is_twice_dv_squared(self, heisenberg_offset):
        direct = levi_civita_ricci(fefferman_metric(heisenberg_offset))
        expected = np.zeros((4, 4))
        expected[3, 3] = 2.0
        assert np.allclose(np.asarray(direct.coordinates.value), expected, atol=1e-9)
        assert direct.scalar == pytest.approx(0.0, abs=1e-9)
        assert direct.trace_free_norm == pytest.approx(2.0, abs=1e-9)

    def test_formula_agrees_with_direct(self, heisenberg_offset):
        residuals = ricci_discrepancy(heisenberg_offset)
        assert residuals["componentwise"] < 1e-8
        assert residuals["scalar_expected"] == pytest.approx(0.0, abs=1e-12)


class TestSphere:
    def test_metric_matches_closed_form(self, sphere):
        g = fefferman_metric(sphere)
        reference = fefferman_sphere_expected(sphere.cf)
        assert (g.components - reference.components).max_abs() < 1e-8

    def test_scalar_curvature(self, sphere):
        assert scalar_curvature_expected(sphere) == pytest.approx(12.0, abs=1e-7)
        direct = levi_civita_ricci(fefferman_metric(sphere))
        assert direct.scalar == pytest.approx(12.0, abs=1e-7)

    def test_formula_scalar(self, sphere):
        report = ricci_formula(sphere)
        assert report.scalar == pytest.approx(12.0, abs=1e-7)
        assert report.extras["expected_scalar"] == pytest.approx(12.0, abs=1e-7)

    def test_einstein_universe(self, sphere):
        g = einstein_universe_metric(sphere.cf)
        report = levi_civita_ricci(g)
        assert g.signature() == (3, 1)
        assert report.scalar == pytest.approx(12.0, abs=1e-7)


@pytest.mark.parametrize("u_value", [0.0, 0.4])
def test_constant_conformal_factor(sphere, u_value):
    u = Jet.constant(u_value, sphere.m, sphere.cf.order + 1)
    residuals = conformal_covariance_check(sphere, u)
    assert set(residuals) == {"exact", "aligned", "trace_free", "lightcone"}
    assert max(residuals.values()) < 1e-9


def test_lightcone_of_a_multiple(sphere):
    g = fefferman_metric(sphere)
    doubled = LorentzMetric(components=g.components * 2.0, point=g.point)
    assert lightcone_residual(g, doubled) < 1e-12


def test_lightcone_needs_lorentzian_signature():
    riemannian = constant_metric(np.eye(4))
    with pytest.raises(DomainError, match="Lorentzian"):
        lightcone_residual(riemannian, riemannian)


def test_report_serializes(sphere):
    payload = levi_civita_ricci(fefferman_metric(sphere)).to_dict()
    assert payload["source"] == "levi-civita"
    assert len(payload["coordinates"]) == 4
    assert fefferman_metric(sphere).to_dict()["signature"] == [3, 1]


class TestTorsionTerms:
    """Models with T ≠ 0, where the 𝒯^J⊙θ part of the formula is visible."""

    def test_perturbed_componentwise(self, perturbed):
        assert np.max(np.abs(np.asarray(perturbed.T.value))) > 1e-5
        residuals = ricci_discrepancy(perturbed)
        assert residuals["componentwise"] < 1e-6
        assert residuals["scalar_formula"] == pytest.approx(residuals["scalar_direct"], abs=1e-6)

    def test_rescaled_heisenberg_componentwise(self, heisenberg_offset):
        geom = heisenberg_offset
        x, y = (Jet.variable(k, geom.cf.point[k], geom.m, geom.cf.order + 1) for k in (1, 2))
        rho = x * 0.1 + x * y * 0.05 - y * y * y * 0.02
        rescaled = PHGeometry(rescale(geom.cf, -rho))
        assert np.max(np.abs(np.asarray(rescaled.T.value))) > 1e-5
        assert ricci_discrepancy(rescaled)["componentwise"] < 1e-6


@pytest.mark.slow
def test_two_dimensional_perturbed_componentwise(heis2_perturbed):
    residuals = ricci_discrepancy(heis2_perturbed)
    assert residuals["componentwise"] < 1e-6
    assert residuals["scalar_direct"] == pytest.approx(residuals["scalar_expected"], abs=1e-6)
