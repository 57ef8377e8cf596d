import numpy as np
import pytest

from crcartan.core.errors import DomainError, GaugeMismatchError
from crcartan.services.checks import random_gauge
from crcartan.services.gauge import (
    GaugeChange,
    check_L_transform,
    check_TS_transform,
    gauge_invariants,
    normalize_density,
    rescale,
    volume_normalized,
    weyl_connection,
)
from crcartan.services.jets import Jet
from crcartan.services.pseudohermitian import PHGeometry


def constant(value, geom):
    return Jet.constant(value, geom.m, geom.cf.order + 1)


def test_zero_rescaling_is_identity(sphere):
    same = rescale(sphere.cf, constant(0.0, sphere))
    assert (same.matrix - sphere.cf.matrix).max_abs() < 1e-12


def test_constant_rescaling_scales_webster_curvature(sphere):
    f = 0.3
    hat = PHGeometry(rescale(sphere.cf, constant(f, sphere)))
    assert np.real(hat.Rscal.value) == pytest.approx(4.0 * np.exp(-2 * f), abs=1e-8)
    assert np.real(hat.S.value) == pytest.approx(-np.exp(-4 * f), abs=1e-7)


def test_gauge_change_from_rho_flips_sign(sphere):
    rho = constant(0.2, sphere)
    change = GaugeChange.from_rho(rho)
    assert (change.rho - rho).max_abs() == 0.0
    applied = change.apply(sphere.cf)
    assert np.allclose(applied.theta.value, np.exp(-0.4) * np.asarray(sphere.cf.theta.value))


def test_complex_rescaling_is_rejected(sphere):
    with pytest.raises(DomainError, match="must be real"):
        rescale(sphere.cf, constant(0.1j, sphere))


def test_rescaling_needs_scalar(sphere):
    with pytest.raises(ValueError):
        rescale(sphere.cf, Jet.zeros((2,), sphere.m, 7))


def test_weyl_form_on_sphere(sphere):
    weyl = weyl_connection(sphere)
    expected = sphere.cf.theta * -1j
    assert (weyl.weyl_form - expected).base_max_abs() < 1e-8
    assert np.allclose(np.asarray(weyl.weyl_frame.value), [-1j, 0.0, 0.0], atol=1e-8)


def test_constant_rescaling_leaves_L_connection(sphere):
    assert check_L_transform(sphere, constant(0.25, sphere)) < 1e-8


def test_L_connection_law_on_heisenberg(heisenberg_offset):
    geom = heisenberg_offset
    f = Jet.variable(1, geom.cf.point[1], geom.m, geom.cf.order + 1) * 0.1
    assert check_L_transform(geom, f) < 1e-8


def test_torsion_and_scalar_laws_on_heisenberg(heisenberg_offset):
    geom = heisenberg_offset
    rho = Jet.variable(1, geom.cf.point[1], geom.m, geom.cf.order + 1) * 0.1
    residual_T, residual_S = check_TS_transform(geom, rho)
    assert residual_T < 1e-7
    assert residual_S < 1e-7


def test_normalize_density():
    assert normalize_density(4.0) == pytest.approx(np.log(2.0))
    with pytest.raises(DomainError):
        normalize_density(0.0)


def test_normalize_density_against_base_gauge(sphere, heisenberg):
    norm_sq = Jet.constant(np.e ** 2, sphere.m, sphere.cf.order)
    u = normalize_density(norm_sq, weyl_connection(sphere))
    assert complex(u.value) == pytest.approx(1.0)
    other = Jet.constant(np.e ** 2, sphere.m + 1, 2)
    with pytest.raises(GaugeMismatchError):
        normalize_density(other, weyl_connection(heisenberg))


def test_volume_normalized_contact_form(heisenberg):
    density = Jet.constant(2.0, heisenberg.m, heisenberg.cf.order + 1)
    cf = volume_normalized(heisenberg.cf, density)
    assert np.allclose(cf.theta.value, np.asarray(heisenberg.cf.theta.value) / 4.0)


def test_gauge_invariants_of_sphere(sphere):
    invariants = gauge_invariants(sphere)
    assert invariants["R"] == pytest.approx(4.0, abs=1e-8)
    assert invariants["A2"] < 1e-16
    assert invariants["S"] == pytest.approx(-1.0, abs=1e-7)


@pytest.mark.parametrize("name", ["heisenberg_offset", "perturbed", "sphere"])
def test_scalar_law_under_cubic_gauges(name, request):
    geom = request.getfixturevalue(name)
    rng = np.random.default_rng(11)
    for _ in range(3):
        rho = random_gauge(rng, geom.m, geom.cf.order + 1)
        residual_T, residual_S = check_TS_transform(geom, rho)
        assert residual_T < 1e-6
        assert residual_S < 1e-6
