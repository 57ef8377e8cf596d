import numpy as np
import pytest

from crcartan.core.errors import GaugeMismatchError
from crcartan.services.analysis import probe_tractors
from crcartan.services.checks import random_gauge
from crcartan.services.jets import Jet
from crcartan.services.tractor import (
    Tractor,
    first_jet,
    gram_matrix,
    gram_signature,
    holonomic_residuals,
    jet_det,
    jet_function_residuals,
    prolongation_r,
    reeb_map,
    standard_frame,
    tractor_determinant,
    tractor_gauge_transform,
    tractor_metric,
)


def test_jet_det_of_constant_matrix():
    matrix = np.array([[2.0, 1.0, 0.0], [0.0, 3.0, 1.0], [1.0, 0.0, 1.0]])
    det = jet_det(Jet.constant(matrix, 2, 2))
    assert det.value == pytest.approx(np.linalg.det(matrix))


def test_standard_frame_gram_matrix():
    frame = standard_frame(1, 3, 2)
    expected = np.array([[0, 0, 1], [0, 1, 0], [1, 0, 0]], dtype=complex)
    assert np.allclose(gram_matrix(frame), expected)
    assert gram_signature(frame) == (2, 1)
    assert tractor_determinant(frame).value == pytest.approx(1.0)


def test_metric_is_antilinear_in_first_slot():
    s1 = Tractor.constant(1.0, [0.5j], 2.0, 3, 1)
    s2 = Tractor.constant(1j, [1.0], 0.0, 3, 1)
    assert tractor_metric(s1 * 1j, s2).value == pytest.approx(-1j * tractor_metric(s1, s2).value)
    assert tractor_metric(s1, s2 * 1j).value == pytest.approx(1j * tractor_metric(s1, s2).value)


@pytest.mark.parametrize("fixture", ["heisenberg_offset", "sphere", "perturbed"])
def test_metric_and_determinant_are_gauge_invariant(fixture, request):
    geom = request.getfixturevalue(fixture)
    rng = np.random.default_rng(11)
    f = random_gauge(rng, geom.m, geom.cf.order)
    s1, s2 = probe_tractors(geom, 3, 2)
    moved = [tractor_gauge_transform(s, f, geom) for s in (s1, s2)]
    assert (tractor_metric(*moved) - tractor_metric(s1, s2)).max_abs() < 1e-9

    sigmas = probe_tractors(geom, 5, geom.n + 2)
    moved = [tractor_gauge_transform(s, f, geom) for s in sigmas]
    assert (tractor_determinant(moved) - tractor_determinant(sigmas)).max_abs() < 1e-9


def test_mixing_gauges_raises(heisenberg_offset):
    geom = heisenberg_offset
    s1, s2 = probe_tractors(geom, 3, 2)
    f = Jet.variable(0, geom.cf.point[0], geom.m, geom.cf.order) * 0.1
    moved = tractor_gauge_transform(s1, f, geom)
    with pytest.raises(GaugeMismatchError):
        tractor_metric(moved, s2)
    with pytest.raises(GaugeMismatchError):
        moved + s2


def test_determinant_needs_n_plus_two_tractors():
    with pytest.raises(ValueError):
        tractor_determinant(standard_frame(1, 3, 1)[:2])


def test_reeb_map_of_unit_tractor_is_reeb_field(sphere):
    sig = Tractor.constant(1.0, [0.0], 0.0, sphere.m, sphere.cf.order)
    assert np.allclose(reeb_map(sig, sphere).value, sphere.frame.xi.value)


def test_prolongation_vanishes_on_flat_model(heisenberg_offset):
    geom = heisenberg_offset
    sig = Tractor.constant(1.0, [0.3], -0.2j, geom.m, geom.cf.order)
    prolonged = prolongation_r(sig, geom)
    assert prolonged.ell_ab.base_max_abs() < 1e-10
    assert prolonged.psi_a.base_max_abs() < 1e-10
    assert prolonged.psi_0.base_max_abs() < 1e-10


def test_first_jet_of_constant_density_on_sphere(sphere):
    density = Jet.constant(1.0, sphere.m, sphere.cf.order)
    sigma = first_jet(density, sphere)
    assert sigma.tau.base_max_abs() < 1e-9
    # κ_0 = −4i/3 and R/(2(n+1)(n+2)) = 1/3, so ψ = −1 and h(σ, σ) = −R/(n(n+1))
    assert complex(sigma.psi.value) == pytest.approx(-1.0, abs=1e-8)
    assert complex(tractor_metric(sigma, sigma).value) == pytest.approx(-2.0, abs=1e-8)
    assert gram_signature([sigma]) == (0, 1)


def test_holonomic_density_components(holo):
    geom, density = holo
    residuals = holonomic_residuals(density, geom)
    assert set(residuals) == {"ell_b", "ell_ba", "ell_b0", "ell_ab", "ell_0b"}
    assert max(residuals.values()) < 1e-6


def test_jet_functions_of_holonomic_density(holo):
    geom, density = holo
    residuals = jet_function_residuals(density, geom)
    assert set(residuals) == {"scalar", "torsion", "reeb", "pseudo_einstein"}
    assert max(residuals.values()) < 1e-6


def test_to_dict_lists_slots():
    payload = Tractor.constant(1.0, [2.0], 3.0, 3, 1).to_dict()
    assert set(payload) >= {"ell", "tau", "psi"}
