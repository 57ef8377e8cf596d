import numpy as np
import pytest

from crcartan.core.errors import DomainError
from crcartan.services.analysis import SHIPPED_POINTS, build_geometry, resolve_spec
from crcartan.services.coframe import (
    FormField,
    admissibility_residuals,
    coframe_from_spec,
    dsigma_residual,
    dual_frame,
    ext_d,
    orthonormalize,
    wedge,
)
from crcartan.services.jets import Jet
from crcartan.services.specdsl import parse_spec


def coordinate_forms(num_vars=3, order=3):
    forms = []
    for k in range(num_vars):
        coeffs = np.zeros(num_vars)
        coeffs[k] = 1.0
        forms.append(FormField.from_one_form(Jet.constant(coeffs, num_vars, order)))
    return forms


def test_wedge_convention():
    dx, dy, _ = coordinate_forms()
    two_form = wedge(dx, dy)
    assert two_form.component(0, 1).value == pytest.approx(1.0)
    assert wedge(dy, dx).component(0, 1).value == pytest.approx(-1.0)
    assert wedge(dx, dx).max_abs() == 0.0


def test_d_squared_vanishes(rng):
    f = FormField.from_function(Jet.random(rng, 3, 4))
    assert ext_d(ext_d(f)).max_abs() < 1e-12


@pytest.mark.parametrize("name", ["heisenberg", "sphere3", "heis_pert", "heis_holo", "heis2", "heis2_pert"])
def test_orthonormalized_coframe_is_admissible(name):
    geom = build_geometry(resolve_spec(name), SHIPPED_POINTS[name])
    residuals = admissibility_residuals(geom.cf)
    assert set(residuals) >= {"dtheta", "levi_identity", "theta_real", "duality", "integrability"}
    assert max(residuals.values()) < 1e-9


def test_orthonormalize_keeps_order_minus_one(heisenberg_spec):
    raw = coframe_from_spec(heisenberg_spec, [0.0, 0.0, 0.0], 7)
    assert orthonormalize(raw).order == 6


def test_literal_listing_has_negative_levi_form(heisenberg_listing):
    spec = parse_spec(heisenberg_listing)
    raw = coframe_from_spec(spec, [0.0, 0.0, 0.0], 4)
    with pytest.raises(DomainError, match="not strictly pseudoconvex"):
        orthonormalize(raw)


def test_point_with_wrong_arity_is_domain_error(heisenberg_spec):
    with pytest.raises(DomainError):
        build_geometry(heisenberg_spec, [0.0, 0.0])


def test_reeb_field_of_heisenberg_is_d_t(heisenberg_offset):
    frame = dual_frame(heisenberg_offset.cf)
    assert np.allclose(frame.xi.value, [1.0, 0.0, 0.0])


def test_sphere_coframe_satisfies_su2_relations(sphere):
    assert dsigma_residual(sphere.cf) < 1e-9


def test_heisenberg_has_no_sigma_relations(heisenberg_offset):
    assert dsigma_residual(heisenberg_offset.cf) > 1e-3
