import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crcartan.core.errors import DomainError, OrderExhaustedError
from crcartan.services.checks import finite_difference_errors
from crcartan.services.jets import Jet, JetBudget, jet_apply, jet_einsum, jet_inv, jet_size, jet_stack


def xyz(point, order=5):
    return [Jet.variable(k, point[k], 3, order) for k in range(3)]


def test_jet_size_counts_monomials():
    assert jet_size(3, 0) == 1
    assert jet_size(3, 2) == 10
    assert jet_size(2, 3) == 10


def test_variable_product_has_expected_coefficients():
    x, y, _ = xyz([1.0, 2.0, 0.0])
    p = x * y
    assert p.value == pytest.approx(2.0)
    assert p.coefficient((1, 0, 0)) == pytest.approx(2.0)
    assert p.coefficient((0, 1, 0)) == pytest.approx(1.0)
    assert p.coefficient((1, 1, 0)) == pytest.approx(1.0)
    assert p.coefficient((2, 0, 0)) == pytest.approx(0.0)


def test_exp_coefficients_are_taylor_coefficients():
    x = Jet.variable(0, 0.0, 1, 6)
    e = jet_apply("exp", x)
    for k in range(7):
        assert e.derivative((k,)) == pytest.approx(1.0)


def test_sin_derivatives_cycle():
    x = Jet.variable(0, 0.3, 1, 4)
    s = jet_apply("sin", x)
    expected = [np.sin(0.3), np.cos(0.3), -np.sin(0.3), -np.cos(0.3), np.sin(0.3)]
    for k, value in enumerate(expected):
        assert s.derivative((k,)) == pytest.approx(value)


def test_exp_log_roundtrip():
    x, y, z = xyz([0.2, -0.1, 0.3])
    f = (x * y + z * 0.5) + 2.0
    assert jet_apply("exp", jet_apply("log", f)).allclose(f, 1e-12)


def test_gradient_drops_one_order():
    x, y, _ = xyz([0.0, 0.0, 0.0], order=4)
    g = (x * x * y).gradient()
    assert g.shape == (3,)
    assert g.order == 3
    assert g[0].coefficient((1, 1, 0)) == pytest.approx(2.0)
    assert g[1].coefficient((2, 0, 0)) == pytest.approx(1.0)


def test_gradient_of_order_zero_is_exhausted():
    with pytest.raises(OrderExhaustedError):
        Jet.constant(1.0, 2, 0).gradient()


def test_log_of_negative_base_is_domain_error():
    x = Jet.variable(0, -1.0, 1, 3)
    with pytest.raises(DomainError):
        jet_apply("log", x)


def test_reciprocal_of_zero_is_domain_error():
    x = Jet.variable(0, 0.0, 1, 3)
    with pytest.raises(DomainError):
        jet_apply("recip", x)


@pytest.mark.parametrize("exponent", [2.0, 3.0])
def test_integer_valued_power_at_zero_is_a_polynomial(exponent):
    x, _, _ = xyz([0.0, 1.0, 0.0])
    for power in (x ** exponent, jet_apply("pow", x, exponent=exponent)):
        assert np.all(np.isfinite(power.coeffs))
        expected = x ** int(exponent)
        assert (power - expected).max_abs() < 1e-14


def test_zeroth_power_at_zero_is_one():
    x = Jet.variable(0, 0.0, 1, 3)
    assert (jet_apply("pow", x, exponent=0.0) - 1.0).max_abs() == 0.0


@pytest.mark.parametrize("base", [0.0, -1.5])
def test_fractional_power_off_the_positive_axis_is_domain_error(base):
    x = Jet.variable(0, base, 1, 3)
    with pytest.raises(DomainError):
        x ** 1.5


def test_singular_matrix_inverse_is_domain_error():
    with pytest.raises(DomainError):
        jet_inv(Jet.constant(np.ones((2, 2)), 2, 2))


def test_inverse_matches_identity(rng):
    base = np.eye(3) * 2.0 + 0.1 * rng.standard_normal((3, 3))
    matrix = Jet.constant(base, 3, 4) + Jet.random(rng, 3, 4, shape=(3, 3), scale=0.2) * Jet.variable(0, 0.0, 3, 4)
    product = matrix @ jet_inv(matrix)
    assert (product - np.eye(3)).max_abs() < 1e-10


def test_einsum_accepts_constant_operand(rng):
    vector = Jet.random(rng, 2, 3, shape=(3,))
    matrix = rng.standard_normal((3, 3))
    result = jet_einsum("ij,j->i", matrix, vector)
    assert np.allclose(result.value, matrix @ vector.value)


def test_stack_takes_lowest_order():
    a = Jet.constant(1.0, 2, 4)
    b = Jet.constant(2.0, 2, 2)
    stacked = jet_stack([a, b])
    assert stacked.shape == (2,)
    assert stacked.order == 2


def test_shift_roundtrip(rng):
    f = Jet.random(rng, 3, 4)
    offset = [0.1, -0.2, 0.05]
    back = f.shift(offset).shift([-x for x in offset])
    assert back.allclose(f, 1e-10)


def test_shift_matches_evaluate(rng):
    f = Jet.random(rng, 2, 3)
    shifted = f.shift([0.3, -0.1])
    assert shifted.value == pytest.approx(f.evaluate([0.3, -0.1]))


def test_budget_refuses_overdraft():
    budget = JetBudget(initial_order=6)
    budget.record("omega", 5)
    budget.require("omega", 5)
    with pytest.raises(OrderExhaustedError):
        budget.require("omega", 6)
    assert budget.to_dict() == {"omega": 5}


@pytest.mark.parametrize("text", ["x*y + z", "exp(x)*sin(y)", "1/(2 + x^2)", "exp(i*x + y)*z"])
def test_library_functions_match_finite_differences(text):
    errors = finite_difference_errors(text, np.array([0.1, 0.2, -0.1]))
    assert max(errors.values()) < 1e-6


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
def test_leibniz_rule(seed):
    rng = np.random.default_rng(seed)
    f = Jet.random(rng, 3, 4)
    g = Jet.random(rng, 3, 4)
    for var in range(3):
        lhs = (f * g).partial(var)
        rhs = f.partial(var) * g + f * g.partial(var)
        assert (lhs - rhs).max_abs() < 1e-10 * max(1.0, f.max_abs() * g.max_abs())
