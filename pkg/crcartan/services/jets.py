"""
crcartan.services.jets
----------------------

Truncated multivariate Taylor arithmetic.

A :class:`Jet` stores the Taylor coefficients of a complex, possibly
tensor-valued, function of ``num_vars`` real variables at a base point,
truncated at total degree ``order``. Coefficients are normalized (derivative
divided by the multi-index factorial) and laid out in graded order: degree
by degree, and inside one degree in the order of
``itertools.combinations_with_replacement``. With this layout the table of a
lower order is a prefix of the table of a higher one, so truncation is a
slice.

Tensor-valued jets carry the tensor axes first and the coefficient axis last:
``coeffs.shape == shape + (jet_size(num_vars, order),)``.

==========================   ==========================================
:class:`Jet`                 Immutable jet value with numpy-like algebra
:func:`jet_mul`              Truncated Cauchy product (broadcasting)
:func:`jet_einsum`           Einstein summation over tensor axes of jets
:func:`jet_apply`            Analytic function of a jet
:func:`jet_partial`          Partial derivative, one order lost
:func:`jet_inv`              Inverse of a jet-valued square matrix
:class:`JetBudget`           Ledger of consumed orders per quantity
==========================   ==========================================
"""
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations_with_replacement
from math import comb, factorial, prod
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse

from crcartan.core.errors import DomainError, OrderExhaustedError

logger = logging.getLogger(__name__)

Scalar = Union[int, float, complex]
MultiIndex = Tuple[int, ...]

ANALYTIC_FUNCTIONS = ("exp", "log", "sin", "cos", "pow", "sqrt", "recip")

# Base values closer than this to a singularity are domain violations.
_SINGULAR_EPS = 1e-300
_BRANCH_EPS = 1e-14


def jet_size(num_vars: int, order: int) -> int:
    """Number of multi-indices of total degree <= order in num_vars variables."""
    return comb(num_vars + order, order)


class MultiIndexTable:
    """
    Precomputed index maps for jets with fixed ``num_vars`` and ``order``.

    Attributes
    ----------
    indices : list of tuple
        Multi-indices in graded order.
    position : dict
        Inverse of `indices`.
    left, right : ndarray
        Coefficient pairs (a, b) with deg(a) + deg(b) <= order.
    scatter : scipy.sparse.csr_matrix
        Shape (size, len(left)); sums each pair product into the position of
        the summed multi-index.
    partial_maps : list of (ndarray, ndarray)
        Per variable, source positions and factors (I_var + 1) so that the
        derivative coefficient at I is ``fac * coeffs[src]``.
    """

    def __init__(self, num_vars: int, order: int):
        self.num_vars = num_vars
        self.order = order
        indices: List[MultiIndex] = []
        for degree in range(order + 1):
            for combo in combinations_with_replacement(range(num_vars), degree):
                multi = [0] * num_vars
                for var in combo:
                    multi[var] += 1
                indices.append(tuple(multi))
        self.indices = indices
        self.position: Dict[MultiIndex, int] = {idx: k for k, idx in enumerate(indices)}
        self.size = len(indices)
        self.degrees = np.array([sum(idx) for idx in indices], dtype=int)
        self.factorials = np.array(
            [prod(factorial(i) for i in idx) for idx in indices], dtype=float
        )
        self._build_products()
        self._build_partials()

    def _build_products(self) -> None:
        left, right, target = [], [], []
        for a, idx_a in enumerate(self.indices):
            room = self.order - self.degrees[a]
            for b, idx_b in enumerate(self.indices):
                if self.degrees[b] > room:
                    break
                left.append(a)
                right.append(b)
                target.append(self.position[tuple(x + y for x, y in zip(idx_a, idx_b))])
        count = len(target)
        self.left = np.array(left, dtype=np.intp)
        self.right = np.array(right, dtype=np.intp)
        self.scatter = sparse.csr_matrix(
            (np.ones(count), (np.array(target, dtype=np.intp), np.arange(count))),
            shape=(self.size, count),
        )

    def _build_partials(self) -> None:
        self.partial_maps: List[Tuple[np.ndarray, np.ndarray]] = []
        if self.order == 0:
            return
        lower = jet_size(self.num_vars, self.order - 1)
        for var in range(self.num_vars):
            src, fac = [], []
            for idx in self.indices[:lower]:
                bumped = list(idx)
                bumped[var] += 1
                src.append(self.position[tuple(bumped)])
                fac.append(idx[var] + 1)
            self.partial_maps.append((np.array(src, dtype=np.intp), np.array(fac, dtype=float)))

    def scatter_products(self, products: np.ndarray) -> np.ndarray:
        """Sum pair products (last axis) into coefficient positions."""
        lead = products.shape[:-1]
        flat = products.reshape(-1, products.shape[-1])
        summed = self.scatter @ flat.T
        return np.asarray(summed).T.reshape(lead + (self.size,))


@lru_cache(maxsize=None)
def multi_index_table(num_vars: int, order: int) -> MultiIndexTable:
    logger.debug("building multi-index table m=%d K=%d", num_vars, order)
    return MultiIndexTable(num_vars, order)


@lru_cache(maxsize=None)
def _lift_positions(num_vars: int, extra: int, order: int) -> np.ndarray:
    small = multi_index_table(num_vars, order)
    big = multi_index_table(num_vars + extra, order)
    pad = (0,) * extra
    return np.array([big.position[idx + pad] for idx in small.indices], dtype=np.intp)


@lru_cache(maxsize=None)
def _shift_terms(num_vars: int, order: int):
    table = multi_index_table(num_vars, order)
    rows, cols, weights, powers = [], [], [], []
    for j, idx_j in enumerate(table.indices):
        for i, idx_i in enumerate(table.indices):
            if all(a >= b for a, b in zip(idx_i, idx_j)):
                rows.append(j)
                cols.append(i)
                weights.append(prod(comb(a, b) for a, b in zip(idx_i, idx_j)))
                powers.append(tuple(a - b for a, b in zip(idx_i, idx_j)))
    return (
        np.array(rows, dtype=np.intp),
        np.array(cols, dtype=np.intp),
        np.array(weights, dtype=float),
        np.array(powers, dtype=int),
    )


class Jet:
    """
    Truncated Taylor expansion of a complex (tensor-valued) function.

    Jets are immutable; every operation returns a new jet whose order is the
    minimum of the operand orders.
    """

    __slots__ = ("coeffs", "num_vars", "order")
    __array_ufunc__ = None

    def __init__(self, coeffs, num_vars: int, order: int):
        if order < 0:
            raise OrderExhaustedError("jet order would become negative")
        coeffs = np.asarray(coeffs, dtype=complex)
        expected = jet_size(num_vars, order)
        if coeffs.ndim == 0 or coeffs.shape[-1] != expected:
            raise ValueError(
                f"coefficient axis has length {coeffs.shape[-1] if coeffs.ndim else 0}, "
                f"expected {expected} for m={num_vars}, K={order}"
            )
        self.coeffs = coeffs
        self.num_vars = num_vars
        self.order = order

    # ------------------------------------------------------------------
    # constructors
    # ------------------------------------------------------------------
    @classmethod
    def constant(cls, value, num_vars: int, order: int) -> "Jet":
        value = np.asarray(value, dtype=complex)
        coeffs = np.zeros(value.shape + (jet_size(num_vars, order),), dtype=complex)
        coeffs[..., 0] = value
        return cls(coeffs, num_vars, order)

    @classmethod
    def zeros(cls, shape: Tuple[int, ...], num_vars: int, order: int) -> "Jet":
        return cls(np.zeros(tuple(shape) + (jet_size(num_vars, order),), dtype=complex), num_vars, order)

    @classmethod
    def variable(cls, var: int, base: float, num_vars: int, order: int) -> "Jet":
        """Jet of the coordinate function x_var centered at x_var = base."""
        coeffs = np.zeros(jet_size(num_vars, order), dtype=complex)
        coeffs[0] = base
        if order >= 1:
            coeffs[1 + var] = 1.0
        return cls(coeffs, num_vars, order)

    @classmethod
    def from_terms(cls, terms: Dict[MultiIndex, Scalar], num_vars: int, order: int) -> "Jet":
        """Polynomial jet from a {multi-index: Taylor coefficient} mapping."""
        table = multi_index_table(num_vars, order)
        coeffs = np.zeros(table.size, dtype=complex)
        for idx, value in terms.items():
            if sum(idx) <= order:
                coeffs[table.position[tuple(idx)]] = value
        return cls(coeffs, num_vars, order)

    @classmethod
    def random(cls, rng: np.random.Generator, num_vars: int, order: int,
               shape: Tuple[int, ...] = (), scale: float = 1.0) -> "Jet":
        size = tuple(shape) + (jet_size(num_vars, order),)
        coeffs = scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))
        return cls(coeffs, num_vars, order)

    # ------------------------------------------------------------------
    # shape handling
    # ------------------------------------------------------------------
    @property
    def shape(self) -> Tuple[int, ...]:
        return self.coeffs.shape[:-1]

    @property
    def ndim(self) -> int:
        return self.coeffs.ndim - 1

    @property
    def value(self):
        """Values at the base point (ndarray for tensor jets, complex for scalars)."""
        return self.coeffs[..., 0]

    def __getitem__(self, key) -> "Jet":
        sub = self.coeffs[key]
        if sub.ndim == 0 or sub.shape[-1] != self.coeffs.shape[-1]:
            raise IndexError("jet indexing may only address tensor axes")
        return Jet(sub, self.num_vars, self.order)

    def __len__(self) -> int:
        return self.shape[0]

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    def _axis(self, axis: int) -> int:
        return axis if axis >= 0 else axis + self.ndim

    def sum(self, axis: Optional[int] = None) -> "Jet":
        if axis is None:
            return Jet(self.coeffs.reshape(-1, self.coeffs.shape[-1]).sum(axis=0), self.num_vars, self.order)
        return Jet(self.coeffs.sum(axis=self._axis(axis)), self.num_vars, self.order)

    def trace(self, axis1: int = 0, axis2: int = 1) -> "Jet":
        coeffs = np.trace(self.coeffs, axis1=self._axis(axis1), axis2=self._axis(axis2))
        return Jet(coeffs, self.num_vars, self.order)

    def transpose(self, *axes: int) -> "Jet":
        if not axes:
            axes = tuple(reversed(range(self.ndim)))
        return Jet(self.coeffs.transpose(tuple(axes) + (self.ndim,)), self.num_vars, self.order)

    @property
    def T(self) -> "Jet":
        return self.transpose()

    def reshape(self, *shape: int) -> "Jet":
        return Jet(self.coeffs.reshape(tuple(shape) + (self.coeffs.shape[-1],)), self.num_vars, self.order)

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise ValueError(f"cannot raise jet order from {self.order} to {order}")
        if order == self.order:
            return self
        return Jet(self.coeffs[..., : jet_size(self.num_vars, order)], self.num_vars, order)

    def lift(self, extra_vars: int = 1) -> "Jet":
        """The same jet viewed as a function of ``num_vars + extra_vars`` variables."""
        positions = _lift_positions(self.num_vars, extra_vars, self.order)
        big = jet_size(self.num_vars + extra_vars, self.order)
        coeffs = np.zeros(self.shape + (big,), dtype=complex)
        coeffs[..., positions] = self.coeffs
        return Jet(coeffs, self.num_vars + extra_vars, self.order)

    # ------------------------------------------------------------------
    # algebra
    # ------------------------------------------------------------------
    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            if other.num_vars != self.num_vars:
                raise ValueError(f"mismatched num_vars: {self.num_vars} vs {other.num_vars}")
            return other
        return Jet.constant(other, self.num_vars, self.order)

    def __add__(self, other) -> "Jet":
        other = self._coerce(other)
        order = min(self.order, other.order)
        return Jet(self.truncate(order).coeffs + other.truncate(order).coeffs, self.num_vars, order)

    __radd__ = __add__

    def __neg__(self) -> "Jet":
        return Jet(-self.coeffs, self.num_vars, self.order)

    def __sub__(self, other) -> "Jet":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Jet":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Jet":
        if isinstance(other, Jet):
            return jet_mul(self, other)
        factor = np.asarray(other, dtype=complex)
        return Jet(self.coeffs * factor[..., None], self.num_vars, self.order)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet":
        if isinstance(other, Jet):
            return jet_mul(self, other.recip())
        return self * (1.0 / np.asarray(other, dtype=complex))

    def __rtruediv__(self, other) -> "Jet":
        return self.recip() * other

    def __pow__(self, exponent) -> "Jet":
        if isinstance(exponent, (int, np.integer)):
            if exponent < 0:
                return (self ** (-exponent)).recip()
            result = Jet.constant(np.ones(self.shape), self.num_vars, self.order)
            base = self
            while exponent:
                if exponent & 1:
                    result = result * base
                base = base * base
                exponent >>= 1
            return result
        if float(exponent).is_integer():
            return self ** int(exponent)
        return jet_apply("pow", self, exponent=float(exponent))

    def __matmul__(self, other) -> "Jet":
        other_ndim = other.ndim if isinstance(other, Jet) else np.ndim(other)
        if self.ndim == 1 and other_ndim == 1:
            return jet_einsum("i,i->", self, other)
        if self.ndim == 2 and other_ndim == 2:
            return jet_einsum("ij,jk->ik", self, other)
        if self.ndim == 2 and other_ndim == 1:
            return jet_einsum("ij,j->i", self, other)
        if self.ndim == 1 and other_ndim == 2:
            return jet_einsum("i,ij->j", self, other)
        raise ValueError("matmul supports matrix/vector jets only")

    def __rmatmul__(self, other) -> "Jet":
        other = np.asarray(other, dtype=complex)
        if other.ndim == 2 and self.ndim == 2:
            return jet_einsum("ij,jk->ik", other, self)
        if other.ndim == 2 and self.ndim == 1:
            return jet_einsum("ij,j->i", other, self)
        raise ValueError("matmul supports matrix/vector operands only")

    def conj(self) -> "Jet":
        return Jet(np.conj(self.coeffs), self.num_vars, self.order)

    def real(self) -> "Jet":
        return Jet(self.coeffs.real, self.num_vars, self.order)

    def imag(self) -> "Jet":
        return Jet(self.coeffs.imag, self.num_vars, self.order)

    def recip(self) -> "Jet":
        return jet_apply("recip", self)

    def exp(self) -> "Jet":
        return jet_apply("exp", self)

    def log(self) -> "Jet":
        return jet_apply("log", self)

    def sqrt(self) -> "Jet":
        return jet_apply("sqrt", self)

    # ------------------------------------------------------------------
    # calculus
    # ------------------------------------------------------------------
    def partial(self, var: int) -> "Jet":
        return jet_partial(self, var)

    def gradient(self) -> "Jet":
        """All first partials; a new trailing tensor axis of length num_vars."""
        if self.order < 1:
            raise OrderExhaustedError("cannot differentiate a jet of order 0")
        table = multi_index_table(self.num_vars, self.order)
        parts = [self.coeffs[..., src] * fac for src, fac in table.partial_maps]
        return Jet(np.stack(parts, axis=-2), self.num_vars, self.order - 1)

    def coefficient(self, multi_index: Sequence[int]):
        table = multi_index_table(self.num_vars, self.order)
        return self.coeffs[..., table.position[tuple(multi_index)]]

    def derivative(self, multi_index: Sequence[int]):
        """Raw partial derivative D^I at the base point."""
        return self.coefficient(multi_index) * prod(factorial(i) for i in multi_index)

    def evaluate(self, offset: Sequence[float]):
        """Value of the truncated polynomial at base + offset."""
        table = multi_index_table(self.num_vars, self.order)
        offset = np.asarray(offset, dtype=float)
        exponents = np.array(table.indices, dtype=int)
        monomials = np.prod(offset[None, :] ** exponents, axis=1)
        return self.coeffs @ monomials

    def shift(self, offset: Sequence[float]) -> "Jet":
        """Re-expand the truncated polynomial around base + offset."""
        rows, cols, weights, powers = _shift_terms(self.num_vars, self.order)
        offset = np.asarray(offset, dtype=float)
        factors = weights * np.prod(offset[None, :] ** powers, axis=1)
        size = self.coeffs.shape[-1]
        recenter = sparse.csr_matrix((factors, (rows, cols)), shape=(size, size))
        flat = self.coeffs.reshape(-1, size)
        shifted = np.asarray(recenter @ flat.T).T
        return Jet(shifted.reshape(self.coeffs.shape), self.num_vars, self.order)

    # ------------------------------------------------------------------
    # comparison
    # ------------------------------------------------------------------
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def base_max_abs(self) -> float:
        value = np.abs(np.asarray(self.value))
        return float(np.max(value)) if value.size else 0.0

    def allclose(self, other, tol: float = 1e-12) -> bool:
        return (self - other).max_abs() <= tol

    def __repr__(self) -> str:
        return f"Jet(shape={self.shape}, num_vars={self.num_vars}, order={self.order})"


def _aligned(a: Jet, b: Jet) -> Tuple[np.ndarray, np.ndarray, int]:
    if a.num_vars != b.num_vars:
        raise ValueError(f"mismatched num_vars: {a.num_vars} vs {b.num_vars}")
    order = min(a.order, b.order)
    return a.truncate(order).coeffs, b.truncate(order).coeffs, order


def jet_mul(a: Jet, b: Jet) -> Jet:
    """Truncated Cauchy product; tensor axes broadcast like numpy."""
    a_c, b_c, order = _aligned(a, b)
    table = multi_index_table(a.num_vars, order)
    products = a_c[..., table.left] * b_c[..., table.right]
    return Jet(table.scatter_products(products), a.num_vars, order)


def jet_einsum(subscripts: str, a, b) -> Jet:
    """
    ``np.einsum`` over the tensor axes of two operands, at least one a Jet.

    Subscripts use lowercase letters (and optionally ``...``); ``Z`` is
    reserved for the coefficient axis.
    """
    inputs, output = subscripts.replace(" ", "").split("->")
    sub_a, sub_b = inputs.split(",")
    if isinstance(a, Jet) and not isinstance(b, Jet):
        coeffs = np.einsum(f"{sub_a}Z,{sub_b}->{output}Z", a.coeffs, np.asarray(b, dtype=complex))
        return Jet(coeffs, a.num_vars, a.order)
    if isinstance(b, Jet) and not isinstance(a, Jet):
        coeffs = np.einsum(f"{sub_a},{sub_b}Z->{output}Z", np.asarray(a, dtype=complex), b.coeffs)
        return Jet(coeffs, b.num_vars, b.order)
    if not isinstance(a, Jet):
        raise TypeError("jet_einsum needs at least one Jet operand")
    a_c, b_c, order = _aligned(a, b)
    table = multi_index_table(a.num_vars, order)
    products = np.einsum(
        f"{sub_a}Z,{sub_b}Z->{output}Z", a_c[..., table.left], b_c[..., table.right]
    )
    return Jet(table.scatter_products(products), a.num_vars, order)


def jet_stack(jets: Sequence[Jet], axis: int = 0) -> Jet:
    """Stack equally shaped jets along a new tensor axis (truncating to the lowest order)."""
    if not jets:
        raise ValueError("nothing to stack")
    order = min(j.order for j in jets)
    num_vars = jets[0].num_vars
    if axis < 0:
        axis += jets[0].ndim + 1
    coeffs = np.stack([j.truncate(order).coeffs for j in jets], axis=axis)
    return Jet(coeffs, num_vars, order)


def jet_partial(a: Jet, var: int) -> Jet:
    """Partial derivative in variable ``var``; order drops by one."""
    if a.order < 1:
        raise OrderExhaustedError(f"cannot differentiate in variable {var}: jet order is 0")
    if not 0 <= var < a.num_vars:
        raise IndexError(f"variable {var} out of range for {a.num_vars} variables")
    src, fac = multi_index_table(a.num_vars, a.order).partial_maps[var]
    return Jet(a.coeffs[..., src] * fac, a.num_vars, a.order - 1)


def _check_domain(func: str, base: np.ndarray, exponent: Optional[float]) -> None:
    needs_nonzero = func in ("recip", "log", "sqrt") or (
        func == "pow" and (exponent < 0 or not float(exponent).is_integer())
    )
    if needs_nonzero and np.any(np.abs(base) < _SINGULAR_EPS):
        raise DomainError(f"{func} is singular at base value 0")
    on_branch_cut = func in ("log", "sqrt") or (func == "pow" and not float(exponent).is_integer())
    if on_branch_cut:
        cut = (base.real <= 0) & (np.abs(base.imag) <= _BRANCH_EPS * np.maximum(1.0, np.abs(base)))
        if np.any(cut):
            raise DomainError(f"{func} undefined at non-positive base value {base[cut].real.min():g}")


def _taylor_coefficients(func: str, base: np.ndarray, order: int,
                         exponent: Optional[float]) -> List[np.ndarray]:
    """f^(k)(base)/k! for k = 0..order."""
    if func == "exp":
        value = np.exp(base)
        return [value / factorial(k) for k in range(order + 1)]
    if func == "log":
        return [np.log(base)] + [(-1) ** (k + 1) / (k * base ** k) for k in range(1, order + 1)]
    if func == "recip":
        return [(-1) ** k / base ** (k + 1) for k in range(order + 1)]
    if func in ("pow", "sqrt"):
        power = 0.5 if func == "sqrt" else exponent
        # A non-negative integer power is a polynomial; its series stops at k = power.
        terminates = power >= 0 and float(power).is_integer()
        out, binomial = [], 1.0
        for k in range(order + 1):
            if terminates and k > power:
                out.append(np.zeros_like(base))
                continue
            out.append(binomial * base ** (power - k))
            binomial *= (power - k) / (k + 1)
        return out
    if func == "sin":
        cycle = [np.sin(base), np.cos(base), -np.sin(base), -np.cos(base)]
        return [cycle[k % 4] / factorial(k) for k in range(order + 1)]
    if func == "cos":
        cycle = [np.cos(base), -np.sin(base), -np.cos(base), np.sin(base)]
        return [cycle[k % 4] / factorial(k) for k in range(order + 1)]
    raise ValueError(f"unknown analytic function {func!r}; expected one of {ANALYTIC_FUNCTIONS}")


def jet_apply(func: str, a: Jet, exponent: Optional[float] = None) -> Jet:
    """
    Compose an analytic function with a jet.

    Parameters
    ----------
    func : str
        One of ``exp, log, sin, cos, pow, sqrt, recip``.
    a : Jet
        Argument; its base values must lie in the function's domain.
    exponent : float, optional
        Required for ``pow``.

    Raises
    ------
    DomainError
        If a base value is a singularity or on the branch cut.
    """
    if func == "pow" and exponent is None:
        raise ValueError("pow needs an exponent")
    base = np.asarray(a.value, dtype=complex)
    _check_domain(func, base, exponent)
    coefficients = _taylor_coefficients(func, base, a.order, exponent)
    tail = a - base
    result = Jet.constant(coefficients[0], a.num_vars, a.order)
    power = None
    for k in range(1, a.order + 1):
        power = tail if power is None else power * tail
        result = result + power * coefficients[k]
    return result


def jet_inv(matrix: Jet) -> Jet:
    """Inverse of a square jet matrix by the terminating Neumann series around its base value."""
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"expected a square jet matrix, got shape {matrix.shape}")
    base = np.asarray(matrix.value, dtype=complex)
    if np.linalg.cond(base) > 1e13:
        raise DomainError("matrix is singular at the base point")
    base_inv = np.linalg.inv(base)
    step = jet_einsum("ij,jk->ik", -base_inv, matrix - base)
    term = Jet.constant(base_inv, matrix.num_vars, matrix.order)
    result = term
    for _ in range(matrix.order):
        term = step @ term
        result = result + term
    return result


@dataclass
class JetBudget:
    """Per-quantity ledger of consumed jet orders."""

    initial_order: int = 6
    consumed: Dict[str, int] = field(default_factory=dict)

    def record(self, name: str, jet: Union[Jet, int]) -> int:
        order = jet.order if isinstance(jet, Jet) else int(jet)
        self.consumed[name] = self.initial_order - order
        logger.debug("budget %s: %d order(s) consumed, %d left", name, self.consumed[name], order)
        return order

    def remaining(self, name: str) -> int:
        return self.initial_order - self.consumed[name]

    def require(self, name: str, derivatives: int) -> None:
        left = self.remaining(name)
        if left - derivatives < 0:
            raise OrderExhaustedError(
                f"{name} has {left} order(s) left but {derivatives} derivative(s) were requested"
            )

    def to_dict(self) -> Dict[str, int]:
        return {name: self.initial_order - used for name, used in self.consumed.items()}
