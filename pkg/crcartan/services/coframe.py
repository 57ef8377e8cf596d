"""
crcartan.services.coframe
-------------------------

Differential forms with jet coefficients, adapted coframes and their dual frames.

Conventions: (a∧b)(X, Y) = a(X)b(Y) − a(Y)b(X). Frame slots are ordered
0 = ξ, 1..n = Z_α, n+1..2n = Z_ᾱ; the coframe matrix E has rows θ, θ^α, θ^ᾱ
over coordinate differentials, and the frame matrix F = E⁻¹ has the frame
vectors as columns.
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from itertools import combinations, permutations
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from crcartan.core.errors import DomainError, OrderExhaustedError
from crcartan.services.jets import Jet, jet_apply, jet_einsum, jet_inv, jet_stack
from crcartan.services.specdsl import ManifoldSpec, eval_form

logger = logging.getLogger(__name__)

# Base-point slack for the pre-orthonormalization sanity checks.
_BASE_CHECK_TOL = 1e-6


# ----------------------------------------------------------------------
# p-forms
# ----------------------------------------------------------------------
@lru_cache(maxsize=None)
def _basis(num_vars: int, degree: int) -> Tuple[Tuple[int, ...], ...]:
    return tuple(combinations(range(num_vars), degree))


@lru_cache(maxsize=None)
def _basis_position(num_vars: int, degree: int) -> Dict[Tuple[int, ...], int]:
    return {combo: k for k, combo in enumerate(_basis(num_vars, degree))}


def _parity(sequence: Sequence[int]) -> int:
    inversions = sum(1 for i in range(len(sequence)) for j in range(i + 1, len(sequence))
                     if sequence[i] > sequence[j])
    return -1 if inversions % 2 else 1


@lru_cache(maxsize=None)
def _wedge_table(num_vars: int, p: int, q: int):
    target = _basis_position(num_vars, p + q)
    rows_a, rows_b, rows_k, signs = [], [], [], []
    for ia, combo_a in enumerate(_basis(num_vars, p)):
        for ib, combo_b in enumerate(_basis(num_vars, q)):
            if set(combo_a) & set(combo_b):
                continue
            merged = combo_a + combo_b
            rows_a.append(ia)
            rows_b.append(ib)
            rows_k.append(target[tuple(sorted(merged))])
            signs.append(_parity(merged))
    return (np.array(rows_a, dtype=np.intp), np.array(rows_b, dtype=np.intp),
            np.array(rows_k, dtype=np.intp), np.array(signs, dtype=float))


@lru_cache(maxsize=None)
def _ext_d_table(num_vars: int, p: int):
    target = _basis_position(num_vars, p + 1)
    rows_i, rows_j, rows_k, signs = [], [], [], []
    for ii, combo in enumerate(_basis(num_vars, p)):
        for j in range(num_vars):
            if j in combo:
                continue
            rows_i.append(ii)
            rows_j.append(j)
            rows_k.append(target[tuple(sorted(combo + (j,)))])
            signs.append(-1.0 if sum(1 for c in combo if c < j) % 2 else 1.0)
    return (np.array(rows_i, dtype=np.intp), np.array(rows_j, dtype=np.intp),
            np.array(rows_k, dtype=np.intp), np.array(signs, dtype=float))


@dataclass(frozen=True, eq=False)
class FormField:
    """A p-form on a chart; one jet per strictly increasing p-tuple of coordinate indices."""

    degree: int
    num_vars: int
    components: Jet

    def __post_init__(self):
        expected = len(_basis(self.num_vars, self.degree))
        if self.degree > self.num_vars or self.components.shape != (expected,):
            raise ValueError(f"a {self.degree}-form in {self.num_vars} variables needs {expected} components")

    @classmethod
    def from_one_form(cls, coefficients: Jet) -> "FormField":
        return cls(1, coefficients.num_vars, coefficients)

    @classmethod
    def from_function(cls, function: Jet) -> "FormField":
        return cls(0, function.num_vars, function.reshape(1))

    @classmethod
    def zero(cls, degree: int, num_vars: int, order: int) -> "FormField":
        return cls(degree, num_vars, Jet.zeros((len(_basis(num_vars, degree)),), num_vars, order))

    @property
    def order(self) -> int:
        return self.components.order

    def component(self, *indices: int) -> Jet:
        return self.components[_basis_position(self.num_vars, self.degree)[tuple(indices)]]

    def _check(self, other: "FormField") -> None:
        if other.num_vars != self.num_vars:
            raise ValueError("forms live on different charts")

    def __add__(self, other: "FormField") -> "FormField":
        self._check(other)
        if other.degree != self.degree:
            raise ValueError("cannot add forms of different degree")
        return FormField(self.degree, self.num_vars, self.components + other.components)

    def __sub__(self, other: "FormField") -> "FormField":
        return self + other * -1.0

    def __mul__(self, scalar) -> "FormField":
        return FormField(self.degree, self.num_vars, self.components * scalar)

    __rmul__ = __mul__

    def conj(self) -> "FormField":
        return FormField(self.degree, self.num_vars, self.components.conj())

    def wedge(self, other: "FormField") -> "FormField":
        return wedge(self, other)

    def ext_d(self) -> "FormField":
        return ext_d(self)

    def as_matrix(self) -> Jet:
        """Antisymmetric coordinate matrix of a 2-form: ω(X, Y) = Xᵀ M Y."""
        if self.degree != 2:
            raise ValueError("as_matrix needs a 2-form")
        m = self.num_vars
        coeffs = np.zeros((m, m, self.components.coeffs.shape[-1]), dtype=complex)
        for k, (i, j) in enumerate(_basis(m, 2)):
            coeffs[i, j] = self.components.coeffs[k]
            coeffs[j, i] = -self.components.coeffs[k]
        return Jet(coeffs, m, self.order)

    def evaluate(self, *vectors: Jet) -> Jet:
        """Value on p vector fields given by coordinate-component jets of shape (m,)."""
        if len(vectors) != self.degree:
            raise ValueError(f"a {self.degree}-form takes {self.degree} vectors")
        order = min([self.order] + [v.order for v in vectors])
        total = Jet.zeros((), self.num_vars, order)
        for k, combo in enumerate(_basis(self.num_vars, self.degree)):
            det = Jet.zeros((), self.num_vars, order)
            for perm in permutations(range(self.degree)):
                term = Jet.constant(float(_parity(perm)), self.num_vars, order)
                for slot, target in enumerate(perm):
                    term = term * vectors[slot][combo[target]]
                det = det + term
            total = total + self.components[k] * det
        return total

    def max_abs(self) -> float:
        return self.components.max_abs()


def wedge(a: FormField, b: FormField) -> FormField:
    """Graded-antisymmetric product; order is the minimum of the operand orders."""
    a._check(b)
    if a.degree + b.degree > a.num_vars:
        return FormField.zero(min(a.degree + b.degree, a.num_vars), a.num_vars, min(a.order, b.order))
    rows_a, rows_b, rows_k, signs = _wedge_table(a.num_vars, a.degree, b.degree)
    size = len(_basis(a.num_vars, a.degree + b.degree))
    order = min(a.order, b.order)
    coeffs = np.zeros((size, Jet.zeros((), a.num_vars, order).coeffs.shape[-1]), dtype=complex)
    if len(rows_k):
        products = (a.components[rows_a] * b.components[rows_b]) * signs
        np.add.at(coeffs, rows_k, products.coeffs)
    return FormField(a.degree + b.degree, a.num_vars, Jet(coeffs, a.num_vars, order))


def ext_d(a: FormField) -> FormField:
    """Exterior derivative: degree +1, order −1."""
    if a.order < 1:
        raise OrderExhaustedError("exterior derivative of an order-0 form")
    if a.degree == a.num_vars:
        return FormField.zero(a.degree, a.num_vars, a.order - 1)
    grads = a.components.gradient()
    rows_i, rows_j, rows_k, signs = _ext_d_table(a.num_vars, a.degree)
    size = len(_basis(a.num_vars, a.degree + 1))
    coeffs = np.zeros((size, grads.coeffs.shape[-1]), dtype=complex)
    np.add.at(coeffs, rows_k, grads.coeffs[rows_i, rows_j] * signs[:, None])
    return FormField(a.degree + 1, a.num_vars, Jet(coeffs, a.num_vars, grads.order))


# ----------------------------------------------------------------------
# helpers on coordinate components
# ----------------------------------------------------------------------
def d_matrix(one_forms: Jet) -> Jet:
    """
    Coordinate matrices of d of 1-forms.

    ``one_forms`` has shape (..., m) of coordinate coefficients; the result has
    shape (..., m, m) with M[i, j] = ∂_i w_j − ∂_j w_i, one order lower.
    """
    grad = one_forms.gradient()
    axes = tuple(range(grad.ndim))
    swapped = grad.transpose(*(axes[:-2] + (axes[-1], axes[-2])))
    return swapped - grad


def frame_components_2(matrix: Jet, frame: Jet) -> Jet:
    """Frame components Fᵀ M F of coordinate 2-form matrices of shape (..., m, m)."""
    half = jet_einsum("...ij,jb->...ib", matrix, frame)
    return jet_einsum("...ib,ia->...ab", half, frame)


def frame_components_1(one_forms: Jet, frame: Jet) -> Jet:
    return jet_einsum("...i,ia->...a", one_forms, frame)


def frame_derivative(function: Jet, frame: Jet) -> Jet:
    """Directional derivatives e_a(g) along all frame vectors; new trailing axis."""
    return jet_einsum("...i,ia->...a", function.gradient(), frame)


def frame_bracket(x: Jet, y: Jet) -> Jet:
    """Coordinate components of [X, Y] for vector fields of shape (m,)."""
    return jet_einsum("j,ij->i", x, y.gradient()) - jet_einsum("j,ij->i", y, x.gradient())


# ----------------------------------------------------------------------
# coframes
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class FrameField:
    """Reeb field and (1,0) frame dual to a coframe; `matrix[:, a]` is frame vector a."""

    xi: Jet
    Z: Jet
    matrix: Jet

    @property
    def n(self) -> int:
        return self.Z.shape[0]

    def vector(self, slot: int) -> Jet:
        return self.matrix[:, slot]


@dataclass(frozen=True, eq=False)
class CoframeField:
    """
    Chart coframe (θ, θ^1..θ^n) with jet coefficients.

    ``theta`` has shape (m,), ``theta_a`` shape (n, m). ``dtheta_matrix``
    optionally carries the coordinate matrix of dθ at the coframe's own
    order, when it is known without differentiating ``theta``.
    """

    theta: Jet
    theta_a: Jet
    point: np.ndarray
    dtheta_matrix: Optional[Jet] = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.theta_a.shape[0]

    @property
    def num_vars(self) -> int:
        return self.theta.shape[0]

    @property
    def order(self) -> int:
        return min(self.theta.order, self.theta_a.order)

    @property
    def theta_form(self) -> FormField:
        return FormField.from_one_form(self.theta)

    def theta_a_form(self, alpha: int) -> FormField:
        return FormField.from_one_form(self.theta_a[alpha])

    @cached_property
    def matrix(self) -> Jet:
        """Coframe matrix E with rows θ, θ^α, θ^ᾱ."""
        order = self.order
        return jet_stack(
            [self.theta.truncate(order)]
            + [self.theta_a[a].truncate(order) for a in range(self.n)]
            + [self.theta_a[a].truncate(order).conj() for a in range(self.n)]
        )

    @cached_property
    def frame_matrix(self) -> Jet:
        try:
            return jet_inv(self.matrix)
        except DomainError as exc:
            raise DomainError("coframe does not span at this point") from exc

    @cached_property
    def dtheta(self) -> Jet:
        if self.dtheta_matrix is not None:
            return self.dtheta_matrix
        return d_matrix(self.theta)

    @cached_property
    def dtheta_components(self) -> Jet:
        """D[a, b] = dθ(e_a, e_b)."""
        return frame_components_2(self.dtheta, self.frame_matrix)

    @cached_property
    def structure_components(self) -> Jet:
        """C[α, a, b] = dθ^α(e_a, e_b), shape (n, m, m)."""
        return frame_components_2(d_matrix(self.theta_a), self.frame_matrix)

    @cached_property
    def levi(self) -> Jet:
        """h_{αβ̄} with dθ ≡ i h_{αβ̄} θ^α∧θ^β̄ mod θ."""
        n = self.n
        return self.dtheta_components[1:n + 1, n + 1:] * -1j


def dual_frame(cf: CoframeField) -> FrameField:
    """Reeb field and Z_α from the jet-valued inverse of the coframe matrix."""
    frame = cf.frame_matrix
    n = cf.n
    return FrameField(xi=frame[:, 0], Z=frame[:, 1:n + 1].T, matrix=frame)


def coframe_from_spec(spec: ManifoldSpec, point: Sequence[float], order: int) -> CoframeField:
    """Raw coframe of a spec, coefficients evaluated as order-K jets."""
    theta = eval_form(spec, "theta", point, order)
    if np.max(np.abs(np.asarray(theta.value).imag)) > _BASE_CHECK_TOL:
        raise DomainError("theta is not real at this point")
    theta_a = jet_stack([eval_form(spec, f"theta{a}", point, order) for a in range(1, spec.n + 1)])
    return CoframeField(theta=theta.real(), theta_a=theta_a, point=np.asarray(point, dtype=float))


def _jet_cholesky(a: Jet) -> Jet:
    """Lower-triangular L with L L† = a, in jet arithmetic."""
    n = a.shape[0]
    zero = Jet.zeros((), a.num_vars, a.order)
    rows: List[List[Jet]] = [[zero] * n for _ in range(n)]
    for j in range(n):
        diag = a[j, j]
        for k in range(j):
            diag = diag - rows[j][k] * rows[j][k].conj()
        pivot = np.real(diag.value)
        if pivot <= _BASE_CHECK_TOL:
            raise DomainError("not strictly pseudoconvex here")
        rows[j][j] = jet_apply("sqrt", diag.real())
        inverse_pivot = rows[j][j].recip()
        for i in range(j + 1, n):
            entry = a[i, j]
            for k in range(j):
                entry = entry - rows[i][k] * rows[j][k].conj()
            rows[i][j] = entry * inverse_pivot
    return jet_stack([jet_stack(row) for row in rows])


def _levi_square_root(h: Jet) -> Jet:
    """Lower-triangular M with h = Mᵀ M̄, so that θ' = M θ has identity Levi form."""
    lower = _jet_cholesky(h[::-1, ::-1])
    upper = lower[::-1, ::-1]
    return upper.T


def absorb_theta_terms(theta: Jet, theta_a: Jet, dtheta: Jet, point: np.ndarray) -> CoframeField:
    """
    Replace θ^α by θ^α + c^α θ so that dθ has no θ∧θ^β, θ∧θ^β̄ terms.

    The input (1,0)-coframe must already have identity Levi form.
    """
    stage = CoframeField(theta=theta, theta_a=theta_a, point=point, dtheta_matrix=dtheta)
    n = stage.n
    shift = stage.dtheta_components[0, n + 1:] * -1j
    order = min(stage.order, shift.order)
    theta_a = theta_a.truncate(order) + shift.truncate(order).reshape(n, 1) * theta.truncate(order)
    return CoframeField(theta=theta.truncate(order), theta_a=theta_a, point=point,
                        dtheta_matrix=dtheta.truncate(order))


def orthonormalize(raw: CoframeField) -> CoframeField:
    """
    Admissible orthonormal coframe with the same θ and the same span of {θ^α} mod θ.

    Gram–Schmidt runs in spec order in jet arithmetic, so h = δ holds as a
    jet identity; the θ-components of θ^α are then fixed by requiring
    dθ = iθ^α∧θ^ᾱ exactly. The result has order ``raw.order − 1`` unless
    ``raw`` already carries dθ at full order.
    """
    n = raw.n
    D = raw.dtheta_components
    base = np.asarray(D.value)
    mixed = max(np.max(np.abs(base[1:n + 1, 1:n + 1])), np.max(np.abs(base[n + 1:, n + 1:])))
    if mixed > _BASE_CHECK_TOL * max(1.0, np.max(np.abs(base))):
        raise DomainError("dθ has a (2,0) part: theta is not adapted to the (1,0)-coframe")
    h = raw.levi
    h_base = np.asarray(h.value)
    if np.max(np.abs(h_base - h_base.conj().T)) > _BASE_CHECK_TOL * max(1.0, np.max(np.abs(h_base))):
        raise DomainError("Levi form is not Hermitian")
    if np.min(np.linalg.eigvalsh(0.5 * (h_base + h_base.conj().T))) <= 0:
        raise DomainError("not strictly pseudoconvex here")
    order = D.order
    root = _levi_square_root(h)
    theta_a = root @ raw.theta_a.truncate(order)
    result = absorb_theta_terms(raw.theta.truncate(order), theta_a, raw.dtheta.truncate(order), raw.point)
    logger.debug("orthonormalized coframe at %s: order %d -> %d", raw.point, raw.order, result.order)
    return result


def admissibility_residuals(cf: CoframeField) -> Dict[str, float]:
    """Residuals of the orthonormal admissibility conditions over all jet coefficients."""
    n = cf.n
    D = cf.dtheta_components
    eye = np.eye(n)
    expected = np.zeros((cf.num_vars, cf.num_vars), dtype=complex)
    expected[1:n + 1, n + 1:] = 1j * eye
    expected[n + 1:, 1:n + 1] = -1j * eye
    duality = cf.matrix @ cf.frame_matrix - np.eye(cf.num_vars)
    residuals = {
        "dtheta": (D - expected).max_abs(),
        "levi_identity": (cf.levi - eye).max_abs(),
        "theta_real": cf.theta.imag().max_abs(),
        "duality": duality.max_abs(),
    }
    if cf.order >= 1:
        C = cf.structure_components
        residuals["integrability"] = C[:, n + 1:, n + 1:].max_abs()
    return residuals


def admissibility_residual(cf: CoframeField) -> float:
    return max(admissibility_residuals(cf).values())


def dsigma_residual(cf: CoframeField) -> float:
    """
    Residual of dσ_i = 2σ_{i+1}∧σ_{i+2} (indices mod 3) for σ0 = 2θ, σ1 + iσ2 = √2 θ^1.

    Only meaningful for the left-invariant coframe of the 3-sphere.
    """
    if cf.n != 1:
        raise ValueError("the σ relations are stated for n = 1")
    theta1 = cf.theta_a_form(0)
    sigma = [
        cf.theta_form * 2.0,
        (theta1 + theta1.conj()) * (1.0 / np.sqrt(2.0)),
        (theta1 - theta1.conj()) * (1.0 / (np.sqrt(2.0) * 1j)),
    ]
    worst = 0.0
    for i in range(3):
        lhs = ext_d(sigma[i])
        rhs = wedge(sigma[(i + 1) % 3], sigma[(i + 2) % 3]) * 2.0
        worst = max(worst, (lhs - rhs).max_abs())
    return worst
