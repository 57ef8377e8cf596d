"""
crcartan.services.pseudohermitian
---------------------------------

Tanaka–Webster connection, torsion and curvature of an orthonormal admissible
coframe, the CR Schouten tensor and the higher invariants T and S.

Every tensor on the complexified tangent space is stored as a dense jet array
over the frame slots (0 = ξ, 1..n = Z_α, n+1..2n = Z_ᾱ). Covariant derivatives
append the new index last, so ``t[γ, α, β]`` is ∇_{Z_β}∇_{Z_α} t_γ.
"""
import logging
from functools import cached_property
from typing import Dict, Tuple

import numpy as np

from crcartan.core.errors import DomainError, InternalInconsistencyError, OrderExhaustedError
from crcartan.services.coframe import (
    CoframeField,
    FrameField,
    d_matrix,
    dual_frame,
    frame_components_2,
    frame_derivative,
)
from crcartan.services.jets import Jet, JetBudget, jet_einsum

logger = logging.getLogger(__name__)

_LEVI_TOL = 1e-8


def conjugate_slots(n: int) -> np.ndarray:
    """Permutation of frame slots sending ξ ↦ ξ, Z_α ↦ Z_ᾱ, Z_ᾱ ↦ Z_α."""
    return np.array([0] + list(range(n + 1, 2 * n + 1)) + list(range(1, n + 1)), dtype=np.intp)


def conjugate_tensor(t: Jet, n: int) -> Jet:
    """Components of the complex conjugate tensor: t̄[a, b, ...] = conj(t[ā, b̄, ...])."""
    perm = conjugate_slots(n)
    coeffs = t.coeffs
    for axis in range(t.ndim):
        coeffs = np.take(coeffs, perm, axis=axis)
    return Jet(np.conj(coeffs), t.num_vars, t.order)


def full_one_form(holomorphic: Jet, n: int) -> Jet:
    """Real 1-form with (1,0) components ``holomorphic`` and their conjugates."""
    coeffs = np.zeros((2 * n + 1, holomorphic.coeffs.shape[-1]), dtype=complex)
    coeffs[1:n + 1] = holomorphic.coeffs
    coeffs[n + 1:] = np.conj(holomorphic.coeffs)
    return Jet(coeffs, holomorphic.num_vars, holomorphic.order)


def full_torsion(A: Jet, n: int) -> Jet:
    """A_{αβ}θ^α⊗θ^β + A_{ᾱβ̄}θ^ᾱ⊗θ^β̄ as an (m, m) slot array."""
    m = 2 * n + 1
    coeffs = np.zeros((m, m, A.coeffs.shape[-1]), dtype=complex)
    coeffs[1:n + 1, 1:n + 1] = A.coeffs
    coeffs[n + 1:, n + 1:] = np.conj(A.coeffs)
    return Jet(coeffs, A.num_vars, A.order)


def full_hermitian(P: Jet, n: int) -> Jet:
    """P_{αβ̄}(θ^α⊗θ^β̄ + θ^β̄⊗θ^α) as an (m, m) slot array."""
    m = 2 * n + 1
    coeffs = np.zeros((m, m, P.coeffs.shape[-1]), dtype=complex)
    coeffs[1:n + 1, n + 1:] = P.coeffs
    coeffs[n + 1:, 1:n + 1] = P.coeffs.swapaxes(0, 1)
    return Jet(coeffs, P.num_vars, P.order)


def hol_anti_trace(t: Jet, n: int, first: int, second: int) -> Jet:
    """Σ_β t[..., β, ..., β̄, ...] over the two given axes (a (1,0) and a (0,1) slot)."""
    total = None
    for beta in range(n):
        index = [slice(None)] * t.ndim
        index[first] = 1 + beta
        index[second] = n + 1 + beta
        term = t[tuple(index)]
        total = term if total is None else total + term
    return total


def tw_connection(cf: CoframeField):
    """
    Connection forms and torsion of the Tanaka–Webster connection.

    Solves dθ^α = θ^β∧ω_β^α + A_{ᾱβ̄}θ∧θ^β̄ with ω skew-Hermitian.

    Returns
    -------
    omega : Jet, shape (n, n, m)
        ``omega[β, α, c] = ω_β^α(e_c)``.
    A : Jet, shape (n, n)
        A_{αβ}.
    residual : float
        Max coefficient residual of the reconstructed structure equations.
    """
    n, m = cf.n, cf.num_vars
    C = cf.structure_components
    mixed = C[:, 1:n + 1, n + 1:]
    w_hol = -mixed.conj()
    w_anti = mixed.transpose(1, 0, 2)
    raw0 = C[:, 1:n + 1, 0].T
    w0 = (raw0 - raw0.conj().T) * 0.5
    order = C.order
    coeffs = np.concatenate([w0.coeffs[:, :, None, :], w_hol.coeffs, w_anti.coeffs], axis=2)
    omega = Jet(coeffs, cf.num_vars, order)
    raw_torsion = C[:, 0, n + 1:]
    A_bar = (raw_torsion + raw_torsion.T) * 0.5

    rebuilt = np.zeros(C.coeffs.shape, dtype=complex)
    w_alpha_first = omega.coeffs.transpose(1, 0, 2, 3)
    rebuilt[:, 1:n + 1, :] += w_alpha_first
    rebuilt[:, :, 1:n + 1] -= w_alpha_first.transpose(0, 2, 1, 3)
    rebuilt[:, 0, n + 1:] += A_bar.coeffs
    rebuilt[:, n + 1:, 0] -= A_bar.coeffs
    residual = float(np.max(np.abs(C.coeffs - rebuilt))) if C.coeffs.size else 0.0
    if not np.isfinite(residual):
        raise InternalInconsistencyError("structure equations produced non-finite values")
    logger.debug("Tanaka-Webster structure residual %.3e at order %d", residual, order)
    return omega, A_bar.conj(), residual


class PHGeometry:
    """
    Pseudo-hermitian invariants of an orthonormal admissible coframe.

    Quantities are computed lazily; each consumes jet orders counted from the
    coframe: ω one, curvature two, T three, S four.
    """

    def __init__(self, cf: CoframeField):
        levi_error = (cf.levi - np.eye(cf.n)).base_max_abs()
        if levi_error > _LEVI_TOL:
            raise DomainError(f"coframe is not orthonormal (|h - δ| = {levi_error:.2e}); orthonormalize first")
        self.cf = cf
        self.n = cf.n
        self.m = cf.num_vars

    def __repr__(self) -> str:
        return f"PHGeometry(n={self.n}, point={list(self.cf.point)}, order={self.cf.order})"

    # ------------------------------------------------------------------
    # frame and connection
    # ------------------------------------------------------------------
    @cached_property
    def frame(self) -> FrameField:
        return dual_frame(self.cf)

    @cached_property
    def _connection(self):
        return tw_connection(self.cf)

    @property
    def omega(self) -> Jet:
        """Frame components ω_β^α(e_c), shape (n, n, m)."""
        return self._connection[0]

    @property
    def A(self) -> Jet:
        return self._connection[1]

    @property
    def structure_residual(self) -> float:
        return self._connection[2]

    @cached_property
    def omega_coordinates(self) -> Jet:
        """Coordinate coefficients of ω_β^α, shape (n, n, m)."""
        return jet_einsum("bac,ci->bai", self.omega, self.cf.matrix)

    @cached_property
    def gamma(self) -> Jet:
        """gamma[a, b, c]: ∇_{e_c} e_a = Σ_b gamma[a, b, c] e_b."""
        n, m = self.n, self.m
        w = self.omega
        coeffs = np.zeros((m, m, m, w.coeffs.shape[-1]), dtype=complex)
        coeffs[1:n + 1, 1:n + 1] = w.coeffs
        coeffs[n + 1:, n + 1:] = np.conj(w.coeffs[:, :, conjugate_slots(n)])
        return Jet(coeffs, w.num_vars, w.order)

    @cached_property
    def kappa(self) -> Jet:
        """Frame components of the connection form tr(ω)/(n+2) on L in the ℓ_ref gauge."""
        return self.omega.trace(0, 1) * (1.0 / (self.n + 2))

    @cached_property
    def A_full(self) -> Jet:
        return full_torsion(self.A, self.n)

    # ------------------------------------------------------------------
    # curvature
    # ------------------------------------------------------------------
    @cached_property
    def curvature_forms(self) -> Jet:
        """Π_β^α(e_a, e_b) for Π = dω − ω∧ω, shape (n, n, m, m)."""
        w = self.omega
        d_omega = frame_components_2(d_matrix(self.omega_coordinates), self.cf.frame_matrix)
        product = jet_einsum("bgx,gay->baxy", w, w)
        return d_omega - (product - product.transpose(0, 1, 3, 2))

    @cached_property
    def Rcurv(self) -> Jet:
        """R_{βᾱρσ̄} = Π_β^α(Z_ρ, Z_σ̄)."""
        n = self.n
        return self.curvature_forms[:, :, 1:n + 1, n + 1:]

    @cached_property
    def Ric(self) -> Jet:
        """Ricci curvature R_{ρσ̄} (trace over the first pair)."""
        return self.Rcurv.trace(0, 1)

    @cached_property
    def Ric_second(self) -> Jet:
        return second_ricci_trace(self)

    @cached_property
    def Rscal(self) -> Jet:
        return self.Ric.trace(0, 1)

    @cached_property
    def P(self) -> Jet:
        return schouten(self.Ric, self.Rscal, self.n)

    @cached_property
    def P_full(self) -> Jet:
        return full_hermitian(self.P, self.n)

    # ------------------------------------------------------------------
    # higher invariants
    # ------------------------------------------------------------------
    @cached_property
    def _t_and_s(self):
        return t_and_s(self)

    @property
    def T(self) -> Jet:
        return self._t_and_s[0]

    @property
    def S(self) -> Jet:
        return self._t_and_s[1]

    @cached_property
    def T_full(self) -> Jet:
        return full_one_form(self.T, self.n)

    @cached_property
    def budget(self) -> JetBudget:
        budget = JetBudget(initial_order=self.cf.order)
        budget.record("coframe", self.cf.order)
        for name in ("omega", "Rscal", "T", "S"):
            try:
                budget.record(name, getattr(self, name))
            except OrderExhaustedError:
                logger.debug("budget: %s not available at coframe order %d", name, self.cf.order)
        return budget

    def derivative(self, function: Jet) -> Jet:
        """Frame derivatives e_c(g) of a scalar (or tensor of scalars), new last axis."""
        return frame_derivative(function, self.cf.frame_matrix)


def tw_curvature(geom: PHGeometry) -> Tuple[Jet, Jet, Jet]:
    """(Rcurv, Ric, Rscal) of the Tanaka–Webster connection."""
    return geom.Rcurv, geom.Ric, geom.Rscal


def second_ricci_trace(geom: PHGeometry) -> Jet:
    """Σ_ρ R_{βᾱρρ̄}; agrees with the first-pair trace on admissible coframes."""
    return geom.Rcurv.trace(2, 3)


def schouten(Ric: Jet, Rscal: Jet, n: int) -> Jet:
    """P_{αβ̄} = (R_{αβ̄} − R/(2(n+1)) δ_{αβ̄}) / (n+2)."""
    identity = np.eye(n)
    return (Ric - Rscal.reshape(1, 1) * identity * (1.0 / (2 * (n + 1)))) * (1.0 / (n + 2))


def cov_deriv(t: Jet, geom: PHGeometry, weight: int = 0) -> Jet:
    """
    Tanaka–Webster covariant derivative of a covariant slot tensor.

    ``weight`` is the power of L the tensor takes values in (its components
    are written against ℓ_ref); each unit adds κ_c t. The new index is last
    and the result has one order less.
    """
    result = geom.derivative(t)
    rank = t.ndim
    if rank > 6:
        raise ValueError("cov_deriv supports tensors of rank up to 6")
    letters = [chr(ord("a") + k) for k in range(rank)]
    for axis in range(rank):
        operand = letters.copy()
        operand[axis] = "y"
        subscripts = f"{''.join(operand)},{letters[axis]}yx->{''.join(letters)}x"
        result = result - jet_einsum(subscripts, t, geom.gamma)
    if weight:
        result = result + t.reshape(*(t.shape + (1,))) * geom.kappa * float(weight)
    return result


def t_and_s(geom: PHGeometry):
    """
    T_α = (R_{,α}/(2(n+1)) − i A_{αβ,β̄}) / (n+2) and
    S = −(T_{α,ᾱ} + T_{ᾱ,α} + P_{αβ̄}P_{ᾱβ} − A_{αβ}A_{ᾱβ̄}) / n.
    """
    n = geom.n
    dR = geom.derivative(geom.Rscal)
    divergence = hol_anti_trace(cov_deriv(geom.A_full, geom), n, 1, 2)
    T = (dR[1:n + 1] * (1.0 / (2 * (n + 1))) - divergence[1:n + 1] * 1j) * (1.0 / (n + 2))

    T_full = full_one_form(T, n)
    DT = cov_deriv(T_full, geom)
    P_full, A_full = geom.P_full, geom.A_full
    trace_T = hol_anti_trace(DT, n, 0, 1) + hol_anti_trace(DT, n, 1, 0)
    PP = (P_full[1:n + 1, n + 1:] * P_full[n + 1:, 1:n + 1]).sum()
    AA = (A_full[1:n + 1, 1:n + 1] * A_full[n + 1:, n + 1:]).sum()
    S = (trace_T + PP - AA) * (-1.0 / n)
    return T, S


def density_commutation_residual(geom: PHGeometry, density: Jet) -> float:
    """
    ℓ_{β̄α} − ℓ_{αβ̄} = −iδ_{αβ̄}ℓ_0 + R_{αβ̄}ℓ/(n+2) for ℓ = density·ℓ_ref.

    Returns the max coefficient residual.
    """
    n = geom.n
    first = cov_deriv(density, geom, weight=1)
    second = cov_deriv(first, geom, weight=1)
    lhs = second[n + 1:, 1:n + 1].T - second[1:n + 1, n + 1:]
    rhs = first[0].reshape(1, 1) * np.eye(n) * -1j + geom.Ric * density * (1.0 / (n + 2))
    return (lhs - rhs).max_abs()


def maximally_constant_ricci(geom: PHGeometry) -> Dict[str, float]:
    """Base-point residuals of P = R/(2n(n+1))δ, A = 0, T = 0, S = −R²/(4n²(n+1)²)."""
    n = geom.n
    R = geom.Rscal
    expected_P = R.reshape(1, 1) * np.eye(n) * (1.0 / (2 * n * (n + 1)))
    expected_S = R * R * (-1.0 / (4 * n * n * (n + 1) ** 2))
    return {
        "schouten": (geom.P - expected_P).base_max_abs(),
        "torsion": geom.A.base_max_abs(),
        "T": geom.T.base_max_abs(),
        "S": (geom.S - expected_S).base_max_abs(),
    }


def symmetry_residuals(geom: PHGeometry) -> Dict[str, float]:
    """Base-point symmetry and reality defects of the computed invariants."""
    return {
        "A_symmetric": (geom.A - geom.A.T).base_max_abs(),
        "Ric_hermitian": (geom.Ric - geom.Ric.conj().T).base_max_abs(),
        "P_hermitian": (geom.P - geom.P.conj().T).base_max_abs(),
        "R_real": geom.Rscal.imag().base_max_abs(),
        "S_real": geom.S.imag().base_max_abs(),
        "ricci_traces": (geom.Ric - geom.Ric_second).base_max_abs(),
    }
