"""
crcartan.services.gauge
-----------------------

Conformal rescaling of contact forms, density normalization, the Weyl
connection on the density bundle L, and two-sided evaluators for the
transformation laws of the L-connection and of the invariants T and S.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple, Union

import numpy as np

from crcartan.core.errors import DomainError, GaugeMismatchError
from crcartan.services.coframe import CoframeField, absorb_theta_terms
from crcartan.services.jets import Jet, jet_apply, jet_einsum
from crcartan.services.pseudohermitian import PHGeometry, cov_deriv, hol_anti_trace

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GaugeChange:
    """θ̂ = e^{2f}θ; the same change reads θ̂ = e^{−2ρ}θ with ρ = −f."""

    f: Jet

    @classmethod
    def from_rho(cls, rho: Jet) -> "GaugeChange":
        return cls(f=-rho)

    @property
    def rho(self) -> Jet:
        return -self.f

    def apply(self, cf: CoframeField) -> CoframeField:
        return rescale(cf, self.f)


@dataclass(frozen=True)
class DensityGauge:
    """
    Connection on L written against ℓ_ref, where ℓ_ref^{−(n+2)} = θ∧θ^1∧…∧θ^n.

    Attributes
    ----------
    L_connection : Jet
        Frame components of the L-connection form, shape (m,).
    L_connection_form : Jet
        Its coordinate coefficients.
    weyl_form : Jet
        Coordinate coefficients of L_connection_form + iR/(2(n+1)(n+2)) θ.
    """

    L_connection: Jet
    L_connection_form: Jet
    weyl_form: Jet
    scalar_term: Jet

    @property
    def weyl_frame(self) -> Jet:
        """Frame components of the Weyl form: the scalar term sits on the θ slot."""
        coeffs = self.L_connection.coeffs.copy()
        order = min(self.L_connection.order, self.scalar_term.order)
        size = Jet.zeros((), self.L_connection.num_vars, order).coeffs.shape[-1]
        coeffs = coeffs[..., :size]
        coeffs[0] += 1j * self.scalar_term.coeffs[..., :size]
        return Jet(coeffs, self.L_connection.num_vars, order)


def rescale(cf: CoframeField, f: Jet) -> CoframeField:
    """
    Orthonormal admissible coframe of θ̂ = e^{2f}θ.

    θ̂^α = e^f θ^α + c^α θ̂ with c^α fixed so that dθ̂ = iθ̂^α∧θ̂^ᾱ. The
    result keeps the coframe's order when ``f`` carries one more order.
    """
    if f.shape != ():
        raise ValueError("the rescaling function must be scalar")
    if f.imag().base_max_abs() > 1e-12:
        raise DomainError("the rescaling function must be real")
    f = f.real()
    order = min(cf.order, cf.dtheta.order, f.order - 1)
    if order < 0:
        raise DomainError("rescaling function needs at least one order")
    e2f = jet_apply("exp", f * 2.0)
    ef = jet_apply("exp", f)
    theta = cf.theta.truncate(order)
    df = f.gradient().truncate(order)
    twisted = df.reshape(-1, 1) * theta.reshape(1, -1)
    dtheta = e2f * (cf.dtheta.truncate(order) + (twisted - twisted.T) * 2.0)
    theta_hat = e2f * theta
    theta_a = ef * cf.theta_a.truncate(order)
    result = absorb_theta_terms(theta_hat.truncate(order), theta_a.truncate(order),
                                dtheta.truncate(order), cf.point)
    logger.debug("rescaled coframe: order %d -> %d", cf.order, result.order)
    return result


def normalize_density(ell_norm_sq: Union[float, Jet],
                      base: Optional[DensityGauge] = None) -> Union[float, Jet]:
    """
    u = ½ log|ℓ|², so that e^{−2u}θ is the volume-normalized contact form of ℓ.

    ``ell_norm_sq`` is |ℓ|² measured against ℓ_ref of the base gauge. When
    ``base`` is given, a jet norm must live on the same chart variables.
    """
    if isinstance(ell_norm_sq, Jet):
        if base is not None and base.L_connection.num_vars != ell_norm_sq.num_vars:
            raise GaugeMismatchError("density norm and base gauge live on different charts")
        if np.min(np.real(np.atleast_1d(ell_norm_sq.value))) <= 0:
            raise DomainError("zero density has no volume-normalized contact form")
        return jet_apply("log", ell_norm_sq.real()) * 0.5
    if ell_norm_sq <= 0:
        raise DomainError("zero density has no volume-normalized contact form")
    return 0.5 * float(np.log(ell_norm_sq))


def volume_normalized(cf: CoframeField, density: Jet) -> CoframeField:
    """Coframe of the contact form for which the density density·ℓ_ref has unit norm."""
    u = normalize_density(density * density.conj())
    return rescale(cf, -u)


def weyl_connection(geom: PHGeometry) -> DensityGauge:
    n = geom.n
    scalar_term = geom.Rscal * (1.0 / (2 * (n + 1) * (n + 2)))
    kappa = geom.kappa
    kappa_form = jet_einsum("c,ci->i", kappa, geom.cf.matrix)
    weyl = kappa_form + geom.cf.theta * scalar_term * 1j
    return DensityGauge(L_connection=kappa, L_connection_form=kappa_form,
                        weyl_form=weyl, scalar_term=scalar_term)


def gauge_invariants(geom: PHGeometry) -> Dict[str, float]:
    """Base values unaffected by the U(n) freedom of the coframe: R, |A|², |T|², S."""
    return {
        "R": float(np.real(geom.Rscal.value)),
        "A2": float(np.sum(np.abs(np.asarray(geom.A.value)) ** 2)),
        "T2": float(np.sum(np.abs(np.asarray(geom.T.value)) ** 2)),
        "S": float(np.real(geom.S.value)),
    }


def _first_and_second(geom: PHGeometry, function: Jet) -> Tuple[Jet, Jet]:
    first = cov_deriv(function, geom)
    return first, cov_deriv(first, geom)


def check_L_transform(geom: PHGeometry, f: Jet, density: Jet = None) -> float:
    """
    Both sides of the rescaling law of the L-connection, compared in coordinates.

    LHS: ∇^{e^{2f}θ}ℓ − ∇^θℓ rebuilt from the rescaled geometry. RHS:
    2∂_bf⊗ℓ + (2/(n+2))(f_0 + iΛ + i(n+1)|d_bf|²)θ⊗ℓ with Λ = Σ f_{ᾱα} and
    |d_bf|² = 2Σ f_α f_ᾱ.
    """
    n = geom.n
    if density is None:
        density = Jet.constant(1.0, geom.m, f.order)
    hat = PHGeometry(rescale(geom.cf, f))
    kappa = jet_einsum("c,ci->i", geom.kappa, geom.cf.matrix)
    kappa_hat = jet_einsum("c,ci->i", hat.kappa, hat.cf.matrix)
    lhs = (f.gradient() + kappa_hat - kappa) * density

    first, second = _first_and_second(geom, f)
    holo = first[1:n + 1]
    anti = first[n + 1:]
    laplacian = hol_anti_trace(second, n, 1, 0)
    norm = (holo * anti).sum() * 2.0
    d_b = jet_einsum("a,ai->i", holo, geom.cf.matrix[1:n + 1])
    scalar = (first[0] + laplacian * 1j + norm * (1j * (n + 1))) * (2.0 / (n + 2))
    rhs = (d_b * 2.0 + geom.cf.theta * scalar) * density
    residual = (lhs - rhs).max_abs()
    logger.debug("L-connection transformation residual %.3e", residual)
    return residual


def ts_transform_sides(geom: PHGeometry, rho: Jet):
    """
    Left and right sides of the rescaling laws of T_α and S for θ̂ = e^{−2ρ}θ.

    The left sides are recomputed from scratch in the rescaled gauge, with T̂
    referred to the background Z_α.
    """
    n = geom.n
    hat = PHGeometry(rescale(geom.cf, -rho))
    weight = jet_apply("exp", rho.real() * -3.0)
    lhs_T = hat.T * weight
    lhs_S = hat.S * jet_apply("exp", rho.real() * -4.0)

    first, second = _first_and_second(geom, rho)
    r_h = first[1:n + 1]
    r_a = first[n + 1:]
    r0 = first[0]
    hh = second[1:n + 1, 1:n + 1]
    ha = second[1:n + 1, n + 1:]
    ah = second[n + 1:, 1:n + 1]
    aa = second[n + 1:, n + 1:]
    zero_h = second[0, 1:n + 1]
    zero_a = second[0, n + 1:]
    P, A, T = geom.P, geom.A, geom.T
    A_bar = A.conj()
    T_bar = T.conj()
    norm = (r_h * r_a).sum()

    rhs_T = (T - zero_h * 1j
             - (P @ r_h) * 2.0
             + (A @ r_a) * 2j
             + (hh @ r_a) * 2.0
             - (ha @ r_h) * 2.0
             + r_h * norm * 4.0)

    rhs_S = (geom.S - second[0, 0]
             + ((T * r_a).sum() + (T_bar * r_h).sum()) * 6.0
             + ((zero_a * r_h).sum() - (zero_h * r_a).sum()) * 4j
             - r0 * r0
             + ((r_a @ A @ r_a) - (r_h @ A_bar @ r_h)) * 6j
             - (r_a @ P @ r_h) * 12.0
             + ((r_a @ hh @ r_a) + (r_h @ aa @ r_h)) * 4.0
             - (r_a @ (ha + ah.T) @ r_h) * 4.0
             + norm * norm * 12.0)
    return (lhs_T, rhs_T), (lhs_S, rhs_S)


def check_TS_transform(geom: PHGeometry, rho: Jet) -> Tuple[float, float]:
    """Max coefficient residuals of the T and S rescaling laws."""
    (lhs_T, rhs_T), (lhs_S, rhs_S) = ts_transform_sides(geom, rho)
    residual_T = (lhs_T - rhs_T).max_abs()
    residual_S = (lhs_S - rhs_S).max_abs()
    logger.debug("T/S transformation residuals %.3e / %.3e", residual_T, residual_S)
    return residual_T, residual_S
