"""
crcartan.services.fefferman
---------------------------

The Fefferman metric g_F = iϖ ⊙ θ + ½γ on chart × circle, its Ricci curvature
by the pseudo-hermitian formula and by a direct Levi-Civita computation,
conformal covariance under θ̂ = e^{−2u}θ, and the Einstein-universe model.

The circle coordinate v is the last variable; chart jets are lifted with no
v-dependence and ϖ = i dv + weyl_form carries the only dv term.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from crcartan.core.errors import DomainError
from crcartan.services.coframe import CoframeField
from crcartan.services.gauge import DensityGauge, rescale, weyl_connection
from crcartan.services.jets import Jet, jet_einsum, jet_inv, jet_stack
from crcartan.services.pseudohermitian import PHGeometry

logger = logging.getLogger(__name__)

_DEGENERACY_TOL = 1e-10


def sym(u: Jet, v: Jet) -> Jet:
    """u ⊙ v = u⊗v + v⊗u for coordinate 1-forms."""
    outer = jet_einsum("i,j->ij", u, v)
    return outer + outer.T


def square(u: Jet) -> Jet:
    """u² = u⊗u."""
    return jet_einsum("i,j->ij", u, u)


def _circle_form(num_vars: int, order: int) -> Jet:
    coeffs = np.zeros(num_vars)
    coeffs[-1] = 1.0
    return Jet.constant(coeffs, num_vars, order)


def _lift_form(form: Jet) -> Jet:
    """Chart 1-form (m,) → 1-form on chart × circle (m+1,) with no dv part."""
    lifted = form.lift(1)
    coeffs = np.zeros(form.shape[:-1] + (form.shape[-1] + 1, lifted.coeffs.shape[-1]), dtype=complex)
    coeffs[..., :-1, :] = lifted.coeffs
    return Jet(coeffs, lifted.num_vars, lifted.order)


@dataclass
class LorentzMetric:
    """Symmetric metric on chart × circle; components are jets in (chart coords, v)."""

    components: Jet
    point: np.ndarray

    @property
    def dim(self) -> int:
        return self.components.shape[0]

    @property
    def order(self) -> int:
        return self.components.order

    @property
    def value(self) -> np.ndarray:
        return np.asarray(self.components.value)

    def symmetry_residual(self) -> float:
        return (self.components - self.components.T).max_abs()

    def imaginary_residual(self) -> float:
        return self.components.imag().max_abs()

    def determinant(self) -> float:
        return float(np.real(np.linalg.det(self.value)))

    def signature(self, tol: float = _DEGENERACY_TOL):
        eigenvalues = np.linalg.eigvalsh(np.real(self.value))
        return int(np.sum(eigenvalues > tol)), int(np.sum(eigenvalues < -tol))

    def to_dict(self) -> Dict:
        positive, negative = self.signature()
        return {
            "components": np.real(self.value).tolist(),
            "signature": [positive, negative],
            "determinant": self.determinant(),
        }


@dataclass
class RicciReport:
    """
    Ricci curvature of a Fefferman metric.

    ``coordinates`` holds the coordinate components, ``coframe`` the base
    values on the coframe (iϖ, θ, θ^α, θ^ᾱ) lifted to the circle bundle.
    """

    coordinates: Jet
    coframe: np.ndarray
    scalar: float
    scalar_imag: float = 0.0
    trace_free_norm: float = 0.0
    source: str = "levi-civita"
    extras: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {
            "source": self.source,
            "scalar": self.scalar,
            "scalar_imag": self.scalar_imag,
            "trace_free_norm": self.trace_free_norm,
            "coordinates": np.real(np.asarray(self.coordinates.value)).tolist(),
            "coframe": np.real(self.coframe).tolist(),
        }


# ----------------------------------------------------------------------
# the metric
# ----------------------------------------------------------------------
def fefferman_coframe(geom: PHGeometry, weyl: Optional[DensityGauge] = None) -> Jet:
    """Rows iϖ, θ, θ^α, θ^ᾱ as coordinate 1-forms on chart × circle."""
    weyl = weyl or weyl_connection(geom)
    chart = geom.cf.matrix
    lifted_rows = _lift_form(chart)
    nu = _circle_form(geom.m + 1, weyl.weyl_form.order) * -1.0 + _lift_form(weyl.weyl_form) * 1j
    return jet_stack([nu] + [lifted_rows[k] for k in range(geom.m)])


def fefferman_metric(geom: PHGeometry, weyl: Optional[DensityGauge] = None) -> LorentzMetric:
    """g_F = iϖ ⊙ θ + ½ Σ θ^α ⊙ θ^ᾱ in coordinates (chart, v)."""
    n = geom.n
    frame = fefferman_coframe(geom, weyl)
    nu, theta = frame[0], frame[1]
    g = sym(nu, theta)
    for alpha in range(n):
        g = g + sym(frame[2 + alpha], frame[2 + n + alpha]) * 0.5
    metric = LorentzMetric(components=g, point=np.append(geom.cf.point, 0.0))
    logger.debug("Fefferman metric at order %d, signature %s", metric.order, metric.signature())
    return metric


def fefferman_sphere_expected(cf: CoframeField) -> LorentzMetric:
    """(θ − dv) ⊙ θ + ½(σ_1² + σ_2²) with σ_1 + iσ_2 = √2 θ^1."""
    theta = _lift_form(cf.theta)
    theta_1 = _lift_form(cf.theta_a[0])
    sigma_1 = (theta_1 + theta_1.conj()) * (1.0 / np.sqrt(2.0))
    sigma_2 = (theta_1 - theta_1.conj()) * (-1j / np.sqrt(2.0))
    dv = _circle_form(theta.num_vars, theta.order)
    g = sym(theta - dv, theta) + (square(sigma_1) + square(sigma_2)) * 0.5
    return LorentzMetric(components=g, point=np.append(cf.point, 0.0))


def einstein_universe_metric(cf: CoframeField) -> LorentzMetric:
    """½(−dv² + Σ σ_i²) built from a sphere coframe with σ_0 = 2θ."""
    theta = _lift_form(cf.theta)
    theta_1 = _lift_form(cf.theta_a[0])
    sigmas = [
        theta * 2.0,
        (theta_1 + theta_1.conj()) * (1.0 / np.sqrt(2.0)),
        (theta_1 - theta_1.conj()) * (-1j / np.sqrt(2.0)),
    ]
    dv = _circle_form(theta.num_vars, theta.order)
    g = square(dv) * -1.0
    for sigma in sigmas:
        g = g + square(sigma)
    return LorentzMetric(components=g * 0.5, point=np.append(cf.point, 0.0))


# ----------------------------------------------------------------------
# Ricci curvature
# ----------------------------------------------------------------------
def christoffel(g: LorentzMetric) -> Jet:
    """Γ^l_{ij} = ½ g^{lk}(∂_i g_{jk} + ∂_j g_{ik} − ∂_k g_{ij})."""
    if abs(g.determinant()) < _DEGENERACY_TOL:
        raise DomainError("metric is degenerate at the base point")
    inverse = jet_inv(g.components)
    dg = g.components.gradient()
    lowered = (dg.transpose(1, 2, 0) + dg.transpose(1, 0, 2) - dg.transpose(2, 0, 1)) * 0.5
    return jet_einsum("lk,kij->lij", inverse, lowered)


def _coframe_components(values: np.ndarray, frame: Jet) -> np.ndarray:
    """A 2-tensor at the base point, evaluated on the dual frame of ``frame``'s rows."""
    dual = np.linalg.inv(np.asarray(frame.value))
    return dual.T @ np.asarray(values) @ dual


def _report(ricci: Jet, g: LorentzMetric, frame: Optional[Jet], source: str) -> RicciReport:
    inverse = np.linalg.inv(g.value)
    scalar = complex(np.trace(inverse @ np.asarray(ricci.value)))
    trace_free = np.asarray(ricci.value) - scalar / g.dim * g.value
    coframe = _coframe_components(ricci.value, frame) if frame is not None else np.asarray(ricci.value)
    return RicciReport(
        coordinates=ricci,
        coframe=coframe,
        scalar=float(scalar.real),
        scalar_imag=float(abs(scalar.imag)),
        trace_free_norm=float(np.max(np.abs(trace_free))),
        source=source,
    )


def levi_civita_ricci(g: LorentzMetric, frame: Optional[Jet] = None) -> RicciReport:
    """
    R_{jk} = ∂_lΓ^l_{jk} − ∂_kΓ^l_{jl} + Γ^l_{lm}Γ^m_{jk} − Γ^l_{km}Γ^m_{jl}.

    Needs two spare orders in the metric jets.
    """
    gamma = christoffel(g)
    d_gamma = gamma.gradient()
    contracted = gamma.trace(0, 1)
    ricci = (d_gamma.trace(0, 3)
             - d_gamma.trace(0, 2)
             + jet_einsum("m,mjk->jk", contracted, gamma)
             - jet_einsum("lkm,mjl->jk", gamma, gamma))
    report = _report(ricci, g, frame, "levi-civita")
    logger.debug("Levi-Civita Ricci: scalar %.12g", report.scalar)
    return report


def ricci_formula(geom: PHGeometry, weyl: Optional[DensityGauge] = None) -> RicciReport:
    """
    Ric_F = (R/(n+1))g_F − 2nϖ² − 2nSθ² + n(𝒫 + 𝒜^J) + 2n𝒯^J ⊙ θ, assembled
    from the coframe components and returned in coordinates.
    """
    n = geom.n
    frame = fefferman_coframe(geom, weyl)
    nu, theta = frame[0], frame[1]
    hol = [frame[2 + alpha] for alpha in range(n)]
    anti = [frame[2 + n + alpha] for alpha in range(n)]
    R = geom.Rscal.lift(1)
    S = geom.S.lift(1)
    P = geom.P.lift(1)
    A = geom.A.lift(1)
    T = geom.T.lift(1)

    ricci = (sym(nu, theta) * R * (1.0 / (n * (n + 1)))
             + square(nu) * 2.0
             - square(theta) * S * 2.0)
    for alpha in range(n):
        for beta in range(n):
            weight = P[alpha, beta]
            if alpha == beta:
                weight = weight + R * (1.0 / (2 * n * (n + 1)))
            ricci = ricci + sym(hol[alpha], anti[beta]) * weight
            ricci = ricci + jet_einsum("i,j->ij", hol[alpha], hol[beta]) * A[alpha, beta] * 1j
            ricci = ricci - jet_einsum("i,j->ij", anti[alpha], anti[beta]) * A[alpha, beta].conj() * 1j
        ricci = ricci + sym(hol[alpha], theta) * T[alpha] * 2j
        ricci = ricci - sym(anti[alpha], theta) * T[alpha].conj() * 2j
    ricci = ricci * float(n)

    g = fefferman_metric(geom, weyl)
    report = _report(ricci, g, frame, "formula")
    report.extras["expected_scalar"] = scalar_curvature_expected(geom)
    logger.debug("formula Ricci: scalar %.12g", report.scalar)
    return report


def scalar_curvature_expected(geom: PHGeometry) -> float:
    """Scal_F = 2(2n+1)R/(n+1)."""
    n = geom.n
    return float(2 * (2 * n + 1) * np.real(geom.Rscal.value) / (n + 1))


def ricci_discrepancy(geom: PHGeometry) -> Dict[str, float]:
    """Formula against direct computation: componentwise gap, scalars and the trace-free norm."""
    weyl = weyl_connection(geom)
    g = fefferman_metric(geom, weyl)
    frame = fefferman_coframe(geom, weyl)
    direct = levi_civita_ricci(g, frame)
    formula = ricci_formula(geom, weyl)
    gap = float(np.max(np.abs(np.asarray(direct.coordinates.value) - np.asarray(formula.coordinates.value))))
    return {
        "componentwise": gap,
        "scalar_direct": direct.scalar,
        "scalar_formula": formula.scalar,
        "scalar_expected": scalar_curvature_expected(geom),
        "trace_free_norm": direct.trace_free_norm,
    }


# ----------------------------------------------------------------------
# conformal covariance
# ----------------------------------------------------------------------
def _null_vectors(g: np.ndarray) -> np.ndarray:
    """Null vectors e_− / √|λ_−| + e_k / √λ_k of a Lorentzian form, one per spacelike axis."""
    eigenvalues, eigenvectors = np.linalg.eigh(np.real(g))
    negative = [k for k, lam in enumerate(eigenvalues) if lam < -_DEGENERACY_TOL]
    positive = [k for k, lam in enumerate(eigenvalues) if lam > _DEGENERACY_TOL]
    if len(negative) != 1:
        raise DomainError(f"expected Lorentzian signature, found {len(negative)} negative direction(s)")
    timelike = eigenvectors[:, negative[0]] / np.sqrt(-eigenvalues[negative[0]])
    vectors = [timelike + eigenvectors[:, k] / np.sqrt(eigenvalues[k]) for k in positive]
    vectors += [timelike - eigenvectors[:, k] / np.sqrt(eigenvalues[k]) for k in positive]
    return np.array(vectors)


def lightcone_residual(g1: LorentzMetric, g2: LorentzMetric) -> float:
    """max over sampled g1-null vectors v of |g2(v, v)|, relative to the size of g2."""
    vectors = _null_vectors(g1.value)
    values = np.einsum("ki,ij,kj->k", vectors, np.real(g2.value), vectors)
    scale = max(1.0, float(np.max(np.abs(g2.value))))
    return float(np.max(np.abs(values)) / scale)


def conformal_covariance_check(geom: PHGeometry, u: Jet) -> Dict[str, float]:
    """
    Rebuild g_F for θ̂ = e^{−2u}θ and compare with e^{−2u}g_F.

    ``exact`` is max|ĝ_F − e^{−2u}g_F| at the base point; ``aligned`` ignores
    the θ row and column of the difference on the background coframe, which
    is where a realignment v ↦ v + φ of the circle coordinate shows up;
    ``trace_free`` measures the part of the difference not proportional to g_F
    and ``lightcone`` the failure of g_F-null vectors to be ĝ_F-null.
    """
    hat = PHGeometry(rescale(geom.cf, -u))
    g = fefferman_metric(geom)
    g_hat = fefferman_metric(hat)
    factor = np.exp(-2.0 * np.real(u.value))
    difference = g_hat.value - factor * g.value

    frame = fefferman_coframe(geom)
    on_coframe = _coframe_components(difference, frame)
    keep = [k for k in range(on_coframe.shape[0]) if k != 1]
    aligned = float(np.max(np.abs(on_coframe[np.ix_(keep, keep)])))

    inverse = np.linalg.inv(g.value)
    trace = np.trace(inverse @ difference) / g.dim
    trace_free = float(np.max(np.abs(difference - trace * g.value)))
    residuals = {
        "exact": float(np.max(np.abs(difference))),
        "aligned": aligned,
        "trace_free": trace_free,
        "lightcone": lightcone_residual(g, g_hat),
    }
    logger.debug("conformal covariance residuals %s", residuals)
    return residuals
