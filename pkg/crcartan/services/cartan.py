"""
crcartan.services.cartan
------------------------

The canonical Cartan connection on tractors, its curvature tensors and
curvature action, an independent commutator-based curvature, and the
sphericity decision.

Directions are frame slots: 0 = ξ, 1..n = Z_α, n+1..2n = Z_ᾱ.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np

from crcartan.core.config import settings
from crcartan.services.coframe import frame_bracket
from crcartan.services.jets import Jet, jet_einsum, jet_stack
from crcartan.services.pseudohermitian import PHGeometry, conjugate_slots, cov_deriv, full_one_form
from crcartan.services.tractor import Tractor, jet_det, prolongation_r, tractor_metric

logger = logging.getLogger(__name__)

# A tractor whose slots are jets in the chart variables.
TractorField = Tractor


def _weyl_scalar(geom: PHGeometry) -> Jet:
    n = geom.n
    return geom.Rscal * (1.0 / (2 * (n + 1) * (n + 2)))


def _lift_tau(tau: Jet, n: int) -> Jet:
    """τ as a slot covector with only (1,0) components."""
    coeffs = np.zeros((2 * n + 1, tau.coeffs.shape[-1]), dtype=complex)
    coeffs[1:n + 1] = tau.coeffs
    return Jet(coeffs, tau.num_vars, tau.order)


def cartan_derivative_all(sig: TractorField, geom: PHGeometry) -> List[Tractor]:
    """𝔇_{e_a}σ for every frame slot a."""
    n, m = geom.n, geom.m
    ell, tau, psi = sig.ell, sig.tau, sig.psi
    d_ell = cov_deriv(ell, geom, weight=1)
    d_tau = cov_deriv(_lift_tau(tau, n), geom, weight=1)[1:n + 1]
    d_psi = cov_deriv(psi, geom, weight=1)
    P, A, T, S = geom.P, geom.A, geom.T, geom.S
    weyl = _weyl_scalar(geom)
    P_tau = P @ tau

    results: List[Tractor] = []
    for a in range(m):
        new_ell = d_ell[a]
        new_tau = d_tau[:, a]
        new_psi = d_psi[a]
        if a == 0:
            new_ell = new_ell + (weyl * ell - psi) * 1j
            new_tau = new_tau + P_tau * -1j + tau * weyl * 1j + T * ell * 2j
            new_psi = new_psi + (weyl * psi + (T.conj() * tau).sum() * 2.0 + S * ell) * 1j
        elif a <= n:
            alpha = a - 1
            new_ell = new_ell - tau[alpha]
            new_tau = new_tau + A[alpha] * ell * 1j
            new_psi = new_psi - P_tau[alpha] + T[alpha] * ell
        else:
            alpha = a - n - 1
            unit = np.zeros(n)
            unit[alpha] = 1.0
            new_tau = new_tau + P[:, alpha] * ell + psi.reshape(1) * unit
            new_psi = new_psi + (A.conj()[alpha] * tau).sum() * 1j - T[alpha].conj() * ell
        results.append(Tractor(ell=new_ell, tau=new_tau, psi=new_psi, gauge=sig.gauge))
    return results


def cartan_derivative(sig: TractorField, direction: int, geom: PHGeometry) -> Tractor:
    """𝔇 along one frame direction (0 = ξ, 1..n = Z_α, n+1..2n = Z_ᾱ)."""
    if not 0 <= direction < geom.m:
        raise ValueError(f"direction {direction} is not a frame slot (0..{geom.m - 1})")
    return cartan_derivative_all(sig, geom)[direction]


# ----------------------------------------------------------------------
# curvature tensors
# ----------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class CartanCurvature:
    """W_{αβ̄ρσ̄}, V_{αβ̄ρ}, Q_{αβ}, U_{αβ̄} and Y_α in an orthonormal coframe."""

    W: Jet
    V: Jet
    Q: Jet
    U: Jet
    Y: Jet

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    def norms(self) -> Dict[str, float]:
        return {name: getattr(self, name).base_max_abs() for name in ("W", "V", "Q", "U", "Y")}

    def symmetry_residuals(self) -> Dict[str, float]:
        n = self.n
        W_trace = self.W.trace(0, 1)
        return {
            "Q_symmetric": (self.Q - self.Q.T).base_max_abs(),
            "U_trace_free": self.U.trace(0, 1).base_max_abs(),
            "W_trace_free": W_trace.base_max_abs() if n > 1 else self.W.base_max_abs(),
            "U_hermitian": (self.U - self.U.conj().T).base_max_abs(),
        }

    def to_dict(self) -> Dict[str, float]:
        return self.norms()


def cartan_curvature_tensors(geom: PHGeometry) -> CartanCurvature:
    """
    W = R − P⊘δ, V_{αβ̄ρ} = A_{αρ,β̄} + iP_{αβ̄,ρ} − iT_ρδ_{αβ̄} − 2iT_αδ_{ρβ̄},
    Q_{αβ} = iA_{αβ,0} − 2iT_{α,β} + 2P_{αρ̄}A_{ρβ},
    U_{αβ̄} = T_{α,β̄} + T_{β̄,α} + P_{αρ̄}P_{ρβ̄} − A_{αρ}A_{ρ̄β̄} + Sδ_{αβ̄},
    Y_α = T_{α,0} − iS_{,α} + 2iP_{αρ̄}T_ρ − 3A_{αρ}T_ρ̄.
    """
    n = geom.n
    hol = slice(1, n + 1)
    anti = slice(n + 1, 2 * n + 1)
    eye = np.eye(n)
    P, A, T, S = geom.P, geom.A, geom.T, geom.S

    R = geom.Rcurv
    W = (R
         - jet_einsum("ab,rs->abrs", P, eye)
         - jet_einsum("rs,ab->abrs", P, eye)
         - jet_einsum("as,rb->abrs", P, eye)
         - jet_einsum("rb,as->abrs", P, eye))

    DA = cov_deriv(geom.A_full, geom)
    DP = cov_deriv(geom.P_full, geom)
    DT = cov_deriv(full_one_form(T, n), geom)
    V = (DA[hol, hol, anti].transpose(0, 2, 1)
         + DP[hol, anti, hol] * 1j
         - jet_einsum("r,ab->abr", T, eye) * 1j
         - jet_einsum("a,rb->abr", T, eye) * 2j)
    Q = DA[hol, hol, 0] * 1j - DT[hol, hol] * 2j + (P @ A) * 2.0
    U = (DT[hol, anti] + DT[anti, hol].T + P @ P - A @ A.conj()
         + S.reshape(1, 1) * eye)
    dS = geom.derivative(S)
    Y = DT[hol, 0] - dS[hol] * 1j + (P @ T) * 2j - (A @ T.conj()) * 3.0
    curvature = CartanCurvature(W=W, V=V, Q=Q, U=U, Y=Y)
    logger.debug("Cartan curvature norms %s", curvature.norms())
    return curvature


# ----------------------------------------------------------------------
# curvature action
# ----------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class TractorTwoForm:
    """Tractor-valued 2-form: slot arrays indexed by a pair of frame directions."""

    ell: Jet
    tau: Jet
    psi: Jet

    def on(self, a: int, b: int) -> Tractor:
        return Tractor(ell=self.ell[a, b], tau=self.tau[a, b], psi=self.psi[a, b])


def _coefficients(jet: Jet, order: int) -> np.ndarray:
    return jet.truncate(order).coeffs


def cartan_curvature_action(curv: CartanCurvature, sig: Tractor) -> TractorTwoForm:
    """
    The curvature of 𝔇 acting on (ℓ, τ, ψ), evaluated on the pairs (Z_ρ, Z_σ̄),
    (Z_ρ, ξ) and (Z_ρ̄, ξ); the swapped pairs carry the opposite sign. It
    matches 𝔇_a𝔇_b − 𝔇_b𝔇_a − 𝔇_{[e_a, e_b]}. The ℓ output slot is zero.
    """
    n = curv.n
    m = 2 * n + 1
    ell, tau = sig.ell, sig.tau
    W, V, Q, U, Y = curv.W, curv.V, curv.Q, curv.U, curv.Y
    V_bar = V.conj()

    mixed_tau = (V.transpose(2, 1, 0) * ell * -1j
                 - jet_einsum("agrs,g->rsa", W, tau))
    mixed_psi = U * -ell + jet_einsum("grs,g->rs", V_bar, tau) * 1j
    hol_tau = Q * -ell - jet_einsum("abr,b->ra", V, tau)
    hol_psi = Y * -ell + (U @ tau) * 1j
    anti_tau = U.T * ell * 1j + jet_einsum("gar,g->ra", V_bar, tau)
    anti_psi = Y.conj() * ell + Q.conj() @ tau

    order = min(block.order for block in (mixed_tau, mixed_psi, hol_tau, hol_psi, anti_tau, anti_psi))
    size = mixed_psi.truncate(order).coeffs.shape[-1]
    tau_out = np.zeros((m, m, n, size), dtype=complex)
    psi_out = np.zeros((m, m, size), dtype=complex)
    hol = slice(1, n + 1)
    anti = slice(n + 1, m)

    tau_out[hol, anti] = _coefficients(mixed_tau, order)
    tau_out[anti, hol] = -_coefficients(mixed_tau, order).transpose(1, 0, 2, 3)
    psi_out[hol, anti] = _coefficients(mixed_psi, order)
    psi_out[anti, hol] = -_coefficients(mixed_psi, order).transpose(1, 0, 2)

    tau_out[hol, 0] = _coefficients(hol_tau, order)
    tau_out[0, hol] = -_coefficients(hol_tau, order)
    psi_out[hol, 0] = _coefficients(hol_psi, order)
    psi_out[0, hol] = -_coefficients(hol_psi, order)

    tau_out[anti, 0] = _coefficients(anti_tau, order)
    tau_out[0, anti] = -_coefficients(anti_tau, order)
    psi_out[anti, 0] = _coefficients(anti_psi, order)
    psi_out[0, anti] = -_coefficients(anti_psi, order)

    num_vars = W.num_vars
    return TractorTwoForm(
        ell=Jet.zeros((m, m), num_vars, order),
        tau=Jet(tau_out, num_vars, order),
        psi=Jet(psi_out, num_vars, order),
    )


def cartan_curvature_numeric(geom: PHGeometry, sig: TractorField, a: int, b: int) -> Tractor:
    """𝔇_a𝔇_bσ − 𝔇_b𝔇_aσ − 𝔇_{[e_a, e_b]}σ, the bracket taken from the frame jets."""
    first = cartan_derivative_all(sig, geom)
    ab = cartan_derivative_all(first[b], geom)[a]
    ba = cartan_derivative_all(first[a], geom)[b]
    frame = geom.cf.frame_matrix
    bracket = frame_bracket(frame[:, a], frame[:, b])
    weights = geom.cf.matrix @ bracket
    result = ab - ba
    for c in range(geom.m):
        result = result - first[c] * weights[c]
    return result


def curvature_discrepancy(geom: PHGeometry, curv: CartanCurvature, sig: TractorField) -> Dict[str, float]:
    """Base-value gap between the formula curvature and the commutator curvature, per direction pair."""
    action = cartan_curvature_action(curv, sig)
    gaps: Dict[str, float] = {}
    for a in range(geom.m):
        for b in range(a + 1, geom.m):
            numeric = cartan_curvature_numeric(geom, sig, a, b)
            formula = action.on(a, b)
            gap = np.max(np.abs(numeric.values() - formula.values()))
            gaps[f"{a},{b}"] = float(gap)
    return gaps


# ----------------------------------------------------------------------
# compatibility with the tractor metric and determinant
# ----------------------------------------------------------------------
def metric_compatibility_residual(geom: PHGeometry, s1: TractorField, s2: TractorField) -> float:
    """max over directions of |X·h(σ1, σ2) − h(𝔇_X̄σ1, σ2) − h(σ1, 𝔇_Xσ2)| at the base point."""
    perm = conjugate_slots(geom.n)
    d1 = cartan_derivative_all(s1, geom)
    d2 = cartan_derivative_all(s2, geom)
    dh = geom.derivative(tractor_metric(s1, s2))
    worst = 0.0
    for a in range(geom.m):
        defect = dh[a] - tractor_metric(d1[perm[a]], s2) - tractor_metric(s1, d2[a])
        worst = max(worst, defect.base_max_abs())
    return worst


def determinant_compatibility_residual(geom: PHGeometry, sigmas: Sequence[TractorField]) -> float:
    """max over directions of |X·det(σ) − Σ_k det(σ_1, …, 𝔇_Xσ_k, …)| at the base point."""
    vectors = [sigma.as_vector() for sigma in sigmas]
    derivatives = [cartan_derivative_all(sigma, geom) for sigma in sigmas]

    def det_of(rows):
        return jet_det(jet_stack(rows))

    d_det = geom.derivative(det_of(vectors))
    worst = 0.0
    for a in range(geom.m):
        expansion = None
        for k in range(len(sigmas)):
            rows = list(vectors)
            rows[k] = derivatives[k][a].as_vector()
            term = det_of(rows)
            expansion = term if expansion is None else expansion + term
        worst = max(worst, (d_det[a] - expansion).base_max_abs())
    return worst


# ----------------------------------------------------------------------
# sphericity
# ----------------------------------------------------------------------
@dataclass
class SphericityVerdict:
    spherical: bool
    deciding_tensor: str
    deciding_norm: float
    tolerance: float
    norms: Dict[str, float]

    def to_dict(self) -> Dict:
        return {
            "verdict": "spherical-at-point" if self.spherical else "non-spherical-at-point",
            "deciding_tensor": self.deciding_tensor,
            "deciding_norm": self.deciding_norm,
            "tolerance": self.tolerance,
            "norms": dict(self.norms),
        }


def sphericity(curv: CartanCurvature, tol: float = None) -> SphericityVerdict:
    """Q decides for n = 1, W for n > 1; all five norms are reported."""
    tol = settings.tolerance("sphericity") if tol is None else tol
    norms = curv.norms()
    deciding = "Q" if curv.n == 1 else "W"
    verdict = SphericityVerdict(spherical=norms[deciding] <= tol, deciding_tensor=deciding,
                                deciding_norm=norms[deciding], tolerance=tol, norms=norms)
    logger.info("sphericity: |%s| = %.3e (tol %.1e)", deciding, norms[deciding], tol)
    return verdict


def parallel_prolongation_residual(sig: TractorField, geom: PHGeometry) -> Dict[str, float]:
    """
    For a parallel field, compare the derivatives of its slots with the
    prolongation: ∇_βτ_α + iA_{αβ}ℓ, ∇_αψ − (P_{αβ̄}τ_β − T_αℓ) and
    ∇_0ψ − ψ_0, all expected to vanish.
    """
    n = geom.n
    prolonged = prolongation_r(sig, geom)
    d_tau = cov_deriv(_lift_tau(sig.tau, n), geom, weight=1)[1:n + 1, 1:n + 1]
    d_psi = cov_deriv(sig.psi, geom, weight=1)
    return {
        "ell_ab": (d_tau.T - prolonged.ell_ab).base_max_abs(),
        "psi_a": (d_psi[1:n + 1] - prolonged.psi_a).base_max_abs(),
        "psi_0": (d_psi[0] - prolonged.psi_0).base_max_abs(),
    }
