"""
crcartan.services.tractor
-------------------------

Tractors (ℓ, τ, ψ) written in a gauge: the change of gauge under θ ↦ e^{2f}θ,
the Hermitian tractor metric and determinant, the Reeb map, the prolongation
map r into 2-jets, and holonomic 2-jets of CR-holomorphic densities.

Slot values are jets in the chart variables and are written against the
reference density ℓ_ref of the gauge; ψ follows the Weyl-adjusted convention
ψ = −i∇_ξℓ + R/(2(n+1)(n+2)) ℓ.
"""
import logging
from dataclasses import dataclass, field
from itertools import permutations
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from crcartan.core.errors import GaugeMismatchError
from crcartan.services.coframe import CoframeField
from crcartan.services.gauge import normalize_density, volume_normalized, weyl_connection
from crcartan.services.jets import Jet, jet_stack
from crcartan.services.pseudohermitian import PHGeometry, cov_deriv

logger = logging.getLogger(__name__)

_GAUGE_TOL = 1e-12


def _parity(perm: Sequence[int]) -> float:
    inversions = sum(1 for i in range(len(perm)) for j in range(i + 1, len(perm)) if perm[i] > perm[j])
    return -1.0 if inversions % 2 else 1.0


def jet_det(matrix: Jet) -> Jet:
    """Determinant of a small square jet matrix by the Leibniz expansion."""
    size = matrix.shape[0]
    total = None
    for perm in permutations(range(size)):
        term = matrix[0, perm[0]]
        for row in range(1, size):
            term = term * matrix[row, perm[row]]
        term = term * _parity(perm)
        total = term if total is None else total + term
    return total


@dataclass(frozen=True, eq=False)
class Tractor:
    """
    Components of a section of the tractor bundle in one gauge.

    ``gauge`` is the accumulated rescaling function f relative to the
    background contact form (None means the background itself).
    """

    ell: Jet
    tau: Jet
    psi: Jet
    gauge: Optional[Jet] = field(default=None, repr=False)

    @classmethod
    def constant(cls, ell: complex, tau: Sequence[complex], psi: complex,
                 num_vars: int, order: int) -> "Tractor":
        return cls(
            ell=Jet.constant(ell, num_vars, order),
            tau=Jet.constant(np.asarray(tau, dtype=complex), num_vars, order),
            psi=Jet.constant(psi, num_vars, order),
        )

    @classmethod
    def from_vector(cls, vector: Jet, gauge: Optional[Jet] = None) -> "Tractor":
        size = vector.shape[0]
        return cls(ell=vector[0], tau=vector[1:size - 1], psi=vector[size - 1], gauge=gauge)

    @property
    def n(self) -> int:
        return self.tau.shape[0]

    @property
    def order(self) -> int:
        return min(self.ell.order, self.tau.order, self.psi.order)

    def as_vector(self) -> Jet:
        """Components in the gauge frame (ℓ; τ_1..τ_n; ψ)."""
        return jet_stack([self.ell] + list(self.tau) + [self.psi])

    def values(self) -> np.ndarray:
        return np.asarray(self.as_vector().value)

    def __add__(self, other: "Tractor") -> "Tractor":
        same_gauge(self, other)
        return Tractor(self.ell + other.ell, self.tau + other.tau, self.psi + other.psi, self.gauge)

    def __sub__(self, other: "Tractor") -> "Tractor":
        return self + other * -1.0

    def __mul__(self, scalar) -> "Tractor":
        return Tractor(self.ell * scalar, self.tau * scalar, self.psi * scalar, self.gauge)

    __rmul__ = __mul__

    def max_abs(self) -> float:
        return max(self.ell.max_abs(), self.tau.max_abs(), self.psi.max_abs())

    def base_max_abs(self) -> float:
        return max(self.ell.base_max_abs(), self.tau.base_max_abs(), self.psi.base_max_abs())

    def to_dict(self) -> Dict[str, list]:
        values = self.values()
        return {
            "ell": [values[0].real, values[0].imag],
            "tau": [[v.real, v.imag] for v in values[1:-1]],
            "psi": [values[-1].real, values[-1].imag],
        }


def same_gauge(*sigmas: Tractor) -> None:
    """Raise GaugeMismatchError unless all tractors are written in one gauge."""
    reference = sigmas[0].gauge
    for sigma in sigmas[1:]:
        other = sigma.gauge
        if reference is None and other is None:
            continue
        if reference is None or other is None or not reference.allclose(other, _GAUGE_TOL):
            raise GaugeMismatchError("tractors are written in different gauges")


def tractor_gauge_transform(sig: Tractor, f: Jet, geom: PHGeometry) -> Tractor:
    """
    Components in the gauge e^{2f}θ:
    ℓ̂ = ℓ, τ̂_α = τ_α + 2f_αℓ, ψ̂ = ψ − 2f_ᾱτ_α − (|d_bf|² + if_0)ℓ
    with |d_bf|² = 2Σ f_α f_ᾱ and all derivatives of f in the background frame.
    """
    n = geom.n
    df = geom.derivative(f)
    f_h, f_a = df[1:n + 1], df[n + 1:]
    tau = sig.tau + f_h * sig.ell * 2.0
    norm = (f_h * f_a).sum() * 2.0
    psi = sig.psi - (f_a * sig.tau).sum() * 2.0 - (norm + df[0] * 1j) * sig.ell
    gauge = f if sig.gauge is None else sig.gauge + f
    return Tractor(ell=sig.ell, tau=tau, psi=psi, gauge=gauge)


def tractor_metric(s1: Tractor, s2: Tractor) -> Jet:
    """h(σ1, σ2) = conj(ℓ1)ψ2 + conj(ψ1)ℓ2 + Σ conj(τ1_α)τ2_α, antilinear in the first slot."""
    same_gauge(s1, s2)
    return s1.ell.conj() * s2.psi + s1.psi.conj() * s2.ell + (s1.tau.conj() * s2.tau).sum()


def gram_matrix(sigmas: Sequence[Tractor]) -> np.ndarray:
    """Base values of h(σ_i, σ_j)."""
    size = len(sigmas)
    gram = np.zeros((size, size), dtype=complex)
    for i in range(size):
        for j in range(size):
            gram[i, j] = complex(tractor_metric(sigmas[i], sigmas[j]).value)
    return gram


def gram_signature(sigmas: Sequence[Tractor], tol: float = 1e-12) -> Tuple[int, int]:
    """(number of positive, number of negative) eigenvalues of the Gram matrix."""
    gram = gram_matrix(sigmas)
    eigenvalues = np.linalg.eigvalsh(0.5 * (gram + gram.conj().T))
    return int(np.sum(eigenvalues > tol)), int(np.sum(eigenvalues < -tol))


def standard_frame(n: int, num_vars: int, order: int) -> Tuple[Tractor, ...]:
    """e_0 = (1, 0, 0), e_α = (0, e_α, 0), e_{n+1} = (0, 0, 1)."""
    frame = []
    for k in range(n + 2):
        vector = np.zeros(n + 2, dtype=complex)
        vector[k] = 1.0
        frame.append(Tractor.constant(vector[0], vector[1:n + 1], vector[n + 1], num_vars, order))
    return tuple(frame)


def tractor_determinant(sigmas: Sequence[Tractor]) -> Jet:
    """Determinant of the (n+2)×(n+2) component matrix in the gauge frame."""
    same_gauge(*sigmas)
    if len(sigmas) != sigmas[0].n + 2:
        raise ValueError(f"the determinant needs {sigmas[0].n + 2} tractors, got {len(sigmas)}")
    return jet_det(jet_stack([sigma.as_vector() for sigma in sigmas]))


def reeb_map(sig: Tractor, geom: PHGeometry) -> Jet:
    """Coordinate components of ξ̂ = |ℓ|²ξ − iℓ̄τ_αZ_ᾱ + iτ̄_αℓZ_α."""
    frame = geom.frame
    Z = frame.Z
    Z_bar = Z.conj()
    ell = sig.ell
    xi_hat = frame.xi * (ell.conj() * ell)
    xi_hat = xi_hat - ((sig.tau * ell.conj()).reshape(-1, 1) * Z_bar).sum(0) * 1j
    xi_hat = xi_hat + ((sig.tau.conj() * ell).reshape(-1, 1) * Z).sum(0) * 1j
    return xi_hat


@dataclass(frozen=True, eq=False)
class Jet2Tractor:
    """A tractor with the free second-level slots ℓ_{αβ}, ψ_α and ψ_0."""

    tractor: Tractor
    ell_ab: Jet
    psi_a: Jet
    psi_0: Jet

    def __add__(self, other: "Jet2Tractor") -> "Jet2Tractor":
        return Jet2Tractor(self.tractor + other.tractor, self.ell_ab + other.ell_ab,
                           self.psi_a + other.psi_a, self.psi_0 + other.psi_0)

    def __mul__(self, scalar) -> "Jet2Tractor":
        return Jet2Tractor(self.tractor * scalar, self.ell_ab * scalar,
                           self.psi_a * scalar, self.psi_0 * scalar)

    __rmul__ = __mul__

    def max_abs(self) -> float:
        return max(self.tractor.max_abs(), self.ell_ab.max_abs(),
                   self.psi_a.max_abs(), self.psi_0.max_abs())

    def base_max_abs(self) -> float:
        return max(self.tractor.base_max_abs(), self.ell_ab.base_max_abs(),
                   self.psi_a.base_max_abs(), self.psi_0.base_max_abs())


def _weyl_scalar(geom: PHGeometry) -> Jet:
    n = geom.n
    return geom.Rscal * (1.0 / (2 * (n + 1) * (n + 2)))


def prolongation_r(sig: Tractor, geom: PHGeometry) -> Jet2Tractor:
    """
    The prolongation of a tractor to a 2-jet:
    ℓ_{αβ} = −iA_{αβ}ℓ, ψ_α = P_{αβ̄}τ_β − T_αℓ,
    ψ_0 = −iSℓ − 2iT_ᾱτ_α − iR/(2(n+1)(n+2)) ψ.
    """
    ell, tau, psi = sig.ell, sig.tau, sig.psi
    ell_ab = geom.A * ell * -1j
    psi_a = geom.P @ tau - geom.T * ell
    psi_0 = (geom.S * ell + (geom.T.conj() * tau).sum() * 2.0 + _weyl_scalar(geom) * psi) * -1j
    return Jet2Tractor(tractor=sig, ell_ab=ell_ab, psi_a=psi_a, psi_0=psi_0)


def first_jet(density: Jet, geom: PHGeometry) -> Tractor:
    """j¹ℓ = (ℓ, ∇^{1,0}ℓ, −i∇_ξℓ + R/(2(n+1)(n+2))ℓ) for ℓ = density·ℓ_ref."""
    n = geom.n
    first = cov_deriv(density, geom, weight=1)
    psi = first[0] * -1j + _weyl_scalar(geom) * density
    return Tractor(ell=density.truncate(first.order), tau=first[1:n + 1], psi=psi)


def holonomic_jet(density: Jet, geom: PHGeometry) -> Jet2Tractor:
    """Second-level slots of the actual 2-jet of ℓ = density·ℓ_ref."""
    n = geom.n
    sigma = first_jet(density, geom)
    second = cov_deriv(cov_deriv(density, geom, weight=1), geom, weight=1)
    dpsi = cov_deriv(sigma.psi, geom, weight=1)
    return Jet2Tractor(tractor=sigma, ell_ab=second[1:n + 1, 1:n + 1],
                       psi_a=dpsi[1:n + 1], psi_0=dpsi[0])


def determined_components(jet2: Jet2Tractor, geom: PHGeometry) -> Dict[str, Jet]:
    """
    Slots fixed by CR-holomorphicity of a 2-jet:
    ℓ_β̄ = 0, ℓ_{β̄α} = 0, ℓ_{β̄0} = 0, ℓ_{αβ̄} = −P_{αβ̄}ℓ − δ_{αβ̄}ψ and
    ℓ_{0β̄} = −A_{β̄γ̄,γ}ℓ/(n+2) + A_{β̄γ̄}ℓ_γ.
    """
    n = geom.n
    sigma = jet2.tractor
    ell, tau, psi = sigma.ell, sigma.tau, sigma.psi
    divergence = _torsion_divergence(geom)
    zeros = Jet.zeros((n,), ell.num_vars, ell.order)
    return {
        "ell_b": zeros,
        "ell_ba": Jet.zeros((n, n), ell.num_vars, ell.order),
        "ell_b0": zeros,
        "ell_ab": geom.P * ell * -1.0 - psi.reshape(1, 1) * np.eye(n),
        "ell_0b": divergence * ell * (-1.0 / (n + 2)) + geom.A.conj() @ tau,
    }


def _torsion_divergence(geom: PHGeometry) -> Jet:
    """Σ_γ A_{β̄γ̄,γ} indexed by β."""
    n = geom.n
    DA = cov_deriv(geom.A_full, geom)
    total = None
    for gamma in range(n):
        term = DA[n + 1:, n + 1 + gamma, 1 + gamma]
        total = term if total is None else total + term
    return total


def holonomic_residuals(density: Jet, geom: PHGeometry) -> Dict[str, float]:
    """Actual derivatives of ℓ = density·ℓ_ref against the determined components."""
    n = geom.n
    jet2 = holonomic_jet(density, geom)
    expected = determined_components(jet2, geom)
    first = cov_deriv(density, geom, weight=1)
    second = cov_deriv(first, geom, weight=1)
    actual = {
        "ell_b": first[n + 1:],
        "ell_ba": second[n + 1:, 1:n + 1],
        "ell_b0": second[n + 1:, 0],
        "ell_ab": second[1:n + 1, n + 1:],
        "ell_0b": second[0, n + 1:],
    }
    return {name: (actual[name] - expected[name]).max_abs() for name in actual}


def torsion_function(jet2: Jet2Tractor, geom: PHGeometry) -> Jet:
    """Â⊗ℓ = −iℓ_{αβ} + A_{αβ}ℓ."""
    return jet2.ell_ab * -1j + geom.A * jet2.tractor.ell


def scalar_function(jet2: Jet2Tractor, geom: PHGeometry) -> Jet:
    """R̂ = −n(n+1)h(σ, σ) of the volume-normalized contact form."""
    n = geom.n
    sigma = jet2.tractor
    return tractor_metric(sigma, sigma) * (-n * (n + 1.0))


def volume_normalized_geometry(density: Jet, geom: PHGeometry) -> Tuple[CoframeField, PHGeometry, Jet]:
    """Coframe and invariants of the volume-normalized form of density·ℓ_ref, plus its f."""
    cf_hat = volume_normalized(geom.cf, density)
    f = -normalize_density((density * density.conj()).real(), weyl_connection(geom))
    return cf_hat, PHGeometry(cf_hat), f


def pseudo_einstein_residual(density: Jet, geom: PHGeometry) -> float:
    """Base residual of P̂ = R̂/(2n(n+1)) γ̂ for the volume-normalized form."""
    n = geom.n
    _, hat, _ = volume_normalized_geometry(density, geom)
    expected = hat.Rscal.reshape(1, 1) * np.eye(n) * (1.0 / (2 * n * (n + 1)))
    return (hat.P - expected).base_max_abs()


def jet_function_residuals(density: Jet, geom: PHGeometry) -> Dict[str, float]:
    """
    Jet functions of the holonomic 2-jet against the volume-normalized geometry.

    R̂ is compared directly; Â and ξ̂ are compared on the background frame.
    """
    n = geom.n
    jet2 = holonomic_jet(density, geom)
    _, hat, f = volume_normalized_geometry(density, geom)
    scalar = scalar_function(jet2, geom)
    torsion = torsion_function(jet2, geom)
    torsion_geometric = hat.A * (f * 2.0).exp() * density
    reeb = reeb_map(jet2.tractor, geom)
    return {
        "scalar": abs(complex(scalar.value) - complex(hat.Rscal.value)),
        "torsion": float(np.max(np.abs(np.asarray(torsion.value) - np.asarray(torsion_geometric.value)))),
        "reeb": float(np.max(np.abs(np.asarray(reeb.value) - np.asarray(hat.frame.xi.value)))),
        "pseudo_einstein": pseudo_einstein_residual(density, geom),
    }
