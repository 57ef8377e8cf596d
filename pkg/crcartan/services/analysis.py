"""Orchestration shared by the command line and the HTTP surface."""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from crcartan.core.config import settings
from crcartan.core.errors import DomainError
from crcartan.services.cartan import (
    cartan_curvature_tensors,
    determinant_compatibility_residual,
    metric_compatibility_residual,
    sphericity,
)
from crcartan.services.coframe import (
    admissibility_residuals,
    coframe_from_spec,
    dsigma_residual,
    orthonormalize,
)
from crcartan.services.fefferman import (
    LorentzMetric,
    RicciReport,
    fefferman_coframe,
    fefferman_metric,
    fefferman_sphere_expected,
    levi_civita_ricci,
    ricci_formula,
    scalar_curvature_expected,
)
from crcartan.services.gauge import weyl_connection
from crcartan.services.jets import Jet
from crcartan.services.pseudohermitian import (
    PHGeometry,
    density_commutation_residual,
    maximally_constant_ricci,
    symmetry_residuals,
)
from crcartan.services.report import ResidualLedger
from crcartan.services.specdsl import ManifoldSpec, eval_form, load_spec, parse_spec
from crcartan.services.tractor import Tractor, holonomic_residuals, jet_function_residuals

logger = logging.getLogger(__name__)

# Generic base points for the shipped examples.
SHIPPED_POINTS: Dict[str, List[float]] = {
    "heisenberg": [0.0, 0.0, 0.0],
    "sphere3": [1.0, 0.4, 0.3],
    "heis_pert": [0.2, 0.1, -0.1],
    "heis_holo": [0.1, 0.2, -0.1],
    "heis2": [0.1, 0.2, -0.1, 0.15, 0.05],
    "heis2_pert": [0.2, 0.1, -0.1, 0.1, 0.2],
}


def shipped_specs() -> Dict[str, Path]:
    """Names of the example manifolds shipped with the package."""
    return {path.stem: path for path in sorted(Path(settings.SPECS_DIR).glob("*.crm"))}


def resolve_spec(spec: str) -> ManifoldSpec:
    """A shipped name (with or without .crm), a path, or literal spec text."""
    shipped = shipped_specs()
    key = spec[:-4] if spec.endswith(".crm") else spec
    if key in shipped:
        return load_spec(shipped[key])
    if spec.lstrip().startswith(("manifold", "#")):
        return parse_spec(spec)
    path = Path(spec)
    if path.is_file():
        return load_spec(path)
    raise DomainError(f"unknown spec {spec!r}: not a shipped example, a file, or spec text")


def parse_point(text: str) -> np.ndarray:
    """Comma-separated reals; independent of the locale."""
    try:
        return np.array([float(part) for part in text.split(",")], dtype=float)
    except ValueError as exc:
        raise DomainError(f"cannot read point {text!r}: {exc}") from exc


def build_geometry(spec: ManifoldSpec, point: Sequence[float], order: Optional[int] = None) -> PHGeometry:
    """Raw coframe at order K+1, orthonormalized to order K, and its pseudo-hermitian invariants."""
    order = settings.DEFAULT_ORDER if order is None else order
    if len(point) != spec.num_vars:
        raise DomainError(f"spec {spec.name!r} needs {spec.num_vars} coordinates, got {len(point)}")
    raw = coframe_from_spec(spec, point, order + 1)
    return PHGeometry(orthonormalize(raw))


def density_jet(spec: ManifoldSpec, point: Sequence[float], order: int) -> Optional[Jet]:
    if "density" not in spec.bindings:
        return None
    return eval_form(spec, "density", point, order)


def probe_tractors(geom: PHGeometry, seed: int, count: int) -> List[Tractor]:
    """Deterministic tractor fields with random polynomial slots."""
    rng = np.random.default_rng(seed)
    n, m, order = geom.n, geom.m, geom.cf.order
    return [Tractor.from_vector(Jet.random(rng, m, order, shape=(n + 2,), scale=0.5)) for _ in range(count)]


@dataclass
class AnalysisReport:
    """Everything computed for one spec at one point."""

    spec: str
    point: List[float]
    order: int
    scalars: Dict[str, float]
    curvature_norms: Dict[str, float]
    sphericity: Dict[str, Any]
    fefferman_scalar: float
    maximally_constant: Dict[str, float]
    budget: Dict[str, int]
    residuals: ResidualLedger = field(repr=False, default=None)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "spec": self.spec,
            "point": [float(x) for x in self.point],
            "order": self.order,
            "scalars": dict(self.scalars),
            "curvature_norms": dict(self.curvature_norms),
            "sphericity": dict(self.sphericity),
            "fefferman_scalar": self.fefferman_scalar,
            "maximally_constant": dict(self.maximally_constant),
            "budget": dict(self.budget),
            "residuals": self.residuals.to_records() if self.residuals else [],
        }


@dataclass
class FeffermanReport:
    spec: str
    point: List[float]
    order: int
    metric: LorentzMetric
    direct: RicciReport
    formula: RicciReport
    expected_scalar: float
    residuals: ResidualLedger = field(repr=False, default=None)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "spec": self.spec,
            "point": [float(x) for x in self.point],
            "order": self.order,
            "metric": self.metric.to_dict(),
            "ricci_direct": self.direct.to_dict(),
            "ricci_formula": self.formula.to_dict(),
            "expected_scalar": self.expected_scalar,
            "residuals": self.residuals.to_records() if self.residuals else [],
        }


class CRAnalyzer:
    """Runs the full ladder (coframe → invariants → tractors → Cartan → Fefferman) at a point."""

    def __init__(self, seed: Optional[int] = None):
        self.seed = settings.DEFAULT_SEED if seed is None else seed

    def analyze(self, spec: ManifoldSpec, point: Sequence[float], order: Optional[int] = None) -> AnalysisReport:
        geom = build_geometry(spec, point, order)
        ledger = ResidualLedger("analyze")
        name = spec.name
        ledger.add_many("admissibility", admissibility_residuals(geom.cf), "admissibility", name, point)
        ledger.add("structure", geom.structure_residual, "structure", name, point)
        ledger.add_many("symmetry", symmetry_residuals(geom), "symmetry", name, point)
        if name == "sphere3":
            ledger.add("dsigma", dsigma_residual(geom.cf), "structure", name, point)

        curvature = cartan_curvature_tensors(geom)
        verdict = sphericity(curvature)
        ledger.add_many("curvature", curvature.symmetry_residuals(), "symmetry", name, point)

        s1, s2 = probe_tractors(geom, self.seed, 2)
        ledger.add("cartan.metric_compatibility", metric_compatibility_residual(geom, s1, s2),
                   "compatibility", name, point)
        sigmas = probe_tractors(geom, self.seed + 1, geom.n + 2)
        ledger.add("cartan.determinant_compatibility", determinant_compatibility_residual(geom, sigmas),
                   "compatibility", name, point)

        density = density_jet(spec, point, geom.cf.order + 1)
        if density is not None:
            ledger.add("density.commutation", density_commutation_residual(geom, density), "holonomic", name, point)
            ledger.add_many("density.holonomic", holonomic_residuals(density, geom), "holonomic", name, point)
            ledger.add_many("density.jet_functions", jet_function_residuals(density, geom), "holonomic", name, point)

        direct = levi_civita_ricci(fefferman_metric(geom))
        scalars = {
            "R": float(np.real(geom.Rscal.value)),
            "S": float(np.real(geom.S.value)),
            "|A|": geom.A.base_max_abs(),
            "|T|": geom.T.base_max_abs(),
            "|P|": geom.P.base_max_abs(),
        }
        expected = scalar_curvature_expected(geom)
        ledger.add("fefferman.scalar", abs(direct.scalar - expected), "fefferman", name, point)

        report = AnalysisReport(
            spec=name,
            point=[float(x) for x in point],
            order=geom.cf.order,
            scalars=scalars,
            curvature_norms=curvature.norms(),
            sphericity=verdict.to_dict(),
            fefferman_scalar=direct.scalar,
            maximally_constant=maximally_constant_ricci(geom),
            budget=geom.budget.to_dict(),
            residuals=ledger,
        )
        logger.info("analyzed %s at %s: %s", name, report.point, verdict.to_dict()["verdict"])
        return report

    def analyze_many(self, spec: ManifoldSpec, points: Sequence[Sequence[float]],
                     order: Optional[int] = None) -> List[AnalysisReport]:
        """Points run concurrently; reports come back in input order."""
        with ThreadPoolExecutor() as pool:
            return list(pool.map(lambda p: self.analyze(spec, p, order), points))

    def fefferman(self, spec: ManifoldSpec, point: Sequence[float], order: Optional[int] = None) -> FeffermanReport:
        geom = build_geometry(spec, point, order)
        ledger = ResidualLedger("fefferman")
        name = spec.name
        weyl = weyl_connection(geom)
        metric = fefferman_metric(geom, weyl)
        frame = fefferman_coframe(geom, weyl)
        direct = levi_civita_ricci(metric, frame)
        formula = ricci_formula(geom, weyl)
        expected = scalar_curvature_expected(geom)

        ledger.add("metric.symmetric", metric.symmetry_residual(), "structure", name, point)
        ledger.add("metric.real", metric.imaginary_residual(), "structure", name, point)
        ledger.add("metric.lorentzian", 0.0 if metric.signature() == (2 * geom.n + 1, 1) else 1.0,
                   "structure", name, point)
        gap = np.max(np.abs(np.asarray(direct.coordinates.value) - np.asarray(formula.coordinates.value)))
        ledger.add("ricci.formula_vs_direct", float(gap), "fefferman", name, point)
        ledger.add("scalar.direct", abs(direct.scalar - expected), "fefferman", name, point)
        ledger.add("scalar.formula", abs(formula.scalar - expected), "fefferman", name, point)
        ledger.add("not_einstein", direct.trace_free_norm, 1e-3, name, point, at_least=True)
        if name == "sphere3":
            reference = fefferman_sphere_expected(geom.cf)
            ledger.add("sphere.components", (metric.components - reference.components).max_abs(),
                       "fefferman", name, point)

        return FeffermanReport(
            spec=name,
            point=[float(x) for x in point],
            order=geom.cf.order,
            metric=metric,
            direct=direct,
            formula=formula,
            expected_scalar=expected,
            residuals=ledger,
        )
