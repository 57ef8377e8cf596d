"""
crcartan.services.checks
------------------------

The identity suites behind ``crcartan check``: the jet engine against finite
differences, the gauge transformation laws, tractor invariance, Cartan
compatibility and curvature, and the Fefferman Ricci cross-validation.

Every suite takes a seed and a number of sample points and returns a
ResidualLedger; nothing here raises on a failed residual.
"""
import itertools
import logging
from math import prod
from typing import Callable, Dict, Iterator, List, Sequence, Tuple

import numpy as np

from crcartan.core.config import settings
from crcartan.core.errors import DomainError
from crcartan.services.analysis import (
    SHIPPED_POINTS,
    build_geometry,
    density_jet,
    probe_tractors,
    resolve_spec,
)
from crcartan.services.cartan import (
    cartan_curvature_numeric,
    cartan_curvature_tensors,
    curvature_discrepancy,
    determinant_compatibility_residual,
    metric_compatibility_residual,
    sphericity,
)
from crcartan.services.coframe import FormField, admissibility_residual, coframe_from_spec, dsigma_residual
from crcartan.services.fefferman import (
    conformal_covariance_check,
    einstein_universe_metric,
    fefferman_metric,
    fefferman_sphere_expected,
    levi_civita_ricci,
    ricci_discrepancy,
)
from crcartan.services.gauge import check_L_transform, check_TS_transform, rescale
from crcartan.services.jets import Jet, jet_apply, jet_inv
from crcartan.services.pseudohermitian import PHGeometry, density_commutation_residual, symmetry_residuals
from crcartan.services.report import ResidualLedger
from crcartan.services.specdsl import ExpressionEvaluator, evaluate_expression, parse_expression
from crcartan.services.tractor import (
    gram_signature,
    holonomic_residuals,
    jet_function_residuals,
    standard_frame,
    tractor_determinant,
    tractor_gauge_transform,
    tractor_metric,
)

logger = logging.getLogger(__name__)

# Test functions of (x, y, z) for the finite-difference oracle.
FUNCTION_LIBRARY: Tuple[str, ...] = (
    "x*y + z",
    "exp(x)*sin(y)",
    "log(2 + x^2 + y^2)",
    "sqrt(3 + x*y*z)",
    "cos(x + 2*y - z)",
    "1/(2 + x^2)",
    "(1 + x + y + z)^4",
    "sin(x)*cos(y)*exp(z)",
    "exp(-(x^2 + y^2 + z^2))",
    "x^3 - 3*x*y^2",
    "log(3 + sin(x*y))",
    "sqrt(4 + cos(x) + z^2)",
    "(x - y)/(3 + z^2)",
    "exp(sin(x + y*z))",
    "cos(x)^2 - sin(y)^2",
    "x*exp(y)*log(2 + z^2)",
    "1/(2 + x*y)^2",
    "sin(x^2 + y)*cos(z)",
    "exp(i*x + y)*z",
    "sqrt(exp(x) + y^2 + 1)",
)
FD_COORDS = ("x", "y", "z")
FD_STEP = 0.01
FD_MAX_ORDER = 3

# (offsets, weights) of the central difference for one variable.
_STENCILS: Dict[int, Tuple[Tuple[int, ...], Tuple[float, ...]]] = {
    0: ((0,), (1.0,)),
    1: ((-1, 1), (-0.5, 0.5)),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5)),
}

GEOMETRY_SPECS = ("heisenberg", "sphere3", "heis_pert")
# n = 2 models, where W rather than Q decides sphericity.
HIGHER_DIMENSIONAL_SPECS = ("heis2", "heis2_pert")
NON_SPHERICAL_SPECS = frozenset(("heis_pert", "heis2_pert"))


# ----------------------------------------------------------------------
# sampling
# ----------------------------------------------------------------------
def sample_points(spec_name: str, rng: np.random.Generator, count: int, spread: float = 0.15) -> List[np.ndarray]:
    base = np.asarray(SHIPPED_POINTS[spec_name], dtype=float)
    return [base + rng.uniform(-spread, spread, size=base.shape) for _ in range(count)]


def multi_indices(num_vars: int, max_degree: int, min_degree: int = 0) -> Iterator[Tuple[int, ...]]:
    for idx in itertools.product(range(max_degree + 1), repeat=num_vars):
        if min_degree <= sum(idx) <= max_degree:
            yield idx


def random_gauge(rng: np.random.Generator, num_vars: int, order: int,
                 degree: int = 3, scale: float = 0.1) -> Jet:
    """Real polynomial in the offsets from the base point."""
    terms = {idx: scale * rng.standard_normal() for idx in multi_indices(num_vars, degree)}
    return Jet.from_terms(terms, num_vars, order)


# ----------------------------------------------------------------------
# finite differences
# ----------------------------------------------------------------------
def central_difference(func: Callable[[np.ndarray], complex], point: np.ndarray,
                       multi_index: Sequence[int], h: float) -> complex:
    """Tensor product of one-variable central stencils."""
    per_axis = [list(zip(*_STENCILS[k])) for k in multi_index]
    total = 0j
    for combo in itertools.product(*per_axis):
        weight = prod(w for _, w in combo)
        offset = np.array([o for o, _ in combo], dtype=float) * h
        total += weight * func(point + offset)
    return total / h ** sum(multi_index)


def richardson_derivative(func: Callable[[np.ndarray], complex], point: np.ndarray,
                          multi_index: Sequence[int], h: float = FD_STEP) -> complex:
    coarse = central_difference(func, point, multi_index, h)
    fine = central_difference(func, point, multi_index, h / 2)
    return (4.0 * fine - coarse) / 3.0


def _pointwise(text: str, coords: Sequence[str]) -> Callable[[np.ndarray], complex]:
    expr = parse_expression(text)

    def evaluate(point: np.ndarray) -> complex:
        return complex(ExpressionEvaluator(coords, point).scalar(expr, 0).value)

    return evaluate


def finite_difference_errors(text: str, point: np.ndarray) -> Dict[Tuple[int, ...], float]:
    """Relative error of every Taylor derivative up to order 3 against Richardson differences."""
    jet = evaluate_expression(text, FD_COORDS, point, FD_MAX_ORDER)
    func = _pointwise(text, FD_COORDS)
    errors = {}
    for idx in multi_indices(len(FD_COORDS), FD_MAX_ORDER, min_degree=1):
        exact = complex(jet.derivative(idx))
        approx = richardson_derivative(func, point, idx)
        errors[idx] = abs(exact - approx) / max(1.0, abs(exact))
    return errors


# ----------------------------------------------------------------------
# suites
# ----------------------------------------------------------------------
def run_jets_suite(seed: int, points: int) -> ResidualLedger:
    ledger = ResidualLedger("jets")
    rng = np.random.default_rng(seed)
    for k, text in enumerate(FUNCTION_LIBRARY):
        for point in [rng.uniform(-0.5, 0.5, size=3) for _ in range(points)]:
            worst = max(finite_difference_errors(text, point).values())
            ledger.add(f"fd.f{k:02d}", worst, "jets_fd", text, point)

    for _ in range(points):
        f = Jet.random(rng, 3, 5, scale=0.3) + 2.0
        g = Jet.random(rng, 3, 5, scale=0.3) + 1.5
        leibniz = (f * g).gradient() - (f.gradient() * g + f * g.gradient())
        ledger.add("identity.leibniz", leibniz.max_abs(), "jets_identity")
        ledger.add("identity.d_squared_function", FormField.from_function(f).ext_d().ext_d().max_abs(),
                   "jets_identity")
        one_form = FormField.from_one_form(Jet.random(rng, 3, 5, shape=(3,), scale=0.3))
        ledger.add("identity.d_squared_one_form", one_form.ext_d().ext_d().max_abs(), "jets_identity")
        ledger.add("identity.exp_log", (jet_apply("exp", jet_apply("log", f)) - f).max_abs(), "jets_identity")
        ledger.add("identity.sqrt_square", (jet_apply("sqrt", f) ** 2 - f).max_abs(), "jets_identity")
        matrix = Jet.random(rng, 3, 4, shape=(3, 3), scale=0.2) + 2.0 * np.eye(3)
        ledger.add("identity.inverse", (jet_inv(matrix) @ matrix - np.eye(3)).max_abs(), "jets_identity")
        offset = rng.uniform(-0.1, 0.1, size=3)
        ledger.add("identity.shift_roundtrip", (f.shift(offset).shift(-offset) - f).max_abs(), "jets_identity")

    delta = np.full(3, 1e-3)
    for name in GEOMETRY_SPECS:
        spec = resolve_spec(name)
        for point in sample_points(name, rng, points):
            here = coframe_from_spec(spec, point, 6)
            there = coframe_from_spec(spec, point + delta, 6)
            predicted = here.matrix.shift(delta).truncate(2)
            ledger.add("specdsl.taylor_shift", (predicted - there.matrix.truncate(2)).max_abs(), 1e-8, name, point)
    return ledger


def run_gauge_suite(seed: int, points: int) -> ResidualLedger:
    ledger = ResidualLedger("gauge-laws")
    rng = np.random.default_rng(seed)
    per_point = max(1, -(-10 // points))
    for name in GEOMETRY_SPECS:
        spec = resolve_spec(name)
        for point in sample_points(name, rng, points):
            geom = build_geometry(spec, point)
            order = geom.cf.order + 1
            for _ in range(per_point):
                f = random_gauge(rng, geom.m, order)
                ledger.add("L_connection", check_L_transform(geom, f), "gauge_L", name, point)
                residual_T, residual_S = check_TS_transform(geom, f)
                ledger.add("T", residual_T, "gauge_TS", name, point)
                ledger.add("S", residual_S, "gauge_TS", name, point)
    return ledger


def run_tractor_suite(seed: int, points: int) -> ResidualLedger:
    ledger = ResidualLedger("tractor")
    rng = np.random.default_rng(seed)
    for name in GEOMETRY_SPECS + ("heis_holo",):
        spec = resolve_spec(name)
        for point in sample_points(name, rng, points):
            geom = build_geometry(spec, point)
            n, m, order = geom.n, geom.m, geom.cf.order
            ledger.add("admissibility", admissibility_residual(geom.cf), "admissibility", name, point)
            ledger.add("ricci_traces", symmetry_residuals(geom)["ricci_traces"], "symmetry", name, point)
            signature = gram_signature(standard_frame(n, m, order))
            ledger.add("gram_signature", 0.0 if signature == (n + 1, 1) else 1.0, "tractor", name, point)
            if name == "sphere3":
                ledger.add("dsigma", dsigma_residual(geom.cf), "structure", name, point)

            s1, s2 = probe_tractors(geom, int(rng.integers(1 << 30)), 2)
            sigmas = probe_tractors(geom, int(rng.integers(1 << 30)), n + 2)
            f = random_gauge(rng, m, order)
            moved = [tractor_gauge_transform(s, f, geom) for s in (s1, s2)]
            metric_gap = tractor_metric(*moved) - tractor_metric(s1, s2)
            ledger.add("metric_invariance", metric_gap.max_abs(), "tractor", name, point)
            det_gap = (tractor_determinant([tractor_gauge_transform(s, f, geom) for s in sigmas])
                       - tractor_determinant(sigmas))
            ledger.add("determinant_invariance", det_gap.max_abs(), "tractor", name, point)

            density = density_jet(spec, point, order + 1)
            if density is not None:
                ledger.add("density_commutation", density_commutation_residual(geom, density),
                           "holonomic", name, point)
                ledger.add_many("holonomic", holonomic_residuals(density, geom), "holonomic", name, point)
                ledger.add_many("jet_functions", jet_function_residuals(density, geom), "holonomic", name, point)
    return ledger


def _commutator_size(geom: PHGeometry, seed: int) -> float:
    (sigma,) = probe_tractors(geom, seed, 1)
    worst = 0.0
    for a in range(geom.m):
        for b in range(a + 1, geom.m):
            worst = max(worst, float(np.max(np.abs(cartan_curvature_numeric(geom, sigma, a, b).values()))))
    return worst


def run_cartan_suite(seed: int, points: int) -> ResidualLedger:
    ledger = ResidualLedger("cartan")
    rng = np.random.default_rng(seed)
    sphericity_tol = settings.tolerance("sphericity")
    for name in GEOMETRY_SPECS + HIGHER_DIMENSIONAL_SPECS:
        spec = resolve_spec(name)
        for point in sample_points(name, rng, points):
            geom = build_geometry(spec, point)
            s1, s2 = probe_tractors(geom, int(rng.integers(1 << 30)), 2)
            ledger.add("metric_compatibility", metric_compatibility_residual(geom, s1, s2),
                       "compatibility", name, point)
            sigmas = probe_tractors(geom, int(rng.integers(1 << 30)), geom.n + 2)
            ledger.add("determinant_compatibility", determinant_compatibility_residual(geom, sigmas),
                       "compatibility", name, point)

            curvature = cartan_curvature_tensors(geom)
            ledger.add_many("curvature", curvature.symmetry_residuals(), "symmetry", name, point)
            (probe,) = probe_tractors(geom, int(rng.integers(1 << 30)), 1)
            gaps = curvature_discrepancy(geom, curvature, probe)
            ledger.add("formula_vs_commutator", max(gaps.values()), "curvature", name, point)
            ell_slot = max(abs(complex(cartan_curvature_numeric(geom, probe, a, b).ell.value))
                           for a in range(geom.m) for b in range(a + 1, geom.m))
            ledger.add("commutator_ell_slot", ell_slot, "curvature", name, point)

            verdict = sphericity(curvature, sphericity_tol)
            deciding = verdict.deciding_tensor
            if name in NON_SPHERICAL_SPECS:
                ledger.add(f"non_spherical.{deciding}", verdict.deciding_norm, 1e-3, name, point,
                           at_least=True)
                ledger.add("non_spherical.commutator", _commutator_size(geom, seed), 1e-3, name, point,
                           at_least=True)
                continue
            ledger.add(f"spherical.{deciding}", verdict.deciding_norm, sphericity_tol, name, point)
            f = random_gauge(rng, geom.m, geom.cf.order + 1)
            rescaled = PHGeometry(rescale(geom.cf, f))
            ledger.add(f"spherical.rescaled_{deciding}", cartan_curvature_tensors(rescaled).norms()[deciding],
                       sphericity_tol, name, point)
    return ledger


def run_fefferman_suite(seed: int, points: int) -> ResidualLedger:
    ledger = ResidualLedger("fefferman")
    rng = np.random.default_rng(seed)
    for name in GEOMETRY_SPECS + ("heis2_pert",):
        spec = resolve_spec(name)
        for point in sample_points(name, rng, points):
            geom = build_geometry(spec, point)
            cases = [(name, geom)]
            if name == "heisenberg":
                rho = Jet.variable(1, point[1], geom.m, geom.cf.order + 1) * 0.1
                cases.append(("heisenberg_rescaled", PHGeometry(rescale(geom.cf, -rho))))
                covariance = conformal_covariance_check(geom, rho)
                ledger.add("conformal.aligned", covariance["aligned"], "fefferman", name, point)
                ledger.add("conformal.lightcone", covariance["lightcone"], "fefferman", name, point)
            for label, case in cases:
                gaps = ricci_discrepancy(case)
                ledger.add("ricci.formula_vs_direct", gaps["componentwise"], "fefferman", label, point)
                ledger.add("scalar.direct", abs(gaps["scalar_direct"] - gaps["scalar_expected"]),
                           "fefferman", label, point)
                ledger.add("scalar.formula", abs(gaps["scalar_formula"] - gaps["scalar_expected"]),
                           "fefferman", label, point)
                ledger.add("not_einstein", gaps["trace_free_norm"], 1e-3, label, point, at_least=True)
            if name == "sphere3":
                metric = fefferman_metric(geom)
                expected = fefferman_sphere_expected(geom.cf)
                ledger.add("sphere.components", (metric.components - expected.components).max_abs(),
                           "fefferman", name, point)
                universe = levi_civita_ricci(einstein_universe_metric(geom.cf))
                ledger.add("einstein_universe.scalar", abs(universe.scalar - 12.0), "fefferman", name, point)
    return ledger


SUITES: Dict[str, Callable[[int, int], ResidualLedger]] = {
    "jets": run_jets_suite,
    "gauge-laws": run_gauge_suite,
    "tractor": run_tractor_suite,
    "cartan": run_cartan_suite,
    "fefferman": run_fefferman_suite,
}


def run_suite(name: str, seed: int = None, points: int = None) -> ResidualLedger:
    """Run one suite, or every suite for ``all``."""
    seed = settings.DEFAULT_SEED if seed is None else seed
    points = settings.DEFAULT_POINTS if points is None else points
    if points < 1:
        raise DomainError(f"points must be at least 1, got {points}")
    if name == "all":
        ledger = ResidualLedger("all")
        for suite in SUITES:
            ledger.extend(run_suite(suite, seed, points))
        return ledger
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; expected one of {', '.join(list(SUITES) + ['all'])}")
    logger.info("running suite %s (seed %d, %d point(s))", name, seed, points)
    ledger = SUITES[name](seed, points)
    logger.info("suite %s: %d check(s), %d failed", name, len(ledger.results), len(ledger.failed()))
    return ledger
