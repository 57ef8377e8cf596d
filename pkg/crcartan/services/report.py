"""Residual tables shared by the analyzer and the check suites."""
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from crcartan.core.config import settings

logger = logging.getLogger(__name__)

COLUMNS = ["suite", "check", "spec", "point", "residual", "tolerance", "passed"]


def format_point(point: Optional[Sequence[float]]) -> str:
    if point is None:
        return ""
    return ",".join(f"{float(x):.6g}" for x in point)


@dataclass
class CheckResult:
    """One residual against its tolerance. ``at_least`` flips the test to residual ≥ tolerance."""

    suite: str
    check: str
    spec: str
    point: str
    residual: float
    tolerance: float
    at_least: bool = False

    @property
    def passed(self) -> bool:
        if not np.isfinite(self.residual):
            return False
        if self.at_least:
            return self.residual >= self.tolerance
        return self.residual <= self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {
            "suite": self.suite,
            "check": self.check,
            "spec": self.spec,
            "point": self.point,
            "residual": float(self.residual),
            "tolerance": float(self.tolerance),
            "passed": bool(self.passed),
        }


class ResidualLedger:
    """Collects CheckResults for one suite and renders them as a DataFrame."""

    def __init__(self, suite: str):
        self.suite = suite
        self.results: List[CheckResult] = []

    def add(self, check: str, residual: float, tolerance: Union[str, float],
            spec: str = "", point: Optional[Sequence[float]] = None,
            at_least: bool = False) -> CheckResult:
        if isinstance(tolerance, str):
            tolerance = settings.tolerance(tolerance)
        result = CheckResult(
            suite=self.suite,
            check=check,
            spec=spec,
            point=format_point(point),
            residual=float(residual),
            tolerance=float(tolerance),
            at_least=at_least,
        )
        self.results.append(result)
        if not result.passed:
            logger.warning("%s/%s on %s failed: %.3e vs %.1e", self.suite, check, spec, result.residual, tolerance)
        elif not at_least and result.residual > 0.1 * result.tolerance:
            logger.warning("%s/%s on %s is near tolerance: %.3e vs %.1e",
                           self.suite, check, spec, result.residual, tolerance)
        return result

    def add_many(self, prefix: str, residuals: Dict[str, float], tolerance: Union[str, float],
                 spec: str = "", point: Optional[Sequence[float]] = None) -> None:
        for name, value in residuals.items():
            self.add(f"{prefix}.{name}", value, tolerance, spec=spec, point=point)

    def extend(self, other: "ResidualLedger") -> None:
        self.results.extend(other.results)

    def failed(self) -> List[str]:
        return [f"{r.suite}/{r.check}[{r.spec}@{r.point}]" for r in self.results if not r.passed]

    @property
    def all_passed(self) -> bool:
        return not self.failed()

    def to_records(self) -> List[Dict[str, Any]]:
        return [result.to_dict() for result in self.results]

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.to_records(), columns=COLUMNS)


def render_table(frame: pd.DataFrame) -> str:
    """Human-readable table; residuals and tolerances in scientific notation."""
    if frame.empty:
        return "(no checks)"
    view = frame.copy()
    view["residual"] = view["residual"].map(lambda x: f"{x:.3e}")
    view["tolerance"] = view["tolerance"].map(lambda x: f"{x:.1e}")
    view["passed"] = view["passed"].map(lambda ok: "ok" if ok else "FAIL")
    return view.to_string(index=False)
