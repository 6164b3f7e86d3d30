"""Deviation bounds for the empirical mean and the bound-comparison table.

The table rows put three radii side by side over a grid of confidence
levels: the M-estimator radius, the generic upper radius of the empirical
mean, and the radius the empirical mean provably exceeds for a worst-case law.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConditionError, DomainError
from .influence import AlphaParams, check_alpha
from .mestimator import check_conditions, deviation_bound, tune_beta

__all__ = [
    "EpsilonGrid",
    "BoundRow",
    "BoundReport",
    "empirical_mean_upper",
    "empirical_mean_lower",
    "figure_curves",
    "REFERENCE_RUNS",
]

CSV_HEADER = ("epsilon", "m_estimator_bound", "empirical_upper", "empirical_lower")


def fmt17(x: float) -> str:
    """Round-trip formatting with 17 significant digits."""
    return f"{x:.17g}"


@dataclass(frozen=True)
class EpsilonGrid:
    """Inclusive grid ``start:step:end``."""

    start: float
    step: float
    end: float

    def __post_init__(self):
        if not (self.start > 0):
            raise DomainError("grid start must be > 0")
        if not (self.step > 0):
            raise DomainError("grid step must be > 0")
        if self.end < self.start:
            raise DomainError(f"grid end {self.end} precedes start {self.start}")

    @classmethod
    def parse(cls, text: str) -> EpsilonGrid:
        """Parse ``"a:b:c"`` (start, step, end) or a single value."""
        parts = text.strip().split(":")
        try:
            values = [float(p) for p in parts]
        except ValueError:
            raise DomainError(f"cannot parse epsilon grid {text!r}") from None
        if len(values) == 1:
            return cls(values[0], 1.0, values[0])
        if len(values) != 3:
            raise DomainError(f"expected start:step:end, got {text!r}")
        return cls(*values)

    def points(self) -> np.ndarray:
        # last point is the largest start + k*step <= end + step/2
        count = int(math.floor((self.end - self.start) / self.step + 0.5)) + 1
        k = np.arange(count)
        raw = self.start + k * self.step
        # drop representation noise such as 0.001 + 2*0.001 = 0.0030000000000000001
        return np.array([float(f"{x:.12g}") for x in raw])

    def __len__(self):
        return len(self.points())


def _check_common(alpha: float, v: float, n: int, epsilon: float) -> tuple[float, float, int, float]:
    alpha = check_alpha(alpha)
    if not (v > 0):
        raise DomainError("v must be > 0")
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    if not (0.0 < epsilon < 0.5):
        raise DomainError(f"epsilon must lie in (0, 1/2), got {epsilon!r}")
    return alpha, float(v), int(n), float(epsilon)


def empirical_mean_upper(alpha: float, v: float, n: int, epsilon: float) -> float:
    """``(v / (eps n**(alpha-1)))**(1/alpha)``; ``P(|mean - m| >= radius) <= 2 eps``."""
    alpha, v, n, epsilon = _check_common(alpha, v, n, epsilon)
    return (v / (epsilon * n ** (alpha - 1.0))) ** (1.0 / alpha)


def empirical_mean_lower(alpha: float, v: float, n: int, epsilon: float) -> float:
    """Radius exceeded with probability >= 2 eps by the worst-case law built on it.

    Requires ``eps < 1/(3e)`` and ``n >= 2``.
    """
    alpha, v, n, epsilon = _check_common(alpha, v, n, epsilon)
    if not (epsilon < 1.0 / (3.0 * math.e) and n >= 2):
        raise ConditionError("en", f"need eps < 1/(3e) and n >= 2, got eps = {epsilon}, n = {n}")
    shrink = math.exp((n - 1) / alpha * math.log1p(-3.0 * math.e * epsilon / n))
    return (v / (3.0 * n ** (alpha - 1.0) * epsilon)) ** (1.0 / alpha) * shrink


@dataclass(frozen=True)
class BoundRow:
    epsilon: float
    m_estimator_bound: float
    empirical_upper: float
    empirical_lower: float


@dataclass(frozen=True)
class BoundReport:
    alpha: float
    v: float
    n: int
    rows: tuple[BoundRow, ...]

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    def first_crossing(self) -> BoundRow | None:
        """First row (ascending eps) where the M-estimator radius is below the lower radius."""
        for row in self.rows:
            if row.m_estimator_bound < row.empirical_lower:
                return row
        return None

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in self.rows:
            writer.writerow(
                [fmt17(r.epsilon), fmt17(r.m_estimator_bound), fmt17(r.empirical_upper), fmt17(r.empirical_lower)]
            )
        return buf.getvalue()


def figure_curves(alpha: float, v: float, n: int, grid: EpsilonGrid) -> BoundReport:
    """Evaluate the three radii at every grid point, ascending in eps.

    Every point must satisfy both the sample-size condition of the
    M-estimator bound and the condition of the lower bound; the first
    offending eps is named in the raised :class:`ConditionError`.
    """
    params = AlphaParams(alpha, v)
    params.require_positive_v()
    rows = []
    for eps in grid.points():
        eps = float(eps)
        _check_common(alpha, v, n, eps)
        conds = check_conditions(params, n, eps, tune_beta(params, n, eps))
        if not conds.assu_ok:
            raise ConditionError("assu", f"fails at grid point eps = {eps} for n = {n}")
        if not conds.en_ok:
            raise ConditionError("en", f"fails at grid point eps = {eps} for n = {n}")
        rows.append(
            BoundRow(
                eps,
                deviation_bound(params, n, eps),
                empirical_mean_upper(alpha, v, n, eps),
                empirical_mean_lower(alpha, v, n, eps),
            )
        )
    return BoundReport(params.alpha, params.v, int(n), tuple(rows))


# (alpha, eps grid, n) of the four reference comparison runs, all with v = 1
REFERENCE_RUNS = (
    (1.9, "0.001:0.001:0.08", 500),
    (1.8, "0.001:0.001:0.08", 500),
    (1.5, "0.001:0.001:0.08", 500),
    (1.2, "0.01:0.001:0.08", 3000),
)
