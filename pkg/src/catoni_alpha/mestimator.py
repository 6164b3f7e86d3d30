"""Generalized Catoni M-estimator of the mean and its deviation guarantee.

The estimate is the root of the strictly decreasing criterion

    r(theta) = 1/(beta n) * sum_i phi(beta (X_i - theta))

with ``phi`` the widest influence function. The root is found by bisection,
vectorized over rows so that Monte Carlo loops can solve many batches at once
without any row influencing another.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConditionError, DomainError, RootNotFoundError
from .influence import AlphaParams, check_alpha, phi_widest

log = logging.getLogger(__name__)

__all__ = [
    "SampleBatch",
    "EstimatorConfig",
    "Conditions",
    "DeviationReport",
    "criterion_r",
    "solve_theta_hat",
    "solve_theta_hat_rows",
    "default_tol",
    "tune_beta",
    "deviation_bound",
    "general_beta_bound",
    "check_conditions",
    "b_plus",
    "b_minus",
    "theta_plus_minus",
    "estimate",
    "plugin_v",
]

_MAX_BISECTIONS = 400
_MAX_EXPANSIONS = 64


@dataclass(frozen=True)
class SampleBatch:
    """An immutable, ordered batch of finite real samples."""

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.values, dtype=float).ravel()
        if arr.size < 1:
            raise DomainError("a sample batch needs at least one value")
        if not np.isfinite(arr).all():
            raise DomainError("sample values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return int(self.values.size)

    def mean(self) -> float:
        return float(np.mean(self.values))

    def central_moment(self, alpha: float, center: float) -> float:
        """Empirical mean of ``|X - center|**alpha``."""
        return float(np.mean(np.abs(self.values - center) ** alpha))

    def __len__(self):
        return self.n


def _values(batch: SampleBatch | Sequence[float] | np.ndarray) -> np.ndarray:
    if isinstance(batch, SampleBatch):
        return batch.values
    return SampleBatch(batch).values


def _check_epsilon(epsilon: float) -> float:
    epsilon = float(epsilon)
    if not (0.0 < epsilon < 0.5):
        raise DomainError(f"epsilon must lie in (0, 1/2), got {epsilon!r}")
    return epsilon


def _check_n(n: int) -> int:
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    return int(n)


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not (beta > 0.0) or not math.isfinite(beta):
        raise DomainError(f"beta must be finite and > 0, got {beta!r}")
    return beta


@dataclass(frozen=True)
class EstimatorConfig:
    alpha_params: AlphaParams
    n: int
    epsilon: float
    beta: float

    def __post_init__(self):
        object.__setattr__(self, "n", _check_n(self.n))
        object.__setattr__(self, "epsilon", _check_epsilon(self.epsilon))
        object.__setattr__(self, "beta", _check_beta(self.beta))

    @property
    def alpha(self) -> float:
        return self.alpha_params.alpha

    @property
    def v(self) -> float:
        return self.alpha_params.v

    @classmethod
    def tuned(cls, alpha_params: AlphaParams, n: int, epsilon: float) -> EstimatorConfig:
        return cls(alpha_params, n, epsilon, tune_beta(alpha_params, n, epsilon))


@dataclass(frozen=True)
class Conditions:
    assu_ok: bool
    exisineq_ok: bool
    exisineq2_ok: bool
    en_ok: bool

    def all_ok(self) -> bool:
        return self.assu_ok and self.exisineq_ok and self.exisineq2_ok

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DeviationReport:
    theta_hat: float
    bound: float | None
    beta_used: float
    conditions: Conditions | None


# ---------------------------------------------------------------------------
# criterion and root
# ---------------------------------------------------------------------------


def criterion_r(theta: float, batch, beta: float, alpha: float) -> float:
    """Empirical criterion ``r(theta)``; strictly decreasing in ``theta``."""
    beta = _check_beta(beta)
    x = _values(batch)
    return float(np.sum(phi_widest(beta * (x - theta), alpha)) / (beta * x.size))


def _criterion_rows(theta: np.ndarray, x: np.ndarray, beta: float, alpha: float) -> np.ndarray:
    # one theta per row; the 1/(beta n) factor is irrelevant for the sign
    t = beta * (x - theta[:, None])
    a = np.abs(t)
    return np.sum(np.sign(t) * np.log1p(a + np.power(a, alpha) / alpha), axis=1)


def default_tol(values: np.ndarray) -> np.ndarray | float:
    """``1e-10 * max(1, IQR)``, row-wise for 2-D input."""
    q75, q25 = np.percentile(values, [75, 25], axis=-1)
    return 1e-10 * np.maximum(1.0, q75 - q25)


def solve_theta_hat_rows(x, beta: float, alpha: float, tol=None) -> np.ndarray:
    """Solve ``r(theta) = 0`` independently for every row of ``x``.

    Each row is bisected on its own bracket until the bracket width drops
    below ``tol`` or floating point runs out of midpoints; finished rows
    are frozen so a row's result never depends on which other rows share the call.
    """
    alpha = check_alpha(alpha)
    beta = _check_beta(beta)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] < 1:
        raise DomainError("empty batch")
    if not np.isfinite(x).all():
        raise DomainError("sample values must be finite")
    rows = x.shape[0]
    tol = default_tol(x) if tol is None else np.broadcast_to(np.asarray(tol, dtype=float), (rows,))
    tol = np.asarray(tol, dtype=float)
    if not (tol > 0).all():
        raise DomainError("tol must be > 0")

    margin = np.full(rows, 1.0 / beta)
    lo = x.min(axis=1) - margin
    hi = x.max(axis=1) + margin
    for _ in range(_MAX_EXPANSIONS):
        bad_lo = ~(_criterion_rows(lo, x, beta, alpha) > 0)
        bad_hi = ~(_criterion_rows(hi, x, beta, alpha) < 0)
        if not (bad_lo.any() or bad_hi.any()):
            break
        margin = margin * 2.0
        lo = np.where(bad_lo, x.min(axis=1) - margin, lo)
        hi = np.where(bad_hi, x.max(axis=1) + margin, hi)
    else:
        raise RootNotFoundError("could not bracket the root of r(theta); input may overflow")

    active = np.ones(rows, dtype=bool)
    for _ in range(_MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        width = hi - lo
        done = (width <= tol) | (mid <= lo) | (mid >= hi)
        active &= ~done
        if not active.any():
            break
        idx = np.flatnonzero(active)
        r_mid = _criterion_rows(mid[idx], x[idx], beta, alpha)
        pos = r_mid > 0
        neg = r_mid < 0
        lo[idx[pos]] = mid[idx[pos]]
        hi[idx[neg]] = mid[idx[neg]]
        exact = idx[~(pos | neg)]
        lo[exact] = hi[exact] = mid[exact]
    return 0.5 * (lo + hi)


def solve_theta_hat(batch, beta: float, alpha: float, tol: float | None = None) -> float:
    """M-estimate of the mean for one batch. ``tol`` defaults to ``1e-10 * max(1, IQR)``."""
    x = _values(batch)
    return float(solve_theta_hat_rows(x[None, :], beta, alpha, tol)[0])


# ---------------------------------------------------------------------------
# tuning, bound and hypothesis conditions
# ---------------------------------------------------------------------------


def tune_beta(alpha_params: AlphaParams, n: int, epsilon: float) -> float:
    """Positive root of ``(2 beta)**(alpha-1) v = alpha log(1/eps) / (n beta)``."""
    alpha_params.require_positive_v()
    n = _check_n(n)
    epsilon = _check_epsilon(epsilon)
    a, v = alpha_params.alpha, alpha_params.v
    return 0.5 * (2.0 * a * math.log(1.0 / epsilon) / (n * v)) ** (1.0 / a)


def check_conditions(alpha_params: AlphaParams, n: int, epsilon: float, beta: float) -> Conditions:
    """Evaluate the four hypothesis inequalities; never raises on a violation."""
    n = _check_n(n)
    epsilon = _check_epsilon(epsilon)
    beta = _check_beta(beta)
    a, v = alpha_params.alpha, alpha_params.v
    L = math.log(1.0 / epsilon)

    if v > 0:
        assu_ok = n >= ((2.0 * v + 1.0) / a) ** (a / (a - 1.0)) * 2.0 * a * L / v
    else:
        assu_ok = False
    exisineq_lhs = beta**a * v
    exisineq_rhs = (a - 1.0) / 2.0**a - a * L / (2.0 ** (a - 1.0) * n)
    exisineq_ok = exisineq_lhs <= exisineq_rhs
    exisineq2_ok = (2.0 * beta) ** (a - 1.0) / a * (v + 1.0) + L / (n * beta) <= 1.0
    en_ok = epsilon < 1.0 / (3.0 * math.e) and n >= 2

    # exisineq2 says B+(m+1) <= 0, and B+(m + 1/(2 beta)) is the minimum of B+ on (m, inf)
    slack = 1e-12 * max(1.0, abs(exisineq_rhs))
    assert not exisineq2_ok or exisineq_lhs <= exisineq_rhs + slack, "exisineq2 must imply exisineq"
    return Conditions(bool(assu_ok), bool(exisineq_ok), bool(exisineq2_ok), bool(en_ok))


def _assu_error(a: float, v: float, n: int, epsilon: float) -> ConditionError:
    need = ((2.0 * v + 1.0) / a) ** (a / (a - 1.0)) * 2.0 * a * math.log(1.0 / epsilon) / v
    return ConditionError("assu", f"n = {n} but the bound needs n >= {need:.6g}")


def _bound_parts(a: float, v: float, n: int, epsilon: float) -> tuple[float, float]:
    L = math.log(1.0 / epsilon)
    numerator = 2.0 * (2.0 * a * L / n) ** ((a - 1.0) / a) * v ** (1.0 / a)
    denominator = a - (2.0 * a * L / (n * v)) ** ((a - 1.0) / a)
    return numerator, denominator


def deviation_bound(alpha_params: AlphaParams, n: int, epsilon: float) -> float:
    """Radius around the mean holding the tuned M-estimate with probability >= 1 - 2 eps.

    Raises :class:`ConditionError` when the sample-size condition ``assu``
    fails, since the denominator can then vanish or turn negative.
    """
    alpha_params.require_positive_v()
    n = _check_n(n)
    epsilon = _check_epsilon(epsilon)
    a, v = alpha_params.alpha, alpha_params.v
    beta = tune_beta(alpha_params, n, epsilon)
    if not check_conditions(alpha_params, n, epsilon, beta).assu_ok:
        raise _assu_error(a, v, n, epsilon)
    numerator, denominator = _bound_parts(a, v, n, epsilon)
    return numerator / denominator


def general_beta_bound(cfg: EstimatorConfig) -> float:
    """Deviation radius for an arbitrary beta satisfying ``exisineq2``.

    ``((2 beta)**(alpha-1) v + alpha log(1/eps)/(n beta)) / (alpha - (2 beta)**(alpha-1))``;
    coincides with :func:`deviation_bound` at the tuned beta.
    """
    a, v, beta = cfg.alpha, cfg.v, cfg.beta
    if not check_conditions(cfg.alpha_params, cfg.n, cfg.epsilon, beta).exisineq2_ok:
        raise ConditionError("exisineq2", f"beta = {beta:.6g} is too large for n = {cfg.n}")
    L = math.log(1.0 / cfg.epsilon)
    g = (2.0 * beta) ** (a - 1.0)
    return (g * v + a * L / (cfg.n * beta)) / (a - g)


# ---------------------------------------------------------------------------
# deterministic sandwich B-(theta) < r(theta) < B+(theta)
# ---------------------------------------------------------------------------


def _b_excess(theta, cfg: EstimatorConfig, m: float):
    a = cfg.alpha
    return (2.0 * cfg.beta) ** (a - 1.0) / a * (cfg.v + np.abs(m - theta) ** a) + math.log(
        1.0 / cfg.epsilon
    ) / (cfg.n * cfg.beta)


def b_plus(theta, cfg: EstimatorConfig, m: float):
    """Upper envelope: ``r(theta) < B+(theta)`` with probability >= 1 - eps."""
    return m - theta + _b_excess(theta, cfg, m)


def b_minus(theta, cfg: EstimatorConfig, m: float):
    """Lower envelope: ``r(theta) > B-(theta)`` with probability >= 1 - eps."""
    return m - theta - _b_excess(theta, cfg, m)


def _bisect(f, lo: float, hi: float, xtol: float = 1e-15) -> float:
    flo = f(lo)
    for _ in range(_MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        if hi - lo <= xtol * max(1.0, abs(mid)) or mid <= lo or mid >= hi:
            break
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def theta_plus_minus(cfg: EstimatorConfig, m: float, strict: bool = True) -> tuple[float, float]:
    """Largest root of ``B-`` and smallest root of ``B+``, as ``(theta_minus, theta_plus)``.

    ``B+`` is strictly decreasing on ``(m, m + 1/(2 beta)]`` and positive at
    ``m``, so its smallest root is the unique root there (and the mirror
    holds for ``B-``). A root exists as soon as ``exisineq`` holds; with
    ``strict`` the stronger ``exisineq2`` is required and the roots are
    checked to lie within distance 1 of ``m``.
    """
    conds = check_conditions(cfg.alpha_params, cfg.n, cfg.epsilon, cfg.beta)
    if strict and not conds.exisineq2_ok:
        raise ConditionError("exisineq2", "required for theta_+- to lie within distance 1 of m")
    if not conds.exisineq_ok:
        raise ConditionError("exisineq", "B+(theta) = 0 has no root")
    half = 1.0 / (2.0 * cfg.beta)
    right, left = m + half, m - half
    if b_plus(right, cfg, m) > 0 or b_minus(left, cfg, m) < 0:
        raise RootNotFoundError("no sign change of B+- on the monotone branch")
    if b_plus(right, cfg, m) == 0:
        theta_plus = right
    else:
        theta_plus = _bisect(lambda t: b_plus(t, cfg, m), m, right)
    if b_minus(left, cfg, m) == 0:
        theta_minus = left
    else:
        theta_minus = _bisect(lambda t: b_minus(t, cfg, m), left, m)
    if strict and not (m < theta_plus <= m + 1.0 and m - 1.0 <= theta_minus < m):
        raise RootNotFoundError("roots left [m-1, m+1] although exisineq2 holds")
    return theta_minus, theta_plus


# ---------------------------------------------------------------------------
# one-call estimation
# ---------------------------------------------------------------------------


def plugin_v(batch, alpha: float) -> float:
    """Empirical alpha-th moment about the sample median.

    Heuristic: the deviation guarantee assumes ``v`` is known, and nothing
    is guaranteed when this plug-in is used in its place.
    """
    x = _values(batch)
    return float(np.mean(np.abs(x - np.median(x)) ** check_alpha(alpha)))


def estimate(
    batch,
    alpha_params: AlphaParams,
    epsilon: float | None = None,
    beta: float | None = None,
    tol: float | None = None,
    override: bool = False,
) -> DeviationReport:
    """Estimate the mean and, when ``epsilon`` is given, its deviation radius.

    With ``epsilon`` alone beta is tuned and the closed-form radius is
    reported. With ``beta`` alone only the estimate is returned. When the
    sample-size condition fails a :class:`ConditionError` is raised unless
    ``override`` is set, in which case the unguaranteed formula value (or
    ``inf`` once the denominator is non-positive) is reported.
    """
    x = _values(batch)
    n = x.size
    if (epsilon is None) == (beta is None):
        raise DomainError("supply exactly one of epsilon or beta")
    if beta is not None:
        beta = _check_beta(beta)
        theta = solve_theta_hat(x, beta, alpha_params.alpha, tol)
        return DeviationReport(theta, None, beta, None)

    beta = tune_beta(alpha_params, n, epsilon)
    conds = check_conditions(alpha_params, n, epsilon, beta)
    if conds.assu_ok:
        bound = deviation_bound(alpha_params, n, epsilon)
    elif override:
        log.warning("condition 'assu' fails; reporting the bound formula without its guarantee")
        numerator, denominator = _bound_parts(alpha_params.alpha, alpha_params.v, n, epsilon)
        bound = numerator / denominator if denominator > 0 else math.inf
    else:
        raise _assu_error(alpha_params.alpha, alpha_params.v, n, epsilon)
    theta = solve_theta_hat(x, beta, alpha_params.alpha, tol)
    return DeviationReport(theta, bound, beta, conds)
