"""Deterministic Monte Carlo validation of the deviation guarantees.

Trial ``i`` of a run with master seed ``s`` draws from its own counter-based
stream (Philox keyed by ``SeedSequence((s, i))``). Trials are grouped into
fixed-size chunks, chunk results are integer counts, and counts are summed in
chunk order, so the output does not depend on how many workers ran.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bounds import empirical_mean_lower, empirical_mean_upper
from .distributions import Law, SymmetricParetoLaw, WorstCaseLaw
from .errors import ConditionError, DomainError
from .influence import AlphaParams
from .mestimator import check_conditions, deviation_bound, solve_theta_hat_rows, tune_beta

__all__ = ["trial_rng", "draw_batches", "run_chunked", "Rate", "SimulationResult", "simulate_mean_estimation"]

CHUNK = 256


def trial_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((int(seed), int(index)))))


def draw_batches(law, n: int, seed: int, start: int, stop: int) -> np.ndarray:
    """Rows ``start..stop-1``, each ``n`` draws from that trial's own stream."""
    return np.stack([law.sample(trial_rng(seed, i), n) for i in range(start, stop)])


def run_chunked(chunk_fn, trials: int, workers: int = 1, chunk: int = CHUNK) -> list:
    """Apply ``chunk_fn(start, stop)`` over fixed chunks, results in chunk order."""
    if trials < 1:
        raise DomainError("trials must be >= 1")
    spans = [(a, min(a + chunk, trials)) for a in range(0, trials, chunk)]
    if workers <= 1:
        return [chunk_fn(a, b) for a, b in spans]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda ab: chunk_fn(*ab), spans))


@dataclass(frozen=True)
class Rate:
    count: int
    trials: int

    @property
    def rate(self) -> float:
        return self.count / self.trials

    @property
    def stderr(self) -> float:
        p = self.rate
        return math.sqrt(p * (1.0 - p) / self.trials)

    def as_dict(self) -> dict:
        return {"rate": self.rate, "stderr": self.stderr, "count": self.count, "trials": self.trials}


@dataclass(frozen=True)
class SimulationResult:
    law: dict
    n: int
    epsilon: float
    trials: int
    seed: int
    beta: float
    m_estimator_bound: float | None
    empirical_upper: float
    empirical_lower: float | None
    coverage_mestimator: Rate | None
    coverage_empirical_upper: Rate
    hit_rate_lower: Rate | None

    def to_json(self) -> dict:
        def rate(r):
            return None if r is None else r.as_dict()

        return {
            "law": self.law,
            "n": self.n,
            "epsilon": self.epsilon,
            "trials": self.trials,
            "seed": self.seed,
            "beta": self.beta,
            "m_estimator_bound": self.m_estimator_bound,
            "empirical_upper": self.empirical_upper,
            "empirical_lower": self.empirical_lower,
            "coverage_mestimator": rate(self.coverage_mestimator),
            "coverage_empirical_upper": rate(self.coverage_empirical_upper),
            "hit_rate_lower": rate(self.hit_rate_lower),
        }


def _law_params(law: Law) -> tuple[float, float, float]:
    if isinstance(law, SymmetricParetoLaw):
        return law.alpha, 1.0, 0.0
    if isinstance(law, WorstCaseLaw):
        return law.alpha, law.v, 0.0
    raise DomainError(f"unsupported law {type(law).__name__}")


def simulate_mean_estimation(
    law: Law, n: int, epsilon: float, trials: int, seed: int, workers: int = 1
) -> SimulationResult:
    """Exceedance frequencies of the three radii over independent trials.

    * ``coverage_mestimator``: ``|theta_hat - m| >= M-estimator radius`` (at most 2 eps in theory)
    * ``coverage_empirical_upper``: ``|mean - m| >= upper radius`` (at most 2 eps)
    * ``hit_rate_lower``: ``|mean - m| >= lower radius``; at least 2 eps for the worst-case law built on that radius

    Radii whose hypothesis fails are reported as ``None``.
    """
    alpha, v, m = _law_params(law)
    params = AlphaParams(alpha, v)
    beta = tune_beta(params, n, epsilon)
    try:
        mest = deviation_bound(params, n, epsilon)
    except ConditionError:
        mest = None
    upper = empirical_mean_upper(alpha, v, n, epsilon)
    lower = empirical_mean_lower(alpha, v, n, epsilon) if check_conditions(params, n, epsilon, beta).en_ok else None

    def chunk_fn(start: int, stop: int) -> tuple[int, int, int]:
        x = draw_batches(law, n, seed, start, stop)
        dev_mean = np.abs(x.mean(axis=1) - m)
        c_up = int(np.count_nonzero(dev_mean >= upper))
        c_low = int(np.count_nonzero(dev_mean >= lower)) if lower is not None else 0
        c_m = 0
        if mest is not None:
            theta = solve_theta_hat_rows(x, beta, alpha)
            c_m = int(np.count_nonzero(np.abs(theta - m) >= mest))
        return c_m, c_up, c_low

    counts = run_chunked(chunk_fn, trials, workers)
    c_m, c_up, c_low = (sum(c[k] for c in counts) for k in range(3))
    return SimulationResult(
        law=law.to_json(),
        n=int(n),
        epsilon=float(epsilon),
        trials=int(trials),
        seed=int(seed),
        beta=beta,
        m_estimator_bound=mest,
        empirical_upper=upper,
        empirical_lower=lower,
        coverage_mestimator=None if mest is None else Rate(c_m, trials),
        coverage_empirical_upper=Rate(c_up, trials),
        hit_rate_lower=None if lower is None else Rate(c_low, trials),
    )
