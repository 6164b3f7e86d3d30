"""Truncated-loss l1 regression under a finite alpha-th moment.

The estimator minimizes the phi-truncated empirical l1 risk

    R_phi(theta) = 1/(n beta) * sum_i phi(beta |y_i - x_i . theta|)

over the ball ``|theta| <= r``. The certificate bounds the population excess
l1 risk of the minimizer with probability at least ``1 - 2 delta``.

Minimization
------------
``s -> phi(beta sqrt(s))`` is concave, so every iterate admits a quadratic
majorizer in ``theta`` whose minimizer is a weighted least-squares fit (the
same device as IRLS for least absolute deviations). Each multi-start run
takes these majorize-minimize steps with projection onto the ball and a
backtracking safeguard, then finishes with a projected compass search that
resolves the kinks where some residual is exactly zero.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate, optimize, sparse, special, stats

from .distributions import SymmetricParetoLaw
from .errors import DomainError
from .influence import check_alpha, phi_derivative, phi_widest

log = logging.getLogger(__name__)

__all__ = [
    "RegressionProblem",
    "RiskConfig",
    "ProblemMoments",
    "ExcessRiskCertificate",
    "OptimizerBudget",
    "RiskMinimum",
    "StudentTNoise",
    "ParetoNoise",
    "GaussianDesignLaw",
    "truncated_risk",
    "minimize_truncated_risk",
    "covering_number_log",
    "tune_beta_regression",
    "excess_risk_bound",
    "true_l1_risk",
    "excess_l1_risk",
    "regression_law_from_json",
]


@dataclass(frozen=True)
class RegressionProblem:
    xs: np.ndarray = field(repr=False)
    ys: np.ndarray = field(repr=False)
    radius_r: float = 1.0

    def __post_init__(self):
        xs = np.array(self.xs, dtype=float)
        if xs.ndim == 1:
            xs = xs[:, None]
        ys = np.array(self.ys, dtype=float).ravel()
        if xs.ndim != 2 or xs.shape[0] != ys.size:
            raise DomainError(f"need n x d covariates and n responses, got {xs.shape} and {ys.shape}")
        if ys.size < 1:
            raise DomainError("empty regression problem")
        if not (np.isfinite(xs).all() and np.isfinite(ys).all()):
            raise DomainError("covariates and responses must be finite")
        if not (self.radius_r > 0):
            raise DomainError("radius_r must be > 0")
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "radius_r", float(self.radius_r))

    @property
    def n(self) -> int:
        return self.ys.size

    @property
    def d(self) -> int:
        return self.xs.shape[1]

    def project(self, theta: np.ndarray) -> np.ndarray:
        norm = np.linalg.norm(theta)
        return theta if norm <= self.radius_r else theta * (self.radius_r / norm)


@dataclass(frozen=True)
class RiskConfig:
    alpha: float
    beta: float
    delta: float
    epsilon_net: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", check_alpha(self.alpha))
        if not (self.beta > 0):
            raise DomainError("beta must be > 0")
        if not (0.0 < self.delta < 0.5):
            raise DomainError("delta must lie in (0, 1/2)")
        if not (self.epsilon_net > 0):
            raise DomainError("epsilon_net must be > 0")

    @classmethod
    def tuned(cls, alpha: float, n: int, d: int, radius_r: float, delta: float, epsilon_net: float | None = None):
        """Net radius ``1/n`` by default and the matching tuned beta."""
        eps_net = 1.0 / n if epsilon_net is None else epsilon_net
        cov = covering_number_log(d, radius_r, eps_net)
        return cls(alpha, tune_beta_regression(n, cov, delta, alpha), delta, eps_net)


# ---------------------------------------------------------------------------
# risk and its minimization
# ---------------------------------------------------------------------------


def _check_theta(theta, problem: RegressionProblem) -> np.ndarray:
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.size != problem.d:
        raise DomainError(f"theta has dimension {theta.size}, problem has d = {problem.d}")
    return theta


def truncated_risk(theta, problem: RegressionProblem, beta: float, alpha: float) -> float:
    """``1/(n beta) * sum phi(beta |y_i - x_i . theta|)``."""
    if not (beta > 0):
        raise DomainError("beta must be > 0")
    theta = _check_theta(theta, problem)
    resid = np.abs(problem.ys - problem.xs @ theta)
    return float(np.sum(phi_widest(beta * resid, alpha)) / (problem.n * beta))


@dataclass(frozen=True)
class OptimizerBudget:
    n_starts: int = 8
    max_mm_steps: int = 300
    max_evals: int = 20000
    xtol: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        if self.n_starts < 1:
            raise DomainError("n_starts must be >= 1")


@dataclass(frozen=True)
class RiskMinimum:
    theta: np.ndarray
    value: float
    converged: bool
    evaluations: int
    start_values: tuple[float, ...]


class _Objective:
    def __init__(self, problem: RegressionProblem, beta: float, alpha: float, max_evals: int):
        self.p = problem
        self.beta = beta
        self.alpha = alpha
        self.scale = 1.0 / (problem.n * beta)
        self.evals = 0
        self.max_evals = max_evals

    @property
    def exhausted(self) -> bool:
        return self.evals >= self.max_evals

    def __call__(self, theta: np.ndarray) -> float:
        self.evals += 1
        t = self.beta * np.abs(self.p.ys - self.p.xs @ theta)
        return float(np.sum(np.log1p(t + np.power(t, self.alpha) / self.alpha)) * self.scale)

    def mm_target(self, theta: np.ndarray) -> np.ndarray:
        """Unconstrained minimizer of the quadratic majorizer at ``theta``."""
        resid = self.p.ys - self.p.xs @ theta
        a = np.abs(resid)
        floor = 1e-12 * max(1.0, float(np.max(a)))
        t = self.beta * np.maximum(a, floor)
        w = phi_derivative(t, self.alpha) / t
        xw = self.p.xs * w[:, None]
        gram = xw.T @ self.p.xs
        rhs = xw.T @ self.p.ys
        try:
            return np.linalg.solve(gram, rhs)
        except np.linalg.LinAlgError:
            return np.linalg.lstsq(gram, rhs, rcond=None)[0]


def _lad_start(problem: RegressionProblem) -> np.ndarray | None:
    # least absolute deviations: min sum(u + v) s.t. X theta + u - v = y
    n, d = problem.n, problem.d
    c = np.concatenate([np.zeros(d), np.ones(2 * n)])
    eye = sparse.identity(n, format="csr")
    a_eq = sparse.hstack([sparse.csr_matrix(problem.xs), eye, -eye], format="csr")
    bounds = [(None, None)] * d + [(0, None)] * (2 * n)
    res = optimize.linprog(c, A_eq=a_eq, b_eq=problem.ys, bounds=bounds, method="highs")
    if not res.success:
        return None
    return problem.project(res.x[:d])


def _random_ball(rng: np.random.Generator, d: int, radius: float) -> np.ndarray:
    g = rng.standard_normal(d)
    g /= np.linalg.norm(g)
    return g * radius * rng.random() ** (1.0 / d)


def _local_search(f: _Objective, theta: np.ndarray, budget: OptimizerBudget) -> tuple[np.ndarray, float, bool]:
    p = f.p
    value = f(theta)
    # majorize-minimize with projection and backtracking
    for _ in range(budget.max_mm_steps):
        if f.exhausted:
            break
        direction = f.mm_target(theta) - theta
        if np.linalg.norm(direction) <= budget.xtol * p.radius_r:
            break
        step = 1.0
        improved = False
        while step > 1e-6 and not f.exhausted:
            cand = p.project(theta + step * direction)
            cand_value = f(cand)
            if cand_value < value:
                improved = True
                break
            step *= 0.5
        if not improved:
            break
        moved = np.linalg.norm(cand - theta)
        theta, value = cand, cand_value
        if moved <= budget.xtol * p.radius_r:
            break

    # projected compass search over coordinate and diagonal directions
    d = p.d
    dirs = [e for e in np.eye(d)]
    if d > 1:
        dirs += [(e1 + e2) / math.sqrt(2) for i, e1 in enumerate(np.eye(d)) for e2 in np.eye(d)[i + 1 :]]
        dirs += [(e1 - e2) / math.sqrt(2) for i, e1 in enumerate(np.eye(d)) for e2 in np.eye(d)[i + 1 :]]
    dirs = dirs + [-v for v in dirs]
    h = 1e-2 * p.radius_r
    while h > budget.xtol * p.radius_r:
        if f.exhausted:
            return theta, value, False
        best, best_value = None, value
        for v in dirs:
            cand = p.project(theta + h * v)
            cv = f(cand)
            if cv < best_value:
                best, best_value = cand, cv
        if best is None:
            h *= 0.5
        else:
            theta, value = best, best_value
            h *= 2.0
            h = min(h, 1e-2 * p.radius_r)
    return theta, value, True


def minimize_truncated_risk(
    problem: RegressionProblem, cfg: RiskConfig, budget: OptimizerBudget | None = None
) -> RiskMinimum:
    """Multi-start minimization of the truncated risk over the radius-r ball.

    Starts: the origin, the projected least-absolute-deviations fit, and
    random points of the ball drawn from ``budget.seed``. If the evaluation
    budget runs out, the best point found is returned with
    ``converged=False`` and a warning is logged.
    """
    budget = budget or OptimizerBudget()
    f = _Objective(problem, cfg.beta, cfg.alpha, budget.max_evals)
    rng = np.random.default_rng(budget.seed)
    starts = [np.zeros(problem.d)]
    lad = _lad_start(problem)
    if lad is not None:
        starts.append(lad)
    while len(starts) < budget.n_starts:
        starts.append(_random_ball(rng, problem.d, problem.radius_r))

    best_theta, best_value, converged = None, math.inf, True
    values = []
    for start in starts:
        theta, value, ok = _local_search(f, problem.project(start), budget)
        converged &= ok
        values.append(value)
        if value < best_value:
            best_theta, best_value = theta, value
    if not converged:
        log.warning("optimizer budget of %d evaluations exhausted; returning best point found", budget.max_evals)
    return RiskMinimum(best_theta, best_value, converged, f.evals, tuple(values))


# ---------------------------------------------------------------------------
# covering numbers, tuning and the certificate
# ---------------------------------------------------------------------------


def covering_number_log(d: int, radius_r: float, epsilon_net: float) -> float:
    """``d * log(6 r / eps)``, an upper bound on the log covering number of the radius-r ball."""
    if int(d) != d or d < 1:
        raise DomainError("d must be a positive integer")
    if not (radius_r > 0) or not (epsilon_net > 0):
        raise DomainError("radius_r and epsilon_net must be > 0")
    return d * math.log(6.0 * radius_r / epsilon_net)


def tune_beta_regression(n: int, covering_log: float, delta: float, alpha: float) -> float:
    """``((log N + 2 log(1/delta)) / n)**(1/alpha)``."""
    alpha = check_alpha(alpha)
    if not (0.0 < delta < 0.5):
        raise DomainError("delta must lie in (0, 1/2)")
    if not math.isfinite(covering_log):
        raise DomainError("covering_log must be finite")
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    return ((covering_log + 2.0 * math.log(1.0 / delta)) / n) ** (1.0 / alpha)


@dataclass(frozen=True)
class ProblemMoments:
    """Population quantities entering the certificate.

    ``E_abs_x`` and ``E_abs_x_alpha`` are moments of the Euclidean norm of
    the covariate; ``sup_R_alpha`` bounds the l_alpha risk over the ball.
    ``source`` records whether the values are exact, upper bounds, or
    holdout estimates.
    """

    E_abs_x: float
    E_abs_x_alpha: float
    sup_R_alpha: float
    source: str = "analytic"

    def __post_init__(self):
        for name in ("E_abs_x", "E_abs_x_alpha", "sup_R_alpha"):
            value = getattr(self, name)
            if value is None or not math.isfinite(value) or value < 0:
                raise DomainError(f"moment {name} is missing or invalid: {value!r}")


@dataclass
class ExcessRiskCertificate:
    bound_value: float
    components: dict
    covering_log: float
    beta: float
    epsilon_net: float
    failure_budget: float
    theta_hat: list | None = None
    moments_source: str = "analytic"

    def to_json(self) -> dict:
        return asdict(self)


def excess_risk_bound(
    moments: ProblemMoments, cfg: RiskConfig, n: int, d: int, radius_r: float
) -> ExcessRiskCertificate:
    """Excess l1 risk bound holding with probability at least ``1 - 2 delta``.

    With ``T = (log(N / delta**2) / n)**((alpha-1)/alpha)`` and ``log N`` the
    covering bound at net radius ``eps``:

        net_term    = 2 eps E|x|
        moment_term = (2**(alpha-1) eps**alpha / alpha E|x|**alpha
                       + (2**(alpha-1) + 1) / alpha sup R_alpha) * T
        log_term    = T

    The certificate uses ``cfg.epsilon_net`` (``1/n`` when built through
    :meth:`RiskConfig.tuned`) and reports the beta that matches it; ``cfg.beta``
    does not enter the formula.
    """
    if moments is None:
        raise DomainError("moments are required")
    a = cfg.alpha
    eps = cfg.epsilon_net
    cov = covering_number_log(d, radius_r, eps)
    log_ratio = cov + 2.0 * math.log(1.0 / cfg.delta)
    if log_ratio <= 0:
        raise DomainError("log(N / delta^2) must be positive")
    t = (log_ratio / n) ** ((a - 1.0) / a)
    net_term = 2.0 * eps * moments.E_abs_x
    moment_term = (
        2.0 ** (a - 1.0) * eps**a / a * moments.E_abs_x_alpha + (2.0 ** (a - 1.0) + 1.0) / a * moments.sup_R_alpha
    ) * t
    log_term = t
    return ExcessRiskCertificate(
        bound_value=net_term + moment_term + log_term,
        components={"net_term": net_term, "moment_term": moment_term, "log_term": log_term},
        covering_log=cov,
        beta=tune_beta_regression(n, cov, cfg.delta, a),
        epsilon_net=eps,
        failure_budget=2.0 * cfg.delta,
        moments_source=moments.source,
    )


# ---------------------------------------------------------------------------
# synthetic populations with known risk
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StudentTNoise:
    """Scaled Student-t noise; ``E|Z|**p`` is finite for ``p < df``."""

    df: float
    scale: float = 1.0

    def sample(self, rng: np.random.Generator, size):
        return self.scale * rng.standard_t(self.df, size)

    def abs_moment(self, p: float) -> float:
        nu = self.df
        if p >= nu:
            raise DomainError(f"E|Z|^{p} diverges for {nu} degrees of freedom")
        log_m = (
            0.5 * p * math.log(nu)
            + special.gammaln((p + 1) / 2)
            + special.gammaln((nu - p) / 2)
            - 0.5 * math.log(math.pi)
            - special.gammaln(nu / 2)
        )
        return self.scale**p * math.exp(log_m)

    def density(self, z):
        return stats.t.pdf(z, self.df, scale=self.scale)

    @property
    def support_start(self) -> float:
        return 0.0

    def to_json(self) -> dict:
        return {"kind": "student_t", "df": self.df, "scale": self.scale}


@dataclass(frozen=True)
class ParetoNoise:
    """Scaled symmetric Pareto noise with ``E|Z|**alpha = scale**alpha``."""

    alpha: float
    scale: float = 1.0

    @property
    def law(self) -> SymmetricParetoLaw:
        return SymmetricParetoLaw(self.alpha)

    def sample(self, rng: np.random.Generator, size):
        return self.scale * self.law.sample(rng, size)

    def abs_moment(self, p: float) -> float:
        k, s = self.law.shape, self.law.scale
        if p >= k:
            raise DomainError(f"E|Z|^{p} diverges for tail exponent {k}")
        return self.scale**p * k * s**p / (k - p)

    def density(self, z):
        return self.law.pdf(np.asarray(z) / self.scale) / self.scale

    @property
    def support_start(self) -> float:
        return self.scale * self.law.scale

    def to_json(self) -> dict:
        return {"kind": "symmetric_pareto", "alpha": self.alpha, "scale": self.scale}


def _noise_from_json(spec: dict):
    kind = spec.get("kind")
    if kind == "student_t":
        return StudentTNoise(float(spec["df"]), float(spec.get("scale", 1.0)))
    if kind == "symmetric_pareto":
        return ParetoNoise(float(spec["alpha"]), float(spec.get("scale", 1.0)))
    raise DomainError(f"unknown noise kind {kind!r}")


def _chi_moment(d: int, p: float) -> float:
    # E|x|^p for x ~ N(0, I_d)
    return math.exp(0.5 * p * math.log(2.0) + special.gammaln((d + p) / 2) - special.gammaln(d / 2))


def _gauss_abs_moment(p: float) -> float:
    return 2.0 ** (p / 2) * math.exp(special.gammaln((p + 1) / 2)) / math.sqrt(math.pi)


@dataclass(frozen=True)
class GaussianDesignLaw:
    """``x ~ N(0, I_d)``, ``y = x . theta_star + Z`` with symmetric noise ``Z`` independent of ``x``."""

    theta_star: tuple
    noise: StudentTNoise | ParetoNoise

    def __post_init__(self):
        object.__setattr__(self, "theta_star", tuple(float(t) for t in np.ravel(self.theta_star)))

    @property
    def d(self) -> int:
        return len(self.theta_star)

    def sample(self, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
        xs = rng.standard_normal((n, self.d))
        ys = xs @ np.asarray(self.theta_star) + self.noise.sample(rng, n)
        return xs, ys

    def problem(self, rng: np.random.Generator, n: int, radius_r: float) -> RegressionProblem:
        xs, ys = self.sample(rng, n)
        return RegressionProblem(xs, ys, radius_r)

    def moments(self, alpha: float, radius_r: float) -> ProblemMoments:
        """Exact covariate moments and an upper bound on the l_alpha risk over the ball.

        ``y - x . theta = Z + |theta_star - theta| G`` with ``G`` standard
        normal, so ``R_alpha(theta) <= 2**(alpha-1) (E|Z|**alpha + E|G|**alpha |theta_star - theta|**alpha)``
        and ``|theta_star - theta| <= r + |theta_star|`` on the ball.
        """
        far = radius_r + float(np.linalg.norm(self.theta_star))
        sup_r = 2.0 ** (alpha - 1.0) * (self.noise.abs_moment(alpha) + _gauss_abs_moment(alpha) * far**alpha)
        return ProblemMoments(_chi_moment(self.d, 1.0), _chi_moment(self.d, alpha), sup_r, "analytic, sup_R_alpha upper bound")

    def l_alpha_risk_star(self, alpha: float) -> float:
        """``R_alpha(theta_star) = E|Z|**alpha``."""
        return self.noise.abs_moment(alpha)

    def l1_risk(self, theta) -> float:
        """Population l1 risk by one-dimensional quadrature.

        With ``s = |theta - theta_star|``, ``E|z + sG| - |z| = 2 s pdf(z/s) - 2 z cdf(-z/s)``
        for ``z >= 0``; integrating that Gaussian-tailed excess against the
        noise density and adding ``E|Z|`` gives the risk.
        """
        s = float(np.linalg.norm(np.asarray(theta, dtype=float) - np.asarray(self.theta_star)))
        base = self.noise.abs_moment(1.0)
        if s == 0.0:
            return base

        def excess(z):
            u = z / s
            return 2.0 * s * stats.norm.pdf(u) - 2.0 * z * stats.norm.sf(u)

        lo = self.noise.support_start
        hi = lo + 40.0 * s
        val, _ = integrate.quad(
            lambda z: excess(z) * self.noise.density(z), lo, hi, limit=200, epsabs=1e-13, epsrel=1e-11
        )
        return base + 2.0 * val

    def to_json(self) -> dict:
        return {"kind": "gaussian_design", "theta_star": list(self.theta_star), "noise": self.noise.to_json()}


def regression_law_from_json(spec: dict) -> GaussianDesignLaw:
    if spec.get("kind") != "gaussian_design":
        raise DomainError(f"unknown regression law kind {spec.get('kind')!r}")
    try:
        return GaussianDesignLaw(tuple(spec["theta_star"]), _noise_from_json(spec["noise"]))
    except KeyError as exc:
        raise DomainError(f"regression law is missing field {exc.args[0]!r}") from None


@dataclass(frozen=True)
class RiskEstimate:
    value: np.ndarray
    stderr: np.ndarray


def true_l1_risk(theta, law: GaussianDesignLaw, n_mc: int | None = None, seed: int = 0) -> RiskEstimate:
    """Population l1 risk ``E|x . theta - y|`` for one or several ``theta`` rows.

    ``n_mc=None`` uses quadrature (standard error 0). Otherwise all rows are
    evaluated on the same ``n_mc`` draws, so differences between rows carry
    common-random-number accuracy.
    """
    thetas = np.atleast_2d(np.asarray(theta, dtype=float))
    if n_mc is None:
        vals = np.array([law.l1_risk(t) for t in thetas])
        return RiskEstimate(vals, np.zeros_like(vals))
    rng = np.random.default_rng(seed)
    xs, ys = law.sample(rng, n_mc)
    losses = np.abs(xs @ thetas.T - ys[:, None])
    return RiskEstimate(losses.mean(axis=0), losses.std(axis=0, ddof=1) / math.sqrt(n_mc))


def excess_l1_risk(theta_hat, law: GaussianDesignLaw, n_mc: int | None = None, seed: int = 0) -> RiskEstimate:
    """``R(theta_hat) - R(theta_star)``; the Monte Carlo version differences per draw."""
    theta_hat = np.asarray(theta_hat, dtype=float)
    if n_mc is None:
        value = law.l1_risk(theta_hat) - law.l1_risk(law.theta_star)
        return RiskEstimate(np.array(value), np.array(0.0))
    rng = np.random.default_rng(seed)
    xs, ys = law.sample(rng, n_mc)
    diff = np.abs(xs @ theta_hat - ys) - np.abs(xs @ np.asarray(law.theta_star) - ys)
    return RiskEstimate(np.array(diff.mean()), np.array(diff.std(ddof=1) / math.sqrt(n_mc)))
