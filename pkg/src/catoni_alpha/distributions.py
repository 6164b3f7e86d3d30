"""Heavy-tailed laws with closed-form tails.

``SymmetricParetoLaw``
    Two mirrored Pareto tails with shape ``(2 + alpha)/2`` and scale
    ``((2 + alpha)/(2 - alpha))**(-1/alpha)``: mean 0, ``E|X|**alpha = 1``,
    infinite variance.

``WorstCaseLaw``
    Atoms at ``0`` and ``+-n*eta`` plus two Pareto tails of exponent ``gamma``
    beyond ``+-p``. It has mean 0 and ``E|X|**alpha = v`` while the empirical
    mean of ``n`` draws lands exactly on ``+-eta`` with non-negligible
    probability.

Both samplers are exact inverse-CDF maps of one uniform per draw, taken from
the open interval (0, 1) so that the unbounded tails never produce infinities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError
from .influence import check_alpha

__all__ = [
    "SymmetricParetoLaw",
    "WorstCaseLaw",
    "MomentCheck",
    "open_uniform",
    "sample_pareto",
    "sample_worstcase",
    "verify_moments",
    "law_from_json",
]

_TWO53 = float(2**53)


def open_uniform(rng: np.random.Generator, size=None):
    """Uniform draws on the open interval (0, 1) with 53-bit resolution."""
    k = rng.integers(0, 2**53, size=size, dtype=np.int64)
    return (k + 0.5) / _TWO53


@dataclass(frozen=True)
class SymmetricParetoLaw:
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", check_alpha(self.alpha))

    @property
    def shape(self) -> float:
        return (2.0 + self.alpha) / 2.0

    @property
    def scale(self) -> float:
        a = self.alpha
        return ((2.0 + a) / (2.0 - a)) ** (-1.0 / a)

    @property
    def mean(self) -> float:
        return 0.0

    @property
    def v(self) -> float:
        return 1.0

    def tail_constant(self) -> float:
        """``c`` in ``P(X >= x) = c * x**(-shape)`` for ``x >= scale``."""
        a = self.alpha
        return 0.5 * ((2.0 + a) / (2.0 - a)) ** (-(2.0 + a) / (2.0 * a))

    def survival(self, x):
        """``P(X >= x)``."""
        x = np.asarray(x, dtype=float)
        s, k = self.scale, self.shape
        right = 0.5 * np.power(np.maximum(x, s) / s, -k)
        left = 1.0 - 0.5 * np.power(np.maximum(-x, s) / s, -k)
        out = np.where(x >= s, right, np.where(x <= -s, left, 0.5))
        return out if out.ndim else float(out)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        s, k = self.scale, self.shape
        left = 0.5 * np.power(np.maximum(-x, s) / s, -k)
        right = 1.0 - 0.5 * np.power(np.maximum(x, s) / s, -k)
        out = np.where(x <= -s, left, np.where(x >= s, right, 0.5))
        return out if out.ndim else float(out)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        s, k = self.scale, self.shape
        lower = np.minimum(u, 1.0 - u)
        mag = s * np.power(2.0 * lower, -1.0 / k)
        out = np.where(u < 0.5, -mag, mag)
        return out if out.ndim else float(out)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        s, k = self.scale, self.shape
        t = np.abs(x)
        out = np.where(t >= s, 0.5 * k / s * np.power(np.maximum(t, s) / s, -k - 1.0), 0.0)
        return out if out.ndim else float(out)

    def sample(self, rng: np.random.Generator, size=None):
        return self.ppf(open_uniform(rng, size))

    def to_json(self) -> dict:
        return {"kind": "symmetric_pareto", "alpha": self.alpha}


@dataclass(frozen=True)
class WorstCaseLaw:
    alpha: float
    v: float
    n: int
    eta: float
    gamma: float | None = None

    def __post_init__(self):
        a = check_alpha(self.alpha)
        object.__setattr__(self, "alpha", a)
        if not (self.v > 0) or not math.isfinite(self.v):
            raise DomainError("v must be finite and > 0")
        object.__setattr__(self, "v", float(self.v))
        if int(self.n) != self.n or self.n < 2:
            raise DomainError("n must be an integer >= 2")
        object.__setattr__(self, "n", int(self.n))
        if not (self.eta > 0) or not math.isfinite(self.eta):
            raise DomainError("eta must be finite and > 0")
        object.__setattr__(self, "eta", float(self.eta))
        g = (a + 2.0) / 2.0 if self.gamma is None else float(self.gamma)
        if not (a < g < 2.0):
            raise DomainError(f"gamma must lie in (alpha, 2) = ({a}, 2), got {g}")
        object.__setattr__(self, "gamma", g)
        if self.budget > 1.0:
            raise DomainError(
                f"v / (n eta)**alpha = {self.budget:.6g} exceeds 1; eta is too small for this v and n"
            )

    @property
    def atom(self) -> float:
        """Location ``n * eta`` of the two outer atoms."""
        return self.n * self.eta

    @property
    def budget(self) -> float:
        """Total mass ``v / (n eta)**alpha`` placed away from zero."""
        return self.v / self.atom**self.alpha

    @property
    def p(self) -> float:
        a, g = self.alpha, self.gamma
        return ((g - a) / g) ** (1.0 / a) * self.atom

    @property
    def q(self) -> float:
        a, g = self.alpha, self.gamma
        return g * self.v / 3.0 * ((g - a) / g) ** (g / a) * self.atom ** (g - a)

    @property
    def mean(self) -> float:
        return 0.0

    def masses(self) -> dict[str, float]:
        """Closed-form masses of the five pieces."""
        w = self.budget
        tail = self.q / (2.0 * self.gamma) * self.p ** (-self.gamma)
        return {
            "zero": 1.0 - w,
            "plus_atom": w / 3.0,
            "minus_atom": w / 3.0,
            "right_tail": tail,
            "left_tail": tail,
        }

    def _bands(self):
        # cumulative mass boundaries in the order values increase
        w = self.budget
        tail = w / 6.0
        t_out = tail * (self.atom / self.p) ** (-self.gamma)  # tail mass beyond the atom
        b1 = t_out
        b2 = b1 + w / 3.0
        b3 = tail + w / 3.0  # = w / 2
        b4 = b3 + (1.0 - w)
        b5 = b4 + (tail - t_out)
        b6 = b5 + w / 3.0
        return tail, b1, b2, b3, b4, b5, b6

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        w, p, g, A = self.budget, self.p, self.gamma, self.atom
        tail = w / 6.0
        ax = np.abs(x)
        beyond = tail * np.power(np.maximum(ax, p) / p, -g)  # tail mass with |X| > |x|
        left = beyond + np.where(x >= -A, w / 3.0, 0.0)
        right = 1.0 - beyond - np.where(x < A, w / 3.0, 0.0)
        mid = np.where(x < 0, w / 2.0, 1.0 - w / 2.0)
        out = np.where(x < -p, left, np.where(x >= p, right, mid))
        return out if out.ndim else float(out)

    def ppf(self, u):
        """Generalized inverse ``inf{x : F(x) >= u}``."""
        u = np.asarray(u, dtype=float)
        tail, b1, b2, b3, b4, b5, b6 = self._bands()
        w, p, g, A = self.budget, self.p, self.gamma, self.atom

        def tail_x(mass_beyond):
            return p * np.power(np.clip(mass_beyond, 1e-300, None) / tail, -1.0 / g)

        out = np.select(
            [u <= b1, u <= b2, u <= b3, u <= b4, u <= b5, u <= b6],
            [
                -tail_x(u),
                np.full_like(u, -A),
                -tail_x(u - w / 3.0),
                np.zeros_like(u),
                tail_x(tail - (u - b4)),
                np.full_like(u, A),
            ],
            default=tail_x(1.0 - u),
        )
        return out if out.ndim else float(out)

    def sample(self, rng: np.random.Generator, size=None):
        return self.ppf(open_uniform(rng, size))

    def to_json(self) -> dict:
        return {
            "kind": "worst_case",
            "alpha": self.alpha,
            "v": self.v,
            "n": self.n,
            "eta": self.eta,
            "gamma": self.gamma,
        }


Law = Union[SymmetricParetoLaw, WorstCaseLaw]


def sample_pareto(law: SymmetricParetoLaw, rng: np.random.Generator, size=None):
    return law.sample(rng, size)


def sample_worstcase(law: WorstCaseLaw, rng: np.random.Generator, size=None):
    return law.sample(rng, size)


@dataclass(frozen=True)
class MomentCheck:
    mean: float
    alpha_moment: float
    mean_err: float
    alpha_moment_err: float


def verify_moments(law: Law, alpha: float | None = None, center: float = 0.0) -> MomentCheck:
    """Semi-analytic ``E X`` and ``E|X - center|**alpha`` against ``(0, v)``.

    Atoms are summed exactly and each Pareto tail is integrated in closed
    form; ``center`` must be 0 for the tail integrals to stay closed-form.
    """
    alpha = law.alpha if alpha is None else float(alpha)
    if center != 0.0:
        raise DomainError("closed-form tail integrals need center = 0")
    if isinstance(law, SymmetricParetoLaw):
        k, s = law.shape, law.scale
        if k <= alpha:
            raise DomainError(f"E|X|^{alpha} diverges for tail exponent {k}")
        # each tail: mass 1/2, Pareto(k, s) magnitude
        side_mean = 0.5 * k * s / (k - 1.0)
        mean = side_mean - side_mean
        moment = k * s**alpha / (k - alpha)
        target_v = law.v
    elif isinstance(law, WorstCaseLaw):
        g, p, q, A = law.gamma, law.p, law.q, law.atom
        if g <= alpha:
            raise DomainError(f"E|X|^{alpha} diverges for tail exponent gamma = {g}")
        w = law.budget
        # tail density on each side is (q/2) x**(-g-1) for x > p
        side_tail_mean = 0.5 * q * p ** (1.0 - g) / (g - 1.0)
        mean = (A * w / 3.0 + side_tail_mean) - (A * w / 3.0 + side_tail_mean)
        moment = 2.0 * (w / 3.0) * A**alpha + q * p ** (alpha - g) / (g - alpha)
        target_v = law.v
    else:
        raise TypeError(f"unsupported law {type(law).__name__}")
    return MomentCheck(mean, moment, mean - 0.0, moment - target_v)


def law_from_json(spec: dict) -> Law:
    """Build a law from ``{"kind": "symmetric_pareto" | "worst_case", ...}``."""
    kind = spec.get("kind")
    try:
        if kind == "symmetric_pareto":
            return SymmetricParetoLaw(float(spec["alpha"]))
        if kind == "worst_case":
            gamma = spec.get("gamma")
            return WorstCaseLaw(
                float(spec["alpha"]),
                float(spec["v"]),
                int(spec["n"]),
                float(spec["eta"]),
                None if gamma is None else float(gamma),
            )
    except KeyError as exc:
        raise DomainError(f"law specification is missing field {exc.args[0]!r}") from None
    raise DomainError(f"unknown law kind {kind!r}")
