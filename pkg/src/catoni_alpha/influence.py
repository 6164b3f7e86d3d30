"""Influence function for the generalized Catoni estimator.

For a moment exponent ``alpha`` in (1, 2) an admissible influence function is
any non-decreasing ``phi`` squeezed between

    -log(1 - x + |x|**alpha / alpha)  and  log(1 + x + |x|**alpha / alpha).

Only the widest admissible choice is provided; :func:`phi_envelope` exists so
that alternative choices can be checked against the two bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = ["AlphaParams", "check_alpha", "phi_widest", "phi_derivative", "phi_envelope"]


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (1.0 < alpha < 2.0):
        raise DomainError(f"alpha must lie in the open interval (1, 2), got {alpha!r}")
    return alpha


@dataclass(frozen=True)
class AlphaParams:
    """Moment exponent ``alpha`` and the alpha-th central moment ``v``."""

    alpha: float
    v: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", check_alpha(self.alpha))
        v = float(self.v)
        if not (v >= 0.0) or not math.isfinite(v):
            raise DomainError(f"v must be finite and non-negative, got {self.v!r}")
        object.__setattr__(self, "v", v)

    def require_positive_v(self) -> None:
        if self.v <= 0.0:
            raise DomainError("this operation divides by v; v must be > 0")


def _abs_pow(t, alpha):
    # |t|**alpha for t >= 0; np.power is exact at t == 0 for alpha > 0
    return np.power(t, alpha)


def _as_checked_array(x):
    arr = np.asarray(x, dtype=float)
    if np.isnan(arr).any():
        raise DomainError("phi is undefined for NaN input")
    return arr


def _unwrap(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


def phi_widest(x, alpha: float):
    """Widest admissible influence function.

    ``log(1 + x + x**alpha/alpha)`` for ``x >= 0`` and its mirror image
    ``-log(1 - x + |x|**alpha/alpha)`` for ``x < 0``. Both branches reduce to
    ``sign(x) * log1p(|x| + |x|**alpha/alpha)``, which makes the function odd
    to the last bit. Accepts scalars or arrays.
    """
    alpha = check_alpha(alpha)
    arr = _as_checked_array(x)
    t = np.abs(arr)
    out = np.sign(arr) * np.log1p(t + _abs_pow(t, alpha) / alpha)
    return _unwrap(out, x)


def phi_derivative(x, alpha: float):
    """Derivative of :func:`phi_widest`, ``(1 + |x|**(alpha-1)) / (1 + |x| + |x|**alpha/alpha)``."""
    alpha = check_alpha(alpha)
    arr = _as_checked_array(x)
    t = np.abs(arr)
    out = (1.0 + np.power(t, alpha - 1.0)) / (1.0 + t + _abs_pow(t, alpha) / alpha)
    return _unwrap(out, x)


def phi_envelope(x, alpha: float):
    """Return ``(lower, upper)`` bounds that any admissible phi must satisfy at ``x``.

    Both log arguments stay positive: ``1 - t + t**alpha/alpha`` attains its
    minimum ``1/alpha`` at ``t = 1``.
    """
    alpha = check_alpha(alpha)
    arr = _as_checked_array(x)
    moment = _abs_pow(np.abs(arr), alpha) / alpha
    lower = -np.log1p(-arr + moment)
    upper = np.log1p(arr + moment)
    return _unwrap(lower, x), _unwrap(upper, x)
