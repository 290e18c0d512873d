"""Closed-form AR(1) segment cost with constant-time right-extension.

For a segment ``y_a..y_b`` the cost is the residual of the best single-decay
fit ``c_t = C * gamma**(t-a)``::

    C = sum(y_t gamma^(t-a)) / sum(gamma^(2(t-a)))
    D = sum(y_t^2)/2 - C * sum(y_t gamma^(t-a)) + C^2/2 * sum(gamma^(2(t-a)))

Only three running sums are carried; the power sum uses its geometric closed
form so that extending a segment by one sample is O(1).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import CostConsistencyError, NonFiniteValue, check_gamma

_EPS = np.finfo(np.float64).eps


def clamp_cost(d: float, scale: float, n: int) -> float:
    """Snap rounding-level costs to zero.

    The slack is the a-priori rounding bound for summing ``n`` terms of size
    ``scale`` plus an absolute 1e-12. Costs inside it, of either sign, are
    indistinguishable from an exact fit and become 0, so exact fits tie and
    the smallest-changepoint rule decides. Anything more negative is a bug.
    """
    slack = 1e-12 + 64.0 * _EPS * n * scale
    if d > slack:
        return d
    if d >= -slack:
        return 0.0
    raise CostConsistencyError(f"segment cost {d!r} is negative beyond rounding slack")


def geometric_sum_sq(gamma: float, last_pow: float) -> float:
    """``sum_{k<n} gamma^(2k)`` given ``last_pow = gamma^(n-1)``.

    Underflow of ``gamma^(2n)`` to zero yields the limit ``1/(1-gamma^2)``.
    """
    g2n = last_pow * gamma
    g2n = g2n * g2n
    return (1.0 - g2n) / (1.0 - gamma * gamma)


@dataclass(frozen=True, slots=True)
class Ar1CostState:
    gamma: float
    n: int
    sum_half_ysq: float
    sum_y_gpow: float
    cur_gpow: float
    sum_g2: float


def ar1_cost_init(y_a: float, gamma: float) -> Ar1CostState:
    gamma = check_gamma(gamma)
    y_a = float(y_a)
    if not np.isfinite(y_a):
        raise NonFiniteValue(1)
    return Ar1CostState(gamma, 1, y_a * y_a / 2.0, y_a, 1.0, geometric_sum_sq(gamma, 1.0))


def ar1_cost_extend(state: Ar1CostState, y_next: float) -> Ar1CostState:
    y_next = float(y_next)
    if not np.isfinite(y_next):
        raise NonFiniteValue(state.n + 1)
    g = state.gamma
    gpow = state.cur_gpow * g
    return Ar1CostState(
        g,
        state.n + 1,
        state.sum_half_ysq + y_next * y_next / 2.0,
        state.sum_y_gpow + y_next * gpow,
        gpow,
        geometric_sum_sq(g, gpow),
    )


def ar1_cost_optimal_c(state: Ar1CostState) -> float:
    return state.sum_y_gpow / state.sum_g2


def ar1_cost_value(state: Ar1CostState) -> float:
    c = state.sum_y_gpow / state.sum_g2
    d = state.sum_half_ysq - c * state.sum_y_gpow + 0.5 * c * c * state.sum_g2
    return clamp_cost(d, state.sum_half_ysq, state.n)


def ar1_segment(y, gamma: float) -> Ar1CostState:
    """Build the cost state of a whole segment by repeated extension."""
    it = iter(np.asarray(y, dtype=np.float64).reshape(-1))
    try:
        state = ar1_cost_init(next(it), gamma)
    except StopIteration:
        raise ValueError("empty segment") from None
    for v in it:
        state = ar1_cost_extend(state, v)
    return state


def ar1_segment_cost(y, gamma: float) -> tuple[float, float]:
    """Vectorized ``(D, C)`` for one segment using explicit power sums."""
    y = np.asarray(y, dtype=np.float64)
    gpow = float(gamma) ** np.arange(y.shape[0], dtype=np.float64)
    s = float(y @ gpow)
    g2 = float(gpow @ gpow)
    h = float(y @ y) / 2.0
    c = s / g2
    return clamp_cost(h - c * s + 0.5 * c * c * g2, h, y.shape[0]), c


@dataclass(frozen=True)
class AR1:
    """AR(1) decay cost model, usable by both solvers."""

    gamma: float
    name = "ar1"

    def __post_init__(self):
        object.__setattr__(self, "gamma", check_gamma(self.gamma))

    def init(self, y: float) -> Ar1CostState:
        return ar1_cost_init(y, self.gamma)

    def extend(self, state: Ar1CostState, y: float) -> Ar1CostState:
        return ar1_cost_extend(state, y)

    def value(self, state: Ar1CostState) -> float:
        return ar1_cost_value(state)

    def squared(self) -> "AR1":
        """The model seen on a half-rate subsample (decay ``gamma**2``)."""
        return AR1(self.gamma ** 2)
