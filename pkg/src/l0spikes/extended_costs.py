"""Segment costs for the per-segment intercept model and the AR(p) model.

Both expose the same ``init`` / ``extend`` / ``value`` trio as
:class:`~l0spikes.segment_cost.AR1`, so either solver accepts them unchanged.

Intercept model: on a segment ``a..b`` fit ``y_t ~ beta0 + c_a gamma^(t-a)``.

AR(p) model: on a segment the first ``p`` calcium values are free and the rest
follow ``c_t = sum_i gamma_i c_{t-i}``. Writing ``c_t = phi_t . (c_a..c_{a+p-1})``
with ``phi`` the impulse responses of the recursion turns the fit into a ``p``
parameter least squares problem whose Gram matrix and moment vector update
with one rank-1 term per sample.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import L0SpikesError, NonFiniteValue, check_gamma
from .segment_cost import clamp_cost, geometric_sum_sq

PHI_LIMIT = 1e150
GRAM_RANK_TOL = 1e-10


class SingularGram(L0SpikesError, np.linalg.LinAlgError):
    pass


class UnstableRecursion(L0SpikesError, OverflowError):
    pass


# --------------------------------------------------------------------------
# intercept model
# --------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class InterceptCostState:
    """Running sums for one segment of the intercept model.

    ``mean_g`` and ``m2_g`` are the mean and centered sum of squares of the
    decay regressor ``gamma^(t-a)``, kept by Welford's recurrence; the fit is
    solved in centered form because the two regressors become nearly
    collinear as ``gamma`` approaches 1.
    """

    gamma: float
    n: int
    sum_y: float
    sum_half_ysq: float
    sum_y_gpow: float
    cur_gpow: float
    sum_g: float
    sum_g2: float
    mean_g: float
    m2_g: float


def _geometric_sum(gamma: float, last_pow: float) -> float:
    return (1.0 - last_pow * gamma) / (1.0 - gamma)


def intercept_cost_init(y_a: float, gamma: float) -> InterceptCostState:
    gamma = check_gamma(gamma)
    y_a = float(y_a)
    if not np.isfinite(y_a):
        raise NonFiniteValue(1)
    return InterceptCostState(
        gamma, 1, y_a, y_a * y_a / 2.0, y_a, 1.0,
        _geometric_sum(gamma, 1.0), geometric_sum_sq(gamma, 1.0), 1.0, 0.0,
    )


def intercept_cost_extend(state: InterceptCostState, y_next: float) -> InterceptCostState:
    y_next = float(y_next)
    if not np.isfinite(y_next):
        raise NonFiniteValue(state.n + 1)
    g = state.gamma
    n = state.n + 1
    gpow = state.cur_gpow * g
    delta = gpow - state.mean_g
    mean_g = state.mean_g + delta / n
    return InterceptCostState(
        g,
        n,
        state.sum_y + y_next,
        state.sum_half_ysq + y_next * y_next / 2.0,
        state.sum_y_gpow + y_next * gpow,
        gpow,
        _geometric_sum(g, gpow),
        geometric_sum_sq(g, gpow),
        mean_g,
        state.m2_g + delta * (gpow - mean_g),
    )


def solve_intercept(n, sum_y, sum_half_ysq, sum_y_gpow, mean_g, m2_g, sum_g, sum_g2):
    """Return ``(D_raw, c_a, beta0, scale)`` for the two-regressor fit.

    ``D_raw`` is unclamped; ``scale`` sizes its rounding error. A
    numerically constant regressor (always the case for ``n == 1``) gets the
    minimum-norm solution.
    """
    if n > 1 and m2_g > 1e-15 * n:
        ybar = sum_y / n
        sxy = sum_y_gpow - sum_y * mean_g
        syy = 2.0 * sum_half_ysq - sum_y * ybar
        c = sxy / m2_g
        beta0 = ybar - c * mean_g
        return 0.5 * (syy - c * sxy), c, beta0, sum_half_ysq * (1.0 + n / m2_g)
    # rank one: pinv(A) = A / trace(A)^2
    tr = n + sum_g2
    beta0 = (n * sum_y + sum_g * sum_y_gpow) / (tr * tr)
    c = (sum_g * sum_y + sum_g2 * sum_y_gpow) / (tr * tr)
    if n == 1:
        return 0.0, c, beta0, sum_half_ysq
    return sum_half_ysq - 0.5 * (beta0 * sum_y + c * sum_y_gpow), c, beta0, sum_half_ysq


def intercept_cost_value(state: InterceptCostState) -> tuple[float, float, float]:
    """Return ``(D, c_a, beta0)`` for the segment."""
    d, c, beta0, scale = solve_intercept(
        state.n, state.sum_y, state.sum_half_ysq, state.sum_y_gpow,
        state.mean_g, state.m2_g, state.sum_g, state.sum_g2,
    )
    return clamp_cost(d, scale, state.n), c, beta0


@dataclass(frozen=True)
class Intercept:
    """AR(1) decay plus a free baseline on every segment."""

    gamma: float
    name = "intercept"

    def __post_init__(self):
        object.__setattr__(self, "gamma", check_gamma(self.gamma))

    def init(self, y):
        return intercept_cost_init(y, self.gamma)

    def extend(self, state, y):
        return intercept_cost_extend(state, y)

    def value(self, state) -> float:
        return intercept_cost_value(state)[0]

    def squared(self) -> "Intercept":
        return Intercept(self.gamma ** 2)


# --------------------------------------------------------------------------
# AR(p) model
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ArpParams:
    gammas: tuple

    def __post_init__(self):
        gammas = tuple(float(g) for g in np.atleast_1d(self.gammas))
        if len(gammas) < 1:
            raise ValueError("AR(p) needs at least one coefficient")
        if not all(np.isfinite(gammas)):
            raise ValueError("AR(p) coefficients must be finite")
        object.__setattr__(self, "gammas", gammas)

    @property
    def p(self) -> int:
        return len(self.gammas)


@dataclass(frozen=True)
class ArpCostState:
    """Running fit of one segment under AR(p).

    ``history[0]`` is the newest impulse-response vector, ``history[i]`` the
    one ``i`` steps older.
    """

    gammas: tuple
    n: int
    history: np.ndarray
    gram: np.ndarray
    moment: np.ndarray
    sum_half_ysq: float


def next_phi(gammas: np.ndarray, history: np.ndarray, n: int) -> np.ndarray:
    """Impulse-response vector for segment offset ``n`` (0-based).

    ``history`` holds the vectors for offsets ``n-1, n-2, ...``.
    """
    p = gammas.shape[0]
    if n < p:
        phi = np.zeros(p)
        phi[n] = 1.0
        return phi
    phi = gammas @ history
    if np.max(np.abs(phi)) > PHI_LIMIT:
        raise UnstableRecursion(
            f"AR impulse response exceeds {PHI_LIMIT:g} at segment offset {n}; "
            "the AR coefficients are unstable"
        )
    return phi


def arp_cost_init(y_a: float, params) -> ArpCostState:
    params = params if isinstance(params, ArpParams) else ArpParams(params)
    y_a = float(y_a)
    if not np.isfinite(y_a):
        raise NonFiniteValue(1)
    p = params.p
    gammas = np.asarray(params.gammas)
    phi = next_phi(gammas, np.zeros((p, p)), 0)
    history = np.zeros((p, p))
    history[0] = phi
    return ArpCostState(
        params.gammas, 1, history, np.outer(phi, phi), y_a * phi, y_a * y_a / 2.0
    )


def arp_cost_extend(state: ArpCostState, y_next: float) -> ArpCostState:
    y_next = float(y_next)
    if not np.isfinite(y_next):
        raise NonFiniteValue(state.n + 1)
    gammas = np.asarray(state.gammas)
    phi = next_phi(gammas, state.history, state.n)
    history = np.roll(state.history, 1, axis=0)
    history[0] = phi
    return ArpCostState(
        state.gammas,
        state.n + 1,
        history,
        state.gram + np.outer(phi, phi),
        state.moment + y_next * phi,
        state.sum_half_ysq + y_next * y_next / 2.0,
    )


def cholesky_solve(gram: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``gram @ x = rhs`` for symmetric positive definite ``gram``.

    Raises :class:`SingularGram` when a pivot collapses below
    ``GRAM_RANK_TOL`` relative to its diagonal entry.
    """
    p = gram.shape[0]
    L = np.zeros((p, p))
    for j in range(p):
        d = gram[j, j] - L[j, :j] @ L[j, :j]
        if not d > GRAM_RANK_TOL * gram[j, j]:
            raise SingularGram(f"AR(p) Gram matrix is rank deficient at pivot {j}")
        L[j, j] = np.sqrt(d)
        for i in range(j + 1, p):
            L[i, j] = (gram[i, j] - L[i, :j] @ L[j, :j]) / L[j, j]
    z = np.zeros(p)
    for i in range(p):
        z[i] = (rhs[i] - L[i, :i] @ z[:i]) / L[i, i]
    x = np.zeros(p)
    for i in range(p - 1, -1, -1):
        x[i] = (z[i] - L[i + 1:, i] @ x[i + 1:]) / L[i, i]
    return x


def arp_cost_value(state: ArpCostState) -> tuple[float, np.ndarray]:
    """Return ``(D, init_calcium)``; ``init_calcium`` is ``c_a..c_{a+p-1}``."""
    p = len(state.gammas)
    if state.n <= p:
        # underdetermined: every observed sample is fit exactly
        return 0.0, state.moment.copy()
    c = cholesky_solve(state.gram, state.moment)
    d = state.sum_half_ysq - c @ state.moment + 0.5 * c @ state.gram @ c
    return clamp_cost(float(d), state.sum_half_ysq, state.n), c


def arp_impulse_basis(gammas, n: int) -> np.ndarray:
    """The ``n x p`` design matrix whose row ``u`` is ``phi_u``."""
    gammas = np.asarray(ArpParams(gammas).gammas)
    p = gammas.shape[0]
    out = np.zeros((n, p))
    history = np.zeros((p, p))
    for u in range(n):
        phi = next_phi(gammas, history, u)
        out[u] = phi
        history = np.roll(history, 1, axis=0)
        history[0] = phi
    return out


@dataclass(frozen=True)
class ARp:
    """AR(p) decay between spike events, fully reset at each event."""

    gammas: tuple
    name = "arp"

    def __post_init__(self):
        object.__setattr__(self, "gammas", ArpParams(self.gammas).gammas)

    @property
    def p(self) -> int:
        return len(self.gammas)

    def init(self, y):
        return arp_cost_init(y, ArpParams(self.gammas))

    def extend(self, state, y):
        return arp_cost_extend(state, y)

    def value(self, state) -> float:
        return arp_cost_value(state)[0]

    def squared(self) -> "ARp":
        # exact only for p = 1; used as a heuristic for half-rate subsamples
        return ARp(tuple(g * g for g in self.gammas))
