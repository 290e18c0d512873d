"""Choosing the decay rate and the penalty.

* :func:`estimate_gamma` fits a single decay to a stretch of trace the user
  believes is spike free.
* :func:`cross_validate` splits the trace into odd and even timesteps,
  fits each half at decay ``gamma**2`` (two steps of the full-rate
  recursion), predicts the other half by averaging adjacent fitted values,
  and applies the one-standard-error rule over a penalty grid.
* :func:`lambda_path` and :func:`find_lambda_for_k` sweep or bisect the
  penalty, using that the number of spike events never increases with it.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .model import L0SpikesError, as_trace, check_lambda, validate_trace
from .reconstruction import reconstruct
from .solvers import as_cost_model, segmentation_objective, solve

GAMMA_LOW = 1e-6
GAMMA_HIGH = 1.0 - 1e-6
GAMMA_GRID_POINTS = 64
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class DegenerateSegment(L0SpikesError, ValueError):
    pass


class TraceTooShort(L0SpikesError, ValueError):
    pass


class InvalidGrid(L0SpikesError, ValueError):
    pass


# --------------------------------------------------------------------------
# decay rate
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GammaEstimate:
    gamma_hat: float
    residual: float
    segment: tuple


def _decay_cost(y, gamma):
    # the residual itself rather than the closed form: near an exact fit the
    # closed form cancels to rounding noise and flattens the minimum
    g = gamma ** np.arange(y.shape[0], dtype=np.float64)
    r = y - (y @ g) / (g @ g) * g
    return 0.5 * float(r @ r)


def golden_section(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    """Shrink ``[lo, hi]`` around a minimum of ``f`` until narrower than ``tol``."""
    x1 = hi - _INVPHI * (hi - lo)
    x2 = lo + _INVPHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INVPHI * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INVPHI * (hi - lo)
            f2 = f(x2)
    return lo, hi


def estimate_gamma(trace, a: int, b: int, tol: float = 1e-8) -> GammaEstimate:
    """Decay rate minimizing the single-decay residual on ``y_a..y_b``.

    ``a`` and ``b`` are 1-indexed and inclusive. A 64-point scan of
    ``[1e-6, 1 - 1e-6]`` picks the best cell and golden-section search
    refines it, which protects against the residual not being unimodal in
    ``gamma``.

    Examples
    --------
    >>> est = estimate_gamma([4.0, 2.0, 1.0, 0.5], 1, 4)
    >>> round(est.gamma_hat, 6)
    0.5
    """
    y = validate_trace(as_trace(trace)).values
    a, b = int(a), int(b)
    if b - a < 1:
        raise DegenerateSegment(f"need at least two samples, got segment [{a}, {b}]")
    if a < 1 or b > y.shape[0]:
        raise ValueError(f"segment [{a}, {b}] is outside [1, {y.shape[0]}]")
    if not tol > 0:
        raise ValueError("tol must be positive")
    seg = y[a - 1:b]
    grid = np.linspace(GAMMA_LOW, GAMMA_HIGH, GAMMA_GRID_POINTS)
    costs = [_decay_cost(seg, g) for g in grid]
    i = int(np.argmin(costs))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, GAMMA_GRID_POINTS - 1)]
    lo, hi = golden_section(lambda g: _decay_cost(seg, g), lo, hi, tol)
    gamma_hat = float(0.5 * (lo + hi))
    return GammaEstimate(gamma_hat, float(_decay_cost(seg, gamma_hat)), (a, b))


# --------------------------------------------------------------------------
# penalty grid, path and bisection
# --------------------------------------------------------------------------


def default_lambda_grid(trace, n: int = 50) -> np.ndarray:
    """``n`` log-spaced penalties over ``[1e-4, 1e2]`` times the sample variance.

    A constant trace has zero variance; the grid is then scaled by 1.
    """
    y = validate_trace(as_trace(trace)).values
    scale = float(np.var(y))
    if not scale > 0:
        scale = 1.0
    return np.geomspace(1e-4, 1e2, n) * scale


def check_grid(lambdas) -> np.ndarray:
    lams = np.asarray(lambdas, dtype=np.float64).reshape(-1)
    if lams.size == 0:
        raise InvalidGrid("penalty grid is empty")
    for lam in lams:
        check_lambda(lam)
    if np.any(np.diff(lams) <= 0):
        raise InvalidGrid("penalty grid must be strictly ascending")
    return lams


@dataclass(frozen=True)
class PathEntry:
    lam: float
    k: int
    objective: float
    spike_times: tuple


def lambda_path(trace, cost_model, lambdas, algorithm: str = "auto") -> list:
    """Solve the full trace at every penalty of an ascending grid."""
    trace = validate_trace(as_trace(trace))
    cost_model = as_cost_model(cost_model)
    out = []
    for lam in check_grid(lambdas):
        sol = solve(trace, cost_model, lam, algorithm)
        out.append(PathEntry(float(lam), sol.k, sol.optimal_objective, sol.spike_times))
    return out


@dataclass(frozen=True)
class LambdaSearch:
    """Outcome of a penalty bisection for a target spike count.

    ``exact`` is False when no penalty gives exactly ``target_k`` events;
    ``solution`` is then the fit just above the target count and ``lower``
    / ``upper`` are the two fits bracketing it (more and fewer events).
    """

    target_k: int
    exact: bool
    lam: float
    solution: object
    lower: Optional[object] = None
    upper: Optional[object] = None
    iterations: int = 0


def find_lambda_for_k(
    trace, cost_model, target_k: int, algorithm: str = "auto", max_iter: int = 200
) -> LambdaSearch:
    """Bisect the penalty until the fit has exactly ``target_k`` spike events.

    The search interval is ``[0, D(y_1..y_T)]``: above the single-segment cost
    no changepoint can pay for itself, so the upper end always gives ``k = 0``.
    """
    trace = validate_trace(as_trace(trace))
    cost_model = as_cost_model(cost_model)
    target_k = int(target_k)
    if target_k < 0:
        raise ValueError("target_k must be non-negative")

    def fit(lam):
        return solve(trace, cost_model, lam, algorithm)

    # a positive penalty is preferred even when lambda = 0 already hits the
    # target, so ties at 0 fall through to the bisection
    lo_sol = fit(0.0)
    if lo_sol.k < target_k:
        return LambdaSearch(target_k, False, 0.0, lo_sol, lower=lo_sol, upper=None)
    hi = segmentation_objective(trace, cost_model, (), 0.0) * (1.0 + 1e-9) + 1e-12
    hi_sol = fit(hi)
    lo = 0.0
    it = 0
    while it < max_iter:
        it += 1
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        sol = fit(mid)
        if sol.k == target_k:
            return LambdaSearch(target_k, True, mid, sol, iterations=it)
        if sol.k > target_k:
            lo, lo_sol = mid, sol
        else:
            hi, hi_sol = mid, sol
    if lo_sol.k == target_k:
        return LambdaSearch(target_k, True, lo, lo_sol, iterations=it)
    return LambdaSearch(target_k, False, lo, lo_sol, lower=lo_sol, upper=hi_sol, iterations=it)


# --------------------------------------------------------------------------
# cross-validation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CvReport:
    """Per-penalty cross-validated error and the two selections.

    ``fold_mse[m, f]`` is the test error of fold ``f`` at ``lambdas[m]``;
    fold 0 trains on odd timesteps (1, 3, ...) and fold 1 on even ones.
    Indices are 0-based.
    """

    lambdas: np.ndarray
    cv_mse: np.ndarray
    cv_se: np.ndarray
    fold_mse: np.ndarray
    selected_min: int
    selected_one_se: int
    spike_counts: np.ndarray

    @property
    def lambda_min(self) -> float:
        return float(self.lambdas[self.selected_min])

    @property
    def lambda_one_se(self) -> float:
        return float(self.lambdas[self.selected_one_se])


def fold_split(y: np.ndarray, fold: int):
    """Training series, test series, and the test positions that get a prediction.

    Every predicted test sample lies strictly between two training samples,
    so the first (fold 1) or last (fold 0, even ``T``) test sample has no
    prediction and is skipped.
    """
    if fold == 0:
        train, test = y[0::2], y[1::2]
        predicted = slice(0, train.shape[0] - 1)
    else:
        train, test = y[1::2], y[0::2]
        predicted = slice(1, train.shape[0])
    return train, test, predicted


def fold_error(train_fitted: np.ndarray, test: np.ndarray, predicted: slice) -> float:
    pred = 0.5 * (train_fitted[:-1] + train_fitted[1:])
    r = test[predicted] - pred
    return float(np.mean(r * r))


def summarize_folds(fold_mse: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean over folds and the spread ``sqrt(sum((e_f - mean)^2) / 2)``."""
    cv_mse = 0.5 * (fold_mse[:, 0] + fold_mse[:, 1])
    cv_se = np.sqrt(((fold_mse[:, 0] - cv_mse) ** 2 + (fold_mse[:, 1] - cv_mse) ** 2) / 2.0)
    return cv_mse, cv_se


def one_se_selection(cv_mse: np.ndarray, cv_se: np.ndarray) -> tuple[int, int]:
    m_hat = int(np.argmin(cv_mse))
    limit = cv_mse[m_hat] + cv_se[m_hat]
    m_star = int(np.flatnonzero(cv_mse <= limit).max())
    return m_hat, m_star


def cross_validate(
    trace,
    cost_model,
    lambdas: Optional[Sequence[float]] = None,
    algorithm: str = "auto",
    workers: int = 1,
) -> CvReport:
    """Two-fold odd/even cross-validation over an ascending penalty grid.

    ``cost_model`` is a decay rate or a cost model; training halves use its
    ``squared()`` counterpart. For AR(p) that squares each coefficient, which
    is only a heuristic for ``p > 1``.

    Raises
    ------
    TraceTooShort
        If ``T < 4`` (each fold needs two training samples around a test one).
    """
    trace = validate_trace(as_trace(trace))
    y = trace.values
    T = y.shape[0]
    if T < 4:
        raise TraceTooShort(f"cross-validation needs T >= 4, got {T}")
    cost_model = as_cost_model(cost_model)
    half_model = cost_model.squared()
    lams = default_lambda_grid(trace) if lambdas is None else check_grid(lambdas)
    folds = [fold_split(y, f) for f in (0, 1)]

    def fold_task(args):
        m, f = args
        train, test, predicted = folds[f]
        sol = solve(train, half_model, lams[m], algorithm)
        fitted = reconstruct(train, sol.changepoints, half_model).fitted
        return fold_error(fitted, test, predicted)

    def full_task(m):
        return solve(trace, cost_model, lams[m], algorithm).k

    M = lams.shape[0]
    jobs = [(m, f) for m in range(M) for f in (0, 1)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            errs = list(pool.map(fold_task, jobs))
            counts = list(pool.map(full_task, range(M)))
    else:
        errs = [fold_task(j) for j in jobs]
        counts = [full_task(m) for m in range(M)]

    fold_mse = np.asarray(errs).reshape(M, 2)
    cv_mse, cv_se = summarize_folds(fold_mse)
    m_hat, m_star = one_se_selection(cv_mse, cv_se)
    return CvReport(lams, cv_mse, cv_se, fold_mse, m_hat, m_star, np.asarray(counts, dtype=np.int64))
