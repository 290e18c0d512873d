"""Fitted calcium and spike events from a set of changepoints.

Each segment gets its own least-squares fit of the free calcium values at its
head; the rest of the segment follows the decay recursion with no data
dependence. A spike event sits at every segment head except ``t = 1``, with
magnitude equal to the jump that breaks the recursion there.

Segment fits are recomputed from the data rather than taken from solver
internals, so re-costing a reconstruction is an independent check on the
solver's objective.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .extended_costs import ARp, Intercept, arp_impulse_basis, cholesky_solve, solve_intercept
from .model import (
    SpikeFit,
    as_trace,
    check_changepoints,
    check_gamma,
    check_lambda,
    validate_trace,
)
from .segment_cost import AR1
from .solvers import as_cost_model, solve


def _segments(y, changepoints):
    T = y.shape[0]
    cps = check_changepoints(changepoints, T)
    starts = np.array((0,) + cps, dtype=np.int64)
    ends = np.array(cps + (T,), dtype=np.int64)
    return cps, starts, ends


def _magnitudes(c, cps, gammas):
    """Jump ``c_t - sum_i gamma_i c_{t-i}`` at each spike time ``t = tau + 1``."""
    out = np.empty(len(cps))
    for j, tau in enumerate(cps):
        pred = 0.0
        for i, g in enumerate(gammas, start=1):
            if tau - i >= 0:
                pred += g * c[tau - i]
        out[j] = c[tau] - pred
    return out


def reconstruct_ar1(trace, changepoints, gamma) -> SpikeFit:
    """AR(1) fit: head value ``C`` per segment, then ``c_t = gamma c_{t-1}``.

    Examples
    --------
    >>> fit = reconstruct_ar1([1, 0.5, 5, 2.5], [2], 0.5)
    >>> fit.calcium.tolist(), fit.spike_times, fit.spike_magnitudes.tolist()
    ([1.0, 0.5, 5.0, 2.5], (3,), [4.75])
    """
    gamma = check_gamma(gamma)
    y = validate_trace(as_trace(trace)).values
    cps, starts, ends = _segments(y, changepoints)
    c = np.zeros(y.shape[0])
    for a, b in zip(starts, ends):
        gpow = gamma ** np.arange(b - a, dtype=np.float64)
        c[a] = (y[a:b] @ gpow) / (gpow @ gpow)
    _kernels.ar_fill(c, starts, ends, np.array([gamma]))
    return SpikeFit(c, tuple(t + 1 for t in cps), _magnitudes(c, cps, (gamma,)))


def intercept_segment_fit(y_seg, gamma) -> tuple[float, float, float]:
    """``(D, c_a, beta0)`` of one segment from explicit regressor sums."""
    y_seg = np.asarray(y_seg, dtype=np.float64)
    n = y_seg.shape[0]
    g = gamma ** np.arange(n, dtype=np.float64)
    mean_g = g.mean()
    m2_g = float(((g - mean_g) ** 2).sum())
    d, c, beta0, _ = solve_intercept(
        n, float(y_seg.sum()), float(y_seg @ y_seg) / 2.0, float(y_seg @ g),
        float(mean_g), m2_g, float(g.sum()), float(g @ g),
    )
    return max(d, 0.0), c, beta0


def reconstruct_intercept(trace, changepoints, gamma) -> SpikeFit:
    """Decay plus a per-segment baseline, returned in ``intercepts``."""
    gamma = check_gamma(gamma)
    y = validate_trace(as_trace(trace)).values
    cps, starts, ends = _segments(y, changepoints)
    c = np.zeros(y.shape[0])
    beta = np.zeros(y.shape[0])
    for a, b in zip(starts, ends):
        _, c[a], beta[a:b] = intercept_segment_fit(y[a:b], gamma)
    _kernels.ar_fill(c, starts, ends, np.array([gamma]))
    return SpikeFit(c, tuple(t + 1 for t in cps), _magnitudes(c, cps, (gamma,)), beta)


def reconstruct_arp(trace, changepoints, gammas) -> SpikeFit:
    """AR(p) fit: the first ``p`` values of each segment are free.

    Segments no longer than ``p`` are fit exactly.

    Raises
    ------
    SingularGram
        If a segment's design matrix is numerically rank deficient.
    """
    gammas = ARp(gammas).gammas
    p = len(gammas)
    y = validate_trace(as_trace(trace)).values
    cps, starts, ends = _segments(y, changepoints)
    c = np.zeros(y.shape[0])
    longest = int((ends - starts).max())
    basis = arp_impulse_basis(gammas, longest)
    for a, b in zip(starts, ends):
        n = b - a
        if n <= p:
            c[a:b] = y[a:b]
            continue
        B = basis[:n]
        c[a:a + p] = cholesky_solve(B.T @ B, B.T @ y[a:b])
    _kernels.ar_fill(c, starts, ends, np.asarray(gammas))
    return SpikeFit(c, tuple(t + 1 for t in cps), _magnitudes(c, cps, gammas))


def reconstruct(trace, changepoints, cost_model) -> SpikeFit:
    """Dispatch on the cost model used to find ``changepoints``."""
    cost_model = as_cost_model(cost_model)
    if isinstance(cost_model, AR1):
        return reconstruct_ar1(trace, changepoints, cost_model.gamma)
    if isinstance(cost_model, Intercept):
        return reconstruct_intercept(trace, changepoints, cost_model.gamma)
    if isinstance(cost_model, ARp):
        return reconstruct_arp(trace, changepoints, cost_model.gammas)
    raise TypeError(f"no reconstruction for cost model {cost_model!r}")


def fit_objective(trace, fit: SpikeFit, lam) -> float:
    """``0.5 * sum((y - fitted)^2) + lam * k``."""
    y = validate_trace(as_trace(trace)).values
    r = y - fit.fitted
    return 0.5 * float(r @ r) + check_lambda(lam) * fit.k


def deconvolve(trace, cost_model, lam, algorithm: str = "auto"):
    """Solve and reconstruct in one call; returns ``(solution, fit)``."""
    sol = solve(trace, cost_model, lam, algorithm)
    return sol, reconstruct(trace, sol.changepoints, cost_model)


@dataclass(frozen=True)
class PositivityReport:
    """Spike events whose estimated jump in calcium is negative."""

    all_nonnegative: bool
    violations: tuple  # of (t, magnitude)


def positivity_audit(fit: SpikeFit) -> PositivityReport:
    violations = tuple(
        (t, float(m)) for t, m in zip(fit.spike_times, fit.spike_magnitudes) if m < 0
    )
    return PositivityReport(not violations, violations)
