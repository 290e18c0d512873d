"""Exact solvers for the l0-penalized changepoint problem.

Both solvers minimize ``sum_j D(segment_j) + lam * k`` over all segmentations
via the recursion ``F(s) = min_{tau < s} F(tau) + D(y[tau+1:s]) + lam`` with
``F(0) = -lam``. :func:`solve_op` scans every candidate (``Theta(T^2)``
extensions); :func:`solve_pelt` drops candidates that can never again be the
most recent changepoint.

Built-in cost models (:class:`~l0spikes.segment_cost.AR1`,
:class:`~l0spikes.extended_costs.Intercept`,
:class:`~l0spikes.extended_costs.ARp`) run in a compiled kernel. Any other
object with ``init(y)``, ``extend(state, y)`` and ``value(state)`` methods is
solved by an equivalent pure-Python loop.
"""
from __future__ import annotations

import numpy as np

from . import _kernels
from .extended_costs import GRAM_RANK_TOL, PHI_LIMIT, ARp, Intercept, SingularGram, UnstableRecursion
from .model import (
    ChangepointSolution,
    CostConsistencyError,
    L0SpikesError,
    as_trace,
    check_lambda,
    validate_trace,
)
from .segment_cost import AR1

ALGORITHMS = ("op", "pelt", "auto")


class UnknownAlgorithm(L0SpikesError, ValueError):
    pass


def as_cost_model(cost_model):
    """Accept a cost model object or a bare decay rate (AR(1))."""
    if isinstance(cost_model, (int, float, np.floating)):
        return AR1(float(cost_model))
    if not all(hasattr(cost_model, m) for m in ("init", "extend", "value")):
        raise TypeError(f"not a cost model: {cost_model!r}")
    return cost_model


def _run_kernel(cost_model, y, lam, prune):
    """Run the compiled recursion, or return None for custom cost models."""
    T = y.shape[0]
    reason = _kernels.STATUS_OK
    if type(cost_model) is AR1:
        out = _kernels.dp_ar1(y, lam, _kernels.ar1_tables(cost_model.gamma, T), prune)
    elif type(cost_model) is Intercept:
        out = _kernels.dp_intercept(y, lam, _kernels.intercept_tables(cost_model.gamma, T), prune)
    elif type(cost_model) is ARp:
        gammas = np.asarray(cost_model.gammas, dtype=np.float64)
        phi, gram, chol, valid_len, reason = _kernels.arp_tables(gammas, T, PHI_LIMIT, GRAM_RANK_TOL)
        out = _kernels.dp_arp(y, lam, phi, gram, chol, valid_len, prune)
    else:
        return None
    F, back, sizes, status, s_fail, tau_fail = out
    if status != _kernels.STATUS_OK:
        _raise_status(status, reason, s_fail, tau_fail)
    return F, back, sizes


def _raise_status(status, reason, s, tau):
    seg = f"segment [{tau + 1}, {s}]"
    if status == _kernels.STATUS_NEGATIVE_COST:
        raise CostConsistencyError(f"negative segment cost on {seg}")
    if reason == _kernels.STATUS_SINGULAR:
        raise SingularGram(f"AR(p) Gram matrix is rank deficient on {seg}")
    raise UnstableRecursion(f"AR impulse response overflows on {seg}")


def _dp_python(y, cost_model, lam, prune):
    """Reference loop for arbitrary cost objects; same rules as the kernel."""
    T = y.shape[0]
    F = np.empty(T + 1)
    F[0] = -lam
    back = np.zeros(T + 1, dtype=np.int64)
    sizes = np.zeros(T, dtype=np.int64)
    cands: list = []  # (tau, state)
    for s in range(1, T + 1):
        ys = float(y[s - 1])
        cands.append((s - 1, cost_model.init(ys)))
        extended = []
        best, arg = np.inf, -1
        for tau, state in cands:
            if tau < s - 1:
                state = cost_model.extend(state, ys)
            d = cost_model.value(state)
            extended.append((tau, state, d))
            v = F[tau] + d + lam
            if v < best:
                best, arg = v, tau
        F[s], back[s], sizes[s - 1] = best, arg, len(cands)
        if prune:
            cands = [(tau, st) for tau, st, d in extended if F[tau] + d <= best]
        else:
            cands = [(tau, st) for tau, st, _ in extended]
    return F, back, sizes


def _backtrack(back, T):
    cps = []
    s = T
    while s > 0:
        tau = int(back[s])
        if tau > 0:
            cps.append(tau)
        s = tau
    return tuple(reversed(cps))


def _solve(trace, cost_model, lam, prune):
    trace = validate_trace(as_trace(trace))
    cost_model = as_cost_model(cost_model)
    lam = check_lambda(lam)
    y = np.ascontiguousarray(trace.values, dtype=np.float64)
    T = y.shape[0]
    out = _run_kernel(cost_model, y, lam, prune)
    if out is None:
        out = _dp_python(y, cost_model, lam, prune)
    F, back, sizes = out
    return ChangepointSolution(
        changepoints=_backtrack(back, T),
        optimal_objective=float(F[T]),
        n_timesteps=T,
        lam=lam,
        algorithm="pelt" if prune else "op",
        f_values=F,
        pruning_set_sizes=sizes if prune else None,
    )


def solve_op(trace, cost_model, lam) -> ChangepointSolution:
    """Globally optimal segmentation by exhaustive last-changepoint search."""
    return _solve(trace, cost_model, lam, prune=False)


def solve_pelt(trace, cost_model, lam) -> ChangepointSolution:
    """Globally optimal segmentation with candidate pruning.

    A candidate ``tau`` is dropped after step ``s`` once
    ``F(tau) + D(y[tau+1:s]) > F(s)``: splitting at ``s`` never costs more
    than extending, so ``tau`` can never again win. Candidates that tie are
    kept so the smallest-``tau`` tie-break matches :func:`solve_op`.
    ``pruning_set_sizes`` records how many candidates each step scanned.
    """
    return _solve(trace, cost_model, lam, prune=True)


def solve(trace, cost_model, lam, algorithm: str = "auto") -> ChangepointSolution:
    if algorithm == "op":
        return solve_op(trace, cost_model, lam)
    if algorithm in ("pelt", "auto"):
        return solve_pelt(trace, cost_model, lam)
    raise UnknownAlgorithm(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")


def segmentation_objective(trace, cost_model, changepoints, lam) -> float:
    """Objective of a given segmentation, costing each segment from scratch."""
    trace = validate_trace(as_trace(trace))
    cost_model = as_cost_model(cost_model)
    lam = check_lambda(lam)
    y = trace.values
    bounds = (0,) + tuple(changepoints) + (trace.T,)
    total = lam * len(changepoints)
    for a, b in zip(bounds, bounds[1:]):
        state = cost_model.init(y[a])
        for v in y[a + 1:b]:
            state = cost_model.extend(state, v)
        total += cost_model.value(state)
    return total
