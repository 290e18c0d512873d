"""Independent reference implementations used as test oracles.

Nothing here goes through the package's incremental cost states or compiled
kernels: segment costs are dense least-squares fits of explicitly built
design matrices, and segmentations are enumerated exhaustively.
"""
from itertools import combinations

import numpy as np
from scipy.signal import lfilter


def decay_design(gamma, n):
    return (gamma ** np.arange(n, dtype=np.float64))[:, None]


def intercept_design(gamma, n):
    return np.column_stack([np.ones(n), gamma ** np.arange(n, dtype=np.float64)])


def arp_design(gammas, n):
    """Columns are the recursion's responses to unit initial states."""
    gammas = list(gammas)
    p = len(gammas)
    X = np.zeros((n, p))
    for j in range(p):
        c = [0.0] * n
        for u in range(n):
            if u < p:
                c[u] = 1.0 if u == j else 0.0
            else:
                c[u] = sum(gammas[i] * c[u - 1 - i] for i in range(p))
        X[:, j] = c
    return X


def lstsq_fit(X, y):
    """``(D, coef, fitted)`` of ``0.5 * ||y - X b||^2`` by SVD least squares."""
    y = np.asarray(y, dtype=np.float64)
    coef = np.linalg.lstsq(X, y, rcond=None)[0]
    fitted = X @ coef
    r = y - fitted
    return 0.5 * float(r @ r), coef, fitted


def design_for(model, n):
    name = model[0]
    if name == "ar1":
        return decay_design(model[1], n)
    if name == "intercept":
        return intercept_design(model[1], n)
    return arp_design(model[1], n)


def segment_cost(y, model):
    y = np.asarray(y, dtype=np.float64)
    if model[0] == "arp" and y.shape[0] <= len(model[1]):
        return 0.0
    return lstsq_fit(design_for(model, y.shape[0]), y)[0]


def all_segment_costs(y, model):
    T = len(y)
    return {(a, b): segment_cost(y[a:b], model) for a in range(T) for b in range(a + 1, T + 1)}


def enumerate_segmentations(y, model, lam):
    """Objective of every changepoint subset, sorted ascending.

    Returns a list of ``(objective, changepoints)``.
    """
    T = len(y)
    costs = all_segment_costs(y, model)
    out = []
    for k in range(T):
        for cps in combinations(range(1, T), k):
            bounds = (0,) + cps + (T,)
            total = lam * k + sum(costs[(a, b)] for a, b in zip(bounds, bounds[1:]))
            out.append((total, cps))
    out.sort(key=lambda item: item[0])
    return out


# --------------------------------------------------------------------------
# straightforward re-implementation of the odd/even cross-validation
# --------------------------------------------------------------------------


def _all_tau_costs(y, s, gamma):
    """``D(y[tau:s])`` for every ``tau < s`` (0-based, half open), from scratch.

    ``Q_tau = sum_{t >= tau} y_t gamma^(t - tau)`` obeys
    ``Q_tau = y_tau + gamma Q_{tau+1}``, i.e. an IIR filter run backwards.
    """
    seg = y[:s][::-1]
    Q = lfilter([1.0], [1.0, -gamma], seg)[::-1]
    H = 0.5 * np.cumsum(seg * seg)[::-1]
    n = s - np.arange(s)
    G = (1.0 - gamma ** (2 * n)) / (1.0 - gamma * gamma)
    return H - 0.5 * Q * Q / G


def op_changepoints(y, gamma, lams):
    """Unpruned optimal partitioning for each penalty in ``lams`` at once."""
    y = np.asarray(y, dtype=np.float64)
    lams = np.asarray(lams, dtype=np.float64)
    T = y.shape[0]
    M = lams.shape[0]
    F = np.empty((M, T + 1))
    F[:, 0] = -lams
    back = np.zeros((M, T + 1), dtype=np.int64)
    for s in range(1, T + 1):
        D = np.maximum(_all_tau_costs(y, s, gamma), 0.0)
        vals = F[:, :s] + D[None, :] + lams[:, None]
        arg = np.argmin(vals, axis=1)
        back[:, s] = arg
        F[:, s] = vals[np.arange(M), arg]
    out = []
    for m in range(M):
        cps = []
        s = T
        while s > 0:
            tau = int(back[m, s])
            if tau > 0:
                cps.append(tau)
            s = tau
        out.append(tuple(reversed(cps)))
    return out, F[:, T]


def dense_fitted(y, cps, gamma):
    y = np.asarray(y, dtype=np.float64)
    bounds = (0,) + tuple(cps) + (y.shape[0],)
    out = np.empty_like(y)
    for a, b in zip(bounds, bounds[1:]):
        out[a:b] = lstsq_fit(decay_design(gamma, b - a), y[a:b])[2]
    return out


def cv_mse_reference(y, gamma, lams):
    """Per-penalty cross-validated MSE and per-fold errors."""
    y = np.asarray(y, dtype=np.float64)
    folds = []
    for train_idx, test_idx in ((slice(0, None, 2), slice(1, None, 2)), (slice(1, None, 2), slice(0, None, 2))):
        train, test = y[train_idx], y[test_idx]
        cps_all, _ = op_changepoints(train, gamma * gamma, lams)
        errs = []
        for cps in cps_all:
            f = dense_fitted(train, cps, gamma * gamma)
            pred = [(f[i] + f[i + 1]) / 2 for i in range(len(f) - 1)]
            # a test sample between training samples i and i + 1
            offset = 0 if train_idx.start == 0 else 1
            sq = [(test[i + offset] - p) ** 2 for i, p in enumerate(pred)]
            errs.append(sum(sq) / len(sq))
        folds.append(errs)
    fold_mse = np.array(folds).T
    return fold_mse.mean(axis=1), fold_mse
