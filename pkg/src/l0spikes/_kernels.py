"""Compiled inner loops for the built-in cost models.

Every quantity that depends only on segment length (powers of gamma, the
power sums, the AR(p) impulse responses and Gram factors) is tabulated once
per solve. Each candidate changepoint then carries only the data-dependent
running sums, extended by one sample per step.

The arithmetic for a given ``(tau, s)`` pair is the same whether or not
pruning is on, so the pruned and unpruned solvers produce bit-identical
``F`` values.
"""
import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_NEGATIVE_COST = 1
STATUS_UNSTABLE = 2
STATUS_SINGULAR = 3

_EPS = np.finfo(np.float64).eps


@njit(cache=True, nogil=True)
def ar1_tables(gamma, T):
    """Rows ``n = 1..T``: ``[gamma^(n-1), sum_{k<n} gamma^(2k)]``."""
    tab = np.empty((T + 1, 2))
    tab[0, 0] = 0.0
    tab[0, 1] = 0.0
    gpow = 1.0
    denom = 1.0 - gamma * gamma
    for n in range(1, T + 1):
        if n > 1:
            gpow = gpow * gamma
        g2n = gpow * gamma
        g2n = g2n * g2n
        tab[n, 0] = gpow
        tab[n, 1] = (1.0 - g2n) / denom
    return tab


@njit(cache=True, nogil=True)
def intercept_tables(gamma, T):
    """Rows ``n = 1..T``: ``[gamma^(n-1), mean, centered SS, sum, sum of squares]``
    of the regressor ``gamma^k, k < n``."""
    tab = np.zeros((T + 1, 5))
    gpow = 1.0
    mean = 1.0
    m2 = 0.0
    denom1 = 1.0 - gamma
    denom2 = 1.0 - gamma * gamma
    for n in range(1, T + 1):
        if n > 1:
            gpow = gpow * gamma
            delta = gpow - mean
            mean = mean + delta / n
            m2 = m2 + delta * (gpow - mean)
        g2n = gpow * gamma
        g2n = g2n * g2n
        tab[n, 0] = gpow
        tab[n, 1] = mean
        tab[n, 2] = m2
        tab[n, 3] = (1.0 - gpow * gamma) / denom1
        tab[n, 4] = (1.0 - g2n) / denom2
    return tab


@njit(cache=True, nogil=True)
def arp_tables(gammas, T, phi_limit, rank_tol):
    """Impulse responses, Gram matrices and their Cholesky factors by length.

    Returns ``(phi, gram, chol, valid_len, reason)``; lengths beyond
    ``valid_len`` are unusable because the recursion blew up (reason 2) or
    the Gram matrix lost rank (reason 3).
    """
    p = gammas.shape[0]
    phi = np.zeros((T + 1, p))
    gram = np.zeros((T + 1, p, p))
    chol = np.zeros((T + 1, p, p))
    for n in range(1, T + 1):
        u = n - 1
        if u < p:
            phi[n, u] = 1.0
        else:
            for i in range(p):
                for j in range(p):
                    phi[n, j] += gammas[i] * phi[n - 1 - i, j]
            for j in range(p):
                if abs(phi[n, j]) > phi_limit:
                    return phi, gram, chol, n - 1, STATUS_UNSTABLE
        for i in range(p):
            for j in range(p):
                gram[n, i, j] = gram[n - 1, i, j] + phi[n, i] * phi[n, j]
        if n > p:
            for j in range(p):
                d = gram[n, j, j]
                for k in range(j):
                    d -= chol[n, j, k] * chol[n, j, k]
                if not d > rank_tol * gram[n, j, j]:
                    return phi, gram, chol, n - 1, STATUS_SINGULAR
                chol[n, j, j] = np.sqrt(d)
                for i in range(j + 1, p):
                    v = gram[n, i, j]
                    for k in range(j):
                        v -= chol[n, i, k] * chol[n, j, k]
                    chol[n, i, j] = v / chol[n, j, j]
    return phi, gram, chol, T, STATUS_OK


@njit(cache=True, nogil=True, inline="always")
def _clamp(d, scale, n):
    slack = 1e-12 + 64.0 * _EPS * n * scale
    if d > slack:
        return d, STATUS_OK
    if d >= -slack:
        return 0.0, STATUS_OK
    return d, STATUS_NEGATIVE_COST


@njit(cache=True, nogil=True, inline="always")
def _ar1_value(st, j, n, ys, hs, tab):
    st[j, 0] += hs
    st[j, 1] += ys * tab[n, 0]
    h = st[j, 0]
    s = st[j, 1]
    g2 = tab[n, 1]
    c = s / g2
    return _clamp(h - c * s + 0.5 * c * c * g2, h, n)


@njit(cache=True, nogil=True, inline="always")
def _intercept_value(st, j, n, ys, hs, tab):
    # st[j] = [H, sum y g, sum y]
    st[j, 0] += hs
    st[j, 1] += ys * tab[n, 0]
    st[j, 2] += ys
    if n == 1:
        return 0.0, STATUS_OK
    h = st[j, 0]
    syg = st[j, 1]
    sy = st[j, 2]
    mean_g = tab[n, 1]
    m2_g = tab[n, 2]
    if m2_g > 1e-15 * n:
        ybar = sy / n
        sxy = syg - sy * mean_g
        syy = 2.0 * h - sy * ybar
        c = sxy / m2_g
        return _clamp(0.5 * (syy - c * sxy), h * (1.0 + n / m2_g), n)
    g1 = tab[n, 3]
    g2 = tab[n, 4]
    tr = n + g2
    beta0 = (n * sy + g1 * syg) / (tr * tr)
    c = (g1 * sy + g2 * syg) / (tr * tr)
    return _clamp(h - 0.5 * (beta0 * sy + c * syg), h, n)


@njit(cache=True, nogil=True, inline="always")
def _arp_value(st, j, n, ys, hs, phi, gram, chol, p, work):
    # st[j] = [H, m_0..m_{p-1}]
    st[j, 0] += hs
    for i in range(p):
        st[j, 1 + i] += ys * phi[n, i]
    if n <= p:
        return 0.0, STATUS_OK
    h = st[j, 0]
    for i in range(p):
        v = st[j, 1 + i]
        for k in range(i):
            v -= chol[n, i, k] * work[k]
        work[i] = v / chol[n, i, i]
    for i in range(p - 1, -1, -1):
        v = work[i]
        for k in range(i + 1, p):
            v -= chol[n, k, i] * work[p + k]
        work[p + i] = v / chol[n, i, i]
    cm = 0.0
    cgc = 0.0
    for i in range(p):
        ci = work[p + i]
        cm += ci * st[j, 1 + i]
        row = 0.0
        for k in range(p):
            row += gram[n, i, k] * work[p + k]
        cgc += ci * row
    return _clamp(h - cm + 0.5 * cgc, h, n)


@njit(cache=True, nogil=True, inline="always")
def _advance(cand, st, dval, F, ncand, best, s, T, width, prune):
    """Prune (if asked) and append candidate ``s``; return the new count."""
    if prune:
        m = 0
        for j in range(ncand):
            if F[cand[j]] + dval[j] <= best:
                if m != j:
                    cand[m] = cand[j]
                    for w in range(width):
                        st[m, w] = st[j, w]
                m += 1
        ncand = m
    if s < T:
        cand[ncand] = s
        for w in range(width):
            st[ncand, w] = 0.0
        ncand += 1
    return ncand


@njit(cache=True, nogil=True)
def _alloc(T, lam, width):
    F = np.empty(T + 1)
    F[0] = -lam
    back = np.zeros(T + 1, dtype=np.int64)
    sizes = np.zeros(T, dtype=np.int64)
    cand = np.empty(T, dtype=np.int64)
    cand[0] = 0
    st = np.zeros((T, width))
    dval = np.empty(T)
    return F, back, sizes, cand, st, dval


# The three solvers below share one recursion; they differ only in the cost
# evaluated per candidate. Each returns (F, back, sizes, status, s, tau) where
# sizes[s-1] is the number of candidates scanned at step s. Ties in the argmin
# go to the smallest candidate; pruning keeps candidates whose partial cost
# ties F(s).


@njit(cache=True, nogil=True)
def dp_ar1(y, lam, tab, prune):
    T = y.shape[0]
    F, back, sizes, cand, st, dval = _alloc(T, lam, 2)
    ncand = 1
    for s in range(1, T + 1):
        ys = y[s - 1]
        hs = ys * ys / 2.0
        best = np.inf
        arg = -1
        for j in range(ncand):
            tau = cand[j]
            d, status = _ar1_value(st, j, s - tau, ys, hs, tab)
            if status != STATUS_OK:
                return F, back, sizes, status, s, tau
            dval[j] = d
            v = F[tau] + d + lam
            if v < best:
                best = v
                arg = tau
        F[s] = best
        back[s] = arg
        sizes[s - 1] = ncand
        ncand = _advance(cand, st, dval, F, ncand, best, s, T, 2, prune)
    return F, back, sizes, STATUS_OK, 0, 0


@njit(cache=True, nogil=True)
def dp_intercept(y, lam, tab, prune):
    T = y.shape[0]
    F, back, sizes, cand, st, dval = _alloc(T, lam, 3)
    ncand = 1
    for s in range(1, T + 1):
        ys = y[s - 1]
        hs = ys * ys / 2.0
        best = np.inf
        arg = -1
        for j in range(ncand):
            tau = cand[j]
            d, status = _intercept_value(st, j, s - tau, ys, hs, tab)
            if status != STATUS_OK:
                return F, back, sizes, status, s, tau
            dval[j] = d
            v = F[tau] + d + lam
            if v < best:
                best = v
                arg = tau
        F[s] = best
        back[s] = arg
        sizes[s - 1] = ncand
        ncand = _advance(cand, st, dval, F, ncand, best, s, T, 3, prune)
    return F, back, sizes, STATUS_OK, 0, 0


@njit(cache=True, nogil=True)
def dp_arp(y, lam, phi, gram, chol, valid_len, prune):
    T = y.shape[0]
    p = phi.shape[1]
    width = 1 + p
    F, back, sizes, cand, st, dval = _alloc(T, lam, width)
    work = np.empty(2 * p)
    ncand = 1
    for s in range(1, T + 1):
        ys = y[s - 1]
        hs = ys * ys / 2.0
        best = np.inf
        arg = -1
        for j in range(ncand):
            tau = cand[j]
            n = s - tau
            if n > valid_len:
                return F, back, sizes, STATUS_UNSTABLE, s, tau
            d, status = _arp_value(st, j, n, ys, hs, phi, gram, chol, p, work)
            if status != STATUS_OK:
                return F, back, sizes, status, s, tau
            dval[j] = d
            v = F[tau] + d + lam
            if v < best:
                best = v
                arg = tau
        F[s] = best
        back[s] = arg
        sizes[s - 1] = ncand
        ncand = _advance(cand, st, dval, F, ncand, best, s, T, width, prune)
    return F, back, sizes, STATUS_OK, 0, 0


@njit(cache=True, nogil=True)
def ar_fill(c, starts, ends, gammas):
    """Fill each segment past its first ``p`` values by the AR recursion.

    ``c`` already holds the free values at each segment head; segments are
    the 0-based half-open ranges ``[starts[j], ends[j])``. Products are
    accumulated starting from the lag-1 term so that for ``p = 1`` every
    filled value is exactly ``gamma * c[t-1]``.
    """
    p = gammas.shape[0]
    for j in range(starts.shape[0]):
        a = starts[j]
        for t in range(a + p, ends[j]):
            acc = gammas[0] * c[t - 1]
            for i in range(1, p):
                acc += gammas[i] * c[t - 1 - i]
            c[t] = acc
    return c
