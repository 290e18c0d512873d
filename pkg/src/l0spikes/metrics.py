"""Error measures for calcium estimates and inferred spike trains."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.signal import lfilter

from .model import L0SpikesError


class LengthMismatch(L0SpikesError, ValueError):
    pass


class HorizonMismatch(L0SpikesError, ValueError):
    pass


@dataclass(frozen=True)
class SpikeTrain:
    """Integer spike times in ``[1, horizon]``; repeats mean several spikes."""

    times: tuple
    horizon: int

    def __post_init__(self):
        times = tuple(sorted(int(t) for t in self.times))
        horizon = int(self.horizon)
        if horizon < 1:
            raise ValueError("horizon must be at least 1")
        if times and (times[0] < 1 or times[-1] > horizon):
            raise ValueError(f"spike times must lie in [1, {horizon}]")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "horizon", horizon)

    def __len__(self) -> int:
        return len(self.times)

    @classmethod
    def from_counts(cls, counts: Sequence[int], multiplicity: bool = False) -> "SpikeTrain":
        """Train from per-timestep counts; by default one spike per active step."""
        counts = np.asarray(counts)
        steps = np.flatnonzero(counts > 0) + 1
        if multiplicity:
            steps = np.repeat(steps, counts[counts > 0].astype(np.int64))
        return cls(tuple(steps.tolist()), counts.shape[0])

    def counts(self) -> np.ndarray:
        return np.bincount(np.asarray(self.times, dtype=np.int64) - 1, minlength=self.horizon)[: self.horizon]


@dataclass(frozen=True)
class MetricParams:
    tau: float = 2.0
    q: float = 1.0

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not self.q >= 0:
            raise ValueError("q must be non-negative")


def calcium_mse(c_true, c_hat) -> float:
    c_true = np.asarray(c_true, dtype=np.float64)
    c_hat = np.asarray(c_hat, dtype=np.float64)
    if c_true.shape != c_hat.shape:
        raise LengthMismatch(f"lengths differ: {c_true.shape[0]} vs {c_hat.shape[0]}")
    if c_true.size == 0:
        raise LengthMismatch("empty sequences")
    return float(np.mean((c_true - c_hat) ** 2))


def van_rossum(a: SpikeTrain, b: SpikeTrain, params: MetricParams = MetricParams()) -> float:
    """Mean squared difference of the causally filtered trains.

    Each train becomes ``f_t = exp(-1/tau) f_{t-1} + count_t``; the distance
    is ``mean((f - g)^2)`` over the ``T`` timesteps.
    """
    if a.horizon != b.horizon:
        raise HorizonMismatch(f"horizons differ: {a.horizon} vs {b.horizon}")
    diff = (a.counts() - b.counts()).astype(np.float64)
    decay = np.exp(-1.0 / params.tau)
    f = lfilter([1.0], [1.0, -decay], diff)
    return float(np.mean(f * f))


def victor_purpura(a: SpikeTrain, b: SpikeTrain, params: MetricParams = MetricParams()) -> float:
    """Minimum insert/delete/shift cost of turning ``a`` into ``b``.

    Insertions and deletions cost 1; moving a spike by ``dt`` costs
    ``q * |dt|``. Horizons need not match.
    """
    ta, tb = a.times, b.times
    q = params.q
    n, m = len(ta), len(tb)
    if q == 0:
        return float(abs(n - m))
    prev = np.arange(m + 1, dtype=np.float64)
    for i in range(1, n + 1):
        cur = np.empty(m + 1)
        cur[0] = i
        for j in range(1, m + 1):
            cur[j] = min(prev[j] + 1.0, cur[j - 1] + 1.0, prev[j - 1] + q * abs(ta[i - 1] - tb[j - 1]))
        prev = cur
    return float(prev[m])


def threshold_spikes(magnitudes: Iterable, L: float, horizon: int | None = None) -> SpikeTrain:
    """Keep the ``(t, s_t)`` events with ``s_t >= L``."""
    if not L >= 0:
        raise ValueError("threshold must be non-negative")
    pairs = [(int(t), float(s)) for t, s in magnitudes]
    if horizon is None:
        horizon = max([t for t, _ in pairs], default=1)
    return SpikeTrain(tuple(t for t, s in pairs if s >= L), horizon)
