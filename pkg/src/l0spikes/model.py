"""Domain types shared by the solvers, reconstruction and tuning code.

Timesteps are 1-indexed everywhere a time is exposed to the user. An interior
changepoint ``tau`` closes the segment ``(..., tau]``; the spike event it
implies sits at timestep ``tau + 1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class L0SpikesError(Exception):
    """Base class for all errors raised by this package."""


class EmptyTrace(L0SpikesError, ValueError):
    pass


class NonFiniteValue(L0SpikesError, ValueError):
    """A sample is NaN or infinite. ``index`` is the 1-indexed timestep."""

    def __init__(self, index: int, message: str | None = None):
        self.index = index
        super().__init__(message or f"non-finite value at timestep {index}")


class InvalidGamma(L0SpikesError, ValueError):
    pass


class InvalidPenalty(L0SpikesError, ValueError):
    pass


class InvalidChangepoints(L0SpikesError, ValueError):
    pass


class CostConsistencyError(L0SpikesError, ArithmeticError):
    """A segment cost came out negative beyond floating-point slack."""


def _readonly(values, dtype=np.float64) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class FluorescenceTrace:
    """Observed fluorescence ``y_1..y_T``.

    Construction does not validate; call :func:`validate_trace` (the solvers
    do this for you).
    """

    values: np.ndarray
    sample_rate_hz: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))
        if self.sample_rate_hz is not None and not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def T(self) -> int:
        return self.values.shape[0]


def as_trace(data) -> FluorescenceTrace:
    if isinstance(data, FluorescenceTrace):
        return data
    return FluorescenceTrace(data)


def validate_trace(trace: FluorescenceTrace) -> FluorescenceTrace:
    """Return ``trace`` unchanged if it is non-empty and finite.

    Raises
    ------
    EmptyTrace
        If the trace has no samples.
    NonFiniteValue
        At the first NaN/Inf sample (1-indexed).
    """
    trace = as_trace(trace)
    if trace.T == 0:
        raise EmptyTrace("trace has no samples")
    bad = np.flatnonzero(~np.isfinite(trace.values))
    if bad.size:
        raise NonFiniteValue(int(bad[0]) + 1)
    return trace


def check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not (0.0 < gamma < 1.0):
        raise InvalidGamma(f"gamma must lie in (0, 1), got {gamma!r}")
    return gamma


@dataclass(frozen=True)
class Ar1Params:
    gamma: float

    def __post_init__(self):
        check_gamma(self.gamma)


@dataclass(frozen=True)
class Penalty:
    lam: float

    def __post_init__(self):
        lam = float(self.lam)
        if not (lam >= 0.0) or not np.isfinite(lam):
            raise InvalidPenalty(f"lambda must be a finite non-negative number, got {self.lam!r}")
        object.__setattr__(self, "lam", lam)


def check_lambda(lam) -> float:
    if isinstance(lam, Penalty):
        return lam.lam
    return Penalty(lam).lam


@dataclass(frozen=True)
class ChangepointSolution:
    """Result of an exact changepoint solve.

    ``changepoints`` are the interior boundaries ``tau_1 < ... < tau_k`` in
    ``[1, T-1]``. ``f_values`` holds ``F(0..T)`` with ``F(0) = -lambda``.
    ``pruning_set_sizes[s-1]`` is the number of candidates scanned at step
    ``s`` (PELT only).
    """

    changepoints: tuple
    optimal_objective: float
    n_timesteps: int
    lam: float
    algorithm: str = ""
    f_values: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    pruning_set_sizes: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "changepoints", tuple(int(t) for t in self.changepoints))
        if self.f_values is not None:
            object.__setattr__(self, "f_values", _readonly(self.f_values))
        if self.pruning_set_sizes is not None:
            object.__setattr__(self, "pruning_set_sizes", _readonly(self.pruning_set_sizes, np.int64))

    @property
    def k(self) -> int:
        return len(self.changepoints)

    @property
    def spike_times(self) -> tuple:
        return tuple(t + 1 for t in self.changepoints)

    def segments(self):
        """Yield 1-indexed inclusive ``(start, end)`` segment bounds."""
        return changepoints_to_segments(self.changepoints, self.n_timesteps)


@dataclass(frozen=True)
class SpikeFit:
    """Fitted calcium and the spike events implied by a set of changepoints.

    ``spike_times`` are 1-indexed; ``spike_magnitudes[j]`` is the jump in
    calcium at ``spike_times[j]``. ``intercepts`` is only set by the
    per-segment intercept model.
    """

    calcium: np.ndarray
    spike_times: tuple
    spike_magnitudes: np.ndarray
    intercepts: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "calcium", _readonly(self.calcium))
        object.__setattr__(self, "spike_times", tuple(int(t) for t in self.spike_times))
        object.__setattr__(self, "spike_magnitudes", _readonly(self.spike_magnitudes))
        if self.intercepts is not None:
            object.__setattr__(self, "intercepts", _readonly(self.intercepts))
        if len(self.spike_times) != self.spike_magnitudes.shape[0]:
            raise ValueError("spike_times and spike_magnitudes differ in length")

    @property
    def fitted(self) -> np.ndarray:
        """Fitted fluorescence: calcium plus intercept where present."""
        if self.intercepts is None:
            return self.calcium
        return self.calcium + self.intercepts

    @property
    def k(self) -> int:
        return len(self.spike_times)


def check_changepoints(changepoints: Sequence[int], T: int) -> tuple:
    cps = tuple(int(t) for t in changepoints)
    for prev, cur in zip(cps, cps[1:]):
        if cur <= prev:
            raise InvalidChangepoints(f"changepoints must be strictly increasing: {cps}")
    if cps and (cps[0] < 1 or cps[-1] > T - 1):
        raise InvalidChangepoints(f"changepoints must lie in [1, {T - 1}]: {cps}")
    return cps


def changepoints_to_segments(changepoints: Sequence[int], T: int):
    bounds = (0,) + tuple(changepoints) + (T,)
    return [(a + 1, b) for a, b in zip(bounds, bounds[1:])]
