"""Synthetic fluorescence from the autoregressive calcium model.

Spike counts are i.i.d. Poisson, calcium follows
``c_t = sum_i gamma_i c_{t-i} + z_t`` with ``c_1 = c_init + z_1``, and the
observation is ``y_t = beta0 + beta1 c_t + N(0, sigma^2)``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .metrics import SpikeTrain
from .model import FluorescenceTrace

BIT_GENERATOR = "PCG64"
NORMAL_TRANSFORM = "ziggurat (numpy Generator.standard_normal)"


@dataclass(frozen=True)
class SimConfig:
    T: int
    gamma: Union[float, tuple] = 0.96
    sigma: float = 0.15
    theta: float = 0.01
    beta0: float = 0.0
    beta1: float = 1.0
    seed: int = 0
    c_init: float = 0.0

    def __post_init__(self):
        if int(self.T) < 1:
            raise ValueError("T must be at least 1")
        if not self.sigma >= 0:
            raise ValueError("sigma must be non-negative")
        if not self.theta >= 0:
            raise ValueError("theta must be non-negative")

    @property
    def gammas(self) -> tuple:
        return tuple(float(g) for g in np.atleast_1d(self.gamma))


@dataclass(frozen=True)
class SimulatedTrace:
    trace: FluorescenceTrace
    true_calcium: np.ndarray
    true_spike_counts: np.ndarray
    true_spike_train: SpikeTrain
    metadata: dict = field(default_factory=dict)


def simulate(config: SimConfig) -> SimulatedTrace:
    T = int(config.T)
    gammas = config.gammas
    rng = np.random.Generator(np.random.PCG64(config.seed))
    z = rng.poisson(config.theta, size=T).astype(np.int64)
    noise = rng.standard_normal(T)

    c = np.empty(T)
    zf = z.astype(np.float64).tolist()
    cl = [0.0] * T
    cl[0] = config.c_init + zf[0]
    if len(gammas) == 1:
        g = gammas[0]
        for t in range(1, T):
            cl[t] = g * cl[t - 1] + zf[t]
    else:
        for t in range(1, T):
            acc = 0.0
            for i, g in enumerate(gammas, start=1):
                if t - i >= 0:
                    acc += g * cl[t - i]
            cl[t] = acc + zf[t]
    c[:] = cl

    y = config.beta0 + config.beta1 * c + config.sigma * noise
    meta = {
        "bit_generator": BIT_GENERATOR,
        "normal_transform": NORMAL_TRANSFORM,
        "draw_order": "poisson(T) then standard_normal(T)",
        "seed": config.seed,
        "T": T,
        "gamma": list(gammas),
        "sigma": config.sigma,
        "theta": config.theta,
        "beta0": config.beta0,
        "beta1": config.beta1,
        "c_init": config.c_init,
    }
    c.setflags(write=False)
    z.setflags(write=False)
    return SimulatedTrace(FluorescenceTrace(y), c, z, SpikeTrain.from_counts(z), meta)


def write_simulation_csv(sim: SimulatedTrace, fh) -> None:
    """Columns ``t, y, c_true, z_true``; floats with 17 significant digits."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t", "y", "c_true", "z_true"])
    for t, (y, c, z) in enumerate(zip(sim.trace.values, sim.true_calcium, sim.true_spike_counts), start=1):
        w.writerow([t, f"{y:.17g}", f"{c:.17g}", int(z)])
