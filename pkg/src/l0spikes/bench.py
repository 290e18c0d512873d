"""Wall-clock scaling study of the two solvers on simulated traces.

Each cell of the ``(T, theta, seed)`` grid is simulated once, then every
algorithm is timed on the same trace with :func:`time.perf_counter`. The
reported time is the median over ``repeats`` runs, taken after ``warmup``
untimed runs; simulation and I/O are outside the timed region.
"""
from __future__ import annotations

import csv
import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from .segment_cost import AR1
from .simulation import SimConfig, simulate
from .solvers import solve_op, solve_pelt

CSV_COLUMNS = (
    "algorithm", "T", "theta", "seed", "wall_time_s",
    "mean_pruned_set", "max_pruned_set", "objective",
)
_SOLVERS = {"op": solve_op, "pelt": solve_pelt}


@dataclass(frozen=True)
class BenchConfig:
    lengths: tuple = (1000, 2000)
    thetas: tuple = (0.1, 0.01, 0.001)
    gamma: float = 0.998
    sigma: float = 0.15
    lam: float = 1.0
    seeds: tuple = tuple(range(10))
    repeats: int = 1
    warmup: int = 1
    algorithms: tuple = ("op", "pelt")

    def __post_init__(self):
        for name in ("lengths", "thetas", "seeds", "algorithms"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not self.lengths or any(int(T) < 1 for T in self.lengths):
            raise ValueError("lengths must be positive integers")
        if any(b <= a for a, b in zip(self.lengths, self.lengths[1:])):
            raise ValueError("lengths must be strictly ascending")
        if not self.thetas or any(not th > 0 for th in self.thetas):
            raise ValueError("thetas must be positive")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if not 0 < self.gamma < 1 or not self.sigma > 0 or not self.lam > 0:
            raise ValueError("gamma must lie in (0, 1); sigma and lambda must be positive")
        if self.repeats < 1 or self.warmup < 0:
            raise ValueError("repeats must be >= 1 and warmup >= 0")
        unknown = set(self.algorithms) - set(_SOLVERS)
        if unknown or not self.algorithms:
            raise ValueError(f"algorithms must be drawn from {sorted(_SOLVERS)}")


@dataclass(frozen=True)
class BenchRow:
    algorithm: str
    T: int
    theta: float
    seed: int
    wall_time_s: float
    mean_pruned_set: float
    max_pruned_set: int
    objective: float


@dataclass(frozen=True)
class CellSummary:
    algorithm: str
    T: int
    theta: float
    mean_time_s: float
    sd_time_s: float
    mean_pruned_set: float
    max_pruned_set: int
    n: int


@dataclass
class BenchReport:
    config: BenchConfig
    rows: list = field(default_factory=list)
    # (T, theta, seed) cells where the algorithms disagree on the objective
    mismatches: list = field(default_factory=list)

    def summary(self) -> dict:
        """Per ``(algorithm, T, theta)`` statistics over seeds."""
        groups: dict = {}
        for r in self.rows:
            groups.setdefault((r.algorithm, r.T, r.theta), []).append(r)
        out = {}
        for key, rows in groups.items():
            times = [r.wall_time_s for r in rows]
            out[key] = CellSummary(
                *key,
                mean_time_s=statistics.fmean(times),
                sd_time_s=statistics.stdev(times) if len(times) > 1 else 0.0,
                mean_pruned_set=statistics.fmean(r.mean_pruned_set for r in rows),
                max_pruned_set=max(r.max_pruned_set for r in rows),
                n=len(rows),
            )
        return out

    def mean_time(self, algorithm: str, T: int, theta: float) -> float:
        return self.summary()[(algorithm, T, theta)].mean_time_s

    def time_ratio(self, algorithm: str, T_small: int, T_large: int, theta: float) -> float:
        s = self.summary()
        return s[(algorithm, T_large, theta)].mean_time_s / s[(algorithm, T_small, theta)].mean_time_s

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([
                r.algorithm, r.T, f"{r.theta:.17g}", r.seed, f"{r.wall_time_s:.17g}",
                f"{r.mean_pruned_set:.17g}", r.max_pruned_set, f"{r.objective:.17g}",
            ])

    def format_table(self) -> str:
        header = f"{'algorithm':<9} {'T':>8} {'theta':>7} {'mean s':>11} {'sd s':>11} {'mean|E|':>10} {'max|E|':>8}"
        lines = [header, "-" * len(header)]
        for (alg, T, theta), c in sorted(self.summary().items(), key=lambda kv: (kv[0][0], kv[0][1], -kv[0][2])):
            lines.append(
                f"{alg:<9} {T:>8d} {theta:>7g} {c.mean_time_s:>11.5f} {c.sd_time_s:>11.5f} "
                f"{c.mean_pruned_set:>10.1f} {c.max_pruned_set:>8d}"
            )
        if self.mismatches:
            lines.append(f"objective mismatches: {len(self.mismatches)} cells")
        return "\n".join(lines)


def _time_solver(fn, y, model, lam, repeats, warmup):
    for _ in range(warmup):
        fn(y, model, lam)
    times = []
    sol = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        sol = fn(y, model, lam)
        times.append(time.perf_counter() - t0)
    return statistics.median(times), sol


def run_bench(config: BenchConfig, progress=None) -> BenchReport:
    """Time each algorithm on every grid cell; cells run sequentially."""
    model = AR1(config.gamma)
    # compile the kernels outside any timed region
    for alg in config.algorithms:
        _SOLVERS[alg](np.zeros(4), model, config.lam)
    report = BenchReport(config)
    for T in config.lengths:
        for theta in config.thetas:
            for seed in config.seeds:
                sim = simulate(SimConfig(int(T), config.gamma, config.sigma, theta, seed=seed))
                y = sim.trace
                objectives = {}
                for alg in config.algorithms:
                    t, sol = _time_solver(_SOLVERS[alg], y, model, config.lam, config.repeats, config.warmup)
                    if sol.pruning_set_sizes is not None:
                        sizes = sol.pruning_set_sizes
                        mean_e, max_e = float(sizes.mean()), int(sizes.max())
                    else:
                        mean_e, max_e = (T + 1) / 2.0, int(T)
                    objectives[alg] = sol.optimal_objective
                    report.rows.append(BenchRow(alg, int(T), float(theta), int(seed), t, mean_e, max_e, sol.optimal_objective))
                    if progress is not None:
                        progress(report.rows[-1])
                if len(set(objectives.values())) > 1:
                    report.mismatches.append((int(T), float(theta), int(seed)))
    return report
