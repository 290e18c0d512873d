"""Exact l0-penalized spike inference for calcium imaging traces.

The fit minimizes ``0.5 * sum((y_t - c_t)^2) + lam * #{t : c_t != gamma c_{t-1}}``
over calcium traces ``c``. Each spike event splits the trace into segments
with independent closed-form fits, so the problem is an exactly solvable
changepoint problem.

>>> from l0spikes import deconvolve
>>> sol, fit = deconvolve([1.0, 0.5, 5.0, 2.5], 0.5, 0.1)
>>> sol.changepoints, fit.spike_times
((2,), (3,))
"""
from .bench import BenchConfig, BenchReport, run_bench
from .extended_costs import (
    ARp,
    ArpCostState,
    ArpParams,
    Intercept,
    InterceptCostState,
    SingularGram,
    UnstableRecursion,
    arp_cost_extend,
    arp_cost_init,
    arp_cost_value,
    intercept_cost_extend,
    intercept_cost_init,
    intercept_cost_value,
)
from .metrics import (
    HorizonMismatch,
    LengthMismatch,
    MetricParams,
    SpikeTrain,
    calcium_mse,
    threshold_spikes,
    van_rossum,
    victor_purpura,
)
from .model import (
    Ar1Params,
    ChangepointSolution,
    CostConsistencyError,
    EmptyTrace,
    FluorescenceTrace,
    InvalidChangepoints,
    InvalidGamma,
    InvalidPenalty,
    L0SpikesError,
    NonFiniteValue,
    Penalty,
    SpikeFit,
    validate_trace,
)
from .reconstruction import (
    PositivityReport,
    deconvolve,
    fit_objective,
    positivity_audit,
    reconstruct,
    reconstruct_ar1,
    reconstruct_arp,
    reconstruct_intercept,
)
from .segment_cost import (
    AR1,
    Ar1CostState,
    ar1_cost_extend,
    ar1_cost_init,
    ar1_cost_optimal_c,
    ar1_cost_value,
)
from .simulation import SimConfig, SimulatedTrace, simulate
from .solvers import UnknownAlgorithm, segmentation_objective, solve, solve_op, solve_pelt
from .tuning import (
    CvReport,
    DegenerateSegment,
    GammaEstimate,
    TraceTooShort,
    cross_validate,
    default_lambda_grid,
    estimate_gamma,
    find_lambda_for_k,
    lambda_path,
)

__version__ = "0.1.0"
