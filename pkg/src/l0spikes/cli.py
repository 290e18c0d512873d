"""Command-line front end.

Subcommands: ``simulate``, ``fit``, ``cv``, ``metrics`` and ``bench``. Exit
status is 0 on success, 1 when a computation or file read fails and 2 for
bad usage.
"""
from __future__ import annotations

import argparse
import json
import sys
from contextlib import contextmanager


from . import csvio
from .bench import BenchConfig, run_bench
from .extended_costs import ARp, Intercept
from .metrics import MetricParams, calcium_mse, van_rossum, victor_purpura
from .model import L0SpikesError, check_gamma
from .reconstruction import fit_objective, positivity_audit, reconstruct
from .segment_cost import AR1
from .simulation import SimConfig, simulate, write_simulation_csv
from .solvers import solve
from .tuning import InvalidGrid, check_grid, cross_validate, default_lambda_grid, find_lambda_for_k

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@contextmanager
def _open_out(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            yield fh


def _floats(text: str, what: str) -> list:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{what}: expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise UsageError(f"{what}: empty list")
    return vals


def _emit_json(obj, path=None) -> None:
    text = json.dumps(obj, indent=2, allow_nan=False)
    with _open_out(path) as fh:
        fh.write(text + "\n")


def _emit_summary(obj, args) -> None:
    """``--summary`` if given, else stdout, or stderr when stdout holds the CSV."""
    if args.summary:
        _emit_json(obj, args.summary)
    elif args.output in (None, "-"):
        print(json.dumps(obj, indent=2, allow_nan=False), file=sys.stderr)
    else:
        _emit_json(obj)


def _config_block(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func",)}


def _cost_model(args):
    if args.model == "arp":
        if args.gammas is None:
            raise UsageError("--model arp needs --gammas")
        if args.gamma is not None:
            raise UsageError("--gamma and --gammas are mutually exclusive")
        return ARp(tuple(_floats(args.gammas, "--gammas")))
    if args.gammas is not None:
        raise UsageError("--gammas is only valid with --model arp")
    if args.gamma is None:
        raise UsageError(f"--model {args.model} needs --gamma")
    try:
        gamma = check_gamma(args.gamma)
    except L0SpikesError as exc:
        raise UsageError(str(exc)) from None
    return AR1(gamma) if args.model == "ar1" else Intercept(gamma)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    gamma = tuple(_floats(args.gammas, "--gammas")) if args.gammas else args.gamma
    try:
        cfg = SimConfig(
            T=args.T, gamma=gamma, sigma=args.sigma, theta=args.theta,
            beta0=args.beta0, beta1=args.beta1, seed=args.seed, c_init=args.c_init,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    sim = simulate(cfg)
    with _open_out(args.output) as fh:
        write_simulation_csv(sim, fh)
    if args.metadata:
        _emit_json(sim.metadata, args.metadata)
    return EXIT_OK


def _fit_block(sol) -> dict:
    return {"lambda": sol.lam, "k": sol.k, "objective": sol.optimal_objective,
            "spike_times": list(sol.spike_times)}


def cmd_fit(args) -> int:
    model = _cost_model(args)
    if args.lam is not None and args.lam < 0:
        raise UsageError("--lambda must be non-negative")
    if args.target_spikes is not None and args.target_spikes < 0:
        raise UsageError("--target-spikes must be non-negative")
    trace = csvio.read_trace(args.input)
    warnings = []
    summary = {}
    if args.target_spikes is not None:
        search = find_lambda_for_k(trace, model, args.target_spikes, args.algorithm)
        sol = search.solution
        summary["target_spikes"] = args.target_spikes
        summary["target_reached"] = search.exact
        if not search.exact:
            warnings.append(f"no penalty yields exactly {args.target_spikes} spike events")
            summary["bracket"] = {
                "more_spikes": _fit_block(search.lower) if search.lower is not None else None,
                "fewer_spikes": _fit_block(search.upper) if search.upper is not None else None,
            }
    else:
        sol = solve(trace, model, args.lam, args.algorithm)
    fit = reconstruct(trace, sol.changepoints, model)
    if sol.k > trace.T / 2:
        warnings.append(f"{sol.k} spike events exceed half the trace length; the penalty may be too small")
    audit = positivity_audit(fit)
    summary.update({
        "T": trace.T,
        "k": sol.k,
        "objective": sol.optimal_objective,
        "recomputed_objective": fit_objective(trace, fit, sol.lam),
        "lambda": sol.lam,
        "model": getattr(model, "name", type(model).__name__),
        "algorithm": sol.algorithm,
        "positivity_audit": {
            "all_nonnegative": audit.all_nonnegative,
            "violations": [[t, m] for t, m in audit.violations],
        },
        "warnings": warnings,
        "config": _config_block(args),
    })
    with _open_out(args.output) as fh:
        csvio.write_fit(fh, trace, fit)
    _emit_summary(summary, args)
    return EXIT_OK


def cmd_cv(args) -> int:
    model = _cost_model(args)
    trace = csvio.read_trace(args.input)
    if args.lambdas is not None:
        try:
            lambdas = check_grid(_floats(args.lambdas, "--lambdas"))
        except (InvalidGrid, L0SpikesError) as exc:
            raise UsageError(f"--lambdas: {exc}") from None
    else:
        if args.n_lambdas < 1:
            raise UsageError("--n-lambdas must be positive")
        lambdas = default_lambda_grid(trace, args.n_lambdas)
    rep = cross_validate(trace, model, lambdas, args.algorithm, workers=args.workers)
    with _open_out(args.output) as fh:
        fh.write("index,lambda,cv_mse,cv_se,fold1_mse,fold2_mse,spike_count\n")
        for m in range(rep.lambdas.shape[0]):
            fh.write(",".join([
                str(m), csvio.fmt(rep.lambdas[m]), csvio.fmt(rep.cv_mse[m]), csvio.fmt(rep.cv_se[m]),
                csvio.fmt(rep.fold_mse[m, 0]), csvio.fmt(rep.fold_mse[m, 1]), str(int(rep.spike_counts[m])),
            ]) + "\n")
    summary = {
        "selected_min": rep.selected_min,
        "selected_one_se": rep.selected_one_se,
        "lambda_min": rep.lambda_min,
        "lambda_one_se": rep.lambda_one_se,
        "k_min": int(rep.spike_counts[rep.selected_min]),
        "k_one_se": int(rep.spike_counts[rep.selected_one_se]),
        "config": _config_block(args),
    }
    _emit_summary(summary, args)
    return EXIT_OK


def cmd_metrics(args) -> int:
    try:
        params = MetricParams(tau=args.tau, q=args.vp_q)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.threshold is not None and not args.threshold >= 0:
        raise UsageError("--threshold must be non-negative")
    a, ca = csvio.read_spikes(args.truth)
    b, cb = csvio.read_spikes(args.estimate, threshold=args.threshold)
    out = {
        "horizon": a.horizon,
        "n_truth": len(a),
        "n_estimate": len(b),
        "van_rossum": van_rossum(a, b, params),
        "victor_purpura": victor_purpura(a, b, params),
        "tau": params.tau,
        "vp_q": params.q,
        "threshold": args.threshold,
    }
    if ca is not None and cb is not None:
        out["calcium_mse"] = calcium_mse(ca, cb)
    _emit_json(out, args.output)
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        lengths = [int(v) for v in _floats(args.lengths, "--lengths")]
        cfg = BenchConfig(
            lengths=lengths,
            thetas=_floats(args.thetas, "--thetas"),
            gamma=args.gamma, sigma=args.sigma, lam=args.lam,
            seeds=tuple(range(args.seed0, args.seed0 + args.seeds)),
            repeats=args.repeats, warmup=args.warmup,
            algorithms=tuple(a.strip() for a in args.algorithms.split(",")),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rep = run_bench(cfg)
    with _open_out(args.output) as fh:
        rep.write_csv(fh)
    if args.output not in (None, "-"):
        print(rep.format_table())
    if rep.mismatches:
        print(f"error: objectives differ between algorithms on {rep.mismatches}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def _add_model_flags(p):
    p.add_argument("--model", choices=("ar1", "intercept", "arp"), default="ar1")
    p.add_argument("--gamma", type=float, help="decay rate for ar1 and intercept")
    p.add_argument("--gammas", help="comma-separated AR coefficients for arp")
    p.add_argument("--algorithm", choices=("op", "pelt", "auto"), default="auto")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="l0spikes", description="Exact l0 spike inference for calcium traces.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a simulated trace")
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--gamma", type=float, default=0.96)
    p.add_argument("--gammas", help="comma-separated AR coefficients (overrides --gamma)")
    p.add_argument("--sigma", type=float, default=0.15)
    p.add_argument("--theta", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--beta0", type=float, default=0.0)
    p.add_argument("--beta1", type=float, default=1.0)
    p.add_argument("--c-init", type=float, default=0.0)
    p.add_argument("-o", "--output")
    p.add_argument("--metadata", help="write generator metadata as JSON here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit a trace at a penalty or a target spike count")
    p.add_argument("--input", "-i", required=True)
    _add_model_flags(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--lambda", dest="lam", type=float)
    g.add_argument("--target-spikes", type=int)
    p.add_argument("-o", "--output", help="fit CSV (default stdout)")
    p.add_argument("--summary", help="JSON summary path (default stdout, or stderr if the CSV goes to stdout)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("cv", help="cross-validate the penalty")
    p.add_argument("--input", "-i", required=True)
    _add_model_flags(p)
    p.add_argument("--lambdas", help="comma-separated ascending penalties")
    p.add_argument("--n-lambdas", type=int, default=50, help="size of the default grid")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-o", "--output")
    p.add_argument("--summary")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("metrics", help="compare an estimated spike train against the truth")
    p.add_argument("--truth", required=True)
    p.add_argument("--estimate", required=True)
    p.add_argument("--tau", type=float, default=2.0, help="van Rossum timescale in timesteps")
    p.add_argument("--vp-q", type=float, default=1.0, help="Victor-Purpura cost per timestep of shift")
    p.add_argument("--threshold", type=float, help="drop estimated spikes below this magnitude")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("bench", help="time both solvers on simulated traces")
    p.add_argument("--lengths", default="1000,2000")
    p.add_argument("--thetas", default="0.1,0.01,0.001")
    p.add_argument("--gamma", type=float, default=0.998)
    p.add_argument("--sigma", type=float, default=0.15)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--seeds", type=int, default=3, help="seeds per cell")
    p.add_argument("--seed0", type=int, default=0)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--warmup", type=int, default=1)
    p.add_argument("--algorithms", default="op,pelt")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (L0SpikesError, OSError, ValueError, ArithmeticError) as exc:
        print(f"{parser.prog} {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
