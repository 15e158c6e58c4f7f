"""Command-line frontend: ``sleap simulate | compare | validate | models``.

Exit codes: 0 success, 1 validation failure, 2 configuration or model
error, 3 solver abort.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from sleap.analysis import (
    ERROR_FIELDS,
    SPEEDUP_FIELDS,
    EnsembleSpec,
    ensemble_error,
    run_ensemble,
    self_distance_bound,
    speedup_report,
    trajectory_fields,
    trajectory_rows,
    tracked_species,
    write_csv,
)
from sleap.config import build_analysis_config, build_solver_config, load_config, setup_logging
from sleap.errors import ConfigurationError, EnsembleError, ModelParseError, SolverAbort
from sleap.model import describe_network, list_builtin, load_model
from sleap.sampling import RngStream
from sleap.solvers import CLI_NAMES, SolverKind, default_grid, run_trajectory
from sleap.validation import run_validation

logger = logging.getLogger(__name__)

METHODS = tuple(CLI_NAMES.values())

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from None


def _method(text: str) -> str:
    """Normalise a method name to its CLI spelling; enum values are accepted too."""
    try:
        return CLI_NAMES[SolverKind.parse(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"unknown method '{text}' (choose from {', '.join(METHODS)})",
        ) from None


def _method_list(text: str) -> list[str]:
    return [_method(m) for m in text.split(",") if m.strip()]


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", default="dimer_nonstiff", help="built-in model id or file:<path>")
    parser.add_argument("--t-end", type=float, default=10.0, help="final simulation time")
    parser.add_argument("--seed", type=int, default=None, help="ensemble seed (default: $SLEAP_SEED or 0)")
    parser.add_argument("--nc", type=int, default=None, dest="n_critical", help="critical threshold N_c")
    parser.add_argument("--theta", type=float, default=None, help="negative-control weight")
    parser.add_argument("--delta", type=float, default=None, help="partial-equilibrium tolerance")
    parser.add_argument("--reorder-period", type=int, default=None, help="steps between reaction reorders")
    parser.add_argument(
        "--no-ssa-fallback", dest="ssa_fallback", action="store_false", default=None,
        help="never replace short leaps by SSA bursts",
    )
    parser.add_argument(
        "--negative-control", dest="negative_control", action="store_true", default=None,
        help="bound firings by the negative-population control",
    )
    parser.add_argument("--jobs", type=int, default=None, help="worker processes")
    parser.add_argument("--out", default=None, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sleap", description="Stochastic simulation with leap methods")
    parser.add_argument("--config", default=None, help="YAML configuration file")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING...")
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", help="run trajectories and write trajectories.csv")
    _add_solver_flags(simulate)
    simulate.add_argument("--method", type=_method, default="s", help=" | ".join(METHODS))
    simulate.add_argument("--eps", type=float, default=None, help="leap accuracy epsilon")
    simulate.add_argument("--ns", type=int, default=1, help="number of trajectories")

    compare = sub.add_parser("compare", help="errors and speed-ups against an SSA reference")
    _add_solver_flags(compare)
    compare.add_argument("--methods", type=_method_list, default=["tau", "r", "s"])
    compare.add_argument("--eps", type=_float_list, default=None, help="comma-separated epsilons")
    compare.add_argument("--ns", type=int, default=None, help="trajectories per ensemble")
    compare.add_argument("--bins", type=int, default=None, help="histogram bins K")
    compare.add_argument("--repetitions", type=int, default=None, help="runs per speed-up timing")
    compare.add_argument("--track", default=None, help="comma-separated species to score")

    validate = sub.add_parser("validate", help="run the sampler and solver self-checks")
    validate.add_argument("--quick", action="store_true", help="smaller samples, looser thresholds")
    validate.add_argument("--seed", type=int, default=None)
    validate.add_argument("--corrupt-poisson", action="store_true", help=argparse.SUPPRESS)

    models = sub.add_parser("models", help="list built-in models or describe one")
    models.add_argument("model", nargs="?", default=None)
    return parser


def resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    env = os.environ.get("SLEAP_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise ConfigurationError(f"SLEAP_SEED must be an integer, got '{env}'") from None


def _solver_config(args, config: dict, epsilon: float | None):
    return build_solver_config(
        config.get("solver"),
        epsilon=epsilon,
        n_critical=args.n_critical,
        theta=args.theta,
        delta=args.delta,
        reorder_period=args.reorder_period,
        ssa_fallback=args.ssa_fallback,
        negative_control=args.negative_control,
    )


def cmd_simulate(args, config: dict) -> int:
    network = load_model(args.model)
    solver_config = _solver_config(args, config, args.eps)
    analysis = build_analysis_config(config.get("analysis"), jobs=args.jobs)
    kind = SolverKind.parse(args.method)
    seed = resolve_seed(args.seed)
    if args.ns < 1:
        raise ConfigurationError("--ns must be at least 1")

    rows = []
    if args.ns == 1:
        grid = default_grid(args.t_end, analysis.grid_points)
        trajectory = run_trajectory(network, kind, solver_config, RngStream(seed, 0), args.t_end, grid)
        rows.extend(trajectory_rows(network, trajectory.times, trajectory.states))
        steps = trajectory.stats.steps_total
    else:
        spec = EnsembleSpec(kind, args.t_end, solver_config, args.ns, analysis.grid_points, seed)
        ensemble = run_ensemble(network, spec, analysis.jobs)
        for k in range(args.ns):
            rows.extend(trajectory_rows(network, ensemble.times, ensemble.states[k], run_id=k))
        steps = ensemble.mean_steps
    path = Path(args.out) / "trajectories.csv" if args.out else None
    write_csv(rows, path, trajectory_fields(network))
    logger.info("%s: mean %.1f steps per trajectory", CLI_NAMES[kind], steps)
    return EXIT_OK


def cmd_compare(args, config: dict) -> int:
    network = load_model(args.model)
    analysis = build_analysis_config(
        config.get("analysis"),
        n_samples=args.ns,
        bins=args.bins,
        repetitions=args.repetitions,
        jobs=args.jobs,
    )
    seed = resolve_seed(args.seed)
    base = _solver_config(args, config, None)
    epsilons = args.eps or [base.epsilon]
    track = args.track.split(",") if args.track else None
    tracked_species(network, track)
    out = Path(args.out) if args.out else Path("results")

    bound = self_distance_bound(analysis.bins, analysis.n_samples)
    print(f"self-distance bound (K={analysis.bins}, N_s={analysis.n_samples}): {bound:.4f}")

    reference = run_ensemble(
        network,
        EnsembleSpec(SolverKind.SSA, args.t_end, base, analysis.n_samples, analysis.grid_points, seed),
        analysis.jobs,
    )
    print(f"{'method':<14}{'eps':>8}{'error':>10}{'bound':>10}{'steps':>12}{'speedup':>10}")
    for eps in epsilons:
        solver_config = _solver_config(args, config, eps)
        eps_dir = out / f"eps-{eps:g}"
        rows = speedup_report(
            network, args.methods, solver_config, args.t_end, analysis.repetitions, seed,
        )
        write_csv((row.as_dict() for row in rows), eps_dir / "speedup.csv", SPEEDUP_FIELDS)
        by_method = {row.method: row for row in rows}
        for method in args.methods:
            spec = EnsembleSpec(
                SolverKind.parse(method),
                args.t_end,
                solver_config,
                analysis.n_samples,
                analysis.grid_points,
                seed + 1,
            )
            ensemble = run_ensemble(network, spec, analysis.jobs)
            report = ensemble_error(ensemble, reference, track, analysis.bins)
            write_csv(report.rows, eps_dir / method / "errors.csv", ERROR_FIELDS)
            row = by_method[method]
            print(
                f"{method:<14}{eps:>8g}{report.mean:>10.4f}{report.bound:>10.4f}"
                f"{row.mean_steps:>12.1f}{row.speedup:>10.2f}",
            )
    return EXIT_OK


def cmd_validate(args, config: dict) -> int:
    results = run_validation(
        quick=args.quick, seed=resolve_seed(args.seed), corrupt_poisson=args.corrupt_poisson,
    )
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        checks = ", ".join(f"{k} p={p:.3g}" for k, p in result.checks.items())
        print(f"[{status}] {result.name}: {checks} {result.detail}".rstrip())
    return EXIT_OK if all(r.passed for r in results) else EXIT_VALIDATION


def cmd_models(args, config: dict) -> int:
    if args.model is None:
        for name in list_builtin():
            print(name)
        return EXIT_OK
    print(json.dumps(describe_network(load_model(args.model)), indent=2))
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "validate": cmd_validate,
    "models": cmd_models,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        setup_logging(args.log_level, config)
        return COMMANDS[args.command](args, config)
    except (ConfigurationError, ModelParseError, EnsembleError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (KeyError, FileNotFoundError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverAbort as e:
        print(f"Solver aborted: {e}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
