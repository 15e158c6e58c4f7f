"""Accuracy and performance comparison tools."""

from sleap.analysis import (
    EnsembleSpec,
    ensemble_error,
    run_ensemble,
    self_distance_bound,
    speedup_report,
)
from sleap.config import build_solver_config
from sleap.errors import SleapError
from sleap.model import load_model
from sleap.solvers import CLI_NAMES, SolverKind
from sleap.validation import run_validation

MAX_SAMPLES = 10000


def compare_methods(
    model: str,
    methods: list[str] | None = None,
    epsilon: float = 0.03,
    t_end: float = 10.0,
    n_samples: int = 1000,
    bins: int = 10,
    seed: int = 0,
    track: list[str] | None = None,
) -> dict:
    """Histogram-distance error of leap methods against an SSA reference ensemble.

    Args:
        model: Built-in model id or file:<path>
        methods: Methods to score (default tau, r, s)
        epsilon: Leap accuracy parameter
        t_end: Final simulation time
        n_samples: Trajectories per ensemble (at most 10000)
        bins: Histogram bins K
        seed: Ensemble seed
        track: Species to score (default all; LacZ models use the reporter species)

    Returns:
        dict: Mean error per method next to the self-distance bound

    """
    try:
        if not 2 <= n_samples <= MAX_SAMPLES:
            return {"success": False, "error": f"n_samples must be in [2, {MAX_SAMPLES}]"}
        network = load_model(model)
        config = build_solver_config(epsilon=epsilon)
        kinds = [SolverKind.parse(m) for m in (methods or ["tau", "r", "s"])]
        reference = run_ensemble(
            network, EnsembleSpec(SolverKind.SSA, t_end, config, n_samples, seed=seed),
        )
        errors = {}
        for kind in kinds:
            ensemble = run_ensemble(
                network, EnsembleSpec(kind, t_end, config, n_samples, seed=seed + 1),
            )
            report = ensemble_error(ensemble, reference, track, bins)
            errors[CLI_NAMES[kind]] = {
                "mean_error": report.mean,
                "mean_steps": ensemble.mean_steps,
            }
        return {
            "success": True,
            "model": network.name,
            "epsilon": epsilon,
            "self_distance": self_distance_bound(bins, n_samples),
            "errors": errors,
        }
    except (SleapError, KeyError, ValueError, OSError) as e:
        return {"success": False, "error": f"Comparison failed: {e!s}"}


def step_count_report(
    model: str,
    methods: list[str] | None = None,
    epsilon: float = 0.05,
    t_end: float = 10.0,
    repetitions: int = 10,
    seed: int = 0,
) -> dict:
    """Mean steps, wall time and speed-up over SSA for each method.

    Args:
        model: Built-in model id or file:<path>
        methods: Methods to time; SSA is always included as the baseline
        epsilon: Leap accuracy parameter
        t_end: Final simulation time
        repetitions: Trajectories averaged per method
        seed: Ensemble seed

    """
    try:
        network = load_model(model)
        rows = speedup_report(
            network,
            methods or ["tau", "r", "s"],
            build_solver_config(epsilon=epsilon),
            t_end,
            repetitions,
            seed,
        )
        return {"success": True, "model": network.name, "rows": [row.as_dict() for row in rows]}
    except (SleapError, KeyError, ValueError, OSError) as e:
        return {"success": False, "error": f"Step count report failed: {e!s}"}


def validate_suites(quick: bool = True, seed: int = 0) -> dict:
    """Run the sampler, cascade and SSA self-check suites.

    Args:
        quick: Smaller samples and looser thresholds
        seed: Seed for the suites' random streams

    """
    try:
        results = run_validation(quick=quick, seed=seed)
        return {
            "success": True,
            "passed": all(r.passed for r in results),
            "suites": [r.as_dict() for r in results],
        }
    except (SleapError, ValueError) as e:
        return {"success": False, "error": f"Validation failed to run: {e!s}"}


__all__ = [
    "compare_methods",
    "step_count_report",
    "validate_suites",
]
