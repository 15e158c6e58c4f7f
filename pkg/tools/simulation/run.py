"""Trajectory simulation and model inspection tools."""

from sleap.config import build_solver_config
from sleap.errors import SleapError
from sleap.model import describe_network, list_builtin, load_model
from sleap.sampling import RngStream
from sleap.solvers import CLI_NAMES, SolverKind, default_grid, run_trajectory

MAX_TRAJECTORIES = 1000


def simulate_model(
    model: str,
    method: str = "s",
    epsilon: float = 0.03,
    t_end: float = 10.0,
    seed: int = 0,
    n_trajectories: int = 1,
    grid_points: int = 25,
    negative_control: bool = False,
    ssa_fallback: bool = True,
) -> dict:
    """Simulate a reaction network with one of the six samplers.

    Args:
        model: Built-in model id (see list_builtin_models) or file:<path>
        method: ssa, tau, tau-adaptive, r, s or s-adaptive
        epsilon: Leap accuracy parameter, 0 < epsilon < 1
        t_end: Final simulation time
        seed: Ensemble seed; trajectory k uses stream (seed, k)
        n_trajectories: Number of independent trajectories (at most 1000)
        grid_points: Equally spaced readout times in (0, t_end]
        negative_control: Bound firings by the negative-population control
        ssa_fallback: Replace very short leaps by bursts of SSA steps

    Returns:
        dict: Grid times, species names, populations per trajectory and step statistics

    """
    try:
        if not 1 <= n_trajectories <= MAX_TRAJECTORIES:
            return {"success": False, "error": f"n_trajectories must be in [1, {MAX_TRAJECTORIES}]"}
        network = load_model(model)
        kind = SolverKind.parse(method)
        config = build_solver_config(
            epsilon=epsilon, negative_control=negative_control, ssa_fallback=ssa_fallback,
        )
        grid = default_grid(t_end, grid_points)

        trajectories = []
        stats = []
        for k in range(n_trajectories):
            trajectory = run_trajectory(network, kind, config, RngStream(seed, k), t_end, grid)
            trajectories.append(trajectory.states.tolist())
            stats.append(trajectory.stats.as_dict())

        return {
            "success": True,
            "model": network.name,
            "method": CLI_NAMES[kind],
            "times": grid.tolist(),
            "species": list(network.species_names),
            "trajectories": trajectories,
            "stats": stats,
        }
    except (SleapError, KeyError, ValueError, OSError) as e:
        return {"success": False, "error": f"Simulation failed: {e!s}"}


def list_builtin_models() -> dict:
    """List the built-in benchmark models.

    Returns:
        dict: Model ids with species and reaction counts

    """
    try:
        models = []
        for name in list_builtin():
            network = load_model(name)
            models.append(
                {
                    "name": name,
                    "n_species": network.n_species,
                    "n_reactions": network.n_reactions,
                },
            )
        return {"success": True, "models": models}
    except SleapError as e:
        return {"success": False, "error": f"Failed to load built-in models: {e!s}"}


def describe_model(model: str) -> dict:
    """Describe a model: species, reactions, reversible pairs, reaction orders.

    Args:
        model: Built-in model id or file:<path>

    """
    try:
        return {"success": True, **describe_network(load_model(model))}
    except (SleapError, KeyError, OSError) as e:
        return {"success": False, "error": f"Failed to describe model: {e!s}"}


__all__ = [
    "describe_model",
    "list_builtin_models",
    "simulate_model",
]
