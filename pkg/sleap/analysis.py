"""Ensembles, histogram distances and performance reports.

Accuracy is measured against an SSA reference ensemble: at each grid time
and tracked species the two empirical distributions are binned on shared
edges and compared with ``d = delta * sum_k |P(k) - Q(k)|``, where ``P`` and
``Q`` are densities (``delta * sum_k P(k) == 1``). ``d`` lies in ``[0, 2]``.
"""

import csv
import logging
import math
import sys
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from sleap.config import SolverConfig
from sleap.errors import EnsembleError
from sleap.model import ReactionNetwork
from sleap.sampling import RngStream
from sleap.solvers import CLI_NAMES, SolverKind, StepStats, default_grid, run_trajectory

logger = logging.getLogger(__name__)

TRAJECTORY_FIELDS = ("run_id", "time")
ERROR_FIELDS = ("time", "species", "d", "self_distance")
SPEEDUP_FIELDS = ("method", "mean_steps", "mean_wall_ms", "speedup")

LACZ_TRACKED = ("TrLacZ2", "TrRbsLacZ", "RbsribosomeLacY")


@dataclass(frozen=True)
class EnsembleSpec:
    """What to run: one solver on one network, ``n_samples`` trajectories."""

    kind: SolverKind
    t_end: float
    config: SolverConfig = field(default_factory=SolverConfig)
    n_samples: int = 10000
    grid_points: int = 25
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 2:
            raise EnsembleError(f"an ensemble needs at least 2 trajectories, got {self.n_samples}")
        if self.t_end < 0:
            raise EnsembleError(f"t_end must be nonnegative, got {self.t_end}")

    @property
    def grid(self) -> np.ndarray:
        return default_grid(self.t_end, self.grid_points)


@dataclass
class Ensemble:
    """Grid readouts of every trajectory, indexed ``[run, time, species]``."""

    network: ReactionNetwork
    spec: EnsembleSpec
    states: np.ndarray
    stats: list[StepStats]

    @property
    def times(self) -> np.ndarray:
        return self.spec.grid

    @property
    def mean_steps(self) -> float:
        return float(np.mean([s.steps_total for s in self.stats]))

    @property
    def mean_wall_time(self) -> float:
        return float(np.mean([s.wall_time for s in self.stats]))


@dataclass(frozen=True)
class HistogramPair:
    edges: np.ndarray
    p: np.ndarray
    q: np.ndarray

    @property
    def delta(self) -> float:
        return float(self.edges[1] - self.edges[0])

    @property
    def distance(self) -> float:
        return self.delta * float(np.sum(np.abs(self.p - self.q)))


def histogram_pair(sample_a, sample_b, bins: int = 10) -> HistogramPair | None:
    """Bin both samples on ``bins`` equal bins over their pooled range.

    Returns None when the pooled range is a single point.

    Raises:
        EnsembleError: either sample is empty

    """
    a = np.asarray(sample_a, dtype=float).ravel()
    b = np.asarray(sample_b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise EnsembleError("histogram distance needs two nonempty samples")
    lo = min(a.min(), b.min())
    hi = max(a.max(), b.max())
    if lo == hi:
        return None
    edges = np.linspace(lo, hi, bins + 1)
    width = edges[1] - edges[0]
    counts_a, _ = np.histogram(a, bins=edges)
    counts_b, _ = np.histogram(b, bins=edges)
    return HistogramPair(edges, counts_a / (a.size * width), counts_b / (b.size * width))


def histogram_distance(sample_a, sample_b, bins: int = 10) -> float:
    pair = histogram_pair(sample_a, sample_b, bins)
    # both samples are the same constant
    if pair is None:
        return 0.0
    return pair.distance


def self_distance_bound(bins: int, n_samples: int) -> float:
    """Expected distance between two ensembles of the same distribution."""
    return math.sqrt(4.0 * bins / (math.pi * n_samples))


def _run_chunk(network, spec, indices):
    # module level so ProcessPoolExecutor can pickle it
    grid = spec.grid
    results = []
    for k in indices:
        rng = RngStream(spec.seed, k)
        trajectory = run_trajectory(network, spec.kind, spec.config, rng, spec.t_end, grid)
        results.append((k, trajectory.states, trajectory.stats))
    return results


def run_ensemble(network: ReactionNetwork, spec: EnsembleSpec, jobs: int = 1) -> Ensemble:
    """Run ``spec.n_samples`` trajectories, trajectory ``k`` on stream ``(seed, k)``.

    Results are identical for any ``jobs``.
    """
    n = spec.n_samples
    logger.info(
        "Running %d %s trajectories of %s to t=%g (jobs=%d)",
        n, spec.kind.value, network.name, spec.t_end, jobs,
    )
    if jobs <= 1:
        chunks = [_run_chunk(network, spec, range(n))]
    else:
        bounds = np.linspace(0, n, min(jobs, n) * 4 + 1).astype(int)
        ranges = [range(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            futures = [executor.submit(_run_chunk, network, spec, r) for r in ranges]
            chunks = [future.result() for future in futures]

    states = np.zeros((n, spec.grid.size, network.n_species), dtype=np.int64)
    stats: list[StepStats | None] = [None] * n
    for chunk in chunks:
        for k, trajectory_states, trajectory_stats in chunk:
            states[k] = trajectory_states
            stats[k] = trajectory_stats
    return Ensemble(network, spec, states, stats)


@dataclass
class ErrorReport:
    rows: list[dict]
    bound: float

    @property
    def mean(self) -> float:
        return float(np.mean([row["d"] for row in self.rows])) if self.rows else 0.0


def tracked_species(network: ReactionNetwork, names: Sequence[str] | None = None) -> list[int]:
    """Species indices to score; LacZ models default to the three reporter species."""
    if names is None and all(s in network.species_names for s in LACZ_TRACKED):
        names = LACZ_TRACKED
    if names is None:
        return list(range(network.n_species))
    try:
        return [network.species_index(s) for s in names]
    except KeyError as e:
        raise EnsembleError(f"cannot track {e}") from e


def ensemble_error(
    test: Ensemble,
    reference: Ensemble,
    species: Sequence[str] | None = None,
    bins: int = 10,
) -> ErrorReport:
    """Histogram distance per (grid time, species), plus the self-distance bound.

    Raises:
        EnsembleError: the ensembles use different grids or networks

    """
    if test.times.shape != reference.times.shape or not np.allclose(test.times, reference.times):
        raise EnsembleError("test and reference ensembles use different time grids")
    if test.network.species_names != reference.network.species_names:
        raise EnsembleError("test and reference ensembles simulate different networks")

    n_samples = min(test.states.shape[0], reference.states.shape[0])
    bound = self_distance_bound(bins, n_samples)
    rows = []
    for g, t in enumerate(test.times):
        for i in tracked_species(test.network, species):
            d = histogram_distance(test.states[:, g, i], reference.states[:, g, i], bins)
            rows.append(
                {
                    "time": float(t),
                    "species": test.network.species_names[i],
                    "d": d,
                    "self_distance": bound,
                },
            )
    return ErrorReport(rows, bound)


@dataclass(frozen=True)
class SpeedupRow:
    method: str
    mean_steps: float
    mean_wall_ms: float
    speedup: float
    draws_per_step: float = 0.0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def speedup_report(
    network: ReactionNetwork,
    kinds: Iterable["SolverKind | str"],
    config: SolverConfig | None,
    t_end: float,
    repetitions: int = 10,
    seed: int = 0,
    baseline: Ensemble | None = None,
) -> list[SpeedupRow]:
    """Mean steps and wall time per method, speed-up relative to SSA.

    The SSA baseline row comes first and is always included. A precomputed
    SSA ``baseline`` ensemble can be reused instead of rerunning it.
    """
    kinds = [SolverKind.parse(k) for k in kinds]
    kinds = [SolverKind.SSA] + [k for k in kinds if k is not SolverKind.SSA]

    measured = {}
    for kind in kinds:
        if kind is SolverKind.SSA and baseline is not None:
            stats = baseline.stats
        else:
            stats = []
            for k in range(repetitions):
                rng = RngStream(seed, k)
                stats.append(run_trajectory(network, kind, config, rng, t_end).stats)
        steps = float(np.mean([s.steps_total for s in stats]))
        wall = float(np.mean([s.wall_time for s in stats]))
        draws = float(np.sum([s.rng_draws for s in stats]))
        total_steps = float(np.sum([s.steps_total for s in stats]))
        measured[kind] = (steps, wall, draws / total_steps if total_steps else 0.0)

    ssa_wall = measured[SolverKind.SSA][1]
    rows = []
    for kind in kinds:
        steps, wall, draws = measured[kind]
        speedup = ssa_wall / wall if wall > 0 else math.inf
        rows.append(SpeedupRow(CLI_NAMES[kind], steps, wall * 1000.0, speedup, draws))
    return rows


def trajectory_rows(
    network: ReactionNetwork, times: np.ndarray, states: np.ndarray, run_id: int = 0,
) -> list[dict]:
    rows = []
    for t, x in zip(times, states):
        row = {"run_id": run_id, "time": float(t)}
        row.update({name: int(v) for name, v in zip(network.species_names, x)})
        rows.append(row)
    return rows


def trajectory_fields(network: ReactionNetwork) -> list[str]:
    return list(TRAJECTORY_FIELDS) + list(network.species_names)


def write_csv(rows: Iterable[dict], path: "str | Path | None", fieldnames: Sequence[str]) -> None:
    """Write rows with a fixed header; ``path`` None writes to stdout.

    Columns not in ``fieldnames`` are dropped.
    """
    if path is None:
        _write_rows(sys.stdout, rows, fieldnames)
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        _write_rows(f, rows, fieldnames)
    logger.info("Wrote %s", path)


def _write_rows(f, rows, fieldnames):
    writer = csv.DictWriter(f, fieldnames=list(fieldnames), extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)


__all__ = [
    "ERROR_FIELDS",
    "Ensemble",
    "EnsembleSpec",
    "ErrorReport",
    "HistogramPair",
    "LACZ_TRACKED",
    "SPEEDUP_FIELDS",
    "SpeedupRow",
    "ensemble_error",
    "histogram_distance",
    "histogram_pair",
    "run_ensemble",
    "self_distance_bound",
    "speedup_report",
    "trajectory_fields",
    "trajectory_rows",
    "tracked_species",
    "write_csv",
]
