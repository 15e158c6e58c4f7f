import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sleap.analysis import (
    ERROR_FIELDS,
    SPEEDUP_FIELDS,
    EnsembleSpec,
    ensemble_error,
    histogram_distance,
    histogram_pair,
    run_ensemble,
    self_distance_bound,
    speedup_report,
    trajectory_fields,
    trajectory_rows,
    tracked_species,
    write_csv,
)
from sleap.config import SolverConfig
from sleap.errors import EnsembleError
from sleap.model import load_builtin
from sleap.solvers import SolverKind

samples = st.lists(st.integers(0, 200), min_size=1, max_size=200)


class TestHistogramDistance:
    def test_hand_example(self):
        pair = histogram_pair([0] * 50 + [10] * 50, [0] * 100, 2)
        assert pair.edges.tolist() == [0.0, 5.0, 10.0]
        assert pair.p.tolist() == [0.1, 0.1]
        assert pair.q.tolist() == [0.2, 0.0]
        assert histogram_distance([0] * 50 + [10] * 50, [0] * 100, 2) == 1.0

    def test_identical_samples(self):
        sample = [1, 2, 2, 3, 7, 9]
        assert histogram_distance(sample, sample) == 0.0

    def test_disjoint_supports(self):
        assert histogram_distance([0] * 10, [10] * 10) == pytest.approx(2.0)

    def test_equal_constants(self):
        assert histogram_distance([4] * 30, [4] * 12) == 0.0

    def test_empty_sample(self):
        with pytest.raises(EnsembleError):
            histogram_distance([], [1, 2])

    def test_densities_integrate_to_one(self):
        pair = histogram_pair(np.arange(100), np.arange(50, 300), 10)
        assert pair.delta * pair.p.sum() == pytest.approx(1.0, abs=1e-9)
        assert pair.delta * pair.q.sum() == pytest.approx(1.0, abs=1e-9)

    @given(a=samples, b=samples)
    def test_symmetric_and_bounded(self, a, b):
        d = histogram_distance(a, b)
        assert d == histogram_distance(b, a)
        assert -1e-12 <= d <= 2.0 + 1e-12

    @settings(max_examples=50)
    @given(a=samples, b=samples, scale=st.sampled_from([2, 4, 8]))
    def test_scale_consistent(self, a, b, scale):
        d = histogram_distance(a, b)
        scaled = histogram_distance(np.array(a) * scale, np.array(b) * scale)
        assert scaled == pytest.approx(d, abs=1e-9)


class TestSelfDistance:
    def test_values(self):
        assert self_distance_bound(10, 10_000) == pytest.approx(0.03568, abs=1e-5)
        assert self_distance_bound(10, 1_000) == pytest.approx(0.11284, abs=1e-5)
        assert self_distance_bound(10, 100) == pytest.approx(0.3568, abs=1e-4)

    def test_vanishes_for_large_ensembles(self):
        assert self_distance_bound(10, 10**12) < 1e-5


class TestEnsembles:
    @pytest.fixture
    def spec(self):
        return EnsembleSpec(SolverKind.S_LEAP, t_end=2.0, n_samples=6, seed=3)

    def test_spec_validation(self):
        with pytest.raises(EnsembleError):
            EnsembleSpec(SolverKind.SSA, t_end=1.0, n_samples=1)

    def test_independent_of_parallelism(self, isomerization, spec):
        serial = run_ensemble(isomerization, spec, jobs=1)
        parallel = run_ensemble(isomerization, spec, jobs=2)
        np.testing.assert_array_equal(serial.states, parallel.states)
        assert serial.states.shape == (6, 25, 2)

    def test_trajectories_differ(self, isomerization, spec):
        ensemble = run_ensemble(isomerization, spec)
        assert len({tuple(s[:, 0]) for s in ensemble.states}) > 1

    def test_error_rows(self, isomerization, spec):
        test = run_ensemble(isomerization, spec)
        reference = run_ensemble(
            isomerization, EnsembleSpec(SolverKind.SSA, t_end=2.0, n_samples=6, seed=4),
        )
        report = ensemble_error(test, reference, bins=10)
        assert len(report.rows) == 25 * 2
        assert set(report.rows[0]) == set(ERROR_FIELDS)
        assert report.bound == pytest.approx(self_distance_bound(10, 6))
        assert 0.0 <= report.mean <= 2.0

    def test_species_subset(self, isomerization, spec):
        ensemble = run_ensemble(isomerization, spec)
        report = ensemble_error(ensemble, ensemble, species=["S2"])
        assert {row["species"] for row in report.rows} == {"S2"}
        assert report.mean == 0.0

    def test_mismatched_grids(self, isomerization, spec):
        a = run_ensemble(isomerization, spec)
        b = run_ensemble(isomerization, EnsembleSpec(SolverKind.SSA, t_end=3.0, n_samples=6))
        with pytest.raises(EnsembleError, match="grid"):
            ensemble_error(a, b)

    def test_lacz_tracks_reporter_species(self):
        network = load_builtin("lacz_big")
        names = [network.species_names[i] for i in tracked_species(network)]
        assert names == ["TrLacZ2", "TrRbsLacZ", "RbsribosomeLacY"]

    def test_unknown_tracked_species(self, isomerization):
        with pytest.raises(EnsembleError):
            tracked_species(isomerization, ["S9"])


def test_speedup_report_baseline(bsubtilis):
    rows = speedup_report(bsubtilis, ["s", "ssa"], None, t_end=2.0, repetitions=2)
    assert [row.method for row in rows] == ["ssa", "s"]
    assert rows[0].speedup == 1.0
    assert all(row.mean_steps > 0 for row in rows)


def test_csv_outputs(tmp_path, isomerization):
    spec = EnsembleSpec(SolverKind.SSA, t_end=1.0, n_samples=2, grid_points=5)
    ensemble = run_ensemble(isomerization, spec)
    rows = trajectory_rows(isomerization, ensemble.times, ensemble.states[1], run_id=1)
    path = tmp_path / "out" / "trajectories.csv"
    write_csv(rows, path, trajectory_fields(isomerization))
    with open(path, newline="") as f:
        read = list(csv.DictReader(f))
    assert list(read[0]) == ["run_id", "time", "S1", "S2"]
    assert len(read) == 5
    assert all(int(r["S1"]) + int(r["S2"]) == 40 for r in read)

    speed = tmp_path / "speedup.csv"
    write_csv([{"method": "ssa", "mean_steps": 1, "mean_wall_ms": 2, "speedup": 1, "extra": 0}], speed, SPEEDUP_FIELDS)
    assert speed.read_text().splitlines()[0] == "method,mean_steps,mean_wall_ms,speedup"


@pytest.mark.slow
class TestAccuracy:
    def test_ssa_self_distance(self, isomerization):
        spec = EnsembleSpec(SolverKind.SSA, t_end=5.0, n_samples=1000, seed=0)
        a = run_ensemble(isomerization, spec)
        b = run_ensemble(isomerization, EnsembleSpec(SolverKind.SSA, t_end=5.0, n_samples=1000, seed=1))
        report = ensemble_error(a, b)
        assert report.bound == pytest.approx(0.1128, abs=1e-4)
        assert report.mean <= 2 * report.bound

    def test_leap_error_shrinks_with_epsilon(self, dimer):
        # SSA needs about 3.5e4 steps per unit time here, so the reference stops at t=0.2
        t_end = 0.2
        reference = run_ensemble(dimer, EnsembleSpec(SolverKind.SSA, t_end=t_end, n_samples=1000, seed=100))
        for kind in (SolverKind.TAU_EXPLICIT, SolverKind.R_LEAP, SolverKind.S_LEAP):
            errors = []
            for eps in (0.05, 0.03, 0.01):
                spec = EnsembleSpec(kind, t_end=t_end, config=SolverConfig(epsilon=eps), n_samples=1000)
                errors.append(ensemble_error(run_ensemble(dimer, spec), reference))
            bound = errors[0].bound
            means = [report.mean for report in errors]
            # half a bound of slack absorbs the sampling noise of 1000-run means
            assert means[1] <= means[0] + bound / 2
            assert means[2] <= means[1] + bound / 2
            assert means[2] <= 3 * bound
