import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from sleap.config import SolverConfig
from sleap.model import PropensityView, SystemState, all_propensities, parse_network
from sleap.sampling import RngStream
from sleap.stepping import (
    binomial_cascade,
    critical_reactions,
    explicit_tau,
    implicit_tau,
    in_partial_equilibrium,
    is_nonnegative,
    negative_control_L,
    partial_equilibrium,
    r_leap_L,
    reaction_capacity,
    reorder_schedule,
    s_leap_L,
)


def _view(*a):
    a = np.array(a, dtype=float)
    return PropensityView(a, float(a.sum()))


def _state(*x):
    return SystemState(np.array(x, dtype=np.int64), 0.0)


class TestCritical:
    def test_capacity_of_dimerization(self, dimer):
        capacity = reaction_capacity(dimer, dimer.initial_state())
        np.testing.assert_array_equal(capacity, [4150, 2075, 39565, 39565])

    def test_boundary_is_critical(self, config):
        network = parse_network("species A\nreaction R1 : A -> 0 ; rate 1\n")
        state = _state(10)
        view = all_propensities(network, state)
        assert critical_reactions(network, state, view, config).tolist() == [True]

    def test_rounded_capacity(self, config):
        network = parse_network("species A B\nreaction R1 : A + 2 B -> 0 ; rate 1\n")
        state = _state(10, 3)
        assert reaction_capacity(network, state)[0] == 2
        view = all_propensities(network, state)
        assert critical_reactions(network, state, view, config)[0]

    def test_zero_propensity_is_never_critical(self, config):
        network = parse_network("species A B\nreaction R1 : A + B -> 0 ; rate 1\n")
        state = _state(1, 0)
        view = all_propensities(network, state)
        assert not critical_reactions(network, state, view, config)[0]

    def test_no_threshold_no_critical(self, dimer):
        config = SolverConfig(n_critical=0)
        state = _state(2, 1, 1)
        view = all_propensities(dimer, state)
        assert not critical_reactions(dimer, state, view, config).any()


class TestTau:
    def test_single_decay(self, decay, config):
        state = decay.initial_state()
        view = all_propensities(decay, state)
        assert explicit_tau(decay, state, view, config) == pytest.approx(0.03)

    def test_everything_excluded(self, decay, config):
        state = decay.initial_state()
        view = all_propensities(decay, state)
        assert math.isinf(explicit_tau(decay, state, view, config, np.array([True])))
        assert explicit_tau(decay, state, view, config, np.array([True]), cap=2.5) == 2.5

    def test_cap_does_not_shorten_finite_tau(self, dimer, config):
        state = dimer.initial_state()
        view = all_propensities(dimer, state)
        tau = explicit_tau(dimer, state, view, config)
        assert math.isfinite(tau)
        assert explicit_tau(dimer, state, view, config, None, cap=1e-9) == tau
        critical = critical_reactions(dimer, state, view, config)
        assert implicit_tau(dimer, state, view, config, ~critical, cap=1e-9) == tau

    def test_numerator_clamps_to_one(self, decay, config):
        state = _state(5)
        view = all_propensities(decay, state)
        # eps * x / g = 0.15 < 1, so the bound is 1/|mu| = 1/5 and 1/sigma^2 = 1/5
        assert explicit_tau(decay, state, view, config) == pytest.approx(0.2)

    def test_implicit_equals_explicit_without_equilibrium(self, dimer, config):
        state = dimer.initial_state()
        view = all_propensities(dimer, state)
        critical = critical_reactions(dimer, state, view, config)
        assert implicit_tau(dimer, state, view, config, ~critical) == explicit_tau(
            dimer, state, view, config, critical,
        )

    def test_implicit_empty_set(self, dimer, config):
        state = dimer.initial_state()
        view = all_propensities(dimer, state)
        assert math.isinf(implicit_tau(dimer, state, view, config, np.zeros(4, dtype=bool)))

    def test_stiff_equilibrium_widens_step(self, stiff_dimer, stiff_equilibrium_state, config):
        view = all_propensities(stiff_dimer, stiff_equilibrium_state)
        pe = partial_equilibrium(stiff_dimer, view, config)
        assert pe.tolist() == [False, True, True, False]
        tau_ex = explicit_tau(stiff_dimer, stiff_equilibrium_state, view, config)
        tau_im = implicit_tau(stiff_dimer, stiff_equilibrium_state, view, config, ~pe)
        assert tau_im > 100 * tau_ex

    @settings(max_examples=40, deadline=None)
    @given(
        x=st.lists(st.integers(0, 5000), min_size=3, max_size=3),
        eps=st.tuples(st.floats(0.001, 0.5), st.floats(0.001, 0.5)).map(sorted),
    )
    def test_monotone_in_epsilon(self, x, eps):
        network = parse_network(
            "species S1 S2 S3\n"
            "reaction R1 : S1 -> 0 ; rate 1.0\n"
            "reaction R2 : 2 S1 -> S2 ; rate 0.002\n"
            "reaction R3 : S2 -> 2 S1 ; rate 0.5\n"
            "reaction R4 : S2 -> S3 ; rate 0.04\n",
        )
        state = _state(*x)
        view = all_propensities(network, state)
        small, large = SolverConfig(epsilon=eps[0]), SolverConfig(epsilon=eps[1])
        assert explicit_tau(network, state, view, small) <= explicit_tau(network, state, view, large)
        if view.a0 > 0:
            assert r_leap_L(network, state, view, small) <= r_leap_L(network, state, view, large)


class TestPartialEquilibrium:
    @pytest.mark.parametrize(
        ("a_plus", "a_minus", "expected"),
        [(100.0, 103.0, True), (100.0, 120.0, False), (0.0, 0.0, True)],
    )
    def test_threshold(self, a_plus, a_minus, expected):
        assert in_partial_equilibrium(a_plus, a_minus, 0.05) is expected


class TestFiringCounts:
    def test_r_leap_single_decay(self, decay, config):
        state = decay.initial_state()
        view = all_propensities(decay, state)
        assert r_leap_L(decay, state, view, config) == 3

    def test_r_leap_at_least_one(self, decay, config):
        state = _state(1)
        view = all_propensities(decay, state)
        assert r_leap_L(decay, state, view, config) == 1

    def test_r_leap_cap_when_unbounded(self, config):
        network = parse_network("species X\nreaction B : 0 -> X ; rate 3\n")
        state = _state(0)
        view = all_propensities(network, state)
        assert r_leap_L(network, state, view, config) == config.l_max

    def test_negative_control_hand_example(self, config):
        network = parse_network(
            "species A B\ninit 5 50\n"
            "reaction R1 : A -> 0 ; rate 1.8\n"
            "reaction R2 : B -> 0 ; rate 0.02\n",
        )
        state = network.initial_state()
        view = all_propensities(network, state)
        np.testing.assert_allclose(view.a, [9.0, 1.0])
        assert negative_control_L(network, state, view, config) == 5

    def test_negative_control_without_theta(self, bsubtilis):
        config = SolverConfig(theta=0.0)
        state = bsubtilis.initial_state()
        view = all_propensities(bsubtilis, state)
        capacity = reaction_capacity(bsubtilis, state)
        expected = int(capacity[(view.a > 0) & np.isfinite(capacity)].min())
        assert negative_control_L(bsubtilis, state, view, config) == expected

    def test_negative_control_unbounded(self, config):
        network = parse_network("species X\nreaction B : 0 -> X ; rate 3\n")
        state = _state(4)
        view = all_propensities(network, state)
        assert negative_control_L(network, state, view, config) == config.l_max

    def test_s_leap_total(self, rng):
        assert s_leap_L(rng, 0.0, 1.0) == 0
        draws = np.array([s_leap_L(rng, 25.0, 2.0) for _ in range(50_000)])
        assert draws.mean() == pytest.approx(50.0, abs=0.1)


class TestCascade:
    def test_single_channel_takes_everything(self, rng):
        k = binomial_cascade(rng, 17, _view(4.0), np.array([0]))
        assert k.tolist() == [17]
        assert rng.draws == 0

    def test_zero_propensity_never_fires(self, rng):
        view = _view(2.0, 0.0, 3.0)
        for _ in range(500):
            assert binomial_cascade(rng, 20, view, np.array([1, 0, 2]))[1] == 0

    def test_early_exit(self, rng):
        k = binomial_cascade(rng, 9, _view(5.0, 0.0, 0.0), np.array([0, 1, 2]))
        assert k.tolist() == [9, 0, 0]
        assert rng.draws == 0

    def test_marginal_means(self, rng):
        view = _view(5.0, 3.0, 2.0)
        order = np.array([0, 1, 2])
        k = np.array([binomial_cascade(rng, 1000, view, order) for _ in range(20_000)])
        p = view.a / view.a0
        se = np.sqrt(1000 * p * (1 - p) / len(k))
        assert np.all(np.abs(k.mean(axis=0) - 1000 * p) < 3 * se)

    @settings(max_examples=100, deadline=None)
    @given(
        a=st.lists(st.floats(0.0, 1e4), min_size=1, max_size=8).filter(lambda a: sum(a) > 0),
        L=st.integers(0, 10**6),
        seed=st.integers(0, 2**32),
        data=st.data(),
    )
    def test_sum_is_exact(self, a, L, seed, data):
        order = np.array(data.draw(st.permutations(range(len(a)))))
        k = binomial_cascade(RngStream(seed), L, _view(*a), order)
        assert k.sum() == L
        assert np.all(k >= 0)

    def test_permutation_invariance(self):
        view = _view(1.0, 2.0, 3.0)
        counts = []
        for seed, order in ((1, [0, 1, 2]), (2, [2, 0, 1])):
            rng = RngStream(seed)
            draws = [tuple(binomial_cascade(rng, 4, view, np.array(order))) for _ in range(20_000)]
            counts.append(draws)
        outcomes = sorted(set(counts[0]) | set(counts[1]))
        table = np.array([[c.count(o) for o in outcomes] for c in counts])
        # lump rare outcomes so every expected cell is comfortably populated
        common = table.sum(axis=0) >= 100
        if not common.all():
            table = np.column_stack([table[:, common], table[:, ~common].sum(axis=1)])
        assert stats.chi2_contingency(table).pvalue > 0.01


class TestReorder:
    def test_sorts_by_decreasing_propensity(self):
        order = reorder_schedule(_view(1.0, 5.0, 3.0), 0, 10000, np.arange(3))
        assert order.tolist() == [1, 2, 0]

    def test_unchanged_between_periods(self):
        current = np.array([2, 0, 1])
        assert reorder_schedule(_view(1.0, 5.0, 3.0), 1, 10000, current) is current

    def test_stable_ties(self):
        order = reorder_schedule(_view(2.0, 2.0, 2.0), 20000, 10000, np.array([2, 1, 0]))
        assert order.tolist() == [0, 1, 2]


def test_nonnegativity_check(dimer):
    state = _state(1, 0, 0)
    assert is_nonnegative(state, np.array([1, 0, 0, 0]), dimer)
    assert not is_nonnegative(state, np.array([0, 1, 0, 0]), dimer)
