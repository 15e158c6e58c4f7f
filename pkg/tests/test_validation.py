import numpy as np
import pytest

from sleap import validation
from sleap.sampling import RngStream
from sleap.validation import (
    QUICK_ALPHA,
    cascade_sum_suite,
    permutation_suite,
    run_validation,
    sampling_suite,
)


def test_sampling_suite_passes():
    result = sampling_suite(RngStream(0), 5000, QUICK_ALPHA)
    assert result.passed
    assert {
        "discrete(3,1)",
        "gamma(1)~exponential",
        "poisson(5)",
        "binomial(20,0.3)",
    } <= set(result.checks)


def test_corrupted_poisson_is_caught():
    result = sampling_suite(RngStream(0), 2000, QUICK_ALPHA, corrupt_poisson=True)
    assert not result.passed
    assert "poisson" in result.detail


def test_cascade_suites_pass():
    assert cascade_sum_suite(RngStream(1), 5000, QUICK_ALPHA).passed
    permutation = permutation_suite(RngStream(2), 5000, QUICK_ALPHA)
    assert permutation.passed
    assert set(permutation.checks) == {"joint-vs-multinomial", "joint-across-orders"}


def test_order_dependent_cascade_is_caught(monkeypatch):
    cascade = validation.binomial_cascade

    def order_dependent(rng, L, view, order):
        k = cascade(rng, L, view, np.arange(view.a.size))
        return k if order[0] == 0 else k[::-1]

    monkeypatch.setattr(validation, "binomial_cascade", order_dependent)
    result = permutation_suite(RngStream(2), 2000, QUICK_ALPHA)
    assert not result.passed
    assert "joint-across-orders" in result.detail


@pytest.mark.slow
def test_quick_validation_passes():
    results = run_validation(quick=True)
    assert [r.name for r in results] == ["sampling", "cascade-sum", "permutation-invariance", "ssa-oracle"]
    assert all(r.passed for r in results)
