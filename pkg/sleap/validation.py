"""Self-check suites run by ``sleap validate``.

Each suite returns a :class:`SuiteResult`; a suite passes when every one of
its statistical tests has a p-value above the significance level (0.01, or
0.001 in quick mode with smaller samples).
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from sleap.model import PropensityView, load_builtin
from sleap.sampling import (
    RngStream,
    sample_binomial,
    sample_discrete,
    sample_exponential,
    sample_gamma,
    sample_poisson,
)
from sleap.solvers import SolverKind, run_trajectory
from sleap.stepping import binomial_cascade

logger = logging.getLogger(__name__)

ALPHA = 0.01
QUICK_ALPHA = 0.001


@dataclass
class SuiteResult:
    name: str
    passed: bool
    checks: dict[str, float] = field(default_factory=dict)
    detail: str = ""

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "checks": self.checks,
            "detail": self.detail,
        }


def discrete_chisquare(samples, pmf: Callable, cdf: Callable, sf: Callable) -> float:
    """Chi-square goodness-of-fit p-value for integer samples.

    Values whose expected count is below 5 are lumped into the two tail bins.
    """
    samples = np.asarray(samples, dtype=np.int64)
    n = samples.size
    support = np.arange(0, int(samples.max()) + 2)
    expected = n * pmf(support)
    ok = np.flatnonzero(expected >= 5)
    if ok.size < 2:
        raise ValueError("sample too small for a chi-square test")
    lo, hi = int(ok[0]), int(ok[-1])
    observed = [np.sum(samples <= lo)]
    observed += [np.sum(samples == k) for k in range(lo + 1, hi)]
    observed.append(np.sum(samples >= hi))
    expected = [n * cdf(lo)]
    expected += [n * pmf(k) for k in range(lo + 1, hi)]
    expected.append(n * sf(hi - 1))
    observed = np.asarray(observed, dtype=float)
    expected = np.asarray(expected, dtype=float)
    # renormalise away the rounding in the tail masses
    expected *= observed.sum() / expected.sum()
    return float(stats.chisquare(observed, expected).pvalue)


def sampling_suite(rng: RngStream, n: int, alpha: float, corrupt_poisson: bool = False) -> SuiteResult:
    """Goodness of fit of the discrete, exponential, gamma, Poisson and binomial samplers."""
    poisson = sample_poisson
    if corrupt_poisson:
        def poisson(r, mean):
            return sample_poisson(r, mean) + 1

    checks = {}
    picks = np.bincount([sample_discrete(rng, (3.0, 1.0)) for _ in range(n)], minlength=2)
    checks["discrete(3,1)"] = float(stats.chisquare(picks, [0.75 * n, 0.25 * n]).pvalue)

    exp_draws = [sample_exponential(rng, 2.0) for _ in range(n)]
    checks["exponential"] = float(stats.kstest(exp_draws, stats.expon(scale=2.0).cdf).pvalue)
    gamma1_draws = [sample_gamma(rng, 1, 2.0) for _ in range(n)]
    checks["gamma(1)~exponential"] = float(stats.ks_2samp(gamma1_draws, exp_draws).pvalue)
    gamma_draws = [sample_gamma(rng, 3, 0.5) for _ in range(n)]
    checks["gamma(3)"] = float(stats.kstest(gamma_draws, stats.gamma(3, scale=0.5).cdf).pvalue)

    # 40 goes through numpy's large-mean branch
    for mean in (5.0, 40.0):
        dist = stats.poisson(mean)
        draws = [poisson(rng, mean) for _ in range(n)]
        checks[f"poisson({mean:g})"] = discrete_chisquare(draws, dist.pmf, dist.cdf, dist.sf)
    dist = stats.binom(20, 0.3)
    draws = [sample_binomial(rng, 20, 0.3) for _ in range(n)]
    checks["binomial(20,0.3)"] = discrete_chisquare(draws, dist.pmf, dist.cdf, dist.sf)
    return _result("sampling", checks, alpha)


def cascade_sum_suite(rng: RngStream, n: int, alpha: float) -> SuiteResult:
    """Cascade firings always total L; marginal means match ``L a_j / a0``."""
    a = np.array([0.5, 3.0, 1.5, 0.0, 5.0])
    view = PropensityView(a, float(a.sum()))
    order = np.arange(a.size)
    L = 25
    draws = np.array([binomial_cascade(rng, L, view, order) for _ in range(n)])
    sums_ok = bool(np.all(draws.sum(axis=1) == L))

    expected = L * a / view.a0
    se = np.sqrt(L * (a / view.a0) * (1 - a / view.a0) / n)
    worst = 0.0
    for j in np.flatnonzero(a > 0):
        worst = max(worst, abs(draws[:, j].mean() - expected[j]) / se[j])
    checks = {"marginal_p": float(2 * stats.norm.sf(worst))}
    result = _result("cascade-sum", checks, alpha / a.size)
    if not sums_ok:
        result.passed = False
        result.detail = "cascade total differs from L"
    return result


def permutation_suite(rng: RngStream, n: int, alpha: float) -> SuiteResult:
    """The joint law of the cascade firings does not depend on the visiting order.

    Each order's draws are tallied over every outcome ``(k_0, k_1, k_2)`` with
    ``sum k = L``. The tallies are compared with each other by a contingency
    test and, pooled, with the multinomial law.
    """
    a = np.array([1.0, 2.0, 3.0])
    view = PropensityView(a, float(a.sum()))
    # with L = 3 the rarest outcome has probability 1/216
    L = 3
    outcomes = [(i, j, L - i - j) for i in range(L + 1) for j in range(L + 1 - i)]
    column = {o: c for c, o in enumerate(outcomes)}
    orders = ((0, 1, 2), (2, 1, 0), (1, 2, 0))
    table = np.zeros((len(orders), len(outcomes)))
    for row, order in enumerate(orders):
        order_arr = np.array(order)
        for _ in range(n):
            k = binomial_cascade(rng, L, view, order_arr)
            table[row, column[tuple(int(v) for v in k)]] += 1

    multinomial = stats.multinomial(L, a / view.a0)
    expected = len(orders) * n * np.array([multinomial.pmf(o) for o in outcomes])
    expected *= len(orders) * n / expected.sum()
    checks = {
        "joint-vs-multinomial": float(stats.chisquare(table.sum(axis=0), expected).pvalue),
        "joint-across-orders": float(stats.chi2_contingency(table).pvalue),
    }
    return _result("permutation-invariance", checks, alpha)


def ssa_oracle_suite(seed: int, n: int, alpha: float) -> SuiteResult:
    """SSA on the isomerization model reaches its Binomial(40, 1/2) stationary law."""
    network = load_builtin("isomerization")
    grid = np.array([20.0])
    x1 = np.empty(n, dtype=np.int64)
    for k in range(n):
        trajectory = run_trajectory(network, SolverKind.SSA, None, RngStream(seed, k), 20.0, grid)
        x1[k] = trajectory.states[0, 0]
    dist = stats.binom(40, 0.5)
    checks = {"x1(t=20)": discrete_chisquare(x1, dist.pmf, dist.cdf, dist.sf)}
    return _result("ssa-oracle", checks, alpha)


def _result(name: str, checks: dict[str, float], alpha: float) -> SuiteResult:
    failed = [k for k, p in checks.items() if not p > alpha]
    detail = f"failed: {', '.join(failed)}" if failed else ""
    return SuiteResult(name, not failed, checks, detail)


def run_validation(quick: bool = False, seed: int = 0, corrupt_poisson: bool = False) -> list[SuiteResult]:
    """Run all suites; ``corrupt_poisson`` biases the Poisson sampler under test."""
    alpha = QUICK_ALPHA if quick else ALPHA
    n = 2000 if quick else 20000
    results = [
        sampling_suite(RngStream(seed, 0), n, alpha, corrupt_poisson),
        cascade_sum_suite(RngStream(seed, 1), n, alpha),
        permutation_suite(RngStream(seed, 2), n, alpha),
        ssa_oracle_suite(seed, 500 if quick else 10000, alpha),
    ]
    for result in results:
        level = logging.INFO if result.passed else logging.WARNING
        logger.log(level, "suite %s: %s %s", result.name, "pass" if result.passed else "FAIL", result.detail)
    return results


__all__ = [
    "SuiteResult",
    "cascade_sum_suite",
    "discrete_chisquare",
    "permutation_suite",
    "run_validation",
    "sampling_suite",
    "ssa_oracle_suite",
]
