"""Seedable random variates for the samplers.

Every trajectory owns one :class:`RngStream`. Streams are built on numpy's
counter-based Philox bit generator keyed by ``SeedSequence(seed,
spawn_key=(stream_id,))``, so trajectory ``k`` draws the same numbers no
matter which worker runs it or in what order.

All samplers are exact in distribution: numpy's Poisson (PTRS above mean 10),
binomial (BTPE) and gamma (Marsaglia-Tsang) generators are rejection methods,
not approximations.
"""

import numpy as np

from sleap.errors import SamplingError


class RngStream:
    """Reproducible random stream for one trajectory.

    Args:
        seed: Ensemble seed (unsigned 64-bit)
        stream_id: Trajectory index

    The ``draws`` counter counts every scalar variate handed out; solvers use
    it to compare random-number cost between methods.
    """

    def __init__(self, seed: int = 0, stream_id: int = 0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        sequence = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.Philox(sequence))
        self.draws = 0

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, draws={self.draws})"

    def exponential(self, mean: float) -> float:
        self.draws += 1
        return float(self.generator.exponential(mean))

    def gamma(self, shape: int, scale: float) -> float:
        self.draws += 1
        return float(self.generator.gamma(shape, scale))

    def poisson(self, mean):
        """Scalar or element-wise Poisson draws."""
        if np.ndim(mean) == 0:
            self.draws += 1
            return int(self.generator.poisson(mean))
        mean = np.asarray(mean, dtype=float)
        self.draws += mean.size
        return self.generator.poisson(mean).astype(np.int64)

    def binomial(self, n: int, prob: float) -> int:
        self.draws += 1
        return int(self.generator.binomial(n, prob))

    def normal(self, mean: float, stddev: float) -> float:
        self.draws += 1
        return float(self.generator.normal(mean, stddev))

    def uniform(self) -> float:
        self.draws += 1
        return float(self.generator.random())


def sample_exponential(rng: RngStream, mean: float) -> float:
    """Exponential variate with the given mean (``E(mean)``)."""
    if not mean > 0:
        raise SamplingError(f"exponential mean must be positive, got {mean}")
    value = rng.exponential(mean)
    while value <= 0.0:
        value = rng.exponential(mean)
    return value


def sample_gamma(rng: RngStream, shape: int, scale: float) -> float:
    """Gamma variate with integer shape ``L`` (sum of L exponentials in law)."""
    if shape < 1 or int(shape) != shape:
        raise SamplingError(f"gamma shape must be a positive integer, got {shape}")
    if not scale > 0:
        raise SamplingError(f"gamma scale must be positive, got {scale}")
    value = rng.gamma(int(shape), scale)
    while value <= 0.0:
        value = rng.gamma(int(shape), scale)
    return value


def sample_poisson(rng: RngStream, mean):
    """Poisson variate(s); a zero mean yields 0 without consuming a draw."""
    if np.ndim(mean) == 0:
        if mean < 0:
            raise SamplingError(f"Poisson mean must be nonnegative, got {mean}")
        if mean == 0:
            return 0
        return rng.poisson(float(mean))
    mean = np.asarray(mean, dtype=float)
    if np.any(mean < 0):
        raise SamplingError("Poisson means must be nonnegative")
    return rng.poisson(mean)


def sample_binomial(rng: RngStream, n: int, prob: float) -> int:
    if n < 0:
        raise SamplingError(f"binomial trials must be nonnegative, got {n}")
    if n == 0 or prob <= 0.0:
        return 0
    if prob >= 1.0:
        return int(n)
    return rng.binomial(int(n), prob)


def sample_normal(rng: RngStream, mean: float, stddev: float) -> float:
    if stddev < 0:
        raise SamplingError(f"standard deviation must be nonnegative, got {stddev}")
    if stddev == 0:
        return float(mean)
    return rng.normal(mean, stddev)


def sample_discrete(rng: RngStream, weights) -> int:
    """Index ``j`` with probability ``w_j / sum(w)``.

    Raises:
        SamplingError: when no weight is positive

    """
    weights = np.asarray(weights, dtype=float)
    cumulative = np.cumsum(weights)
    total = cumulative[-1] if cumulative.size else 0.0
    if not total > 0 or np.any(weights < 0):
        raise SamplingError("discrete weights must be nonnegative with a positive sum")
    u = rng.uniform() * total
    j = int(np.searchsorted(cumulative, u, side="right"))
    if j >= weights.size or weights[j] == 0.0:
        # u landed on the top edge through rounding
        j = int(np.flatnonzero(weights > 0)[-1])
    return j


__all__ = [
    "RngStream",
    "sample_binomial",
    "sample_discrete",
    "sample_exponential",
    "sample_gamma",
    "sample_normal",
    "sample_poisson",
]
