"""Seeded random streams and binomial sampling by inversion."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

U64_MAX = 2**64 - 1


@dataclass(frozen=True)
class SeedSpec:
    """Root seed plus a stream index.

    Streams are derived with ``numpy.random.SeedSequence`` spawn keys, so
    distinct ``(seed, stream, *subkeys)`` tuples give independent PCG64
    generators and equal tuples give identical ones.
    """

    seed: int
    stream: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.seed <= U64_MAX:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.stream < 0:
            raise ValueError(f"stream must be non-negative, got {self.stream}")

    def generator(self, *subkeys: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream, *subkeys))
        return np.random.Generator(np.random.PCG64(ss))


def as_generator(seed: SeedSpec | np.random.Generator) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return seed.generator()


def binomial_inverse_cdf(u: float, trials: int, q: float) -> int:
    """Smallest ``k`` with ``P(Binomial(trials, q) <= k) >= u``."""
    if trials == 0 or q <= 0 or u <= 0:
        return 0
    if q >= 1:
        return trials
    return int(binom.ppf(u, trials, q))


def sample_binomial(rng: np.random.Generator, trials: int, q: float) -> int:
    """Binomial draw by inversion of the CDF at a single uniform.

    Exactly one uniform is consumed per call, whatever the parameters, so
    stream positions do not depend on the values drawn.
    """
    if trials < 0:
        raise ValueError(f"trials must be non-negative, got {trials}")
    if not 0 <= q <= 1:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    u = rng.random()
    return binomial_inverse_cdf(u, trials, q)
