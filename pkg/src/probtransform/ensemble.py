"""Finite-population simulation of flip procedures.

An :class:`Ensemble` holds the counts ``(n1, n2)`` of a population of ``N``
two-valued systems.  A :class:`FlipProcedure` flips each member
independently (``a1 -> a2`` with probability ``q12``, ``a2 -> a1`` with
``q21``), which keeps ``N`` fixed.  Relative deviations measured on finite
ensembles converge to :func:`expected_deviations` as ``N`` grows.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import DeviationCoefficients, ProbPair
from .errors import DegenerateInput, SizeMismatch
from .sampling import SeedSpec, as_generator, sample_binomial


class BuildMode(str, enum.Enum):
    EXACT = "exact"
    SAMPLED = "sampled"


@dataclass(frozen=True)
class Ensemble:
    n1: int
    n2: int

    def __post_init__(self) -> None:
        if self.n1 < 0 or self.n2 < 0:
            raise ValueError(f"counts must be non-negative, got ({self.n1}, {self.n2})")
        if self.total < 1:
            raise ValueError("ensemble must have at least one member")

    @property
    def total(self) -> int:
        return self.n1 + self.n2

    def frequencies(self) -> tuple[float, float]:
        return self.n1 / self.total, self.n2 / self.total


@dataclass(frozen=True)
class FlipProcedure:
    q12: float
    q21: float

    def __post_init__(self) -> None:
        for name in ("q12", "q21"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name}={v!r} outside [0, 1]")


@dataclass(frozen=True)
class DeviationEstimate:
    """Finite-``N`` deviations measured between two ensembles."""

    lambda_hat1: float
    lambda_hat2: float
    delta1: float
    delta2: float
    sample_size: int
    p_hat1: float
    p_hat2: float

    def coefficients(self) -> DeviationCoefficients:
        return DeviationCoefficients(self.lambda_hat1, self.lambda_hat2)


def build_ensemble(
    total: int,
    p: ProbPair,
    mode: BuildMode = BuildMode.EXACT,
    seed: SeedSpec | np.random.Generator | None = None,
) -> Ensemble:
    """Population of ``total`` members with outcome probabilities ``p``.

    Exact mode rounds ``p1*total`` half-up; sampled mode draws ``n1`` from
    ``Binomial(total, p1)``.
    """
    if total < 1:
        raise ValueError(f"total must be positive, got {total}")
    mode = BuildMode(mode)
    if mode is BuildMode.EXACT:
        n1 = min(max(math.floor(p.p1 * total + 0.5), 0), total)
    else:
        if seed is None:
            raise ValueError("sampled mode needs a seed")
        n1 = sample_binomial(as_generator(seed), total, float(p.p1))
    return Ensemble(n1, total - n1)


def apply_procedure(
    e: Ensemble, proc: FlipProcedure, seed: SeedSpec | np.random.Generator
) -> Ensemble:
    """Flip members independently; ``n1' = n1 - Bin(n1, q12) + Bin(n2, q21)``."""
    rng = as_generator(seed)
    out12 = sample_binomial(rng, e.n1, proc.q12)
    in21 = sample_binomial(rng, e.n2, proc.q21)
    n1 = e.n1 - out12 + in21
    return Ensemble(n1, e.total - n1)


def estimate_deviations(before: Ensemble, after: Ensemble) -> DeviationEstimate:
    if before.total != after.total:
        raise SizeMismatch(f"population changed from {before.total} to {after.total}")
    if before.n1 == 0 or before.n2 == 0:
        raise DegenerateInput(f"input counts ({before.n1}, {before.n2}) contain a zero")
    n = before.total
    d1 = after.n1 - before.n1
    d2 = after.n2 - before.n2
    return DeviationEstimate(
        lambda_hat1=d1 / before.n1,
        lambda_hat2=d2 / before.n2,
        delta1=d1 / n,
        delta2=d2 / n,
        sample_size=n,
        p_hat1=before.n1 / n,
        p_hat2=before.n2 / n,
    )


def expected_deviations(p: ProbPair, proc: FlipProcedure) -> DeviationCoefficients:
    """Infinite-``N`` limit of the deviations produced by ``proc`` on input ``p``."""
    if p.degenerate:
        raise DegenerateInput(f"input probabilities {tuple(p)} contain a zero")
    return DeviationCoefficients(
        -proc.q12 + proc.q21 * p.p2 / p.p1,
        -proc.q21 + proc.q12 * p.p1 / p.p2,
    )


def synthesize_flip(p_in: ProbPair, p_target: ProbPair) -> FlipProcedure:
    """Least-disturbing flip procedure taking ``p_in`` to ``p_target`` in expectation.

    Only the outcome that must gain weight receives flips; the other
    direction stays at zero.
    """
    if p_in.degenerate:
        raise DegenerateInput(f"input probabilities {tuple(p_in)} contain a zero")
    if p_target.p1 >= p_in.p1:
        q21 = (p_target.p1 - p_in.p1) / p_in.p2
        return FlipProcedure(0.0, min(q21, 1))
    q12 = (p_in.p1 - p_target.p1) / p_in.p1
    return FlipProcedure(min(q12, 1), 0.0)


@dataclass(frozen=True)
class ReplicaResult:
    size: int
    replica: int
    before: Ensemble
    after: Ensemble
    estimate: DeviationEstimate | None
    #: set when the input ensemble had an empty outcome class
    error: str | None = None


@dataclass(frozen=True)
class ConvergenceRow:
    size: int
    mean_lambda1: float
    mean_lambda2: float
    std_lambda1: float
    std_lambda2: float
    replicas_used: int
    excluded: int


def run_replica(
    size: int,
    p: ProbPair,
    proc: FlipProcedure,
    rng: np.random.Generator,
    mode: BuildMode = BuildMode.SAMPLED,
    replica: int = 0,
) -> ReplicaResult:
    """Build one ensemble, apply ``proc`` and estimate deviations, all on ``rng``."""
    before = build_ensemble(size, p, mode, rng)
    after = apply_procedure(before, proc, rng)
    try:
        est = estimate_deviations(before, after)
    except DegenerateInput as exc:
        return ReplicaResult(size, replica, before, after, None, str(exc))
    return ReplicaResult(size, replica, before, after, est)


def run_replicas(
    size: int,
    p: ProbPair,
    proc: FlipProcedure,
    replicas: int,
    seed: SeedSpec,
    mode: BuildMode = BuildMode.SAMPLED,
    size_key: int = 0,
    workers: int = 1,
) -> list[ReplicaResult]:
    """``replicas`` independent runs; replica ``r`` uses ``seed.generator(size_key, r)``.

    Results are ordered by replica index regardless of ``workers``.
    """
    if replicas < 1:
        raise ValueError(f"replicas must be positive, got {replicas}")

    def one(r: int) -> ReplicaResult:
        return run_replica(size, p, proc, seed.generator(size_key, r), mode, r)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, range(replicas)))
    return [one(r) for r in range(replicas)]


def _mean_std(values: list[float]) -> tuple[float, float]:
    if not values:
        return math.nan, math.nan
    arr = np.asarray(values, dtype=float)
    std = float(arr.std(ddof=1)) if arr.size > 1 else math.nan
    return float(arr.mean()), std


def summarize(size: int, results: Sequence[ReplicaResult]) -> ConvergenceRow:
    good = [r.estimate for r in results if r.estimate is not None]
    m1, s1 = _mean_std([e.lambda_hat1 for e in good])
    m2, s2 = _mean_std([e.lambda_hat2 for e in good])
    return ConvergenceRow(size, m1, m2, s1, s2, len(good), len(results) - len(good))


def convergence_study(
    p: ProbPair,
    proc: FlipProcedure,
    sizes: Sequence[int],
    replicas: int,
    seed: SeedSpec,
    mode: BuildMode = BuildMode.SAMPLED,
    workers: int = 1,
) -> list[ConvergenceRow]:
    """Mean and sample standard deviation (ddof=1) of the estimates at each size.

    Replicas whose input ensemble has an empty outcome class are left out of
    the aggregates and counted in ``excluded``.  Standard deviations are NaN
    when fewer than two replicas remain.
    """
    sizes = list(sizes)
    if any(n < 1 for n in sizes):
        raise ValueError("sizes must be positive")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("sizes must be strictly increasing")
    return [
        summarize(n, run_replicas(n, p, proc, replicas, seed, mode, size_key=k, workers=workers))
        for k, n in enumerate(sizes)
    ]
