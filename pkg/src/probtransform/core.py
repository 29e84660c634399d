"""Exact transform algebra for two-outcome probability distributions.

A preparation procedure maps input probabilities ``(p1, p2)`` to output
probabilities ``p_i' = p_i * (1 + lambda_i)``.  Normalization of the output
forces ``lambda1*p1 + lambda2*p2 == 0``.  The magnitudes of the coefficients
decide the regime:

* Classical: both coefficients vanish.
* Trigonometric: ``|lambda_i| <= 1``, so ``lambda_i = cos(theta_i)``.
* HyperTrigonometric: the positive coefficient exceeds 1, so
  ``lambda1 = cosh(theta1)`` while ``lambda2 = cos(theta2)``.

All functions here are pure.  The arithmetic-only ones (``forward_transform``,
``extract_deviations``, ``orthogonality_residual``) also accept
``fractions.Fraction`` inputs and stay exact.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Any

from .errors import (
    DegenerateInput,
    InfeasiblePhase,
    InvalidCoefficients,
    InvalidProbability,
    NonNormalizable,
    OutOfRange,
)

#: tolerance on ``p1 + p2 == 1``
NORM_TOL = 1e-12
#: tolerance on the orthogonality residual accepted as "paired" input
ORTHO_TOL = 1e-9
#: slack allowed when a computed probability or coefficient overshoots a bound by rounding
BOUND_TOL = 1e-12
#: slack on phase feasibility; a few ulps, so the cosh branch stays strict near theta = 0
PHASE_TOL = 1e-14
#: default threshold below which both coefficients count as zero
EPS_CLASSICAL = 1e-9


@dataclass(frozen=True)
class ProbPair:
    """Normalized distribution of a two-valued variable; used for inputs and outputs alike."""

    p1: Any
    p2: Any

    def __post_init__(self) -> None:
        for name in ("p1", "p2"):
            v = getattr(self, name)
            if isinstance(v, float) and math.isnan(v):
                raise InvalidProbability(f"{name} is NaN")
            if v < 0:
                raise InvalidProbability(f"{name}={v!r} is negative")
        if abs(self.p1 + self.p2 - 1) > NORM_TOL:
            raise InvalidProbability(f"p1 + p2 = {self.p1 + self.p2!r}, expected 1")

    @classmethod
    def from_p1(cls, p1) -> ProbPair:
        if not 0 <= p1 <= 1:
            raise InvalidProbability(f"p1={p1!r} outside [0, 1]")
        return cls(p1, 1 - p1)

    @property
    def degenerate(self) -> bool:
        return self.p1 == 0 or self.p2 == 0

    def swapped(self) -> ProbPair:
        return ProbPair(self.p2, self.p1)

    def __iter__(self):
        yield self.p1
        yield self.p2


@dataclass(frozen=True)
class DeviationCoefficients:
    """Relative deviations ``(lambda1, lambda2)`` induced by a procedure."""

    lambda1: Any
    lambda2: Any

    def swapped(self) -> DeviationCoefficients:
        return DeviationCoefficients(self.lambda2, self.lambda1)

    def __iter__(self):
        yield self.lambda1
        yield self.lambda2


class Regime(str, enum.Enum):
    CLASSICAL = "Classical"
    TRIGONOMETRIC = "Trigonometric"
    HYPER_TRIGONOMETRIC = "HyperTrigonometric"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class PhaseRepresentation:
    """Regime plus phases after index normalization.

    ``theta1`` and ``theta2`` refer to the reordered outcomes (positive
    coefficient first); ``index_swapped`` says whether that reordering
    exchanged the caller's labels.  Phases are full angles.
    """

    regime: Regime
    theta1: float
    theta2: float
    index_swapped: bool

    @property
    def theta1_half(self) -> float:
        return self.theta1 / 2

    @property
    def theta2_half(self) -> float:
        return self.theta2 / 2

    def coefficients(self) -> DeviationCoefficients:
        """Re-evaluate the coefficients from the phases, in the caller's original labeling."""
        if self.regime is Regime.HYPER_TRIGONOMETRIC:
            lam = DeviationCoefficients(math.cosh(self.theta1), math.cos(self.theta2))
        else:
            lam = DeviationCoefficients(math.cos(self.theta1), math.cos(self.theta2))
        return lam.swapped() if self.index_swapped else lam

    def residual(self, p: ProbPair) -> float:
        """``(cos|cosh)(theta1)*p1 + cos(theta2)*p2`` for ``p`` in the caller's labeling."""
        return orthogonality_residual(p, self.coefficients())


def _require_nondegenerate(p: ProbPair) -> None:
    if p.degenerate:
        raise DegenerateInput(f"input probabilities {tuple(p)} contain a zero")


def _snap(v, name: str):
    # Pull values that overshoot [0, 1] by rounding back onto the interval.
    if v < -BOUND_TOL or v > 1 + BOUND_TOL:
        raise OutOfRange(f"{name}={v!r} outside [0, 1]")
    if v < 0:
        return v - v
    if v > 1:
        return v / v
    return v


def _output_pair(o1, o2) -> ProbPair:
    o1 = _snap(o1, "p1'")
    o2 = _snap(o2, "p2'")
    total = o1 + o2
    if abs(total - 1) > NORM_TOL:
        # only reachable when the caller's residual is inside ORTHO_TOL but above NORM_TOL
        o1, o2 = o1 / total, o2 / total
    return ProbPair(o1, o2)


def orthogonality_residual(p: ProbPair, lam: DeviationCoefficients):
    """Signed ``lambda1*p1 + lambda2*p2``; zero for coefficients produced from ``p``."""
    return lam.lambda1 * p.p1 + lam.lambda2 * p.p2


def forward_transform(p: ProbPair, lam: DeviationCoefficients) -> ProbPair:
    """Map input probabilities to ``(p1*(1+lambda1), p2*(1+lambda2))``."""
    r = orthogonality_residual(p, lam)
    if abs(r) > ORTHO_TOL:
        raise NonNormalizable(f"orthogonality residual {r!r} exceeds {ORTHO_TOL}")
    return _output_pair(p.p1 * (1 + lam.lambda1), p.p2 * (1 + lam.lambda2))


def extract_deviations(p_in: ProbPair, p_out: ProbPair) -> DeviationCoefficients:
    """Invert :func:`forward_transform`: ``lambda_i = p_out_i / p_in_i - 1``."""
    _require_nondegenerate(p_in)
    return DeviationCoefficients(p_out.p1 / p_in.p1 - 1, p_out.p2 / p_in.p2 - 1)


def _normalize_indices(lam: DeviationCoefficients) -> tuple[DeviationCoefficients, bool]:
    if lam.lambda2 > lam.lambda1:
        return lam.swapped(), True
    return lam, False


def _classify_normalized(lam: DeviationCoefficients, eps_classical: float) -> Regime:
    l1, l2 = lam
    if l2 < -1 - BOUND_TOL:
        raise InvalidCoefficients(f"negative coefficient {l2!r} is below -1")
    if max(abs(l1), abs(l2)) <= eps_classical:
        return Regime.CLASSICAL
    if l2 > eps_classical or l1 < -eps_classical:
        raise InvalidCoefficients(
            f"coefficients ({l1!r}, {l2!r}) share a sign; they cannot come from a normalized transform"
        )
    if l1 <= 1:
        return Regime.TRIGONOMETRIC
    return Regime.HYPER_TRIGONOMETRIC


def classify(lam: DeviationCoefficients, eps_classical: float = EPS_CLASSICAL) -> Regime:
    """Regime of a coefficient pair; independent of which outcome is labeled first.

    The boundary ``lambda1 == 1`` is Trigonometric (``theta1 == 0`` on both branches).
    """
    normalized, _ = _normalize_indices(lam)
    return _classify_normalized(normalized, eps_classical)


def extract_phases(
    p: ProbPair, lam: DeviationCoefficients, eps_classical: float = EPS_CLASSICAL
) -> PhaseRepresentation:
    """Phases with ``arccos`` on ``[0, pi]`` and ``arcosh`` on ``[0, inf)``.

    In the classical regime both phases come out as ``pi/2`` (``cos(theta) = 0``).
    """
    r = orthogonality_residual(p, lam)
    if abs(r) > ORTHO_TOL:
        raise NonNormalizable(f"orthogonality residual {r!r} exceeds {ORTHO_TOL}")
    normalized, swapped = _normalize_indices(lam)
    regime = _classify_normalized(normalized, eps_classical)
    l1, l2 = float(normalized.lambda1), float(normalized.lambda2)
    if regime is Regime.HYPER_TRIGONOMETRIC:
        theta1 = math.acosh(l1)
    else:
        theta1 = math.acos(min(max(l1, -1.0), 1.0))
    theta2 = math.acos(min(max(l2, -1.0), 1.0))
    return PhaseRepresentation(regime, theta1, theta2, swapped)


def trig_rule(p: ProbPair, theta1: float) -> ProbPair:
    """Trigonometric rule: ``p1' = 2 p1 cos^2(theta1/2)``, ``p2' = p2 (1 + lambda2)``.

    ``lambda2 = -p1 cos(theta1) / p2`` is fixed by orthogonality and must lie in [-1, 1].
    """
    _require_nondegenerate(p)
    c = math.cos(theta1)
    if abs(p.p1 * c) > p.p2 + PHASE_TOL:
        raise InfeasiblePhase(
            f"|p1 cos(theta1)| = {abs(p.p1 * c)!r} exceeds p2 = {p.p2!r}", theta=theta1
        )
    lambda2 = -p.p1 * c / p.p2
    return _output_pair(2 * p.p1 * math.cos(theta1 / 2) ** 2, p.p2 * (1 + lambda2))


def hyper_rule(p: ProbPair, theta1: float) -> ProbPair:
    """Hyperbolic/trigonometric rule: ``p1' = 2 p1 cosh^2(theta1/2)``.

    Feasible while ``cosh(theta1) <= p2 / p1``.
    """
    _require_nondegenerate(p)
    ch = math.cosh(theta1)
    if p.p1 * ch > p.p2 + PHASE_TOL:
        raise InfeasiblePhase(f"cosh(theta1) = {ch!r} exceeds p2/p1 = {p.p2 / p.p1!r}", theta=theta1)
    return _output_pair(2 * p.p1 * math.cosh(theta1 / 2) ** 2, p.p2 * (1 - p.p1 * ch / p.p2))


def malus(alpha: float) -> ProbPair:
    """Polarization rule ``(cos^2 alpha, sin^2 alpha)``, i.e. ``trig_rule((1/2, 1/2), 2*alpha)``."""
    return _output_pair(math.cos(alpha) ** 2, math.sin(alpha) ** 2)
