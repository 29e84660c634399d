"""Phase-parameterized families of preparation procedures.

A family assigns the positive-side deviation ``lambda1 = f(theta)`` to each
phase; ``lambda2`` then follows from orthogonality.  Three profile kinds are
supported: ``cos``, ``cosh`` and a tabulated custom profile with linear
interpolation.  Phases are full angles throughout.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import (
    BOUND_TOL,
    EPS_CLASSICAL,
    PHASE_TOL,
    DeviationCoefficients,
    ProbPair,
    Regime,
    classify,
    forward_transform,
)
from .errors import DegenerateInput, DomainError, EmptyRange, InfeasiblePhase

DOMAIN_TOL = 1e-12


class ProfileKind(str, enum.Enum):
    COSINE = "cosine"
    COSH = "cosh"
    CUSTOM = "custom"


@dataclass(frozen=True)
class PhaseInterval:
    lo: float
    hi: float
    #: grid spacing for ranges found by scanning a table; None when exact
    resolution: float | None = None

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    def __contains__(self, theta: float) -> bool:
        return self.lo - DOMAIN_TOL <= theta <= self.hi + DOMAIN_TOL

    @property
    def half(self) -> tuple[float, float]:
        """Bounds expressed as half-angles."""
        return self.lo / 2, self.hi / 2


@dataclass(frozen=True)
class DeviationProfile:
    """``theta -> lambda1`` mapping with a closed phase domain.

    Build instances with :meth:`cosine`, :meth:`cosh` or :meth:`custom`.
    """

    kind: ProfileKind
    domain: PhaseInterval
    table: tuple[tuple[float, float], ...] = field(default=(), repr=False)

    def __post_init__(self) -> None:
        if self.kind is ProfileKind.CUSTOM:
            if len(self.table) < 2:
                raise ValueError("custom profile needs at least two (theta, f) points")
            thetas = [t for t, _ in self.table]
            if any(b <= a for a, b in zip(thetas, thetas[1:])):
                raise ValueError("custom profile thetas must be strictly increasing")
            bad = [v for _, v in self.table if abs(v) > 1]
            if bad:
                raise ValueError(f"custom profile values must satisfy |f| <= 1, got {bad[0]!r}")

    @classmethod
    def cosine(cls, lo: float = 0.0, hi: float = math.pi) -> DeviationProfile:
        return cls(ProfileKind.COSINE, PhaseInterval(lo, hi))

    @classmethod
    def cosh(cls, lo: float = 0.0, hi: float = math.inf) -> DeviationProfile:
        return cls(ProfileKind.COSH, PhaseInterval(lo, hi))

    @classmethod
    def custom(cls, points: Sequence[tuple[float, float]]) -> DeviationProfile:
        table = tuple((float(t), float(v)) for t, v in points)
        return cls(ProfileKind.CUSTOM, PhaseInterval(table[0][0], table[-1][0]), table)

    def __call__(self, theta: float) -> float:
        if self.kind is ProfileKind.COSINE:
            return math.cos(theta)
        if self.kind is ProfileKind.COSH:
            return math.cosh(theta)
        xs, ys = zip(*self.table)
        return float(np.interp(theta, xs, ys))

    def to_dict(self) -> dict:
        if self.kind is ProfileKind.CUSTOM:
            return {"kind": self.kind.value, "table": [list(pt) for pt in self.table]}
        hi = None if math.isinf(self.domain.hi) else self.domain.hi
        return {"kind": self.kind.value, "domain": [self.domain.lo, hi]}

    @classmethod
    def from_dict(cls, d: dict, *, degrees: bool = False) -> DeviationProfile:
        """Inverse of :meth:`to_dict`; ``degrees`` converts all phase fields from degrees."""
        conv = math.radians if degrees else float
        kind = ProfileKind(str(d["kind"]).lower())
        extra = set(d) - {"kind", "domain", "table"}
        if extra:
            raise ValueError(f"unknown profile fields: {sorted(extra)}")
        if kind is ProfileKind.CUSTOM:
            if "domain" in d:
                raise ValueError("custom profile domain is implied by its table")
            return cls.custom([(conv(t), v) for t, v in d["table"]])
        if "table" in d:
            raise ValueError(f"{kind.value} profile takes no table")
        factory = cls.cosine if kind is ProfileKind.COSINE else cls.cosh
        if "domain" not in d:
            return factory()
        lo, hi = d["domain"]
        return factory(conv(lo), math.inf if hi is None else conv(hi))


@dataclass(frozen=True)
class SweepRow:
    theta: float
    output: ProbPair
    regime: Regime

    @property
    def theta_half(self) -> float:
        return self.theta / 2


def _induced_coefficients(p: ProbPair, profile: DeviationProfile, theta: float) -> DeviationCoefficients:
    if p.degenerate:
        raise DegenerateInput(f"input probabilities {tuple(p)} contain a zero")
    if theta not in profile.domain:
        raise DomainError(f"theta={theta!r} outside profile domain [{profile.domain.lo}, {profile.domain.hi}]")
    lam1 = profile(theta)
    lam2 = -p.p1 * lam1 / p.p2
    # p2' >= 0 needs p1*lambda1 <= p2; p1' >= 0 needs lambda1 >= -1
    if p.p1 * lam1 > p.p2 + PHASE_TOL or lam1 < -1 - PHASE_TOL:
        raise InfeasiblePhase(
            f"theta={theta!r} gives lambda=({lam1!r}, {lam2!r}); output leaves [0, 1]", theta=theta
        )
    return DeviationCoefficients(lam1, lam2)


def family_transform(p: ProbPair, profile: DeviationProfile, theta: float) -> ProbPair:
    """Output distribution of the family member at phase ``theta``."""
    return forward_transform(p, _induced_coefficients(p, profile, theta))


def _intersect(a: tuple[float, float], b: tuple[float, float]) -> tuple[float, float] | None:
    lo, hi = max(a[0], b[0]), min(a[1], b[1])
    return (lo, hi) if lo <= hi else None


def _largest(pieces: list[tuple[float, float]]) -> tuple[float, float] | None:
    # ties go to the leftmost piece
    best = None
    for piece in pieces:
        if best is None or piece[1] - piece[0] > best[1] - best[0]:
            best = piece
    return best


def feasible_phase_range(p: ProbPair, profile: DeviationProfile) -> PhaseInterval:
    """Largest sub-interval of the profile domain with valid output probabilities.

    Feasibility is ``-1 <= f(theta) <= p2/p1``.  Cosine and cosh profiles are
    solved in closed form; custom tables are scanned node by node, so their
    range is conservative and carries the table's largest spacing as
    ``resolution``.
    """
    if p.degenerate:
        raise DegenerateInput(f"input probabilities {tuple(p)} contain a zero")
    ratio = p.p2 / p.p1
    dom = (profile.domain.lo, profile.domain.hi)

    if profile.kind is ProfileKind.COSH:
        if ratio < 1:
            raise EmptyRange(f"cosh(theta) >= 1 > p2/p1 = {ratio!r}")
        bound = math.acosh(ratio)
        piece = _intersect(dom, (-bound, bound))
        if piece is None:
            raise EmptyRange(f"domain {dom} misses [-{bound}, {bound}]")
        return PhaseInterval(*piece)

    if profile.kind is ProfileKind.COSINE:
        if ratio >= 1:
            return PhaseInterval(*dom)
        # cos(theta) <= ratio on [a + 2 pi k, 2 pi - a + 2 pi k]
        a = math.acos(ratio)
        tau = 2 * math.pi
        k0 = math.floor((dom[0] - (tau - a)) / tau)
        k1 = math.ceil((dom[1] - a) / tau)
        pieces = []
        for k in range(k0, k1 + 1):
            piece = _intersect(dom, (a + tau * k, tau - a + tau * k))
            if piece is not None:
                pieces.append(piece)
        best = _largest(pieces)
        if best is None:
            raise EmptyRange(f"cos(theta) > p2/p1 = {ratio!r} everywhere on {dom}")
        return PhaseInterval(*best)

    thetas = [t for t, _ in profile.table]
    ok = [-1 - BOUND_TOL <= v <= ratio + BOUND_TOL for _, v in profile.table]
    runs: list[tuple[float, float]] = []
    start = None
    for i, good in enumerate(ok):
        if good and start is None:
            start = i
        if start is not None and (not good or i == len(ok) - 1):
            end = i if good else i - 1
            runs.append((thetas[start], thetas[end]))
            start = None
    best = _largest(runs)
    if best is None:
        raise EmptyRange(f"no tabulated phase satisfies -1 <= f <= p2/p1 = {ratio!r}")
    resolution = max(b - a for a, b in zip(thetas, thetas[1:]))
    return PhaseInterval(best[0], best[1], resolution=resolution)


def sweep(
    p: ProbPair,
    profile: DeviationProfile,
    thetas: Sequence[float],
    eps_classical: float = EPS_CLASSICAL,
) -> list[SweepRow]:
    """Apply :func:`family_transform` and :func:`classify` at each phase, in order.

    Raises :class:`InfeasiblePhase` (with ``.theta`` set) at the first bad phase.
    """
    rows = []
    for theta in thetas:
        lam = _induced_coefficients(p, profile, theta)
        rows.append(SweepRow(theta, forward_transform(p, lam), classify(lam, eps_classical)))
    return rows
