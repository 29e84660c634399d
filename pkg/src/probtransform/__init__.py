"""Probability transforms induced by preparation procedures on two-outcome ensembles."""

from .core import (
    DeviationCoefficients,
    PhaseRepresentation,
    ProbPair,
    Regime,
    classify,
    extract_deviations,
    extract_phases,
    forward_transform,
    hyper_rule,
    malus,
    orthogonality_residual,
    trig_rule,
)
from .ensemble import (
    BuildMode,
    ConvergenceRow,
    DeviationEstimate,
    Ensemble,
    FlipProcedure,
    apply_procedure,
    build_ensemble,
    convergence_study,
    estimate_deviations,
    expected_deviations,
    synthesize_flip,
)
from .errors import (
    DegenerateInput,
    DomainError,
    EmptyRange,
    InfeasiblePhase,
    InvalidCoefficients,
    InvalidProbability,
    NonNormalizable,
    OutOfRange,
    ProbTransformError,
    SizeMismatch,
)
from .families import DeviationProfile, PhaseInterval, ProfileKind, family_transform, feasible_phase_range, sweep
from .sampling import SeedSpec

__version__ = "0.1.0"
