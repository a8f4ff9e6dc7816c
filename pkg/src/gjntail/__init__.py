"""Busy-period tail analysis for open queueing networks with heavy-tailed
service: exact-replay simulation, pathwise bounds, fluid drain constants,
and the one-big-jump tail prediction they combine into."""

from .bounds import (
    coupled_perturbation,
    cycle_bounds_audit,
    select_group_size,
    ubq_upper,
)
from .config import ConfigError, RunConfig, load_config, parse_config, spec_to_config
from .distributions import (
    Deterministic,
    Dist,
    Exponential,
    HtaProfile,
    NoCommonReferenceError,
    Pareto,
    ShiftedPareto,
    Uniform,
    hta_constants,
    parse_dist,
)
from .engine import BusyCycleSample, CycleOverflow, Engine, FiniteResult
from .fluid import (
    FluidCoefficients,
    FluidInstability,
    FluidTimeline,
    all_coefficients,
    drain_timeline,
    solve_tau,
)
from .asymptotics import (
    InsufficientExceedances,
    PsbjReport,
    TailReport,
    default_grid,
    estimate_tail,
    predicted_tail,
    psbj_diagnostic,
    random_sum_tail_ratio,
    tail_slope,
)
from .network import (
    NetworkSpec,
    ValidationReport,
    VisitStats,
    expected_visits,
    first_visit_probabilities,
    stability_margin,
    validate,
    visit_stats,
)
from .tape import Tape
from .verify import VerifyReport, run_all

__all__ = [
    "BusyCycleSample", "ConfigError", "CycleOverflow", "Deterministic", "Dist",
    "Engine", "Exponential", "FiniteResult", "FluidCoefficients",
    "FluidInstability", "FluidTimeline", "HtaProfile", "InsufficientExceedances",
    "NetworkSpec", "NoCommonReferenceError", "Pareto", "PsbjReport", "RunConfig",
    "ShiftedPareto", "TailReport", "Tape", "Uniform", "ValidationReport",
    "VerifyReport", "VisitStats", "all_coefficients", "coupled_perturbation",
    "cycle_bounds_audit", "default_grid", "drain_timeline", "estimate_tail",
    "expected_visits", "first_visit_probabilities", "hta_constants",
    "load_config", "parse_config", "parse_dist", "predicted_tail",
    "psbj_diagnostic", "random_sum_tail_ratio", "run_all", "select_group_size",
    "solve_tau", "spec_to_config", "stability_margin", "tail_slope", "ubq_upper",
    "validate", "visit_stats",
]
