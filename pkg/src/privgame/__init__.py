"""Optimal user-centric obfuscation mechanisms.

The user picks a mechanism ``p(o|s)`` that minimizes expected utility cost
subject to distortion privacy (expected error of the best inference attack),
metric differential privacy, or both; the adversary answers with the
optimal attack. Everything is a linear program over finite spaces.
"""

from .attack import (
    bayes_attack, estimation_loss, minimax_attack, minimax_attack_pairwise, minimax_attack_sum,
    optimal_attack, optimal_attack_closed_form, optimal_attack_value,
)
from .core import (
    Attack, DifferentialReport, LabelSpace, Mechanism, MetricSet, Prior, PrivacyBounds, conditional_error,
    cost_per_secret, expected_cost, expected_privacy, privacy_of_secret, privacy_per_secret,
    verify_differential, worst_case_cost,
)
from .errors import (
    DimensionMismatch, DistortionBoundExceeded, EmptyTrace, Infeasible, InfeasibleAfterPruning,
    NumericalFailure, PostCheckFailed, PrivgameError, SolverFailure, UnknownLabel,
    UnreachableObservableWarning,
)
from .mechanism import (
    ApproxOptions, build_program, max_distortion, optimal_differential, optimal_differential_thresholded,
    optimal_distortion, optimal_joint, prune_constraints,
)

__version__ = "0.1.0"

__all__ = [
    "Attack", "DifferentialReport", "LabelSpace", "Mechanism", "MetricSet", "Prior", "PrivacyBounds",
    "conditional_error", "cost_per_secret", "expected_cost", "expected_privacy", "privacy_of_secret",
    "privacy_per_secret", "verify_differential", "worst_case_cost",
    "bayes_attack", "estimation_loss", "minimax_attack", "minimax_attack_pairwise", "minimax_attack_sum",
    "optimal_attack", "optimal_attack_closed_form", "optimal_attack_value",
    "ApproxOptions", "build_program", "max_distortion", "optimal_differential",
    "optimal_differential_thresholded", "optimal_distortion", "optimal_joint", "prune_constraints",
    "DimensionMismatch", "DistortionBoundExceeded", "EmptyTrace", "Infeasible", "InfeasibleAfterPruning",
    "NumericalFailure", "PostCheckFailed", "PrivgameError", "SolverFailure", "UnknownLabel",
    "UnreachableObservableWarning",
]
