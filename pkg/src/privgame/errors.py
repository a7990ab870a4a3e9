"""Exception and warning types raised across the package."""

from __future__ import annotations


class PrivgameError(Exception):
    """Base class for every error raised by privgame."""


class DimensionMismatch(PrivgameError, ValueError):
    """Spaces, matrices or vectors that must agree in size (or labels) do not."""


class UnknownLabel(PrivgameError, KeyError):
    """A label was looked up in a space that does not contain it."""


class SolverFailure(PrivgameError, RuntimeError):
    """An optimization step did not produce a usable optimum."""


class NumericalFailure(SolverFailure):
    """The LP solver could not certify optimality, infeasibility or unboundedness."""


class Infeasible(SolverFailure):
    """The requested mechanism has no feasible solution."""


class DistortionBoundExceeded(Infeasible):
    """The distortion threshold is above the largest achievable distortion.

    ``d_m_max`` carries the computed bound so callers can clamp or report it.
    """

    def __init__(self, d_m: float, d_m_max: float):
        self.d_m = float(d_m)
        self.d_m_max = float(d_m_max)
        super().__init__(
            f"distortion threshold d_m={self.d_m:.6g} exceeds the maximum "
            f"achievable distortion {self.d_m_max:.6g}"
        )


class InfeasibleAfterPruning(Infeasible):
    """Support pruning left some secret without any allowed observable."""


class PostCheckFailed(SolverFailure):
    """A solved mechanism does not meet the privacy guarantee it was built for."""


class EmptyTrace(PrivgameError, ValueError):
    """A prior was requested from a trace with no visits and no smoothing."""


class UnreachableObservableWarning(UserWarning):
    """An observable has zero marginal probability, so its posterior is undefined."""
