"""Entry point for solving a :class:`LinearProgram`.

Three back ends sit behind :func:`solve`:

``simplex``
    the dense revised simplex in :mod:`privgame.lp.simplex`;
``highs``
    HiGHS dual simplex on the program as stated;
``highs-dual``
    HiGHS dual simplex on the explicit dual, with the primal point read back
    from the dual's constraint multipliers. The differential-privacy programs
    have far more rows than columns and solve several times faster this way.
``highs-ipm``
    HiGHS interior point with crossover. Slower here, but its running time
    follows program size smoothly, which makes it the fair choice for timing
    comparisons between programs of different sizes.

``auto`` picks the simplex for small programs and one of the HiGHS routes
otherwise. Every optimal answer is re-substituted into the original program
and rejected if it violates a row or bound by more than ``feas_tol``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from ..errors import NumericalFailure
from .model import EQ, GE, LE, LinearProgram, LpSolution, Status
from .simplex import simplex

log = logging.getLogger(__name__)

METHODS = ("auto", "simplex", "highs", "highs-dual", "highs-ipm")

# programs at most this large (rows * columns of the dense standard form) go to the simplex
_SMALL_DENSE = 40_000
# ... unless their coefficients span more than this ratio; the dense simplex has no scaling
_MAX_COEF_RANGE = 1e6


@dataclass(frozen=True)
class SolverOptions:
    feas_tol: float = 1e-7
    opt_tol: float = 1e-8
    method: str = "auto"
    # HiGHS runs with tighter internal tolerances so its answers clear feas_tol comfortably
    highs_tol: float = 1e-9
    max_iter: int | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")


DEFAULT_OPTIONS = SolverOptions()


def _pick_method(lp: LinearProgram) -> str:
    m, n = lp.num_constraints, lp.num_vars
    if (m + n) * (n + m) <= _SMALL_DENSE and _coef_range(lp) <= _MAX_COEF_RANGE:
        return "simplex"
    if lp.has_standard_bounds and m > 2 * n:
        return "highs-dual"
    return "highs"


def _coef_range(lp: LinearProgram) -> float:
    a = np.abs(lp.A.data)
    a = a[a > 0]
    return float(a.max() / a.min()) if a.size else 1.0


def _highs_options(opts: SolverOptions) -> dict:
    out = {
        "primal_feasibility_tolerance": opts.highs_tol,
        "dual_feasibility_tolerance": opts.highs_tol,
    }
    if opts.max_iter is not None:
        out["maxiter"] = opts.max_iter
    return out


def _split_rows(lp: LinearProgram):
    """``A_ub, b_ub, A_eq, b_eq`` with ``>=`` rows negated into ``<=`` form."""
    r = lp.relations
    A = lp.A
    le = np.flatnonzero(r == LE)
    ge = np.flatnonzero(r == GE)
    eq = np.flatnonzero(r == EQ)
    A_ub = sp.vstack([A[le], -A[ge]]).tocsr()
    b_ub = np.concatenate([lp.rhs[le], -lp.rhs[ge]])
    return A_ub, b_ub, A[eq], lp.rhs[eq]


def _solve_highs(lp: LinearProgram, opts: SolverOptions, variant: str = "highs-ds") -> LpSolution:
    A_ub, b_ub, A_eq, b_eq = _split_rows(lp)
    c = -lp.objective if lp.maximize else lp.objective
    kwargs = dict(
        A_ub=A_ub if A_ub.shape[0] else None, b_ub=b_ub if A_ub.shape[0] else None,
        A_eq=A_eq if A_eq.shape[0] else None, b_eq=b_eq if A_eq.shape[0] else None,
        bounds=np.column_stack([lp.lower, lp.upper]) if lp.num_vars else None,
        method=variant,
    )
    res = linprog(c, options=_highs_options(opts), **kwargs)
    if res.status in (2, 3):
        # HiGHS presolve can label an unbounded program infeasible; classify without it
        res = linprog(c, options={**_highs_options(opts), "presolve": False}, **kwargs)
    nan = np.full(lp.num_vars, np.nan)
    name = "highs-ipm" if variant == "highs-ipm" else "highs"
    if res.status == 0:
        x = np.asarray(res.x, dtype=float)
        return LpSolution(Status.OPTIMAL, x, lp.evaluate(x), name, int(res.nit))
    if res.status == 2:
        return LpSolution(Status.INFEASIBLE, nan, float("nan"), name, int(res.nit))
    if res.status == 3:
        return LpSolution(Status.UNBOUNDED, nan, float("nan"), name, int(res.nit))
    raise NumericalFailure(f"HiGHS could not certify a status: {res.message}")


def _solve_highs_dual(lp: LinearProgram, opts: SolverOptions) -> LpSolution:
    """Solve the dual ``max b@y  s.t.  A.T@y <= c`` and read ``x`` off its multipliers.

    Only valid for ``x >= 0`` programs. Sign conventions for ``y`` follow the
    row relation: ``<=`` rows give ``y <= 0``, ``>=`` rows ``y >= 0`` and
    equality rows a free ``y``.
    """
    c = -lp.objective if lp.maximize else lp.objective
    r = lp.relations
    ylo = np.where(r == LE, -np.inf, np.where(r == GE, 0.0, -np.inf))
    yhi = np.where(r == LE, 0.0, np.inf)
    res = linprog(
        -lp.rhs, A_ub=lp.A.T.tocsr(), b_ub=c,
        bounds=np.column_stack([ylo, yhi]),
        method="highs-ds", options=_highs_options(opts),
    )
    if res.status == 0:
        x = -np.asarray(res.ineqlin.marginals, dtype=float)
        return LpSolution(Status.OPTIMAL, x, lp.evaluate(x), "highs-dual", int(res.nit))
    if res.status == 3:
        nan = np.full(lp.num_vars, np.nan)
        return LpSolution(Status.INFEASIBLE, nan, float("nan"), "highs-dual", int(res.nit))
    # dual infeasible means primal unbounded *or* infeasible; let the primal route decide
    log.debug("dual route returned status %s; re-solving the primal", res.status)
    return _solve_highs(lp, opts)


_BACKENDS = {
    "simplex": lambda lp, o: simplex(lp, feas_tol=min(o.feas_tol, 1e-9), opt_tol=min(o.opt_tol, 1e-9),
                                     max_iter=o.max_iter),
    "highs": _solve_highs,
    "highs-dual": _solve_highs_dual,
    "highs-ipm": lambda lp, o: _solve_highs(lp, o, "highs-ipm"),
}


def solve(lp: LinearProgram, options: SolverOptions | None = None, **overrides) -> LpSolution:
    """Solve ``lp`` and certify the answer.

    Keyword overrides (``method=``, ``feas_tol=`` ...) patch ``options``.
    Returns an :class:`LpSolution` whose status is Optimal, Infeasible or
    Unbounded; raises :class:`NumericalFailure` when no status can be
    certified, including an "optimal" point that fails re-substitution on
    every back end tried.
    """
    opts = options or DEFAULT_OPTIONS
    if overrides:
        opts = replace(opts, **overrides)
    method = _pick_method(lp) if opts.method == "auto" else opts.method
    if method == "highs-dual" and not lp.has_standard_bounds:
        method = "highs"

    tried = []
    for name in dict.fromkeys([method, "highs"]):
        try:
            sol = _BACKENDS[name](lp, opts)
        except NumericalFailure as exc:
            tried.append(f"{name}: {exc}")
            continue
        if not sol.optimal:
            return sol
        viol = lp.max_violation(sol.values)
        if viol <= opts.feas_tol:
            return sol
        tried.append(f"{name}: optimal point violates constraints by {viol:.3g}")
        log.info("LP back end %s returned a point violating constraints by %.3g", name, viol)
    raise NumericalFailure("; ".join(tried))
