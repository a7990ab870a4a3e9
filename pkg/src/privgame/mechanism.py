"""Utility-optimal obfuscation mechanisms as linear programs.

Every construction shares one variable layout: ``p(o|s)`` for each allowed
(secret, observable) pair, followed by the game-value variables ``x(o)``
when a distortion bound is present, followed by ``z`` for the worst-case
objective. The distortion bound is imposed through the ``x(o)`` variables,
which stand in for the adversary's best response: ``x(o)`` is at most the
error of every estimate on ``o``, and ``sum_o x(o) >= d_m``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .attack import estimation_loss, optimal_attack_value
from .core import (
    Mechanism, MetricSet, Prior, _check, clean_stochastic, verify_differential,
)
from .errors import (
    DistortionBoundExceeded, Infeasible, InfeasibleAfterPruning, PostCheckFailed, SolverFailure,
)
from .lp import LE, LinearProgram, LpBuilder, SolverOptions, Status, solve

OBJECTIVES = ("average", "worst")
KINDS = ("distortion", "differential", "differential-thresh", "joint", "dmax")

# Ratio bounds above this are clamped to it. Clamping only tightens a
# constraint, so results stay differentially private; it keeps the LP
# coefficients inside what HiGHS accepts (huge eps * distance products).
MAX_RATIO = 1e7

POSTCHECK_TOL = 1e-6

# relative cost slack allowed when picking the most private optimum
TIE_SLACK = 1e-7


@dataclass(frozen=True)
class ApproxOptions:
    """Constraint pruning radii; ``None`` disables that kind of pruning.

    ``radius_disting`` drops ratio constraints between secrets farther apart
    than it (in the distinguishability metric). ``radius_support`` removes
    ``p(o|s)`` for observables farther than it from the secret (in the
    metric set's ``ground`` distance).
    """

    radius_disting: float | None = None
    radius_support: float | None = None

    def __post_init__(self):
        for r in (self.radius_disting, self.radius_support):
            if r is not None and not r >= 0:
                raise ValueError("pruning radii must be non-negative")

    @property
    def active(self) -> bool:
        return self.radius_disting is not None or self.radius_support is not None


NO_APPROX = ApproxOptions()


@dataclass(frozen=True)
class Pruning:
    support: np.ndarray  # bool [s, o]: p(o|s) kept as a variable
    pairs: np.ndarray  # bool [s, s2]: ratio constraints emitted for this ordered pair
    approximate: bool  # something was actually removed


def prune_constraints(metrics: MetricSet, approx: ApproxOptions | None = None) -> Pruning:
    """Variables and secret pairs that survive the pruning radii.

    A ratio constraint between ``p(o|s)`` and ``p(o|s2)`` is emitted only
    when both variables survive; the pruned program is therefore a
    relaxation, and exact once both radii cover the respective diameters.
    """
    approx = approx or NO_APPROX
    n, m = len(metrics.secrets), len(metrics.observables)
    support = np.ones((n, m), dtype=bool)
    if approx.radius_support is not None:
        if metrics.ground is None:
            raise ValueError("support pruning needs ground distances in the metric set")
        support = metrics.ground.T <= approx.radius_support
        empty = np.flatnonzero(~support.any(axis=1))
        if empty.size:
            raise InfeasibleAfterPruning(
                f"support radius {approx.radius_support} leaves {empty.size} secret(s) "
                f"without observables (first: {metrics.secrets[empty[0]]!r})"
            )
    pairs = ~np.eye(n, dtype=bool)
    if approx.radius_disting is not None:
        pairs &= metrics.disting <= approx.radius_disting
    approximate = bool((~support).any()) or bool(
        approx.radius_disting is not None and (metrics.disting > approx.radius_disting).any()
    )
    return Pruning(support, pairs, approximate)


@dataclass(frozen=True)
class SolvedMechanism:
    mechanism: Mechanism
    value: float  # LP optimum: expected/worst cost, or the maximum distortion for "dmax"
    # game values min_s_hat sum_s pi(s) p(o|s) d(s_hat, s), one per observable; the LP only
    # bounds x(o) from above by these, so they are reported at their tightest feasible value
    x: np.ndarray | None
    x_raw: np.ndarray | None  # x(o) exactly as the solver returned them
    solve_seconds: float
    approximate: bool


@dataclass(frozen=True)
class MechanismProgram:
    """A built mechanism LP plus what is needed to read its solution back."""

    kind: str
    lp: LinearProgram
    prior: Prior
    metrics: MetricSet
    p_index: np.ndarray  # int [s, o], -1 where pruned
    x_offset: int | None
    z_index: int | None
    d_m: float | None
    eps_m: float | None
    d_eps_m: float | None
    approx: ApproxOptions
    pruning: Pruning

    def mechanism_from(self, values: np.ndarray) -> Mechanism:
        rows = np.zeros(self.p_index.shape)
        keep = self.p_index >= 0
        rows[keep] = values[self.p_index[keep]]
        return Mechanism(self.metrics.secrets, self.metrics.observables, clean_stochastic(rows))

    def solve(self, options: SolverOptions | None = None, postcheck: bool = True) -> SolvedMechanism:
        t0 = time.perf_counter()
        sol = solve(self.lp, options)
        elapsed = time.perf_counter() - t0
        if sol.status is Status.INFEASIBLE:
            self._explain_infeasible(options)
        if not sol.optimal:
            raise SolverFailure(f"{self.kind} LP returned {sol.status.value}")
        mech = self.mechanism_from(sol.values)
        x = x_raw = None
        if self.x_offset is not None:
            x_raw = sol.values[self.x_offset: self.x_offset + len(self.metrics.observables)].copy()
            x = estimation_loss(self.prior.probs, mech, self.metrics).min(axis=1)
        if postcheck:
            self._postcheck(mech)
        return SolvedMechanism(mech, sol.objective_value, x, x_raw, elapsed, self.pruning.approximate)

    def solve_most_private(self, options: SolverOptions | None = None,
                           slack: float = TIE_SLACK) -> SolvedMechanism:
        """Among the cost-optimal mechanisms, the one with the most privacy.

        Mechanism LPs often have a whole face of optima that differ in how
        well they resist the optimal attack. After the usual solve this
        maximizes ``sum_o x(o)`` with the cost held at its optimum (up to a
        relative ``slack``), which makes the result independent of where the
        solver happened to land on that face.
        """
        if self.kind == "dmax":
            raise ValueError("dmax already maximizes privacy")
        first = self.solve(options)
        prog = self
        if self.x_offset is None:
            prog = build_program(
                self.kind, self.prior, self.metrics, d_m=self.d_m, eps_m=self.eps_m,
                d_eps_m=self.d_eps_m, objective="average" if self.z_index is None else "worst",
                approx=self.approx, game_values=True,
            )
        lp, m = prog.lp, len(self.metrics.observables)
        c = np.zeros(lp.num_vars)
        c[prog.x_offset: prog.x_offset + m] = 1.0
        bound = first.value + slack * max(1.0, abs(first.value))
        second = LinearProgram(
            c, sp.vstack([lp.A, sp.csr_matrix(lp.objective)]), np.append(lp.relations, LE),
            np.append(lp.rhs, bound), lp.lower, lp.upper, maximize=True, var_names=lp.var_names,
        )
        t0 = time.perf_counter()
        sol = solve(second, options)
        elapsed = time.perf_counter() - t0
        if not sol.optimal:
            raise SolverFailure(f"privacy tie-break for the {self.kind} LP returned {sol.status.value}")
        mech = prog.mechanism_from(sol.values)
        self._postcheck(mech)
        x = estimation_loss(self.prior.probs, mech, self.metrics).min(axis=1)
        x_raw = sol.values[prog.x_offset: prog.x_offset + m].copy()
        return SolvedMechanism(mech, float(lp.objective @ sol.values), x, x_raw,
                               first.solve_seconds + elapsed, self.pruning.approximate)

    def _explain_infeasible(self, options):
        if self.d_m is not None:
            bound = _dmax_program(self.prior, self.metrics, self.approx).solve(options).value
            if self.d_m > bound:
                raise DistortionBoundExceeded(self.d_m, bound)
            raise Infeasible(
                f"{self.kind} LP infeasible although d_m={self.d_m:.6g} <= d_m_max={bound:.6g}"
            )
        raise Infeasible(f"{self.kind} LP infeasible")

    def _postcheck(self, mech: Mechanism):
        if self.d_m is not None:
            ap = optimal_attack_value(self.prior, mech, self.metrics)
            if ap < self.d_m - POSTCHECK_TOL:
                raise PostCheckFailed(
                    f"{self.kind} mechanism achieves distortion {ap:.9g} < d_m={self.d_m:.9g}"
                )
        if self.eps_m is not None and not self.pruning.approximate:
            report = verify_differential(mech, self.metrics, self.eps_m, self.d_eps_m)
            if not report.passed:
                raise PostCheckFailed(
                    f"{self.kind} mechanism violates the ratio bound at {report.worst} "
                    f"by {report.margin:.3g}"
                )


def _pair_factors(metrics: MetricSet, eps_m: float, d_eps_m: float | None) -> np.ndarray:
    if d_eps_m is None:
        with np.errstate(over="ignore"):
            f = np.exp(eps_m * metrics.disting)
    else:
        f = np.full(metrics.disting.shape, math.exp(min(eps_m, 700.0)))
    return np.minimum(f, MAX_RATIO)


def build_program(
    kind: str,
    prior: Prior,
    metrics: MetricSet,
    *,
    d_m: float | None = None,
    eps_m: float | None = None,
    d_eps_m: float | None = None,
    objective: str = "average",
    approx: ApproxOptions | None = None,
    game_values: bool = False,
) -> MechanismProgram:
    """Assemble the LP for one of the mechanism ``KINDS``.

    ``distortion`` needs ``d_m``; ``differential`` needs ``eps_m``;
    ``differential-thresh`` needs ``eps_m`` and ``d_eps_m``; ``joint`` needs
    ``d_m`` and ``eps_m``; ``dmax`` needs neither and maximizes the
    achievable distortion instead of minimizing cost. ``game_values`` adds
    the ``x(o)`` variables even when no distortion bound needs them.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}")
    need_dm = kind in ("distortion", "joint")
    need_eps = kind in ("differential", "differential-thresh", "joint")
    if need_dm and (d_m is None or not d_m >= 0):
        raise ValueError(f"{kind} mechanism needs d_m >= 0")
    if need_eps and (eps_m is None or not eps_m >= 0):
        raise ValueError(f"{kind} mechanism needs eps_m >= 0")
    if kind == "differential-thresh" and (d_eps_m is None or not d_eps_m >= 0):
        raise ValueError("differential-thresh mechanism needs d_eps_m >= 0")
    _check(prior, metrics=metrics)

    approx = approx or NO_APPROX
    pruning = prune_constraints(metrics, approx)
    support = pruning.support
    pi = prior.probs
    n, m = support.shape
    secrets, observables = metrics.secrets, metrics.observables

    s_of, o_of = np.nonzero(support)  # row-major: p(o|s) ordered by s then o
    k = len(s_of)
    p_index = np.full((n, m), -1, dtype=np.int64)
    p_index[s_of, o_of] = np.arange(k)

    with_x = need_dm or kind == "dmax" or game_values
    x_offset = k if with_x else None
    z_index = None
    nvars = k + (m if with_x else 0)
    if objective == "worst" and kind != "dmax":
        z_index = nvars
        nvars += 1

    names = [f"p_{secrets[s]}_{observables[o]}" for s, o in zip(s_of, o_of)]
    if with_x:
        names += [f"x_{o}" for o in observables]
    if z_index is not None:
        names.append("z")

    b = LpBuilder(nvars)
    # each secret's row is a distribution over observables
    b.add_block(s_of, np.arange(k), 1.0, "=", np.ones(n))

    if with_x:
        # sum_s pi(s) d(s_hat, s) p(o|s) - x(o) >= 0 for every (o, s_hat); row id o * n + s_hat
        live = pi[s_of] > 0
        ls, lo, lp_idx = s_of[live], o_of[live], np.arange(k)[live]
        sh = np.arange(n)
        vals = pi[ls][:, None] * metrics.privacy_dist[sh[None, :], ls[:, None]]  # [term, s_hat]
        rows = lo[:, None] * n + sh[None, :]
        cols = np.broadcast_to(lp_idx[:, None], vals.shape)
        nz = vals != 0
        x_rows = np.arange(m * n)
        b.add_block(
            np.concatenate([rows[nz], x_rows]),
            np.concatenate([cols[nz], k + x_rows // n]),
            np.concatenate([vals[nz], -np.ones(m * n)]),
            ">=", np.zeros(m * n),
        )
        if need_dm:
            b.add_block(np.zeros(m, dtype=np.int64), k + np.arange(m), 1.0, ">=", [d_m])

    if need_eps:
        pairs = pruning.pairs
        if kind == "differential-thresh":
            pairs = pairs & (metrics.disting <= d_eps_m)
        factor = _pair_factors(metrics, eps_m, d_eps_m if kind == "differential-thresh" else None)
        ps, ps2 = np.nonzero(pairs)
        # p(o|s) - factor(s, s2) p(o|s2) <= 0 where both variables exist
        both = support[ps][:, :] & support[ps2][:, :]  # [pair, o]
        pair_i, o_i = np.nonzero(both)
        s1, s2 = ps[pair_i], ps2[pair_i]
        nrows = len(pair_i)
        r = np.arange(nrows)
        b.add_block(
            np.concatenate([r, r]),
            np.concatenate([p_index[s1, o_i], p_index[s2, o_i]]),
            np.concatenate([np.ones(nrows), -factor[s1, s2]]),
            "<=", np.zeros(nrows),
        )

    c = np.zeros(nvars)
    maximize = False
    if kind == "dmax":
        c[k: k + m] = 1.0
        maximize = True
    elif objective == "average":
        c[:k] = pi[s_of] * metrics.cost[o_of, s_of]
    else:
        c[z_index] = 1.0
        # sum_o c(o, s) p(o|s) - z <= 0 for every s
        b.add_block(
            np.concatenate([s_of, np.arange(n)]),
            np.concatenate([np.arange(k), np.full(n, z_index)]),
            np.concatenate([metrics.cost[o_of, s_of], -np.ones(n)]),
            "<=", np.zeros(n),
        )

    lp = b.build(c, maximize=maximize, var_names=names)
    return MechanismProgram(
        kind=kind, lp=lp, prior=prior, metrics=metrics, p_index=p_index,
        x_offset=x_offset, z_index=z_index,
        d_m=float(d_m) if need_dm else None,
        eps_m=float(eps_m) if need_eps else None,
        d_eps_m=float(d_eps_m) if kind == "differential-thresh" else None,
        approx=approx, pruning=pruning,
    )


def _dmax_program(prior, metrics, approx=None) -> MechanismProgram:
    return build_program("dmax", prior, metrics, approx=approx)


def optimal_distortion(prior: Prior, metrics: MetricSet, d_m: float, objective: str = "average",
                       approx: ApproxOptions | None = None,
                       options: SolverOptions | None = None) -> Mechanism:
    """Cheapest mechanism whose privacy against the optimal attack is at least ``d_m``.

    Raises :class:`DistortionBoundExceeded` (carrying the bound) when ``d_m``
    exceeds the largest achievable distortion.
    """
    prog = build_program("distortion", prior, metrics, d_m=d_m, objective=objective, approx=approx)
    return prog.solve(options).mechanism


def optimal_differential(prior: Prior, metrics: MetricSet, eps_m: float,
                         approx: ApproxOptions | None = None, objective: str = "average",
                         options: SolverOptions | None = None) -> Mechanism:
    """Cheapest mechanism with ``p(o|s) <= exp(eps_m d_eps(s, s2)) p(o|s2)`` everywhere."""
    prog = build_program("differential", prior, metrics, eps_m=eps_m, objective=objective, approx=approx)
    return prog.solve(options).mechanism


def optimal_differential_thresholded(prior: Prior, metrics: MetricSet, eps_m: float, d_eps_m: float,
                                     approx: ApproxOptions | None = None, objective: str = "average",
                                     options: SolverOptions | None = None) -> Mechanism:
    """Cheapest mechanism with the flat ``exp(eps_m)`` ratio bound on pairs within ``d_eps_m``."""
    prog = build_program("differential-thresh", prior, metrics, eps_m=eps_m, d_eps_m=d_eps_m,
                         objective=objective, approx=approx)
    return prog.solve(options).mechanism


def optimal_joint(prior: Prior, metrics: MetricSet, d_m: float, eps_m: float,
                  approx: ApproxOptions | None = None, objective: str = "average",
                  options: SolverOptions | None = None) -> Mechanism:
    """Cheapest mechanism meeting both the distortion bound and the ratio bound."""
    prog = build_program("joint", prior, metrics, d_m=d_m, eps_m=eps_m, objective=objective,
                         approx=approx)
    return prog.solve(options).mechanism


def max_distortion(prior: Prior, metrics: MetricSet, approx: ApproxOptions | None = None,
                   options: SolverOptions | None = None) -> float:
    """Largest distortion privacy any mechanism can guarantee under ``prior``."""
    return _dmax_program(prior, metrics, approx).solve(options).value
