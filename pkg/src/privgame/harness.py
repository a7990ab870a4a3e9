"""Experiment runner: grid-world comparisons of the three mechanism families.

Each experiment returns an :class:`ExperimentResult` (rows of plain values)
that can be written as CSV. Failures of individual cells (infeasible
thresholds, solver trouble) are recorded in the ``status`` / ``note``
columns and the run continues. Every row is re-validated independently of
the construction post-checks before it is kept.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .attack import bayes_attack, optimal_attack
from .core import Prior, expected_cost, expected_privacy, verify_differential
from .errors import DistortionBoundExceeded, Infeasible, InfeasibleAfterPruning, PrivgameError, \
    SolverFailure, UnreachableObservableWarning
from .geo import Grid, grid_metrics, prior_from_trace, sharpen_prior, synthetic_users
from .io import host_line, write_csv
from .lp import SolverOptions
from .mechanism import ApproxOptions, build_program, max_distortion

DEFAULT_GRID = Grid(8, 6, 6.0, 4.0)
APPROX_GRID = Grid(6, 6, 4.5, 4.5)
CHECK_TOL = 1e-6


def parse_ladder(spec: str) -> list[float]:
    """``"a:b:step"`` (both ends inclusive) or a comma-separated list."""
    if ":" not in spec:
        return [float(v) for v in spec.split(",") if v.strip()]
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError(f"ladder {spec!r} is not a:b:step")
    a, b, step = map(float, parts)
    if step <= 0 or b < a:
        raise ValueError(f"ladder {spec!r} needs a <= b and step > 0")
    n = int(math.floor((b - a) / step + 1e-9)) + 1
    return [round(a + i * step, 12) for i in range(n)]


SCENARIO1_EPS = parse_ladder("0.15:0.9:0.15")
SCENARIO3_EPS = parse_ladder("0.2:1.0:0.2")
SCENARIO3_DM_STEP = 0.5
APPROX_RADII = parse_ladder("0.75:3.75:0.75")


@dataclass(frozen=True)
class ExperimentConfig:
    grid: Grid = DEFAULT_GRID
    users: int = 10
    seed: int = 0
    trace_length: int = 2000
    smoothing: float = 0.0
    objective: str = "average"
    options: SolverOptions | None = None
    # pick the most private of the cost-optimal mechanisms
    most_private: bool = True

    def metadata(self) -> dict:
        g = self.grid
        return {"grid": f"{g.nx}x{g.ny}/{g.width_km}x{g.height_km}km", "users": self.users,
                "seed": self.seed, "trace_length": self.trace_length, "smoothing": self.smoothing,
                "objective": self.objective, "most_private": self.most_private}


@dataclass
class ExperimentResult:
    name: str
    columns: tuple
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    comments: tuple = ()
    timing_columns: tuple = ()

    def column(self, name: str) -> np.ndarray:
        return np.array([np.nan if r.get(name) in (None, "") else float(r[name]) for r in self.rows])

    def ok_rows(self) -> list[dict]:
        return [r for r in self.rows if r["status"] == "ok"]

    def write(self, path, with_host: bool = True):
        meta = {"experiment": self.name, **self.metadata}
        comments = list(self.comments)
        if with_host:
            comments.append(host_line())
        write_csv(path, self.columns, self.rows, meta, comments)


def user_priors(cfg: ExperimentConfig) -> list[tuple[str, Prior]]:
    traces = synthetic_users(cfg.grid, cfg.users, cfg.seed, cfg.trace_length)
    return [(t.user_id, prior_from_trace(t, cfg.grid, cfg.smoothing)) for t in traces]


def _solve(kind, prior, metrics, cfg, **kw):
    prog = build_program(kind, prior, metrics, objective=cfg.objective, **kw)
    if cfg.most_private:
        return prog.solve_most_private(cfg.options)
    return prog.solve(cfg.options)


def _ap_optimal(prior, mech, metrics, cfg) -> float:
    attack = optimal_attack(prior, mech, metrics, options=cfg.options)
    return expected_privacy(prior, mech, attack, metrics)


def _ap_bayes(prior, mech, metrics) -> float:
    # unreachable observables carry zero weight, so their filler rows do not matter
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnreachableObservableWarning)
        return expected_privacy(prior, mech, bayes_attack(prior, mech), metrics)


def _recheck(prior, mech, metrics, ap, eps_m=None, d_m=None) -> str | None:
    """Independent re-validation of a result row; returns a problem description or None."""
    rows = mech.rows
    if np.any(rows < 0) or np.abs(rows.sum(axis=1) - 1).max() > 1e-7:
        return "mechanism rows not stochastic"
    if eps_m is not None:
        report = verify_differential(mech, metrics, eps_m)
        if not report:
            return f"ratio bound violated by {report.margin:.3g}"
    if d_m is not None and ap < d_m - CHECK_TOL:
        return f"privacy {ap:.9g} below d_m {d_m:.9g}"
    return None


def _status_of(exc: Exception) -> str:
    if isinstance(exc, DistortionBoundExceeded):
        return "exceeds-dmax"
    if isinstance(exc, InfeasibleAfterPruning):
        return "infeasible-after-pruning"
    if isinstance(exc, Infeasible):
        return "infeasible"
    return "solver-failure"


_CELL_ERRORS = (SolverFailure, PrivgameError)


def _fail(row: dict, exc: Exception) -> dict:
    row["status"] = _status_of(exc)
    row["note"] = str(exc).replace(",", ";")
    return row


def _check_fail(row: dict, problem: str) -> dict:
    row["status"] = "check-failed"
    row["note"] = problem.replace(",", ";")
    return row


S1_COLUMNS = (
    "user", "eps_m", "d_m", "cost_diff", "cost_dist", "cost_joint",
    "ap_opt_diff", "ap_opt_dist", "ap_opt_joint", "ap_bayes_diff", "ap_bayes_dist", "ap_bayes_joint",
    "status", "note",
)


def scenario1(cfg: ExperimentConfig = ExperimentConfig(), eps_ladder=SCENARIO1_EPS) -> ExperimentResult:
    """Match the distortion threshold to what the differential mechanism achieves.

    Per user and budget: build the differential mechanism, measure its
    privacy against the optimal attack, use that as ``d_m`` for the
    distortion and joint mechanisms, then attack all three optimally and
    with the Bayes posterior.
    """
    metrics = grid_metrics(cfg.grid)
    out = ExperimentResult("scenario1", S1_COLUMNS, metadata=cfg.metadata(), comments=(
        "cost_*: expected Hamming cost; ap_opt_* / ap_bayes_*: expected error in km under the "
        "optimal / Bayes attack; d_m = ap_opt_diff",
    ))
    for uid, prior in user_priors(cfg):
        for eps in eps_ladder:
            row = {"user": uid, "eps_m": eps, "status": "ok", "note": ""}
            out.rows.append(row)
            try:
                mechs = {"diff": _solve("differential", prior, metrics, cfg, eps_m=eps).mechanism}
                d_m = _ap_optimal(prior, mechs["diff"], metrics, cfg)
                row["d_m"] = d_m
                mechs["dist"] = _solve("distortion", prior, metrics, cfg, d_m=d_m).mechanism
                mechs["joint"] = _solve("joint", prior, metrics, cfg, d_m=d_m, eps_m=eps).mechanism
            except _CELL_ERRORS as exc:
                _fail(row, exc)
                continue
            for name, mech in mechs.items():
                row[f"cost_{name}"] = expected_cost(prior, mech, metrics)
                row[f"ap_opt_{name}"] = _ap_optimal(prior, mech, metrics, cfg)
                row[f"ap_bayes_{name}"] = _ap_bayes(prior, mech, metrics)
            for name, e, d in (("diff", eps, None), ("dist", None, d_m), ("joint", eps, d_m)):
                problem = _recheck(prior, mechs[name], metrics, row[f"ap_opt_{name}"], e, d)
                if problem:
                    _check_fail(row, f"{name}: {problem}")
                    break
    return out


S2_COLUMNS = (
    "user", "eps_m", "offset", "d_m", "d_max", "cost_diff", "cost_dist", "cost_joint",
    "ap_diff", "ap_dist", "ap_joint", "status", "note",
)


def scenario2(cfg: ExperimentConfig = ExperimentConfig(), eps_ladder=SCENARIO1_EPS,
              offsets=(0.1, 0.2)) -> ExperimentResult:
    """Ask for more distortion privacy than the differential mechanism gives (``d_m = AP + offset``)."""
    metrics = grid_metrics(cfg.grid)
    out = ExperimentResult("scenario2", S2_COLUMNS, metadata=cfg.metadata(), comments=(
        "d_m = ap_diff + offset (km); ap_*: expected error under the optimal attack",
    ))
    for uid, prior in user_priors(cfg):
        d_max = max_distortion(prior, metrics, options=cfg.options)
        for eps in eps_ladder:
            try:
                diff = _solve("differential", prior, metrics, cfg, eps_m=eps).mechanism
                ap_diff = _ap_optimal(prior, diff, metrics, cfg)
            except _CELL_ERRORS as exc:
                for off in offsets:
                    out.rows.append(_fail({"user": uid, "eps_m": eps, "offset": off, "d_max": d_max,
                                           "status": "", "note": ""}, exc))
                continue
            for off in offsets:
                d_m = ap_diff + off
                row = {"user": uid, "eps_m": eps, "offset": off, "d_m": d_m, "d_max": d_max,
                       "cost_diff": expected_cost(prior, diff, metrics), "ap_diff": ap_diff,
                       "status": "ok", "note": ""}
                out.rows.append(row)
                try:
                    dist = _solve("distortion", prior, metrics, cfg, d_m=d_m).mechanism
                    joint = _solve("joint", prior, metrics, cfg, d_m=d_m, eps_m=eps).mechanism
                except _CELL_ERRORS as exc:
                    _fail(row, exc)
                    continue
                row["cost_dist"] = expected_cost(prior, dist, metrics)
                row["cost_joint"] = expected_cost(prior, joint, metrics)
                row["ap_dist"] = _ap_optimal(prior, dist, metrics, cfg)
                row["ap_joint"] = _ap_optimal(prior, joint, metrics, cfg)
                problem = (_recheck(prior, dist, metrics, row["ap_dist"], d_m=d_m)
                           or _recheck(prior, joint, metrics, row["ap_joint"], eps, d_m))
                if problem:
                    _check_fail(row, problem)
    return out


S3_COLUMNS = (
    "user", "eps_m", "d_m", "d_max", "cost_joint", "cost_diff", "cost_dist",
    "ap_joint", "ap_diff", "ap_dist", "gap", "rel_gap", "status", "note",
)


def dm_ladder_for(d_max: float, step: float = SCENARIO3_DM_STEP, start: float | None = None) -> list[float]:
    """``start, start + step, ...`` below ``d_max``, then ``d_max`` itself (less the feasibility tolerance)."""
    start = step if start is None else start
    top = d_max - 1e-7
    ladder = [v for v in parse_ladder(f"{start}:{max(start, top)}:{step}") if v < top - 1e-9]
    if top > 0:
        ladder.append(top)
    return ladder


def scenario3(cfg: ExperimentConfig = ExperimentConfig(), eps_ladder=SCENARIO3_EPS,
              dm_ladder=None, dm_step: float = SCENARIO3_DM_STEP) -> ExperimentResult:
    """Independent ``(eps_m, d_m)`` sweep comparing joint with each component.

    ``dm_ladder`` (absolute km) is capped at each user's maximum distortion,
    which is always appended as the last rung; by default the ladder is
    ``dm_step, 2 dm_step, ...``. Rows come out sorted by joint privacy.
    ``gap`` is the joint privacy minus the larger component privacy.
    """
    metrics = grid_metrics(cfg.grid)
    out = ExperimentResult("scenario3", S3_COLUMNS, metadata=cfg.metadata(), comments=(
        "ap_*: expected error under the optimal attack (km); gap = ap_joint - max(ap_diff, ap_dist); "
        "rows sorted by ap_joint",
    ))
    rows = []
    for uid, prior in user_priors(cfg):
        d_max = max_distortion(prior, metrics, options=cfg.options)
        if dm_ladder is None:
            ladder = dm_ladder_for(d_max, dm_step)
        else:
            ladder = [v for v in dm_ladder if v < d_max - 1e-7] + [d_max - 1e-7]
        diff, dist = {}, {}
        for eps in eps_ladder:
            try:
                m = _solve("differential", prior, metrics, cfg, eps_m=eps).mechanism
                diff[eps] = (m, expected_cost(prior, m, metrics), _ap_optimal(prior, m, metrics, cfg))
            except _CELL_ERRORS as exc:
                diff[eps] = exc
        for d_m in ladder:
            try:
                m = _solve("distortion", prior, metrics, cfg, d_m=d_m).mechanism
                dist[d_m] = (m, expected_cost(prior, m, metrics), _ap_optimal(prior, m, metrics, cfg))
            except _CELL_ERRORS as exc:
                dist[d_m] = exc
        for eps in eps_ladder:
            for d_m in ladder:
                row = {"user": uid, "eps_m": eps, "d_m": d_m, "d_max": d_max, "status": "ok", "note": ""}
                rows.append(row)
                for part in (diff[eps], dist[d_m]):
                    if isinstance(part, Exception):
                        _fail(row, part)
                if row["status"] != "ok":
                    continue
                row["cost_diff"], row["ap_diff"] = diff[eps][1:]
                row["cost_dist"], row["ap_dist"] = dist[d_m][1:]
                try:
                    joint = _solve("joint", prior, metrics, cfg, d_m=d_m, eps_m=eps).mechanism
                except _CELL_ERRORS as exc:
                    _fail(row, exc)
                    continue
                row["cost_joint"] = expected_cost(prior, joint, metrics)
                row["ap_joint"] = _ap_optimal(prior, joint, metrics, cfg)
                best = max(row["ap_diff"], row["ap_dist"])
                row["gap"] = row["ap_joint"] - best
                row["rel_gap"] = row["gap"] / best if best > 0 else 0.0
                problem = _recheck(prior, joint, metrics, row["ap_joint"], eps, d_m)
                if problem:
                    _check_fail(row, problem)
    rows.sort(key=lambda r: (math.inf if r.get("ap_joint") is None else r["ap_joint"], r["user"],
                             r["eps_m"], r["d_m"]))
    out.rows = rows
    return out


PM_COLUMNS = (
    "user", "eps_m", "k", "beta", "entropy_pi", "entropy_hat", "d_m",
    "ap_diff_pi", "ap_dist_pi", "ap_diff_hat", "ap_dist_hat", "status", "note",
)


def prior_mismatch(cfg: ExperimentConfig = ExperimentConfig(), eps_ladder=SCENARIO1_EPS,
                   k: int = 2, betas=(1.0, 2.0, 4.0, 8.0)) -> ExperimentResult:
    """Mechanisms built for ``pi``, attacked by an adversary holding a sharper ``pi_hat``.

    ``d_m`` follows scenario 1 (the differential mechanism's own privacy).
    The ``*_hat`` columns are the expected error when the adversary's prior
    ``pi_hat`` is the true distribution and the attack is optimal for it;
    ``*_pi`` repeat the same with ``pi``.
    """
    metrics = grid_metrics(cfg.grid)
    out = ExperimentResult("prior", PM_COLUMNS, metadata={**cfg.metadata(), "k": k}, comments=(
        "pi_hat = sharpen_prior(pi; k, beta): top-k cells scaled by beta; entropies in bits; "
        "ap_*_hat = error of the optimal attack for pi_hat; evaluated under pi_hat",
    ))
    for uid, prior in user_priors(cfg):
        for eps in eps_ladder:
            base = {"user": uid, "eps_m": eps, "k": k, "entropy_pi": prior.entropy()}
            try:
                diff = _solve("differential", prior, metrics, cfg, eps_m=eps).mechanism
                d_m = _ap_optimal(prior, diff, metrics, cfg)
                dist = _solve("distortion", prior, metrics, cfg, d_m=d_m).mechanism
            except _CELL_ERRORS as exc:
                for beta in betas:
                    out.rows.append(_fail({**base, "beta": beta, "status": "", "note": ""}, exc))
                continue
            ap_dist_pi = _ap_optimal(prior, dist, metrics, cfg)
            for beta in betas:
                hat = sharpen_prior(prior, k, beta)
                row = {**base, "beta": beta, "entropy_hat": hat.entropy(), "d_m": d_m,
                       "ap_diff_pi": d_m, "ap_dist_pi": ap_dist_pi,
                       "ap_diff_hat": _ap_optimal(hat, diff, metrics, cfg),
                       "ap_dist_hat": _ap_optimal(hat, dist, metrics, cfg),
                       "status": "ok", "note": ""}
                out.rows.append(row)
                if row["entropy_hat"] > row["entropy_pi"] + 1e-12:
                    _check_fail(row, "sharpened prior has higher entropy")
    return out


AX_COLUMNS = (
    "user", "radius", "eps_m", "d_m", "ap_exact", "ap_approx", "error", "seconds", "exact_seconds",
    "num_vars", "num_constraints", "status", "note",
)


def approx_sweep(cfg: ExperimentConfig = ExperimentConfig(grid=APPROX_GRID), eps: float = 0.6,
                 dm: float = 0.3, radii=APPROX_RADII, repeats: int = 3,
                 include_diameter: bool = True, method: str = "highs-ipm") -> ExperimentResult:
    """Joint mechanism with both pruning radii set to each value of ``radii``.

    The exact mechanism is solved once per user. ``error`` is the absolute
    difference in privacy against the optimal attack (km); ``seconds`` is
    the LP solve time, the minimum over ``repeats`` solves. Timing uses
    ``method`` (interior point by default) because simplex running times
    depend on the pivoting path more than on program size.
    """
    metrics = grid_metrics(cfg.grid)
    options = replace(cfg.options or SolverOptions(), method=method)
    radii = list(radii)
    if include_diameter and not any(abs(r - cfg.grid.diameter) < 1e-9 for r in radii):
        radii.append(cfg.grid.diameter)
    out = ExperimentResult("approx", AX_COLUMNS,
                           metadata={**cfg.metadata(), "repeats": repeats, "method": method},
                           comments=("radius: both pruning radii (km); error = |ap_approx - ap_exact| (km); "
                                     "seconds: LP solve wall-clock",),
                           timing_columns=("seconds", "exact_seconds"))

    def timed(approx):
        prog = build_program("joint", prior, metrics, d_m=dm, eps_m=eps, objective=cfg.objective,
                             approx=approx)
        best = None
        for _ in range(max(1, repeats)):
            solved = prog.solve(options)
            if best is None or solved.solve_seconds < best.solve_seconds:
                best = solved
        return prog, best

    for uid, prior in user_priors(cfg):
        base = {"user": uid, "eps_m": eps, "d_m": dm}
        try:
            _, exact = timed(None)
        except _CELL_ERRORS as exc:
            for r in radii:
                out.rows.append(_fail({**base, "radius": r, "status": "", "note": ""}, exc))
            continue
        ap_exact = _ap_optimal(prior, exact.mechanism, metrics, cfg)
        for r in radii:
            row = {**base, "radius": r, "ap_exact": ap_exact, "exact_seconds": exact.solve_seconds,
                   "status": "ok", "note": ""}
            out.rows.append(row)
            try:
                prog, solved = timed(ApproxOptions(radius_disting=r, radius_support=r))
            except _CELL_ERRORS as exc:
                _fail(row, exc)
                continue
            ap = _ap_optimal(prior, solved.mechanism, metrics, cfg)
            row.update(ap_approx=ap, error=abs(ap - ap_exact), seconds=solved.solve_seconds,
                       num_vars=prog.lp.num_vars, num_constraints=prog.lp.num_constraints)
            problem = _recheck(prior, solved.mechanism, metrics, ap,
                               None if solved.approximate else eps, dm)
            if problem:
                _check_fail(row, problem)
    return out


def medians_by(result: ExperimentResult, key: str, value: str) -> list[tuple[float, float]]:
    """Median of ``value`` over ok rows for each distinct ``key``, in key order."""
    groups: dict[float, list[float]] = {}
    for r in result.ok_rows():
        groups.setdefault(float(r[key]), []).append(float(r[value]))
    return [(k, float(np.median(v))) for k, v in sorted(groups.items())]


EXPERIMENTS = {
    "scenario1": scenario1,
    "scenario2": scenario2,
    "scenario3": scenario3,
    "prior": prior_mismatch,
    "approx": approx_sweep,
}


def run(name: str, cfg: ExperimentConfig, **kw) -> ExperimentResult:
    return EXPERIMENTS[name](cfg, **kw)
