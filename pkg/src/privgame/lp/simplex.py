"""Dense two-phase revised simplex with Bland's anti-cycling rule.

Meant for the small programs that show up in tests and hand-sized games;
the large mechanism programs go to HiGHS (see :mod:`privgame.lp.solver`).
"""

from __future__ import annotations

import numpy as np

from ..errors import NumericalFailure
from .model import EQ, GE, LE, LinearProgram, LpSolution, Status

_REFACTOR_EVERY = 20
_PIVOT_TOL = 1e-7  # relative to the largest entry of the entering column


def _standard_form(lp: LinearProgram):
    """Rewrite ``lp`` as ``min c@u  s.t.  M@u = b, u >= 0, b >= 0``.

    Returns ``(M, b, c, x0, T)`` with the original point recovered as
    ``x = x0 + T @ u[:T.shape[1]]``.
    """
    n = lp.num_vars
    lo, hi = lp.lower, lp.upper
    x0 = np.zeros(n)
    t_rows, t_cols, t_vals = [], [], []
    bound_rows = []
    k = 0
    for j in range(n):
        if np.isfinite(lo[j]):
            x0[j] = lo[j]
            t_rows.append(j), t_cols.append(k), t_vals.append(1.0)
            if np.isfinite(hi[j]):
                bound_rows.append((k, hi[j] - lo[j]))
            k += 1
        elif np.isfinite(hi[j]):
            x0[j] = hi[j]
            t_rows.append(j), t_cols.append(k), t_vals.append(-1.0)
            k += 1
        else:
            t_rows += [j, j]
            t_cols += [k, k + 1]
            t_vals += [1.0, -1.0]
            k += 2
    T = np.zeros((n, k))
    T[t_rows, t_cols] = t_vals

    A = lp.A.toarray()
    rows = A @ T
    rhs = lp.rhs - A @ x0
    rel = lp.relations.astype(int)
    if bound_rows:
        extra = np.zeros((len(bound_rows), k))
        for i, (col, width) in enumerate(bound_rows):
            extra[i, col] = 1.0
        rows = np.vstack([rows, extra])
        rhs = np.concatenate([rhs, [w for _, w in bound_rows]])
        rel = np.concatenate([rel, np.full(len(bound_rows), LE)])

    m = rows.shape[0]
    slack_rows = np.flatnonzero(rel != EQ)
    slack = np.zeros((m, len(slack_rows)))
    slack[slack_rows, np.arange(len(slack_rows))] = np.where(rel[slack_rows] == GE, -1.0, 1.0)
    M = np.hstack([rows, slack])
    neg = rhs < 0
    M[neg] *= -1.0
    rhs = np.where(neg, -rhs, rhs)

    c = lp.objective @ T
    if lp.maximize:
        c = -c
    c = np.concatenate([c, np.zeros(len(slack_rows))])
    return M, rhs, c, x0, T


class _Tableau:
    """Basis bookkeeping for the revised method: explicit ``B^-1`` updated by eta pivots."""

    def __init__(self, M, b, basis):
        self.M = M
        self.b = b
        self.basis = np.array(basis, dtype=np.int64)
        self.refactor()
        self.iterations = 0

    def refactor(self):
        try:
            self.Binv = np.linalg.inv(self.M[:, self.basis])
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure("simplex basis became singular") from exc

    def x_basic(self):
        return self.Binv @ self.b

    def pivot(self, r: int, j: int, u: np.ndarray):
        Binv = self.Binv
        Binv[r] /= u[r]
        u = u.copy()
        u[r] = 0.0
        Binv -= np.outer(u, Binv[r])
        self.basis[r] = j
        self.iterations += 1
        if self.iterations % _REFACTOR_EVERY == 0:
            self.refactor()

    def run(self, cost, allowed, opt_tol, max_iter):
        """Iterate to optimality for ``cost``; returns ``"optimal"`` or ``"unbounded"``."""
        M = self.M
        tol = opt_tol * max(1.0, float(np.max(np.abs(cost), initial=0.0)))
        while True:
            if self.iterations >= max_iter:
                raise NumericalFailure(f"simplex hit the iteration limit ({max_iter})")
            y = cost[self.basis] @ self.Binv
            d = cost - y @ M
            d[self.basis] = 0.0
            d[~allowed] = 0.0
            # Bland: lowest-index improving column enters
            entering = np.flatnonzero(d < -tol)
            if entering.size == 0:
                return "optimal"
            j = int(entering[0])
            u = self.Binv @ M[:, j]
            # pivots tiny next to the rest of the column amplify round-off in x_B
            ptol = _PIVOT_TOL * max(1.0, float(np.abs(u).max()))
            pos = u > ptol
            pinned = ~allowed[self.basis] & (np.abs(u) > ptol)
            if not (pos.any() or pinned.any()):
                return "unbounded"
            xb = np.maximum(self.x_basic(), 0.0)
            ratios = np.full(len(u), np.inf)
            ratios[pos] = xb[pos] / u[pos]
            # a basic variable that may not enter (a leftover zero-level artificial)
            # must stay at zero, so it blocks whichever way the step would move it
            ratios[pinned] = 0.0
            best = ratios.min()
            ties = np.flatnonzero(ratios <= best + 1e-12 * max(1.0, best))
            # Bland: among tied rows the lowest-index basic variable leaves
            r = int(ties[np.argmin(self.basis[ties])])
            self.pivot(r, j, u)


def simplex(lp: LinearProgram, feas_tol: float = 1e-9, opt_tol: float = 1e-9,
            max_iter: int | None = None) -> LpSolution:
    """Solve ``lp`` with the dense revised simplex method (two phases, Bland's rule)."""
    M, b, c, x0, T = _standard_form(lp)
    m, ncols = M.shape
    if max_iter is None:
        max_iter = 200 * (m + ncols) + 1000
    nan = np.full(lp.num_vars, np.nan)

    # phase 1 over [M | I] from the all-artificial basis
    Mfull = np.hstack([M, np.eye(m)])
    tab = _Tableau(Mfull, b, np.arange(ncols, ncols + m))
    cost1 = np.concatenate([np.zeros(ncols), np.ones(m)])
    allowed = np.ones(ncols + m, dtype=bool)
    tab.run(cost1, allowed, opt_tol, max_iter)
    xb = tab.x_basic()
    if xb[tab.basis >= ncols].sum() > feas_tol * max(1.0, float(np.max(b, initial=0.0))):
        return LpSolution(Status.INFEASIBLE, nan, float("nan"), "simplex", tab.iterations)

    # drive zero-level artificials out where some structural column can replace them
    for r in np.flatnonzero(tab.basis >= ncols):
        row = tab.Binv[r] @ M
        row[tab.basis[tab.basis < ncols]] = 0.0
        j = int(np.argmax(np.abs(row)))
        if abs(row[j]) > _PIVOT_TOL:
            tab.pivot(int(r), j, tab.Binv @ Mfull[:, j])

    allowed[ncols:] = False
    cost2 = np.concatenate([c, np.zeros(m)])
    if tab.run(cost2, allowed, opt_tol, max_iter) == "unbounded":
        return LpSolution(Status.UNBOUNDED, nan, float("nan"), "simplex", tab.iterations)

    tab.refactor()  # read the vertex off a fresh inverse, not the accumulated updates
    u = np.zeros(ncols + m)
    u[tab.basis] = tab.x_basic()
    x = x0 + T @ u[: T.shape[1]]
    return LpSolution(Status.OPTIMAL, x, lp.evaluate(x), "simplex", tab.iterations)
