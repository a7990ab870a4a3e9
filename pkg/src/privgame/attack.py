"""Inference attacks against a known obfuscation mechanism."""

from __future__ import annotations

import warnings

import numpy as np

from .core import Attack, Mechanism, MetricSet, Prior, _check, clean_stochastic
from .errors import SolverFailure, UnreachableObservableWarning
from .lp import LpBuilder, SolverOptions, solve


def estimation_loss(weights: np.ndarray, mech: Mechanism, metrics: MetricSet) -> np.ndarray:
    """``L[o, s_hat] = sum_s w(s) p(o|s) d(s_hat, s)``: the error of guessing ``s_hat`` on ``o``."""
    return (weights[:, None] * mech.rows).T @ metrics.privacy_dist.T


def _attack_builder(n_obs: int, n_sec: int, extra: int = 0) -> LpBuilder:
    """Builder with ``q[o, s_hat]`` at ``o * n_sec + s_hat`` and the row-sum equalities."""
    b = LpBuilder(n_obs * n_sec + extra)
    o = np.repeat(np.arange(n_obs), n_sec)
    b.add_block(o, np.arange(n_obs * n_sec), 1.0, "=", np.ones(n_obs))
    return b


def _solve_attack(lp, mech: Mechanism, options, what: str):
    sol = solve(lp, options)
    if not sol.optimal:
        raise SolverFailure(f"{what} LP returned {sol.status.value}")
    n_obs, n_sec = len(mech.observables), len(mech.secrets)
    q = clean_stochastic(sol.values[: n_obs * n_sec].reshape(n_obs, n_sec))
    attack = Attack(mech.observables, mech.secrets.as_role("secrets"), q)
    return attack, sol


def optimal_attack(prior: Prior, mech: Mechanism, metrics: MetricSet, *,
                   return_value: bool = False, options: SolverOptions | None = None):
    """Attack minimizing the adversary's expected error, solved as an LP.

    With ``return_value=True`` returns ``(attack, value)`` where ``value`` is
    the LP optimum, i.e. the user's expected privacy under this attack.
    """
    _check(prior, mech, metrics=metrics)
    loss = estimation_loss(prior.probs, mech, metrics)
    b = _attack_builder(*loss.shape)
    attack, sol = _solve_attack(b.build(loss.ravel()), mech, options, "optimal attack")
    return (attack, sol.objective_value) if return_value else attack


def _argmin_lowest(loss: np.ndarray) -> np.ndarray:
    # equal-up-to-round-off entries count as ties so the lowest index wins
    tol = 1e-12 * max(1.0, float(np.abs(loss).max(initial=0.0)))
    return np.argmax(loss <= loss.min(axis=1, keepdims=True) + tol, axis=1)


def optimal_attack_closed_form(prior: Prior, mech: Mechanism, metrics: MetricSet) -> Attack:
    """Deterministic best response: each observable maps to its lowest-loss estimate.

    Ties go to the lowest secret index.
    """
    _check(prior, mech, metrics=metrics)
    loss = estimation_loss(prior.probs, mech, metrics)
    q = np.zeros_like(loss)
    q[np.arange(len(q)), _argmin_lowest(loss)] = 1.0
    return Attack(mech.observables, mech.secrets, q)


def optimal_attack_value(prior: Prior, mech: Mechanism, metrics: MetricSet) -> float:
    """Expected privacy under the optimal attack, ``sum_o min_s_hat L[o, s_hat]``, without an LP."""
    _check(prior, mech, metrics=metrics)
    return float(estimation_loss(prior.probs, mech, metrics).min(axis=1).sum())


def bayes_attack(prior: Prior, mech: Mechanism) -> Attack:
    """Posterior ``q(s_hat|o) = pi(s_hat) p(o|s_hat) / Pr(o)``.

    Observables that cannot occur get the uniform row, with an
    :class:`UnreachableObservableWarning`.
    """
    _check(prior, mech)
    joint = (prior.probs[:, None] * mech.rows).T  # [o, s]
    marginal = joint.sum(axis=1)
    dead = marginal <= 0
    if dead.any():
        warnings.warn(
            f"{int(dead.sum())} observable(s) have zero probability; using uniform posteriors",
            UnreachableObservableWarning, stacklevel=2,
        )
    q = np.empty_like(joint)
    q[~dead] = joint[~dead] / marginal[~dead, None]
    q[dead] = 1.0 / joint.shape[1]
    return Attack(mech.observables, mech.secrets, q)


def minimax_attack_sum(mech: Mechanism, metrics: MetricSet, *, return_value: bool = False,
                       options: SolverOptions | None = None):
    """Prior-free attack minimizing the unweighted sum of per-secret errors."""
    _check(mech=mech, metrics=metrics)
    loss = estimation_loss(np.ones(len(mech.secrets)), mech, metrics)
    b = _attack_builder(*loss.shape)
    attack, sol = _solve_attack(b.build(loss.ravel()), mech, options, "sum-of-errors attack")
    return (attack, sol.objective_value) if return_value else attack


def minimax_attack(mech: Mechanism, metrics: MetricSet,
                   options: SolverOptions | None = None) -> tuple[Attack, float]:
    """Attack minimizing the largest per-secret error; returns ``(attack, y)``."""
    _check(mech=mech, metrics=metrics)
    P, D = mech.rows, metrics.privacy_dist
    n_sec, n_obs = P.shape
    nq = n_obs * n_sec
    b = _attack_builder(n_obs, n_sec, extra=1)
    # E_s = sum_{o, s_hat} p(o|s) d(s_hat, s) q[o, s_hat] <= y
    coef = P[:, :, None] * D.T[:, None, :]  # [s, o, s_hat]
    s_idx = np.repeat(np.arange(n_sec), nq)
    b.add_block(
        np.concatenate([s_idx, np.arange(n_sec)]),
        np.concatenate([np.tile(np.arange(nq), n_sec), np.full(n_sec, nq)]),
        np.concatenate([coef.ravel(), -np.ones(n_sec)]),
        "<=", np.zeros(n_sec),
    )
    c = np.zeros(nq + 1)
    c[nq] = 1.0
    attack, sol = _solve_attack(b.build(c), mech, options, "minimax attack")
    return attack, float(sol.values[nq])


def minimax_attack_pairwise(mech: Mechanism, metrics: MetricSet,
                            options: SolverOptions | None = None) -> tuple[Attack, float]:
    """Attack minimizing the largest ``sum_o p(o|s) q(s_hat|o) d(s_hat, s)`` over pairs; ``(attack, y)``."""
    _check(mech=mech, metrics=metrics)
    P, D = mech.rows, metrics.privacy_dist
    n_sec, n_obs = P.shape
    nq = n_obs * n_sec
    b = _attack_builder(n_obs, n_sec, extra=1)
    # row (s, s_hat): sum_o p(o|s) d(s_hat, s) q[o, s_hat] - y <= 0
    s, sh, o = np.meshgrid(np.arange(n_sec), np.arange(n_sec), np.arange(n_obs), indexing="ij")
    row = (s * n_sec + sh).ravel()
    vals = (P[s, o] * D[sh, s]).ravel()
    npairs = n_sec * n_sec
    b.add_block(
        np.concatenate([row, np.arange(npairs)]),
        np.concatenate([(o * n_sec + sh).ravel(), np.full(npairs, nq)]),
        np.concatenate([vals, -np.ones(npairs)]),
        "<=", np.zeros(npairs),
    )
    c = np.zeros(nq + 1)
    c[nq] = 1.0
    attack, sol = _solve_attack(b.build(c), mech, options, "pairwise minimax attack")
    return attack, float(sol.values[nq])
