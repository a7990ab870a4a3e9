"""Domain model: label spaces, priors, mechanisms, attacks, metrics.

Conventions for the stored tables (all dense ``float`` arrays):

* ``Mechanism.rows[s, o] = p(o|s)``
* ``Attack.rows[o, s_hat] = q(s_hat|o)``
* ``MetricSet.cost[o, s] = c(o, s)``
* ``MetricSet.privacy_dist[s_hat, s] = d(s_hat, s)``
* ``MetricSet.disting[s, s2] = d_eps(s, s2)``
* ``MetricSet.ground[o, s]``: distance used by support pruning (optional)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Hashable, Iterator

import numpy as np

from .errors import DimensionMismatch, UnknownLabel

TAU_FEAS = 1e-7
PRIOR_SUM_TOL = 1e-9
ROW_SUM_TOL = 1e-7


def _readonly(a, shape=None, name="array") -> np.ndarray:
    a = np.array(a, dtype=float)
    if shape is not None and a.shape != shape:
        raise DimensionMismatch(f"{name} has shape {a.shape}, expected {shape}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class LabelSpace:
    """An ordered, finite set of opaque labels with stable indices."""

    labels: tuple
    role: str = "secrets"
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if self.role not in ("secrets", "observables"):
            raise ValueError(f"role must be 'secrets' or 'observables', not {self.role!r}")
        if not labels:
            raise ValueError("a label space needs at least one label")
        index = {lab: i for i, lab in enumerate(labels)}
        if len(index) != len(labels):
            raise ValueError("labels must be unique")
        object.__setattr__(self, "_index", index)

    @classmethod
    def of_size(cls, n: int, role: str = "secrets") -> "LabelSpace":
        return cls(tuple(range(n)), role)

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self) -> Iterator:
        return iter(self.labels)

    def __getitem__(self, i: int):
        return self.labels[i]

    def index(self, label: Hashable) -> int:
        try:
            return self._index[label]
        except (KeyError, TypeError):
            raise UnknownLabel(f"{label!r} is not in the {self.role} space") from None

    def as_role(self, role: str) -> "LabelSpace":
        return self if role == self.role else LabelSpace(self.labels, role)


def _same(a: LabelSpace, b: LabelSpace, what: str):
    if len(a) != len(b):
        raise DimensionMismatch(f"{what}: {len(a)} labels vs {len(b)}")
    if a.labels != b.labels:
        raise DimensionMismatch(f"{what}: label sets differ")


@dataclass(frozen=True)
class Prior:
    space: LabelSpace
    probs: np.ndarray

    def __post_init__(self):
        p = _readonly(self.probs, (len(self.space),), "prior")
        if np.any(~np.isfinite(p)) or np.any(p < 0):
            raise ValueError("prior probabilities must be finite and non-negative")
        if abs(p.sum() - 1.0) > PRIOR_SUM_TOL:
            raise ValueError(f"prior sums to {p.sum():.12g}, not 1")
        object.__setattr__(self, "probs", p)

    @classmethod
    def uniform(cls, space: LabelSpace) -> "Prior":
        return cls(space, np.full(len(space), 1.0 / len(space)))

    @classmethod
    def from_weights(cls, space: LabelSpace, weights) -> "Prior":
        w = np.asarray(weights, dtype=float)
        return cls(space, w / w.sum())

    def entropy(self) -> float:
        """Shannon entropy in bits."""
        p = self.probs[self.probs > 0]
        return float(-(p * np.log2(p)).sum())

    def __getitem__(self, label) -> float:
        return float(self.probs[self.space.index(label)])


def _check_stochastic(rows: np.ndarray, what: str):
    if np.any(~np.isfinite(rows)) or np.any(rows < 0):
        raise ValueError(f"{what} entries must be finite and non-negative")
    dev = np.abs(rows.sum(axis=1) - 1.0)
    if dev.size and dev.max() > ROW_SUM_TOL:
        raise ValueError(f"{what} row {int(dev.argmax())} sums to {rows.sum(axis=1)[dev.argmax()]:.12g}")


@dataclass(frozen=True)
class Mechanism:
    """Obfuscation mechanism ``rows[s, o] = p(o|s)``."""

    secrets: LabelSpace
    observables: LabelSpace
    rows: np.ndarray

    def __post_init__(self):
        r = _readonly(self.rows, (len(self.secrets), len(self.observables)), "mechanism")
        _check_stochastic(r, "mechanism")
        object.__setattr__(self, "rows", r)

    @classmethod
    def identity(cls, space: LabelSpace) -> "Mechanism":
        return cls(space.as_role("secrets"), space.as_role("observables"), np.eye(len(space)))

    @classmethod
    def uniform(cls, secrets: LabelSpace, observables: LabelSpace | None = None) -> "Mechanism":
        observables = observables or secrets.as_role("observables")
        return cls(secrets, observables, np.full((len(secrets), len(observables)), 1.0 / len(observables)))

    def prob(self, o, s) -> float:
        return float(self.rows[self.secrets.index(s), self.observables.index(o)])


@dataclass(frozen=True)
class Attack:
    """Inference attack ``rows[o, s_hat] = q(s_hat|o)``."""

    observables: LabelSpace
    secrets: LabelSpace
    rows: np.ndarray

    def __post_init__(self):
        r = _readonly(self.rows, (len(self.observables), len(self.secrets)), "attack")
        _check_stochastic(r, "attack")
        object.__setattr__(self, "rows", r)

    @classmethod
    def identity(cls, space: LabelSpace) -> "Attack":
        return cls(space.as_role("observables"), space.as_role("secrets"), np.eye(len(space)))

    @classmethod
    def uniform(cls, observables: LabelSpace, secrets: LabelSpace) -> "Attack":
        return cls(observables, secrets, np.full((len(observables), len(secrets)), 1.0 / len(secrets)))

    def prob(self, s_hat, o) -> float:
        return float(self.rows[self.observables.index(o), self.secrets.index(s_hat)])


@dataclass(frozen=True)
class MetricSet:
    secrets: LabelSpace
    observables: LabelSpace
    cost: np.ndarray
    privacy_dist: np.ndarray
    disting: np.ndarray
    ground: np.ndarray | None = None

    def __post_init__(self):
        n, m = len(self.secrets), len(self.observables)
        tables = {
            "cost": (m, n), "privacy_dist": (n, n), "disting": (n, n), "ground": (m, n),
        }
        for name, shape in tables.items():
            value = getattr(self, name)
            if value is None:
                continue
            a = _readonly(value, shape, name)
            if np.any(~np.isfinite(a)) or np.any(a < 0):
                raise ValueError(f"{name} entries must be finite and non-negative")
            object.__setattr__(self, name, a)
        if np.any(np.diag(self.disting) != 0):
            raise ValueError("distinguishability of a secret from itself must be 0")

    @classmethod
    def hamming(cls, space: LabelSpace) -> "MetricSet":
        n = len(space)
        h = 1.0 - np.eye(n)
        return cls(space.as_role("secrets"), space.as_role("observables"), h, h, h, h)

    @classmethod
    def from_distances(cls, space: LabelSpace, cost, dist, disting=None, ground=None) -> "MetricSet":
        """Metrics over ``O = S`` from square tables; ``disting`` and ``ground`` default to ``dist``."""
        dist = np.asarray(dist, dtype=float)
        return cls(
            space.as_role("secrets"), space.as_role("observables"), cost, dist,
            dist if disting is None else disting, dist if ground is None else ground,
        )


@dataclass(frozen=True)
class PrivacyBounds:
    d_m: float = 0.0
    eps_m: float = 0.0
    d_eps_m: float | None = None

    def __post_init__(self):
        if not self.d_m >= 0 or not self.eps_m >= 0:
            raise ValueError("d_m and eps_m must be non-negative")
        if self.d_eps_m is not None and not self.d_eps_m >= 0:
            raise ValueError("d_eps_m must be non-negative")


def _check(prior: Prior | None = None, mech: Mechanism | None = None,
           attack: Attack | None = None, metrics: MetricSet | None = None):
    secrets = [x for x in (prior and prior.space, mech and mech.secrets,
                           attack and attack.secrets, metrics and metrics.secrets) if x is not None]
    observables = [x for x in (mech and mech.observables, attack and attack.observables,
                               metrics and metrics.observables) if x is not None]
    for other in secrets[1:]:
        _same(secrets[0], other, "secret spaces")
    for other in observables[1:]:
        _same(observables[0], other, "observable spaces")


def expected_cost(prior: Prior, mech: Mechanism, metrics: MetricSet) -> float:
    """Prior-weighted utility cost ``sum_s pi(s) sum_o p(o|s) c(o,s)``."""
    _check(prior, mech, metrics=metrics)
    return float(prior.probs @ (mech.rows * metrics.cost.T).sum(axis=1))


def cost_per_secret(mech: Mechanism, metrics: MetricSet) -> np.ndarray:
    _check(mech=mech, metrics=metrics)
    return (mech.rows * metrics.cost.T).sum(axis=1)


def worst_case_cost(mech: Mechanism, metrics: MetricSet) -> float:
    return float(cost_per_secret(mech, metrics).max())


def privacy_per_secret(mech: Mechanism, attack: Attack, metrics: MetricSet) -> np.ndarray:
    """Vector of expected estimation errors, one per secret."""
    _check(mech=mech, attack=attack, metrics=metrics)
    # sum_o p(o|s) sum_shat q(shat|o) d(shat, s)
    return np.einsum("so,oh,hs->s", mech.rows, attack.rows, metrics.privacy_dist)


def privacy_of_secret(mech: Mechanism, attack: Attack, metrics: MetricSet, s) -> float:
    i = mech.secrets.index(s)
    _check(mech=mech, attack=attack, metrics=metrics)
    row = mech.rows[i] @ attack.rows  # distribution of the estimate given s
    return float(row @ metrics.privacy_dist[:, i])


def conditional_error(mech: Mechanism, attack: Attack, metrics: MetricSet, s) -> float:
    """Adversary-side name for :func:`privacy_of_secret` (the error ``E_s``)."""
    return privacy_of_secret(mech, attack, metrics, s)


def expected_privacy(prior: Prior, mech: Mechanism, attack: Attack, metrics: MetricSet) -> float:
    """Average distortion privacy ``sum_s pi(s) E_s`` (reported as AP in experiments)."""
    _check(prior, mech, attack, metrics)
    return float(prior.probs @ privacy_per_secret(mech, attack, metrics))


@dataclass(frozen=True)
class DifferentialReport:
    passed: bool
    margin: float
    worst: tuple[Any, Any, Any] | None  # (s, s2, o) labels with the largest margin
    eps_m: float
    d_eps_m: float | None = None

    def __bool__(self) -> bool:
        return self.passed


def differential_margins(rows: np.ndarray, disting: np.ndarray, eps_m: float,
                         d_eps_m: float | None = None) -> np.ndarray:
    """``p(o|s) - bound(s,s2) p(o|s2)`` for every ``(s, s2, o)``; ``-inf`` where unconstrained.

    ``bound`` is ``exp(eps_m d_eps(s,s2))``; with ``d_eps_m`` it is the flat
    ``exp(eps_m)`` for pairs within ``d_eps_m`` and no bound otherwise. Pairs
    with ``s == s2`` are vacuous and reported as ``-inf``.
    """
    n = rows.shape[0]
    if d_eps_m is None:
        with np.errstate(over="ignore"):
            factor = np.exp(eps_m * disting)
        active = ~np.eye(n, dtype=bool)
    else:
        with np.errstate(over="ignore"):
            factor = np.full((n, n), np.exp(eps_m))
        active = (disting <= d_eps_m) & ~np.eye(n, dtype=bool)
    other = rows[None, :, :]
    with np.errstate(invalid="ignore"):
        # bound * 0 is 0 for every finite budget, even when the bound overflows
        scaled = np.where(other > 0, factor[:, :, None] * other, 0.0)
    margins = rows[:, None, :] - scaled
    margins[~active] = -np.inf
    return margins


def verify_differential(mech: Mechanism, metrics: MetricSet, eps_m: float,
                        d_eps_m: float | None = None, tol: float = TAU_FEAS) -> DifferentialReport:
    """Check ``p(o|s) <= bound * p(o|s2)`` in subtraction form for all triples.

    Without ``d_eps_m`` the bound is ``exp(eps_m * d_eps(s, s2))``; with it
    the bound is ``exp(eps_m)`` and only pairs with ``d_eps(s, s2) <= d_eps_m``
    are checked. ``margin`` is the largest left-minus-right difference found;
    the mechanism passes when it is at most ``tol``.
    """
    _check(mech=mech, metrics=metrics)
    if eps_m < 0:
        raise ValueError("eps_m must be non-negative")
    margins = differential_margins(mech.rows, metrics.disting, eps_m, d_eps_m)
    if not np.isfinite(margins).any():
        return DifferentialReport(True, -math.inf, None, eps_m, d_eps_m)
    s, s2, o = np.unravel_index(int(np.argmax(margins)), margins.shape)
    margin = float(margins[s, s2, o])
    worst = (mech.secrets[s], mech.secrets[s2], mech.observables[o])
    return DifferentialReport(margin <= tol, margin, worst, eps_m, d_eps_m)


def clean_stochastic(values: np.ndarray) -> np.ndarray:
    """Clip solver round-off below zero and renormalise rows to sum to one."""
    v = np.clip(np.asarray(values, dtype=float), 0.0, None)
    sums = v.sum(axis=1, keepdims=True)
    return v / np.where(sums > 0, sums, 1.0)
