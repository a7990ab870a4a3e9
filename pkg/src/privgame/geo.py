"""Grid-world location model: cells, distances, traces and priors."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import LabelSpace, MetricSet, Prior
from .errors import EmptyTrace

TRACE_HEADER = ("user_id", "timestamp", "cell_id")


@dataclass(frozen=True)
class Grid:
    """``nx`` by ``ny`` cells over a ``width_km`` by ``height_km`` rectangle; cell id ``y * nx + x``."""

    nx: int
    ny: int
    width_km: float
    height_km: float

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny or self.nx < 1 or self.ny < 1:
            raise ValueError("nx and ny must be positive integers")
        if not (self.width_km > 0 and self.height_km > 0):
            raise ValueError("grid dimensions must be positive")

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    @property
    def cell_size(self) -> tuple[float, float]:
        return self.width_km / self.nx, self.height_km / self.ny

    def cell_id(self, x: int, y: int) -> int:
        if not (0 <= x < self.nx and 0 <= y < self.ny):
            raise ValueError(f"({x}, {y}) is outside a {self.nx}x{self.ny} grid")
        return y * self.nx + x

    def coords(self, cell: int) -> tuple[int, int]:
        if not 0 <= cell < self.n_cells:
            raise ValueError(f"cell {cell} is outside a {self.n_cells}-cell grid")
        return cell % self.nx, cell // self.nx

    def centers(self) -> np.ndarray:
        """Cell-centre coordinates in km, one row per cell id."""
        ids = np.arange(self.n_cells)
        w, h = self.cell_size
        return np.column_stack([(ids % self.nx + 0.5) * w, (ids // self.nx + 0.5) * h])

    @property
    def diameter(self) -> float:
        """Largest centre-to-centre distance."""
        w, h = self.cell_size
        return float(np.hypot((self.nx - 1) * w, (self.ny - 1) * h))

    def space(self, role: str = "secrets") -> LabelSpace:
        return LabelSpace(tuple(range(self.n_cells)), role)

    def to_dict(self) -> dict:
        return {"nx": self.nx, "ny": self.ny, "width_km": self.width_km, "height_km": self.height_km}

    @classmethod
    def from_dict(cls, d: dict) -> "Grid":
        return cls(int(d["nx"]), int(d["ny"]), float(d["width_km"]), float(d["height_km"]))

    @classmethod
    def load(cls, path) -> "Grid":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")


def euclid_metric(grid: Grid) -> np.ndarray:
    c = grid.centers()
    diff = c[:, None, :] - c[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=-1))


def hamming_cost(grid: Grid) -> np.ndarray:
    return 1.0 - np.eye(grid.n_cells)


def grid_metrics(grid: Grid) -> MetricSet:
    """Hamming utility cost; Euclidean km for privacy, distinguishability and pruning."""
    d = euclid_metric(grid)
    return MetricSet.from_distances(grid.space(), hamming_cost(grid), d, d, d)


@dataclass(frozen=True)
class Trace:
    user_id: str
    timestamps: tuple = ()
    cells: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "timestamps", tuple(self.timestamps))
        object.__setattr__(self, "cells", tuple(int(c) for c in self.cells))
        if len(self.timestamps) != len(self.cells):
            raise ValueError("a trace needs one timestamp per visit")
        if any(b < a for a, b in zip(self.timestamps, self.timestamps[1:])):
            raise ValueError(f"timestamps of user {self.user_id!r} decrease")

    def __len__(self) -> int:
        return len(self.cells)

    def validate(self, grid: Grid):
        bad = [c for c in self.cells if not 0 <= c < grid.n_cells]
        if bad:
            raise ValueError(f"user {self.user_id!r} visits cell {bad[0]} outside the grid")


def visit_counts(trace: Trace, grid: Grid) -> np.ndarray:
    trace.validate(grid)
    return np.bincount(np.asarray(trace.cells, dtype=np.int64), minlength=grid.n_cells).astype(float)


def prior_from_trace(trace: Trace, grid: Grid, smoothing: float = 0.0) -> Prior:
    """Visit frequencies with additive smoothing: ``(count + a) / (total + a |S|)``."""
    if smoothing < 0:
        raise ValueError("smoothing must be non-negative")
    counts = visit_counts(trace, grid)
    total = counts.sum() + smoothing * grid.n_cells
    if total == 0:
        raise EmptyTrace(f"user {trace.user_id!r} has no visits and smoothing is 0")
    return Prior(grid.space(), (counts + smoothing) / total)


@dataclass(frozen=True)
class MobilityParams:
    """Two-anchor walk.

    At an anchor the walker stays put with that anchor's stay probability.
    Otherwise it leaves with the other anchor as target (probability
    ``commute``) or the one it just left. Each move goes one cell toward the
    target with probability ``drift``, else to a random neighbour. Anchors
    default to two distinct random cells.
    """

    stay_home: float = 0.7
    stay_work: float = 0.5
    commute: float = 0.6
    drift: float = 0.7
    home: int | None = None
    work: int | None = None
    step_seconds: int = 600

    def __post_init__(self):
        for name in ("stay_home", "stay_work", "commute", "drift"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")


def _step_toward(grid: Grid, cell: int, target: int) -> int:
    x, y = grid.coords(cell)
    tx, ty = grid.coords(target)
    dx, dy = np.sign(tx - x), np.sign(ty - y)
    # move along the axis with the larger gap, horizontally on ties
    if abs(tx - x) >= abs(ty - y):
        return grid.cell_id(x + int(dx), y)
    return grid.cell_id(x, y + int(dy))


def _neighbours(grid: Grid, cell: int) -> list[int]:
    x, y = grid.coords(cell)
    out = [grid.cell_id(x + dx, y + dy) for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1))
           if 0 <= x + dx < grid.nx and 0 <= y + dy < grid.ny]
    return out or [cell]


def synthetic_trace(grid: Grid, length: int, seed: int, params: MobilityParams | None = None,
                    user_id: str | None = None) -> Trace:
    """Seeded home/work random walk starting at home, sampled every ``step_seconds``."""
    params = params or MobilityParams()
    rng = np.random.default_rng(seed)
    n = grid.n_cells
    home = params.home if params.home is not None else int(rng.integers(n))
    work = params.work
    if work is None:
        work = home
        if n > 1:
            work = int(rng.integers(n - 1))
            work += work >= home  # skip over home
    for a in (home, work):
        grid.coords(a)
    uid = user_id if user_id is not None else f"u{seed}"
    anchors = {home: params.stay_home, work: params.stay_work}

    cells, cell, target = [], home, home
    for _ in range(length):
        cells.append(cell)
        if cell in anchors:
            if rng.random() < anchors[cell]:
                continue
            # leaving: commute to the other anchor, or wander and drift back here
            other = work if cell == home else home
            target = other if rng.random() < params.commute else cell
        if target != cell and rng.random() < params.drift:
            cell = _step_toward(grid, cell, target)
        else:
            nb = _neighbours(grid, cell)
            cell = nb[rng.integers(len(nb))]
    stamps = tuple(i * params.step_seconds for i in range(length))
    return Trace(uid, stamps, cells)


def synthetic_users(grid: Grid, users: int, seed: int, length: int = 2000,
                    params: MobilityParams | None = None) -> list[Trace]:
    """``users`` independent traces; user ``i`` is seeded from ``(seed, i)``."""
    ss = np.random.SeedSequence(seed).spawn(users)
    return [synthetic_trace(grid, length, int(s.generate_state(1)[0]), params, user_id=f"u{i}")
            for i, s in enumerate(ss)]


def sharpen_prior(prior: Prior, k: int = 2, beta: float = 4.0) -> Prior:
    """Multiply the ``k`` most likely secrets by ``beta`` and renormalise.

    Ties in probability go to the lower index, so the result is deterministic.
    """
    n = len(prior.probs)
    if not 0 <= k <= n:
        raise ValueError(f"k must lie in [0, {n}]")
    if beta < 1:
        raise ValueError("beta must be at least 1")
    top = np.argsort(-prior.probs, kind="stable")[:k]
    w = prior.probs.copy()
    w[top] *= beta
    return Prior(prior.space, w / w.sum())


def write_traces(path, traces) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_HEADER)
        for t in traces:
            for ts, c in zip(t.timestamps, t.cells):
                w.writerow((t.user_id, ts, c))


def read_traces(path, grid: Grid | None = None) -> dict[str, Trace]:
    """Traces keyed by user id, in order of first appearance."""
    rows: dict[str, tuple[list, list]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != TRACE_HEADER:
            raise ValueError(f"trace CSV must start with the header {','.join(TRACE_HEADER)}")
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != 3:
                raise ValueError(f"line {lineno}: expected 3 fields, got {len(rec)}")
            uid, ts, cell = rec
            ts = float(ts)
            ts_list, cells = rows.setdefault(uid, ([], []))
            ts_list.append(int(ts) if ts.is_integer() else ts)
            cells.append(int(cell))
    traces = {uid: Trace(uid, ts, cells) for uid, (ts, cells) in rows.items()}
    if grid is not None:
        for t in traces.values():
            t.validate(grid)
    return traces
