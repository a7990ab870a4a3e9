"""Linear program container and a vectorised builder for it."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

LE, EQ, GE = -1, 0, 1

_RELATION_CODES = {"<=": LE, "=": EQ, "==": EQ, ">=": GE, LE: LE, EQ: EQ, GE: GE}
RELATION_SYMBOLS = {LE: "<=", EQ: "=", GE: ">="}


def relation_code(relation) -> int:
    try:
        return _RELATION_CODES[relation]
    except (KeyError, TypeError):
        raise ValueError(f"unknown constraint relation {relation!r}") from None


class Status(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


def _frozen(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """An LP ``min/max objective @ x`` subject to sparse rows and variable bounds.

    Each constraint row ``i`` reads ``A[i] @ x  relations[i]  rhs[i]`` with
    relation codes ``LE``, ``EQ`` and ``GE``. Instances are immutable: the
    arrays are read-only and the sparse matrix is never modified after
    construction, so a program can be shared between threads.
    """

    objective: np.ndarray
    A: sp.csr_matrix
    relations: np.ndarray
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    maximize: bool = False
    var_names: tuple[str, ...] | None = field(default=None)

    def __post_init__(self):
        n = len(self.objective)
        A = sp.csr_matrix(self.A, dtype=float, copy=True)
        A.sum_duplicates()
        A.eliminate_zeros()
        object.__setattr__(self, "A", A)
        for name in ("objective", "rhs", "lower", "upper"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        object.__setattr__(self, "relations", _frozen(self.relations, np.int8))

        if A.shape[1] != n:
            raise ValueError(f"constraint matrix has {A.shape[1]} columns for {n} variables")
        m = A.shape[0]
        if len(self.rhs) != m or len(self.relations) != m:
            raise ValueError("rhs and relations must have one entry per constraint row")
        if len(self.lower) != n or len(self.upper) != n:
            raise ValueError("bounds must have one entry per variable")
        if not (np.all(np.isfinite(self.objective)) and np.all(np.isfinite(A.data))
                and np.all(np.isfinite(self.rhs))):
            raise ValueError("objective, coefficients and right-hand sides must be finite")
        if not np.all(np.isin(self.relations, (LE, EQ, GE))):
            raise ValueError("relation codes must be LE, EQ or GE")
        if np.any(np.isnan(self.lower)) or np.any(np.isnan(self.upper)):
            raise ValueError("bounds must not be NaN")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound above upper bound")
        if self.var_names is not None and len(self.var_names) != n:
            raise ValueError("var_names must name every variable")

    @property
    def num_vars(self) -> int:
        return len(self.objective)

    @property
    def num_constraints(self) -> int:
        return self.A.shape[0]

    @property
    def has_standard_bounds(self) -> bool:
        """True when every variable is simply ``x >= 0``."""
        return bool(np.all(self.lower == 0.0) and np.all(np.isposinf(self.upper)))

    def rows(self) -> Iterator[tuple[dict[int, float], int, float]]:
        """Yield each constraint as ``(terms, relation, rhs)``."""
        A = self.A
        for i in range(A.shape[0]):
            lo, hi = A.indptr[i], A.indptr[i + 1]
            terms = dict(zip(A.indices[lo:hi].tolist(), A.data[lo:hi].tolist()))
            yield terms, int(self.relations[i]), float(self.rhs[i])

    def evaluate(self, x) -> float:
        return float(self.objective @ np.asarray(x, dtype=float))

    def max_violation(self, x) -> float:
        """Largest constraint or bound violation of the point ``x`` (0 when feasible)."""
        x = np.asarray(x, dtype=float)
        worst = 0.0
        if self.num_constraints:
            ax = self.A @ x
            r = self.relations
            worst = max(
                worst,
                float(np.max(ax[r == LE] - self.rhs[r == LE], initial=0.0)),
                float(np.max(self.rhs[r == GE] - ax[r == GE], initial=0.0)),
                float(np.max(np.abs(ax[r == EQ] - self.rhs[r == EQ]), initial=0.0)),
            )
        if self.num_vars:
            worst = max(worst, float(np.max(self.lower - x)), float(np.max(x - self.upper)))
        return worst

    @classmethod
    def from_rows(
        cls,
        num_vars: int,
        objective: Sequence[float] | Mapping[int, float],
        constraints: Iterable[tuple[Mapping[int, float], object, float]] = (),
        bounds: Mapping[int, tuple[float | None, float | None]] | None = None,
        maximize: bool = False,
        var_names: Sequence[str] | None = None,
    ) -> "LinearProgram":
        """Build a program from explicit ``({var: coef}, relation, rhs)`` rows.

        Convenient for small hand-written programs; large ones should go
        through :class:`LpBuilder`. Variables default to ``[0, inf)``; pass
        ``bounds={j: (lo, hi)}`` with ``None`` for an infinite side.
        """
        b = LpBuilder(num_vars)
        for terms, relation, rhs in constraints:
            b.add_row(terms, relation, rhs)
        if isinstance(objective, Mapping):
            c = np.zeros(num_vars)
            for j, v in objective.items():
                c[j] = v
        else:
            c = objective
        lower = np.zeros(num_vars)
        upper = np.full(num_vars, np.inf)
        for j, (lo, hi) in (bounds or {}).items():
            lower[j] = -np.inf if lo is None else lo
            upper[j] = np.inf if hi is None else hi
        return b.build(c, maximize=maximize, lower=lower, upper=upper, var_names=var_names)


class LpBuilder:
    """Accumulates sparse constraint blocks and assembles a :class:`LinearProgram`.

    ``add_block`` takes COO triplets with block-local row numbers, which keeps
    the mechanism programs (hundreds of thousands of two-term rows) cheap to
    assemble from numpy index arrays.
    """

    def __init__(self, num_vars: int):
        if num_vars < 0:
            raise ValueError("num_vars must be non-negative")
        self.num_vars = int(num_vars)
        self._rows: list[np.ndarray] = []
        self._cols: list[np.ndarray] = []
        self._vals: list[np.ndarray] = []
        self._rel: list[np.ndarray] = []
        self._rhs: list[np.ndarray] = []
        self._m = 0

    @property
    def num_constraints(self) -> int:
        return self._m

    def add_block(self, rows, cols, vals, relation, rhs) -> range:
        """Append ``len(rhs)`` rows; ``rows`` index into this block only.

        ``relation`` is one code for the whole block or one per row. Returns
        the global row numbers assigned to the block.
        """
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        k = len(rhs)
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        vals = np.broadcast_to(np.asarray(vals, dtype=float), rows.shape).ravel()
        if cols.shape != rows.shape:
            raise ValueError("rows and cols must have the same length")
        if rows.size and (rows.min() < 0 or rows.max() >= k):
            raise ValueError("block row index out of range")
        if cols.size and (cols.min() < 0 or cols.max() >= self.num_vars):
            raise ValueError("term references a variable index outside the program")
        if isinstance(relation, (str, int, np.integer)):
            rel = np.full(k, relation_code(relation), dtype=np.int8)
        else:
            rel = np.array([relation_code(r) for r in relation], dtype=np.int8)
            if len(rel) != k:
                raise ValueError("one relation per row expected")
        self._rows.append(rows + self._m)
        self._cols.append(cols)
        self._vals.append(vals.copy())
        self._rel.append(rel)
        self._rhs.append(rhs)
        start = self._m
        self._m += k
        return range(start, self._m)

    def add_row(self, terms: Mapping[int, float], relation, rhs: float) -> int:
        cols = np.fromiter(terms.keys(), dtype=np.int64, count=len(terms))
        vals = np.fromiter(terms.values(), dtype=float, count=len(terms))
        return self.add_block(np.zeros(len(cols), dtype=np.int64), cols, vals, relation, [rhs])[0]

    def build(self, objective, maximize: bool = False, lower=None, upper=None,
              var_names=None) -> LinearProgram:
        n = self.num_vars
        c = np.zeros(n) if objective is None else np.asarray(objective, dtype=float)
        if c.shape != (n,):
            raise ValueError(f"objective must have length {n}")
        if self._rows:
            A = sp.coo_matrix(
                (np.concatenate(self._vals), (np.concatenate(self._rows), np.concatenate(self._cols))),
                shape=(self._m, n),
            ).tocsr()
            rel = np.concatenate(self._rel)
            rhs = np.concatenate(self._rhs)
        else:
            A = sp.csr_matrix((0, n))
            rel = np.zeros(0, dtype=np.int8)
            rhs = np.zeros(0)
        lower = np.zeros(n) if lower is None else np.broadcast_to(np.asarray(lower, float), (n,))
        upper = np.full(n, np.inf) if upper is None else np.broadcast_to(np.asarray(upper, float), (n,))
        return LinearProgram(
            objective=c, A=A, relations=rel, rhs=rhs, lower=lower, upper=upper,
            maximize=maximize, var_names=None if var_names is None else tuple(var_names),
        )


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: Status
    values: np.ndarray
    objective_value: float
    method: str = ""
    iterations: int | None = None

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL
