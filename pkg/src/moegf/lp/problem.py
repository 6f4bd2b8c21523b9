"""Linear program container, incremental builder and solution record."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.sparse as sp

LE = 1
EQ = 0

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration-limit"


@dataclass(frozen=True)
class LpProblem:
    """``min c @ x + offset`` subject to ``A x (<= | =) b`` and ``lb <= x <= ub``.

    ``sense[i]`` is ``LE`` (1) or ``EQ`` (0). ``tags`` labels each row with
    the family it came from; it is informational only.
    """

    c: np.ndarray
    A: sp.csr_matrix
    b: np.ndarray
    sense: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    offset: float = 0.0
    tags: tuple = ()

    @property
    def n_vars(self) -> int:
        return self.c.shape[0]

    @property
    def n_rows(self) -> int:
        return self.b.shape[0]

    def objective(self, x: np.ndarray) -> float:
        return float(self.c @ x + self.offset)

    def row_violation(self, x: np.ndarray) -> np.ndarray:
        """Per-row violation, zero when satisfied."""
        r = self.A @ x - self.b
        return np.where(self.sense == EQ, np.abs(r), np.maximum(r, 0.0))

    def bound_violation(self, x: np.ndarray) -> np.ndarray:
        return np.maximum(np.maximum(self.lb - x, x - self.ub), 0.0)

    def with_bounds(self, lb: np.ndarray, ub: np.ndarray) -> "LpProblem":
        return replace(self, lb=lb, ub=ub)


@dataclass
class LpSolution:
    status: str
    x: np.ndarray | None = None
    objective: float = float("nan")
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    iterations: int = 0
    lp_solves: int = 1
    nodes: int = 0
    info: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


class LpBuilder:
    """Accumulates columns and sparse rows, then freezes into an LpProblem.

    Rows are stored in COO form so that whole blocks can be appended with
    one call; every row carries a tag string.
    """

    def __init__(self, lb=(), ub=(), c=None):
        lb = np.asarray(lb, dtype=float)
        ub = np.asarray(ub, dtype=float)
        self._lb = [lb]
        self._ub = [ub]
        self._c = [np.zeros(lb.shape[0]) if c is None else np.asarray(c, dtype=float)]
        self.n = lb.shape[0]
        self.m = 0
        self._rows: list[np.ndarray] = []
        self._cols: list[np.ndarray] = []
        self._vals: list[np.ndarray] = []
        self._b: list[np.ndarray] = []
        self._sense: list[np.ndarray] = []
        self._tags: list[str] = []
        self.offset = 0.0

    # columns
    @classmethod
    def from_problem(cls, lp: "LpProblem") -> "LpBuilder":
        """Builder seeded with the columns, rows and offset of ``lp``."""
        b = cls(lp.lb, lp.ub, lp.c)
        if lp.n_rows:
            b.add_matrix_rows(lp.A, lp.b, lp.sense, lp.tags)
        b.offset = lp.offset
        return b

    def add_vars(self, count: int, lb=0.0, ub=np.inf, cost=0.0) -> np.ndarray:
        idx = np.arange(self.n, self.n + count)
        self._lb.append(np.broadcast_to(np.asarray(lb, dtype=float), (count,)).copy())
        self._ub.append(np.broadcast_to(np.asarray(ub, dtype=float), (count,)).copy())
        self._c.append(np.broadcast_to(np.asarray(cost, dtype=float), (count,)).copy())
        self.n += count
        return idx

    def add_var(self, lb=0.0, ub=np.inf, cost=0.0) -> int:
        return int(self.add_vars(1, lb, ub, cost)[0])

    def add_cost(self, idx, cost) -> None:
        """Add to the objective coefficients of existing columns."""
        c = self._flat_cost()
        np.add.at(c, np.asarray(idx), np.asarray(cost, dtype=float))

    def set_bounds(self, idx, lb=None, ub=None) -> None:
        self._flat_cost()
        if lb is not None:
            self._lb[0][idx] = lb
        if ub is not None:
            self._ub[0][idx] = ub

    def _flat_cost(self) -> np.ndarray:
        if len(self._c) > 1:
            self._c = [np.concatenate(self._c)]
            self._lb = [np.concatenate(self._lb)]
            self._ub = [np.concatenate(self._ub)]
        return self._c[0]

    # rows
    def add_rows(self, row, col, val, rhs, sense, tag: str) -> None:
        """Append a block of rows given block-local row numbers.

        ``row`` entries index into ``rhs`` (0..len(rhs)-1).
        """
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        k = rhs.shape[0]
        if k == 0:
            return
        row = np.asarray(row, dtype=np.int64)
        col = np.asarray(col, dtype=np.int64)
        val = np.asarray(val, dtype=float)
        keep = val != 0.0
        self._rows.append(row[keep] + self.m)
        self._cols.append(col[keep])
        self._vals.append(val[keep])
        self._b.append(rhs)
        self._sense.append(np.broadcast_to(np.asarray(sense, dtype=np.int8), (k,)).copy())
        self._tags.extend([tag] * k)
        self.m += k

    def add_row(self, cols: Sequence[int], vals: Sequence[float], rhs: float, sense: int, tag: str) -> None:
        self.add_rows(np.zeros(len(cols), dtype=np.int64), cols, vals, [rhs], sense, tag)

    def add_matrix_rows(self, A, rhs, sense, tags) -> None:
        """Append rows given as a sparse matrix over the current columns."""
        A = sp.coo_matrix(A)
        rhs = np.asarray(rhs, dtype=float)
        self.add_rows(A.row, A.col, A.data, rhs, 0, "")
        self._sense[-1] = np.asarray(sense, dtype=np.int8).copy()
        self._tags[-rhs.shape[0]:] = list(tags)

    def add_abs_penalty(self, var, center, weight) -> tuple[np.ndarray, np.ndarray]:
        """Add ``weight * |x[var] - center|`` through split variables.

        Accepts arrays; returns the indices of (s_plus, s_minus).
        """
        var = np.atleast_1d(np.asarray(var, dtype=np.int64))
        center = np.broadcast_to(np.asarray(center, dtype=float), var.shape)
        weight = np.broadcast_to(np.asarray(weight, dtype=float), var.shape)
        if np.any(weight < 0):
            raise ValueError("absolute-value penalty weight must be non-negative")
        k = var.shape[0]
        self._flat_cost()
        lo, hi = self._lb[0][var], self._ub[0][var]
        span = np.maximum(np.maximum(hi - center, center - lo), 0.0)
        sp_idx = self.add_vars(k, 0.0, span, weight)
        sm_idx = self.add_vars(k, 0.0, span, weight)
        r = np.arange(k)
        # x - s+ + s- = center
        self.add_rows(
            np.concatenate([r, r, r]),
            np.concatenate([var, sp_idx, sm_idx]),
            np.concatenate([np.ones(k), -np.ones(k), np.ones(k)]),
            center, EQ, "abs-split",
        )
        return sp_idx, sm_idx

    def build(self) -> LpProblem:
        self._flat_cost()
        if self._rows:
            rows = np.concatenate(self._rows)
            cols = np.concatenate(self._cols)
            vals = np.concatenate(self._vals)
        else:
            rows = cols = np.zeros(0, dtype=np.int64)
            vals = np.zeros(0)
        A = sp.csr_matrix((vals, (rows, cols)), shape=(self.m, self.n))
        A.sum_duplicates()
        b = np.concatenate(self._b) if self._b else np.zeros(0)
        sense = np.concatenate(self._sense) if self._sense else np.zeros(0, dtype=np.int8)
        return LpProblem(
            c=self._c[0].copy(), A=A, b=b, sense=sense,
            lb=self._lb[0].copy(), ub=self._ub[0].copy(),
            offset=float(self.offset), tags=tuple(self._tags),
        )


def add_abs_penalty(problem: LpProblem, var: int, center: float, weight: float) -> LpProblem:
    """Return a copy of ``problem`` with ``weight * |x[var] - center|`` added.

    The split ``x[var] - center = s+ - s-`` with ``s+, s- >= 0`` is exact at
    any optimum when ``weight > 0``.
    """
    if weight < 0:
        raise ValueError("absolute-value penalty weight must be non-negative")
    n, m = problem.n_vars, problem.n_rows
    span = max(problem.ub[var] - center, center - problem.lb[var], 0.0)
    c = np.concatenate([problem.c, [weight, weight]])
    lb = np.concatenate([problem.lb, [0.0, 0.0]])
    ub = np.concatenate([problem.ub, [span, span]])
    A = sp.hstack([problem.A, sp.csr_matrix((m, 2))]).tocsr()
    new_row = sp.csr_matrix(([1.0, -1.0, 1.0], ([0, 0, 0], [var, n, n + 1])), shape=(1, n + 2))
    A = sp.vstack([A, new_row]).tocsr()
    return LpProblem(
        c=c, A=A, b=np.concatenate([problem.b, [center]]),
        sense=np.concatenate([problem.sense, np.array([EQ], dtype=np.int8)]),
        lb=lb, ub=ub, offset=problem.offset, tags=problem.tags + ("abs-split",),
    )
