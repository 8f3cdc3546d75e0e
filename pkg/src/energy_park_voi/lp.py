"""Sparse standard-form linear programs and the solver backends behind them.

A :class:`CanonicalLP` is ``min c.x + offset`` subject to ``A x (<=,=,>=) b``
and ``lb <= x <= ub``.  Two backends are provided: HiGHS through
``scipy.optimize.linprog`` for production use, and a dense two-phase
tableau simplex that serves as an independent check on small instances.
"""

from __future__ import annotations

import enum
import io
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

LE, EQ, GE = "L", "E", "G"
FEAS_TOL = 1e-6


class VarIndex:
    """Maps named blocks of variables onto contiguous column ranges."""

    def __init__(self):
        self.blocks: dict[str, tuple[int, tuple[int, ...]]] = {}
        self.size = 0

    def add(self, name: str, shape) -> np.ndarray:
        if name in self.blocks:
            raise KeyError(f"duplicate block {name!r}")
        shape = tuple(int(s) for s in np.atleast_1d(shape)) if shape != () else ()
        n = int(np.prod(shape)) if shape else 1
        self.blocks[name] = (self.size, shape)
        cols = np.arange(self.size, self.size + n).reshape(shape) if shape else np.array(self.size)
        self.size += n
        return cols

    def __contains__(self, name: str) -> bool:
        return name in self.blocks

    def cols(self, name: str) -> np.ndarray:
        off, shape = self.blocks[name]
        n = int(np.prod(shape)) if shape else 1
        return np.arange(off, off + n).reshape(shape) if shape else np.array(off)

    def col(self, name: str, *idx) -> int:
        off, shape = self.blocks[name]
        if not shape:
            if idx:
                raise IndexError(f"{name} is a scalar block")
            return off
        return off + int(np.ravel_multi_index(idx, shape))

    def values(self, x: np.ndarray, name: str):
        off, shape = self.blocks[name]
        if not shape:
            return float(x[off])
        n = int(np.prod(shape))
        return np.asarray(x[off:off + n]).reshape(shape)

    def label(self, col: int) -> str:
        for name, (off, shape) in self.blocks.items():
            n = int(np.prod(shape)) if shape else 1
            if off <= col < off + n:
                if not shape:
                    return name
                idx = np.unravel_index(col - off, shape)
                return f"{name}[{','.join(str(int(i)) for i in idx)}]"
        raise IndexError(col)


@dataclass
class CanonicalLP:
    c: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    senses: np.ndarray
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    names: VarIndex
    offset: float = 0.0
    row_blocks: dict[str, tuple[int, int]] = field(default_factory=dict)

    def __post_init__(self):
        n, m = len(self.c), len(self.rhs)
        if self.names.size != n:
            raise ValueError("name map does not match column count")
        if len(self.lb) != n or len(self.ub) != n or len(self.senses) != m:
            raise ValueError("inconsistent LP dimensions")
        for arr, what in ((self.c, "objective"), (self.vals, "coefficient"), (self.rhs, "rhs")):
            if np.isnan(arr).any():
                raise ValueError(f"NaN {what} in LP")
        if len(self.rows) and (self.rows.max() >= m or self.cols.max() >= n or self.rows.min() < 0 or self.cols.min() < 0):
            raise ValueError("constraint triplet out of range")
        if np.any(self.lb > self.ub):
            raise ValueError("variable lower bound above upper bound")
        for arr in (self.c, self.rows, self.cols, self.vals, self.senses, self.rhs, self.lb, self.ub):
            arr.setflags(write=False)

    @property
    def n_vars(self) -> int:
        return len(self.c)

    @property
    def n_rows(self) -> int:
        return len(self.rhs)

    def matrix(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.vals, (self.rows, self.cols)), shape=(self.n_rows, self.n_vars))

    def objective(self, x: np.ndarray) -> float:
        return float(self.c @ x) + self.offset

    def residuals(self, x: np.ndarray) -> tuple[float, int]:
        """Largest relative constraint/bound violation and its row (-1 = bound)."""
        A = self.matrix()
        ax = A @ x
        absA = abs(A) @ np.abs(x)
        scale = np.maximum(1.0, np.maximum(np.abs(self.rhs), absA))
        viol = np.zeros(self.n_rows)
        le = self.senses == LE
        ge = self.senses == GE
        eq = self.senses == EQ
        viol[le] = np.maximum(0.0, ax[le] - self.rhs[le])
        viol[ge] = np.maximum(0.0, self.rhs[ge] - ax[ge])
        viol[eq] = np.abs(ax[eq] - self.rhs[eq])
        rel = viol / scale
        worst_row = int(np.argmax(rel)) if len(rel) else -1
        worst = float(rel[worst_row]) if len(rel) else 0.0
        with np.errstate(invalid="ignore"):
            bscale = np.maximum(1.0, np.abs(x))
            bviol = np.maximum(np.maximum(0.0, self.lb - x), np.maximum(0.0, x - self.ub)) / bscale
        if len(bviol) and bviol.max() > worst:
            return float(bviol.max()), -1
        return worst, worst_row


class LPBuilder:
    """Accumulates variable blocks and vectorised constraint blocks."""

    def __init__(self):
        self.names = VarIndex()
        self._c: list[np.ndarray] = []
        self._lb: list[np.ndarray] = []
        self._ub: list[np.ndarray] = []
        self._rows: list[np.ndarray] = []
        self._cols: list[np.ndarray] = []
        self._vals: list[np.ndarray] = []
        self._senses: list[np.ndarray] = []
        self._rhs: list[np.ndarray] = []
        self.n_rows = 0
        self.row_blocks: dict[str, tuple[int, int]] = {}
        self.offset = 0.0

    def add_vars(self, name, shape=(), lb=0.0, ub=np.inf, cost=0.0) -> np.ndarray:
        cols = self.names.add(name, shape)
        n = cols.size
        self._c.append(np.broadcast_to(np.asarray(cost, float), cols.shape).ravel().copy() if n else np.zeros(0))
        self._lb.append(np.broadcast_to(np.asarray(lb, float), cols.shape).ravel().copy())
        self._ub.append(np.broadcast_to(np.asarray(ub, float), cols.shape).ravel().copy())
        return cols

    def add_cost(self, cols, cost):
        """Add ``cost`` to the objective coefficients of ``cols``."""
        cols = np.asarray(cols)
        cost = np.broadcast_to(np.asarray(cost, float), cols.shape).ravel()
        cols = cols.ravel()
        c = self._flat(self._c)
        np.add.at(c, cols, cost)
        self._c = [c]

    @staticmethod
    def _flat(parts):
        return np.concatenate(parts) if parts else np.zeros(0)

    def add_rows(self, name: str, terms: Iterable[tuple], sense: str, rhs) -> np.ndarray:
        """Add a block of rows.

        Each term is ``(cols, coef)``; ``cols`` has the block's shape and
        ``coef`` broadcasts to it.  Row ``j`` receives ``coef[j] * x[cols[j]]``
        from every term.
        """
        terms = list(terms)
        shape = np.broadcast_shapes(*(np.shape(c) for c, _ in terms), np.shape(rhs))
        k = int(np.prod(shape)) if shape else 1
        row_ids = np.arange(self.n_rows, self.n_rows + k)
        for cols, coef in terms:
            cols = np.broadcast_to(cols, shape).ravel()
            coef = np.broadcast_to(np.asarray(coef, float), shape).ravel()
            keep = coef != 0
            self._rows.append(row_ids[keep])
            self._cols.append(cols[keep])
            self._vals.append(coef[keep])
        self._senses.append(np.full(k, sense))
        self._rhs.append(np.broadcast_to(np.asarray(rhs, float), shape).ravel().copy())
        self.row_blocks[name] = (self.n_rows, k)
        self.n_rows += k
        return row_ids.reshape(shape)

    def add_coeffs(self, rows, cols, vals):
        """Add coefficients to rows that already exist."""
        shape = np.shape(rows)
        rows = np.asarray(rows).ravel()
        cols = np.broadcast_to(cols, shape).ravel()
        vals = np.broadcast_to(np.asarray(vals, float), shape).ravel()
        keep = vals != 0
        self._rows.append(rows[keep])
        self._cols.append(cols[keep])
        self._vals.append(vals[keep])

    def build(self) -> CanonicalLP:
        return CanonicalLP(
            c=self._flat(self._c),
            rows=self._flat(self._rows).astype(np.int64),
            cols=self._flat(self._cols).astype(np.int64),
            vals=self._flat(self._vals),
            senses=self._flat(self._senses).astype("<U1") if self._senses else np.zeros(0, "<U1"),
            rhs=self._flat(self._rhs),
            lb=self._flat(self._lb),
            ub=self._flat(self._ub),
            names=self.names,
            offset=self.offset,
            row_blocks=dict(self.row_blocks),
        )


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERIC_FAILURE = "numeric-failure"


@dataclass(frozen=True)
class SolveOutcome:
    status: Status
    objective: float
    x: np.ndarray | None
    names: VarIndex
    iterations: int = 0
    wall_time: float = 0.0
    backend: str = ""
    message: str = ""
    max_residual: float = math.nan

    @property
    def optimal(self) -> bool:
        return self.status == Status.OPTIMAL

    def value(self, name: str):
        if self.x is None:
            raise ValueError(f"no primal solution ({self.status.value})")
        return self.names.values(self.x, name)


# --------------------------------------------------------------------------
# HiGHS backend


def highs_backend(lp: CanonicalLP) -> tuple[Status, np.ndarray | None, int, str]:
    A = lp.matrix().tocsr()
    le = lp.senses == LE
    ge = lp.senses == GE
    eq = lp.senses == EQ
    ub_rows = le | ge
    A_ub = sp.vstack([A[le], -A[ge]]).tocsr() if ub_rows.any() else None
    b_ub = np.concatenate([lp.rhs[le], -lp.rhs[ge]]) if ub_rows.any() else None
    A_eq = A[eq] if eq.any() else None
    b_eq = lp.rhs[eq] if eq.any() else None
    bounds = np.column_stack([lp.lb, lp.ub])
    res = linprog(
        lp.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
        method="highs", options={"presolve": True},
    )
    status = {0: Status.OPTIMAL, 2: Status.INFEASIBLE, 3: Status.UNBOUNDED}.get(res.status, Status.NUMERIC_FAILURE)
    nit = int(getattr(res, "nit", 0) or 0)
    x = np.asarray(res.x, dtype=float) if res.x is not None and status == Status.OPTIMAL else None
    return status, x, nit, str(res.message)


# --------------------------------------------------------------------------
# Dense tableau simplex (oracle)


class _Tableau:
    """Two-phase tableau simplex over float or Fraction entries."""

    def __init__(self, A, b, c, exact: bool, max_iter: int = 100_000):
        self.exact = exact
        self.zero = Fraction(0) if exact else 0.0
        self.tol = 0 if exact else 1e-9
        self.max_iter = max_iter
        self.iterations = 0
        m, n = A.shape
        self.m, self.n = m, n
        dtype = object if exact else float
        # all rows get an artificial; b >= 0 is guaranteed by the caller
        T = np.empty((m + 1, n + m + 1), dtype=dtype)
        T[:] = self.zero
        T[:m, :n] = A
        for i in range(m):
            T[i, n + i] = Fraction(1) if exact else 1.0
        T[:m, -1] = b
        self.T = T
        self.basis = list(range(n, n + m))
        self.c = c

    def _pivot(self, r, e):
        T = self.T
        T[r] = T[r] / T[r, e]
        for i in range(T.shape[0]):
            if i != r and T[i, e] != 0:
                T[i] = T[i] - T[i, e] * T[r]
        self.basis[r] = e
        self.iterations += 1

    def _run(self, allowed: np.ndarray, rtol=None) -> str:
        T = self.T
        degenerate = 0
        rtol = self.tol if rtol is None else rtol
        while True:
            if self.iterations > self.max_iter:
                return "iteration-limit"
            red = T[-1, :-1]
            cand = [j for j in np.flatnonzero(allowed) if red[j] < -rtol]
            if not cand:
                return "optimal"
            if degenerate > 50:
                e = cand[0]  # Bland
            else:
                e = min(cand, key=lambda j: (red[j], j))
            col = T[:-1, e]
            best, r = None, -1
            for i in range(self.m):
                if col[i] > self.tol:
                    ratio = T[i, -1] / col[i]
                    if best is None or ratio < best - self.tol or (abs(ratio - best) <= self.tol and self.basis[i] < self.basis[r]):
                        best, r = ratio, i
            if r < 0:
                return "unbounded"
            degenerate = degenerate + 1 if best <= self.tol else 0
            self._pivot(r, e)

    def solve(self) -> tuple[str, np.ndarray | None]:
        m, n = self.m, self.n
        T = self.T
        # phase 1: minimise the sum of artificials
        T[-1, :] = self.zero
        for i in range(m):
            T[-1] = T[-1] - T[i]
        for i in range(m):
            T[-1, n + i] = self.zero
        allowed = np.zeros(n + m, dtype=bool)
        allowed[:n] = True
        status = self._run(np.ones(n + m, dtype=bool))
        if status == "iteration-limit":
            return status, None
        infeas = -T[-1, -1]
        scale = 1 + max((abs(v) for v in T[:-1, -1]), default=0)
        if infeas > (0 if self.exact else 1e-7 * scale):
            return "infeasible", None
        # drive artificials out of the basis, dropping redundant rows
        keep = []
        for i in range(m):
            if self.basis[i] >= n:
                row = T[i, :n]
                nz = [j for j in range(n) if abs(row[j]) > self.tol]
                if nz:
                    self._pivot(i, nz[0])
                    keep.append(i)
            else:
                keep.append(i)
        T = np.vstack([T[keep], T[-1:]])
        T = np.delete(T, np.s_[n:n + m], axis=1)
        self.basis = [self.basis[i] for i in keep]
        self.T, self.m = T, len(keep)
        # phase 2
        T[-1, :] = self.zero
        T[-1, :n] = self.c
        for i, bj in enumerate(self.basis):
            if T[-1, bj] != 0:
                T[-1] = T[-1] - T[-1, bj] * T[i]
        # reduced costs carry round-off proportional to the cost scale
        ctol = self.tol * max([1.0] + [abs(float(v)) for v in self.c]) if not self.exact else 0
        status = self._run(np.ones(n, dtype=bool), ctol)
        if status != "optimal":
            return status, None
        x = np.empty(n, dtype=object if self.exact else float)
        x[:] = self.zero
        for i, bj in enumerate(self.basis):
            x[bj] = T[i, -1]
        return "optimal", x


def dense_simplex_solve(lp: CanonicalLP, exact: bool = False, max_vars: int | None = None):
    """Solve ``lp`` with the dense two-phase simplex.

    Returns ``(status, x, iterations)``.  ``exact`` runs the tableau in
    rational arithmetic (suitable only for very small problems).
    """
    n = lp.n_vars
    if max_vars is not None and n > max_vars:
        raise ValueError(f"dense simplex limited to {max_vars} variables, got {n}")
    conv = Fraction if exact else float
    A = lp.matrix().toarray()

    # substitute x = shift + sign * y (+ second free part) so that y >= 0
    col_map = []  # (orig col, sign)
    shift = np.zeros(n)
    extra_rows = []  # (new col, bound) for y <= bound
    for j in range(n):
        lo, hi = lp.lb[j], lp.ub[j]
        if np.isfinite(lo):
            shift[j] = lo
            col_map.append((j, 1))
            if np.isfinite(hi):
                extra_rows.append((len(col_map) - 1, hi - lo))
        elif np.isfinite(hi):
            shift[j] = hi
            col_map.append((j, -1))
        else:
            col_map.append((j, 1))
            col_map.append((j, -1))
    ny = len(col_map)
    m0 = lp.n_rows
    m = m0 + len(extra_rows)
    senses = list(lp.senses) + [LE] * len(extra_rows)
    rhs = [conv(v) for v in (lp.rhs - A @ shift)] + [conv(b) for _, b in extra_rows]

    Ay = np.empty((m, ny), dtype=object if exact else float)
    Ay[:] = conv(0)
    for k, (j, sgn) in enumerate(col_map):
        for i in np.flatnonzero(A[:, j]):
            Ay[i, k] = conv(A[i, j]) * sgn
    for r, (k, _) in enumerate(extra_rows):
        Ay[m0 + r, k] = conv(1)
    cy = np.empty(ny, dtype=object if exact else float)
    for k, (j, sgn) in enumerate(col_map):
        cy[k] = conv(lp.c[j]) * sgn

    # slacks / surpluses
    n_slack = sum(1 for s in senses if s != EQ)
    full = np.empty((m, ny + n_slack), dtype=Ay.dtype)
    full[:] = conv(0)
    full[:, :ny] = Ay
    s_idx = ny
    for i, s in enumerate(senses):
        if s == LE:
            full[i, s_idx] = conv(1)
            s_idx += 1
        elif s == GE:
            full[i, s_idx] = conv(-1)
            s_idx += 1
    c_full = np.empty(ny + n_slack, dtype=Ay.dtype)
    c_full[:] = conv(0)
    c_full[:ny] = cy
    col_scale = np.ones(ny)
    if not exact:
        # column then row equilibration keeps tolerances meaningful when
        # coefficients span many orders of magnitude
        for k in range(ny):
            big = np.abs(full[:, k]).max() if m else 0.0
            if big > 0:
                col_scale[k] = big
                full[:, k] /= big
                c_full[k] /= big
    b = np.array(rhs, dtype=Ay.dtype)
    for i in range(m):
        if b[i] < 0:
            full[i] = -full[i]
            b[i] = -b[i]
        if not exact:
            # equilibrate rows so tolerances mean the same thing everywhere
            big = np.abs(full[i]).max()
            if big > 0:
                full[i] /= big
                b[i] /= big

    tab = _Tableau(full, b, c_full, exact)
    status, y = tab.solve()
    if status != "optimal":
        return status, None, tab.iterations
    x = np.array([conv(v) for v in shift], dtype=object if exact else float)
    for k, (j, sgn) in enumerate(col_map):
        x[j] = x[j] + sgn * (y[k] / col_scale[k] if not exact else y[k])
    return "optimal", x, tab.iterations


def simplex_backend(lp: CanonicalLP) -> tuple[Status, np.ndarray | None, int, str]:
    status, x, nit = dense_simplex_solve(lp, exact=False)
    st = {"optimal": Status.OPTIMAL, "infeasible": Status.INFEASIBLE, "unbounded": Status.UNBOUNDED}.get(
        status, Status.NUMERIC_FAILURE
    )
    return st, (np.asarray(x, dtype=float) if x is not None else None), nit, status


BACKENDS: dict[str, Callable] = {"highs": highs_backend, "simplex": simplex_backend}


def solve_lp(lp: CanonicalLP, backend: str | Callable = "highs", tol: float = FEAS_TOL) -> SolveOutcome:
    """Solve and independently re-check feasibility before reporting optimal."""
    fn = BACKENDS[backend] if isinstance(backend, str) else backend
    name = backend if isinstance(backend, str) else getattr(backend, "__name__", "custom")
    t0 = time.perf_counter()
    try:
        status, x, nit, msg = fn(lp)
    except Exception as exc:  # backend crash is reported, not raised
        return SolveOutcome(Status.NUMERIC_FAILURE, math.nan, None, lp.names, 0,
                            time.perf_counter() - t0, name, f"backend error: {exc!r}")
    wall = time.perf_counter() - t0
    if status != Status.OPTIMAL or x is None:
        return SolveOutcome(status, math.nan, None, lp.names, nit, wall, name, msg)
    worst, row = lp.residuals(x)
    if worst > tol:
        where = "variable bounds" if row < 0 else f"row {row}"
        return SolveOutcome(Status.NUMERIC_FAILURE, math.nan, None, lp.names, nit, wall, name,
                            f"re-check failed: relative violation {worst:.3g} at {where}", worst)
    return SolveOutcome(Status.OPTIMAL, lp.objective(x), x, lp.names, nit, wall, name, msg, worst)


# --------------------------------------------------------------------------
# MPS interchange


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def write_mps(lp: CanonicalLP, name: str = "EPARK") -> str:
    """Fixed-MPS text with 8-character row/column names.

    Numbers are written with 12 significant digits; they may overrun the
    12-character fixed field, so readers must split on whitespace.
    """
    out = io.StringIO()
    cname = [f"C{j:07d}" for j in range(lp.n_vars)]
    rname = [f"R{i:07d}" for i in range(lp.n_rows)]
    out.write(f"NAME          {name}\n")
    out.write("ROWS\n")
    out.write(" N  OBJ\n")
    for i, s in enumerate(lp.senses):
        out.write(f" {s:<2} {rname[i]}\n")
    out.write("COLUMNS\n")
    A = lp.matrix().tocsc()
    for j in range(lp.n_vars):
        entries = []
        if lp.c[j] != 0:
            entries.append(("OBJ", lp.c[j]))
        start, end = A.indptr[j], A.indptr[j + 1]
        entries.extend((rname[i], v) for i, v in zip(A.indices[start:end], A.data[start:end]))
        if not entries:
            entries.append(("OBJ", 0.0))
        for rn, v in entries:
            out.write(f"    {cname[j]:<8}  {rn:<8}  {_fmt(v):>12}\n")
    out.write("RHS\n")
    for i, v in enumerate(lp.rhs):
        if v != 0:
            out.write(f"    {'RHS':<8}  {rname[i]:<8}  {_fmt(v):>12}\n")
    if lp.offset:
        out.write(f"    {'RHS':<8}  {'OBJ':<8}  {_fmt(-lp.offset):>12}\n")
    out.write("BOUNDS\n")
    for j in range(lp.n_vars):
        lo, hi = lp.lb[j], lp.ub[j]
        if lo == hi:
            out.write(f" FX {'BND':<8}  {cname[j]:<8}  {_fmt(lo):>12}\n")
            continue
        if np.isneginf(lo) and np.isposinf(hi):
            out.write(f" FR {'BND':<8}  {cname[j]:<8}\n")
            continue
        if np.isneginf(lo):
            out.write(f" MI {'BND':<8}  {cname[j]:<8}\n")
        elif lo != 0:
            out.write(f" LO {'BND':<8}  {cname[j]:<8}  {_fmt(lo):>12}\n")
        if np.isfinite(hi):
            out.write(f" UP {'BND':<8}  {cname[j]:<8}  {_fmt(hi):>12}\n")
    out.write("ENDATA\n")
    return out.getvalue()


def read_mps(text: str) -> CanonicalLP:
    """Parse MPS text (fixed or free layout, no RANGES) into a CanonicalLP."""
    section = None
    obj_row = None
    row_sense: dict[str, str] = {}
    row_order: list[str] = []
    col_order: list[str] = []
    col_pos: dict[str, int] = {}
    c: dict[int, float] = {}
    trip: list[tuple[str, int, float]] = []
    rhs: dict[str, float] = {}
    offset = 0.0
    bounds: dict[int, list[float]] = {}

    def col_id(name):
        if name not in col_pos:
            col_pos[name] = len(col_order)
            col_order.append(name)
        return col_pos[name]

    for raw in text.splitlines():
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw[0].isspace():
            section = raw.split()[0].upper()
            if section == "RANGES":
                raise ValueError("RANGES section is not supported")
            continue
        f = raw.split()
        if section == "ROWS":
            sense, rn = f[0].upper(), f[1]
            if sense == "N":
                if obj_row is None:
                    obj_row = rn
            else:
                row_sense[rn] = sense
                row_order.append(rn)
        elif section == "COLUMNS":
            if "MARKER" in f:
                raise ValueError("integer markers are not supported")
            j = col_id(f[0])
            for rn, v in zip(f[1::2], f[2::2]):
                if rn == obj_row:
                    c[j] = c.get(j, 0.0) + float(v)
                elif rn in row_sense:
                    trip.append((rn, j, float(v)))
        elif section == "RHS":
            pairs = f[1:] if len(f) % 2 == 1 else f
            for rn, v in zip(pairs[0::2], pairs[1::2]):
                if rn == obj_row:
                    offset = -float(v)
                else:
                    rhs[rn] = float(v)
        elif section == "BOUNDS":
            kind, cn = f[0].upper(), f[2]
            j = col_id(cn)
            lo, hi = bounds.setdefault(j, [0.0, math.inf])
            val = float(f[3]) if len(f) > 3 else None
            if kind == "UP":
                hi = val
            elif kind == "LO":
                lo = val
            elif kind == "FX":
                lo = hi = val
            elif kind == "FR":
                lo, hi = -math.inf, math.inf
            elif kind == "MI":
                lo = -math.inf
            elif kind == "PL":
                hi = math.inf
            else:
                raise ValueError(f"unsupported bound type {kind}")
            bounds[j] = [lo, hi]

    n = len(col_order)
    r_idx = {rn: i for i, rn in enumerate(row_order)}
    names = VarIndex()
    names.add("x", (n,))
    lb = np.zeros(n)
    ub = np.full(n, math.inf)
    for j, (lo, hi) in bounds.items():
        lb[j], ub[j] = lo, hi
    cvec = np.zeros(n)
    for j, v in c.items():
        cvec[j] = v
    return CanonicalLP(
        c=cvec,
        rows=np.array([r_idx[t[0]] for t in trip], dtype=np.int64),
        cols=np.array([t[1] for t in trip], dtype=np.int64),
        vals=np.array([t[2] for t in trip], dtype=float),
        senses=np.array([row_sense[rn] for rn in row_order], dtype="<U1"),
        rhs=np.array([rhs.get(rn, 0.0) for rn in row_order], dtype=float),
        lb=lb,
        ub=ub,
        names=names,
        offset=offset,
    )
