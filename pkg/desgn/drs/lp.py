# This file is part of desgn, distributed energy system design for LV feeders
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <http://www.gnu.org/licenses/>.

"""Linear programs: container, incremental builder and solvers.

Two engines are available. ``"highs"`` delegates to
:func:`scipy.optimize.linprog`; ``"simplex"`` is a dense two-phase tableau
method with Dantzig pricing and a Bland fallback once degenerate pivots
repeat.
"""

from math import prod
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.optimize import OptimizeResult, linprog

from desgn.core import DataNotFoundError, FileIOError, IllegalInputError, IncompatibleInputError, Msg

_COMPONENT = "lp"
SENSES = ("L", "E", "G")


class LinearProgram:
    """``min c·x`` subject to ``A x (sense) rhs`` and ``lb <= x <= ub``.

    Senses are ``"L"`` (<=), ``"E"`` (=) and ``"G"`` (>=). Infinite bounds
    declare a free side.
    """

    def __init__(self, c, A, senses, rhs, lb=None, ub=None, families=None):
        self.c = np.asarray(c, dtype=float)
        n = self.c.size
        self.A = sp.csr_matrix(A, shape=(len(rhs), n)) if not sp.issparse(A) else A.tocsr()
        self.senses = np.asarray(senses, dtype="<U1")
        self.rhs = np.asarray(rhs, dtype=float)
        self.lb = np.zeros(n) if lb is None else np.asarray(lb, dtype=float)
        self.ub = np.full(n, np.inf) if ub is None else np.asarray(ub, dtype=float)
        self.families = None if families is None else np.asarray(families, dtype=object)
        m = self.rhs.size
        if self.A.shape != (m, n) or self.senses.size != m or self.lb.size != n or self.ub.size != n:
            raise IncompatibleInputError(
                f"inconsistent LP dimensions: A {self.A.shape}, {m} rows, {n} columns"
            )
        if not np.isin(self.senses, SENSES).all():
            raise IncompatibleInputError("row senses must be L, E or G")

    @property
    def n(self):
        return self.c.size

    @property
    def m(self):
        return self.rhs.size

    def with_bounds(self, lb, ub):
        """Copy sharing the matrix but with new variable bounds."""
        return LinearProgram(self.c, self.A, self.senses, self.rhs, lb, ub, self.families)

    def write(self, path):
        """Write the sparse-triplet text form (``n m`` then c/b/a/l records)."""
        path = Path(path)
        coo = self.A.tocoo()
        try:
            with path.open("w", encoding="utf-8") as out:
                out.write(f"{self.n} {self.m}\n")
                for j in np.flatnonzero(self.c):
                    out.write(f"c {j} {float(self.c[j])!r}\n")
                for i in range(self.m):
                    out.write(f"b {i} {self.senses[i]} {float(self.rhs[i])!r}\n")
                for i, j, v in zip(coo.row, coo.col, coo.data):
                    out.write(f"a {i} {j} {float(v)!r}\n")
                for j in range(self.n):
                    out.write(f"l {j} {float(self.lb[j])!r} {float(self.ub[j])!r}\n")
        except OSError as err:
            raise FileIOError(f"cannot write LP to {path}: {err}") from err

    @classmethod
    def read(cls, path):
        path = Path(path)
        try:
            lines = path.read_text(encoding="utf-8").split("\n")
        except OSError as err:
            raise FileIOError(f"cannot read LP {path}: {err}") from err
        n, m = (int(v) for v in lines[0].split())
        c, rhs = np.zeros(n), np.zeros(m)
        senses = np.full(m, "L", dtype="<U1")
        lb, ub = np.zeros(n), np.full(n, np.inf)
        rows, cols, vals = [], [], []
        for line in lines[1:]:
            if not line.strip():
                continue
            tag, *rest = line.split()
            if tag == "c":
                c[int(rest[0])] = float(rest[1])
            elif tag == "b":
                senses[int(rest[0])] = rest[1]
                rhs[int(rest[0])] = float(rest[2])
            elif tag == "a":
                rows.append(int(rest[0]))
                cols.append(int(rest[1]))
                vals.append(float(rest[2]))
            elif tag == "l":
                lb[int(rest[0])], ub[int(rest[0])] = float(rest[1]), float(rest[2])
        A = sp.coo_matrix((vals, (rows, cols)), shape=(m, n))
        return cls(c, A, senses, rhs, lb, ub)


class VarIndex:
    """Named blocks of consecutive variable indices."""

    def __init__(self):
        self._blocks = {}
        self._lb, self._ub, self._binary = [], [], []
        self.size = 0

    def add(self, name, shape, *, lb=0.0, ub=np.inf, binary=False):
        shape = tuple(shape)
        count = prod(shape)
        idx = np.arange(self.size, self.size + count).reshape(shape)
        self._blocks[name] = idx
        self._lb.append(np.full(count, 0.0 if binary else lb))
        self._ub.append(np.full(count, 1.0 if binary else ub))
        self._binary.append(np.full(count, binary))
        self.size += count
        return idx

    def __getitem__(self, name):
        try:
            return self._blocks[name]
        except KeyError:
            raise DataNotFoundError(f"unknown variable block {name}") from None

    def __contains__(self, name):
        return name in self._blocks

    def names(self):
        return tuple(self._blocks)

    @property
    def lb(self):
        return np.concatenate(self._lb) if self._lb else np.zeros(0)

    @property
    def ub(self):
        return np.concatenate(self._ub) if self._ub else np.zeros(0)

    @property
    def binary(self):
        return np.concatenate(self._binary) if self._binary else np.zeros(0, dtype=bool)


class RowBuilder:
    """Collects constraint rows family by family.

    :meth:`add` appends ``n`` rows at once; every term is a pair of an index
    array of length ``n`` and a coefficient (scalar or length ``n``).
    """

    def __init__(self):
        self._rows, self._cols, self._vals = [], [], []
        self._senses, self._rhs, self._families = [], [], []
        self.m = 0

    def add(self, family, sense, rhs, *terms):
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        n = rhs.size
        if n == 0:
            return
        rows = np.arange(self.m, self.m + n)
        for cols, coef in terms:
            cols = np.broadcast_to(np.asarray(cols, dtype=int), (n,))
            coef = np.broadcast_to(np.asarray(coef, dtype=float), (n,))
            keep = coef != 0.0
            self._rows.append(rows[keep])
            self._cols.append(cols[keep])
            self._vals.append(coef[keep])
        self._senses.extend([sense] * n)
        self._rhs.append(rhs)
        self._families.extend([family] * n)
        self.m += n

    def build(self, c, lb, ub):
        n = len(c)
        if self._rows:
            A = sp.coo_matrix(
                (np.concatenate(self._vals), (np.concatenate(self._rows), np.concatenate(self._cols))),
                shape=(self.m, n),
            )
        else:
            A = sp.coo_matrix((self.m, n))
        rhs = np.concatenate(self._rhs) if self._rhs else np.zeros(0)
        return LinearProgram(c, A.tocsr(), self._senses, rhs, lb, ub, self._families)


def _result(status, x=None, fun=np.nan, nit=0, message=""):
    return OptimizeResult(
        x=x, fun=fun, status=status, success=status == "optimal", nit=nit, message=message
    )


def _solve_highs(lp):
    A = lp.A
    upper = lp.senses == "L"
    lower = lp.senses == "G"
    eq = lp.senses == "E"
    A_ub = sp.vstack([A[upper], -A[lower]]).tocsr() if (upper.any() or lower.any()) else None
    b_ub = np.concatenate([lp.rhs[upper], -lp.rhs[lower]]) if A_ub is not None else None
    A_eq = A[eq] if eq.any() else None
    b_eq = lp.rhs[eq] if eq.any() else None
    bounds = np.column_stack([lp.lb, lp.ub])
    bounds = [(None if not np.isfinite(lo) else lo, None if not np.isfinite(hi) else hi) for lo, hi in bounds]
    try:
        res = linprog(lp.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs-ds")
    except ValueError as err:
        return _result("error", message=str(err))
    status = {0: "optimal", 2: "infeasible", 3: "unbounded"}.get(res.status, "error")
    if status != "optimal":
        return _result(status, nit=res.get("nit", 0), message=res.message)
    return _result("optimal", np.asarray(res.x, dtype=float), float(res.fun), res.get("nit", 0), res.message)


class _Tableau:
    """Dense simplex tableau; the last row holds reduced costs."""

    def __init__(self, T, basis, tol):
        self.T = T
        self.basis = basis
        self.tol = tol
        self.nit = 0

    def pivot(self, r, j):
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        self.basis[r] = j

    def iterate(self, allowed, max_iter):
        """Run to optimality; returns ``"optimal"``, ``"unbounded"`` or ``"error"``."""
        tol = self.tol
        bland = False
        degenerate = 0
        while self.nit < max_iter:
            cost = self.T[-1, :-1]
            candidates = np.flatnonzero((cost < -tol) & allowed)
            if candidates.size == 0:
                return "optimal"
            j = candidates[0] if bland else candidates[np.argmin(cost[candidates])]
            col = self.T[:-1, j]
            rows = np.flatnonzero(col > tol)
            if rows.size == 0:
                return "unbounded"
            ratios = self.T[rows, -1] / col[rows]
            best = ratios.min()
            ties = rows[ratios <= best + tol]
            r = ties[np.argmin(self.basis[ties])]
            if best <= tol:
                degenerate += 1
                if degenerate > 50 and not bland:
                    bland = True
                    Msg.debug(_COMPONENT, "degenerate pivots repeat; switching to Bland's rule")
            else:
                degenerate = 0
            self.pivot(r, j)
            self.nit += 1
        return "error"


def _standard_form(lp):
    """Map ``x = shift + M y`` with ``y >= 0`` and build rows for ``y``."""
    n = lp.n
    shift = np.zeros(n)
    columns = []  # (x index, sign)
    bound_rows = []  # (y index, width)
    for j in range(n):
        lo, hi = lp.lb[j], lp.ub[j]
        if np.isfinite(lo):
            shift[j] = lo
            columns.append((j, 1.0))
            if np.isfinite(hi):
                bound_rows.append((len(columns) - 1, hi - lo))
        elif np.isfinite(hi):
            shift[j] = hi
            columns.append((j, -1.0))
        else:
            columns.append((j, 1.0))
            columns.append((j, -1.0))
    ny = len(columns)
    M = np.zeros((n, ny))
    for k, (j, sign) in enumerate(columns):
        M[j, k] = sign
    A = lp.A.toarray() @ M
    rhs = lp.rhs - lp.A @ shift
    senses = list(lp.senses)
    if bound_rows:
        extra = np.zeros((len(bound_rows), ny))
        for r, (k, width) in enumerate(bound_rows):
            extra[r, k] = 1.0
        A = np.vstack([A, extra])
        rhs = np.concatenate([rhs, [w for _, w in bound_rows]])
        senses += ["L"] * len(bound_rows)
    return A, np.asarray(senses), rhs, M, shift


def _solve_simplex(lp, tol=1e-9):
    if np.any(lp.lb > lp.ub):
        return _result("infeasible", message="crossed bounds")
    A, senses, rhs, M, shift = _standard_form(lp)
    m, ny = A.shape
    n_slack = int(np.count_nonzero(senses != "E"))
    slack = np.zeros((m, n_slack))
    k = 0
    for i, sense in enumerate(senses):
        if sense == "L":
            slack[i, k] = 1.0
            k += 1
        elif sense == "G":
            slack[i, k] = -1.0
            k += 1
    body = np.hstack([A, slack])
    flip = rhs < 0
    body[flip] *= -1.0
    rhs = np.where(flip, -rhs, rhs)

    N = ny + n_slack
    T = np.zeros((m + 1, N + m + 1))
    T[:m, :N] = body
    T[:m, N:N + m] = np.eye(m)
    T[:m, -1] = rhs
    T[-1, N:N + m] = 1.0
    T[-1] -= T[:m].sum(axis=0)
    tab = _Tableau(T, np.arange(N, N + m), tol)
    max_iter = 50 * (m + N + 1)

    allowed = np.ones(N + m, dtype=bool)
    status = tab.iterate(allowed, max_iter)
    if status == "error":
        return _result("error", nit=tab.nit, message="phase one iteration limit")
    scale = max(1.0, float(np.abs(rhs).max(initial=0.0)))
    if -tab.T[-1, -1] > 1e-7 * scale:
        return _result("infeasible", nit=tab.nit, message="phase one optimum is positive")

    # drive artificials out of the basis, dropping redundant rows
    keep = np.ones(m + 1, dtype=bool)
    for r in range(m):
        if tab.basis[r] >= N:
            nz = np.flatnonzero(np.abs(tab.T[r, :N]) > tol)
            if nz.size:
                tab.pivot(r, nz[0])
            else:
                keep[r] = False
    T = np.delete(tab.T[keep], np.s_[N:N + m], axis=1)
    basis = tab.basis[keep[:-1]]
    cost = np.concatenate([M.T @ lp.c, np.zeros(n_slack)])
    T[-1, :] = 0.0
    T[-1, :N] = cost
    for r, j in enumerate(basis):
        T[-1] -= cost[j] * T[r]
    phase2 = _Tableau(T, basis, tol)
    phase2.nit = tab.nit
    status = phase2.iterate(np.ones(N, dtype=bool), max_iter)
    if status != "optimal":
        return _result(status, nit=phase2.nit, message=f"phase two {status}")

    y = np.zeros(N)
    y[phase2.basis] = phase2.T[:-1, -1]
    x = shift + M @ y[:ny]
    return _result("optimal", x, float(lp.c @ x), phase2.nit, "optimal")


def solve_lp(lp, method="highs"):
    """Solve ``lp``; the result carries ``status``, ``x`` and ``fun``.

    Numerical trouble is reported as ``status == "error"``, never raised.
    """
    if method == "highs":
        res = _solve_highs(lp)
    elif method == "simplex":
        try:
            res = _solve_simplex(lp)
        except (FloatingPointError, np.linalg.LinAlgError) as err:
            res = _result("error", message=str(err))
    else:
        raise IllegalInputError(f"unknown LP method {method!r}")
    Msg.debug(_COMPONENT, f"{method}: {lp.n} columns, {lp.m} rows -> {res.status}")
    return res
