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

"""Augmented Lagrangian solver for smooth constrained problems.

Inequalities become equalities with non-negative slacks, every residual row
is scaled by its Jacobian norm at the start point and the bound-constrained
subproblems are minimised with L-BFGS-B.
"""

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
from scipy.optimize import Bounds, OptimizeResult, minimize

from desgn.core import IllegalInputError, IncompatibleInputError, Msg

_COMPONENT = "nlp"
_PENALTY_CAP = 1e12


@dataclass(frozen=True, eq=False)
class NlpProblem:
    """``min f(x)`` subject to linear and nonlinear constraints and bounds.

    ``objective(x)`` returns ``(value, gradient)``. Linear rows are
    ``A_eq x = b_eq`` and ``A_in x <= b_in``; ``eq(x)`` and ``ineq(x)``
    return ``(values, sparse Jacobian)`` for ``c(x) = 0`` and ``c(x) <= 0``.
    """

    objective: object
    lb: np.ndarray
    ub: np.ndarray
    A_eq: object = None
    b_eq: np.ndarray = None
    A_in: object = None
    b_in: np.ndarray = None
    eq: object = None
    ineq: object = None

    def __post_init__(self):
        n = self.n
        for name in ("A_eq", "A_in"):
            A = getattr(self, name)
            if A is None:
                object.__setattr__(self, name, sp.csr_matrix((0, n)))
                object.__setattr__(self, name.replace("A_", "b_"), np.zeros(0))
            else:
                object.__setattr__(self, name, sp.csr_matrix(A))
                if A.shape[1] != n:
                    raise IncompatibleInputError(f"{name} has {A.shape[1]} columns, expected {n}")

    @property
    def n(self):
        return np.asarray(self.lb).size

    def with_bounds(self, lb, ub):
        return replace(self, lb=np.asarray(lb, dtype=float), ub=np.asarray(ub, dtype=float))

    def with_ineq(self, extra):
        """Copy with ``extra(x) -> (values, jac)`` appended to the inequalities."""
        base = self.ineq
        if base is None:
            return replace(self, ineq=extra)

        def combined(x):
            c1, j1 = base(x)
            c2, j2 = extra(x)
            return np.concatenate([c1, c2]), sp.vstack([j1, j2]).tocsr()

        return replace(self, ineq=combined)

    def violation(self, x):
        """Largest constraint or bound violation at ``x``."""
        parts = [np.maximum(self.lb - x, 0.0), np.maximum(x - self.ub, 0.0)]
        if self.A_eq.shape[0]:
            parts.append(np.abs(self.A_eq @ x - self.b_eq))
        if self.A_in.shape[0]:
            parts.append(np.maximum(self.A_in @ x - self.b_in, 0.0))
        if self.eq is not None:
            parts.append(np.abs(self.eq(x)[0]))
        if self.ineq is not None:
            parts.append(np.maximum(self.ineq(x)[0], 0.0))
        return float(max((p.max(initial=0.0) for p in parts), default=0.0))


@dataclass(frozen=True)
class CompSchedule:
    eps0: float = 1e-2
    shrink: float = 0.1
    threshold: float = 1e-6

    def __post_init__(self):
        if not 0 < self.shrink < 1:
            raise IllegalInputError("complementarity shrink must lie in (0, 1)")
        if not 0 < self.threshold < self.eps0:
            raise IllegalInputError("complementarity threshold must be positive and below eps0")

    def eps(self, k):
        return max(self.threshold, self.eps0 * self.shrink**k)

    def values(self):
        k, out = 0, []
        while True:
            out.append(self.eps(k))
            if out[-1] <= self.threshold:
                return out
            k += 1


def _fold_singletons(A, b, lb, ub, equality, tol):
    """Turn rows with one free variable into bounds; returns kept rows and a feasibility flag."""
    A = A.tocsr()
    keep = np.ones(A.shape[0], dtype=bool)
    changed = False
    for i in range(A.shape[0]):
        start, stop = A.indptr[i], A.indptr[i + 1]
        cols, vals = A.indices[start:stop], A.data[start:stop]
        nz = vals != 0
        cols, vals = cols[nz], vals[nz]
        fixed = lb[cols] == ub[cols]
        const = float(vals[fixed] @ lb[cols[fixed]])
        free_cols, free_vals = cols[~fixed], vals[~fixed]
        scale = max(1.0, abs(b[i]))
        if free_cols.size == 0:
            res = const - b[i]
            if (equality and abs(res) > tol * scale) or (not equality and res > tol * scale):
                return keep, changed, False
            keep[i] = False
            changed = True
        elif free_cols.size == 1:
            j, a = free_cols[0], free_vals[0]
            value = (b[i] - const) / a
            if equality:
                if value < lb[j] - tol * scale or value > ub[j] + tol * scale:
                    return keep, changed, False
                value = min(max(value, lb[j]), ub[j])
                lb[j] = ub[j] = value
            elif a > 0:
                ub[j] = min(ub[j], value)
            else:
                lb[j] = max(lb[j], value)
            if lb[j] > ub[j]:
                if lb[j] - ub[j] > tol * scale:
                    return keep, changed, False
                lb[j] = ub[j] = 0.5 * (lb[j] + ub[j])
            keep[i] = False
            changed = True
    return keep, changed, True


def presolve(p, tol=1e-9):
    """Fold singleton linear rows into bounds until nothing changes.

    Returns ``(problem, feasible)``.
    """
    lb, ub = np.array(p.lb, dtype=float), np.array(p.ub, dtype=float)
    A_eq, b_eq, A_in, b_in = p.A_eq, p.b_eq, p.A_in, p.b_in
    for _ in range(50):
        keep_eq, ch_eq, ok_eq = _fold_singletons(A_eq, b_eq, lb, ub, True, tol)
        keep_in, ch_in, ok_in = _fold_singletons(A_in, b_in, lb, ub, False, tol)
        if not (ok_eq and ok_in):
            return p, False
        A_eq, b_eq = A_eq[keep_eq], b_eq[keep_eq]
        A_in, b_in = A_in[keep_in], b_in[keep_in]
        if not (ch_eq or ch_in):
            break
    return replace(p, lb=lb, ub=ub, A_eq=A_eq, b_eq=b_eq, A_in=A_in, b_in=b_in), True


class _Lagrangian:
    """Residual map over ``z = [x, slacks]`` and the AL merit."""

    def __init__(self, p):
        self.p = p
        self.n = p.n
        self.m_eq = p.A_eq.shape[0]
        self.m_in = p.A_in.shape[0]
        self.nl_eq = 0
        self.nl_in = 0

    def size_rows(self, x):
        if self.p.eq is not None:
            self.nl_eq = self.p.eq(x)[0].size
        if self.p.ineq is not None:
            self.nl_in = self.p.ineq(x)[0].size
        self.n_slack = self.m_in + self.nl_in

    def residual(self, z):
        p = self.p
        x, s = z[: self.n], z[self.n:]
        parts, jacs = [], []
        empty = sp.csr_matrix((0, self.n + self.n_slack))
        if self.m_eq:
            parts.append(p.A_eq @ x - p.b_eq)
            jacs.append(sp.hstack([p.A_eq, sp.csr_matrix((self.m_eq, self.n_slack))]))
        if self.nl_eq:
            c, J = p.eq(x)
            parts.append(c)
            jacs.append(sp.hstack([J, sp.csr_matrix((self.nl_eq, self.n_slack))]))
        if self.m_in:
            parts.append(p.A_in @ x - p.b_in + s[: self.m_in])
            eye = sp.eye(self.m_in, self.n_slack, format="csr")
            jacs.append(sp.hstack([p.A_in, eye]))
        if self.nl_in:
            c, J = p.ineq(x)
            parts.append(c + s[self.m_in:])
            eye = sp.eye(self.nl_in, self.n_slack, k=self.m_in, format="csr")
            jacs.append(sp.hstack([J, eye]))
        if not parts:
            return np.zeros(0), empty
        return np.concatenate(parts), sp.vstack(jacs).tocsr()


def solve_augmented(p, x0, tol=1e-6, *, max_outer=50, max_inner=3000, penalty0=10.0):
    """Augmented Lagrangian minimisation of ``p`` from ``x0``.

    The result carries ``x``, ``fun``, ``converged``, ``violation``, ``kkt``
    (projected gradient norm of the last inner problem), the multipliers
    and a per-outer-iteration ``trace`` of merit values at the start and end
    of each inner solve. On the iteration cap the best point seen is
    returned with ``converged = False``.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.size != p.n:
        raise IncompatibleInputError(f"start point has {x0.size} entries, problem has {p.n}")
    p, feasible = presolve(p, tol=1e-9)
    if not feasible:
        Msg.warning(_COMPONENT, "presolve found conflicting bounds")
        return OptimizeResult(
            x=np.clip(x0, p.lb, p.ub), fun=np.nan, converged=False, infeasible=True, violation=np.inf,
            kkt=np.inf, multipliers=np.zeros(0), nit=0, status="infeasible", trace=[],
        )
    x = np.clip(x0, p.lb, p.ub)
    al = _Lagrangian(p)
    al.size_rows(x)
    n = p.n
    # slack start makes inequality residuals non-positive parts vanish
    s0 = []
    if al.m_in:
        s0.append(np.maximum(p.b_in - p.A_in @ x, 0.0))
    if al.nl_in:
        s0.append(np.maximum(-p.ineq(x)[0], 0.0))
    z = np.concatenate([x, *s0]) if s0 else x.copy()
    lo = np.concatenate([p.lb, np.zeros(al.n_slack)])
    hi = np.concatenate([p.ub, np.full(al.n_slack, np.inf)])

    r, J = al.residual(z)
    norms = np.sqrt(np.asarray(J.multiply(J).sum(axis=1)).ravel()) if r.size else np.zeros(0)
    w = 1.0 / np.maximum(norms, 1.0)
    lam = np.zeros(r.size)
    mu = float(penalty0)

    def merit(zv):
        f, g = p.objective(zv[:n])
        grad = np.zeros_like(zv)
        grad[:n] = g
        if r.size == 0:
            return f, grad
        res, jac = al.residual(zv)
        wr = w * res
        value = f + lam @ wr + 0.5 * mu * wr @ wr
        grad += jac.T @ (w * (lam + mu * wr))
        return value, grad

    def unscaled_violation(zv):
        if r.size == 0:
            return 0.0
        return float(np.abs(al.residual(zv)[0]).max(initial=0.0))

    best = None
    trace = []
    prev_viol = unscaled_violation(z)
    converged = False
    kkt = np.inf
    status = "max_iter"
    bounds = Bounds(lo, hi)
    outer = 0
    for outer in range(1, max_outer + 1):
        start_value = merit(z)[0]
        res = minimize(
            merit, z, jac=True, method="L-BFGS-B", bounds=bounds,
            options={"maxiter": max_inner, "gtol": tol * 1e-2, "ftol": 1e-15, "maxcor": 20},
        )
        z = np.clip(res.x, lo, hi)
        value, grad = merit(z)
        kkt = float(np.abs(np.clip(z - grad, lo, hi) - z).max(initial=0.0))
        viol = unscaled_violation(z)
        f = p.objective(z[:n])[0]
        trace.append({"outer": outer, "merit_start": float(start_value), "merit_end": float(value),
                      "violation": viol, "penalty": mu})
        Msg.debug(_COMPONENT, f"outer {outer}: f {f:.8g} violation {viol:.3e} kkt {kkt:.3e} penalty {mu:.1e}")
        # feasible points rank by objective, the rest by violation
        key = (max(viol, tol), f)
        if best is None or key < best[3]:
            best = (z.copy(), viol, f, key)
        if viol <= tol and kkt <= tol * max(1.0, abs(value)):
            converged = True
            status = "converged"
            break
        if viol <= max(tol, 0.25 * prev_viol):
            lam = lam + mu * w * al.residual(z)[0]
        else:
            mu *= 10.0
            if mu > _PENALTY_CAP:
                status = "infeasible"
                break
        prev_viol = viol

    if converged:
        z_out, viol_out = z, unscaled_violation(z)
    else:
        z_out, viol_out = best[0], best[1]
        Msg.warning(_COMPONENT, f"augmented Lagrangian stopped ({status}), violation {viol_out:.3e}")
    x_out = z_out[:n]
    return OptimizeResult(
        x=x_out,
        fun=float(p.objective(x_out)[0]),
        converged=converged,
        infeasible=status == "infeasible" or viol_out > tol,
        violation=viol_out,
        kkt=kkt,
        multipliers=lam * w,
        nit=outer,
        status=status,
        trace=trace,
    )


def product_constraints(u, v, eps):
    """``x[u] * x[v] - eps <= 0`` for aligned index arrays ``u`` and ``v``."""
    u = np.asarray(u, dtype=int)
    v = np.asarray(v, dtype=int)
    rows = np.arange(u.size)

    def ineq(x):
        values = x[u] * x[v] - eps
        n = x.size
        jac = sp.csr_matrix(
            (np.concatenate([x[v], x[u]]), (np.concatenate([rows, rows]), np.concatenate([u, v]))),
            shape=(u.size, n),
        )
        return values, jac

    return ineq


def complementarity_pass(p, pairs, sched, x0, tol=1e-6, **kwargs):
    """Solve with ``u v <= eps`` for a shrinking ``eps``.

    Stops at ``sched.threshold``. If some ``eps`` is infeasible the last
    feasible solution is returned with ``infeasible = True``. The warm start
    is kept when it already satisfies every product at the threshold and has
    a lower objective.
    """
    u, v = (np.asarray(a, dtype=int) for a in pairs)
    x0 = np.asarray(x0, dtype=float)
    start_products = x0[u] * x0[v]
    eps_values = sched.values()
    if u.size == 0 or start_products.max(initial=0.0) <= sched.threshold:
        eps_values = [sched.threshold]

    x = x0
    last = None
    history = []
    for eps in eps_values:
        res = solve_augmented(p.with_ineq(product_constraints(u, v, eps)), x, tol, **kwargs)
        history.append({"eps": eps, "fun": res.fun, "violation": res.violation, "converged": res.converged})
        Msg.debug(_COMPONENT, f"complementarity eps {eps:.1e}: f {res.fun:.8g} violation {res.violation:.2e}")
        if res.violation > tol:
            Msg.warning(_COMPONENT, f"complementarity infeasible at eps {eps:.1e}")
            out = last if last is not None else res
            return OptimizeResult(
                x=out.x, fun=out.fun, infeasible=True, infeasible_at=eps, converged=False,
                eps=history, result=out,
            )
        last = res
        x = res.x

    # keep the warm start when it is complementary and cheaper
    feasible_start = p.violation(x0) <= tol and start_products.max(initial=0.0) <= sched.threshold + tol
    if feasible_start and p.objective(x0)[0] < last.fun:
        return OptimizeResult(x=x0.copy(), fun=float(p.objective(x0)[0]), infeasible=False, infeasible_at=None,
                              converged=True, eps=history, result=last)
    return OptimizeResult(x=last.x, fun=last.fun, infeasible=False, infeasible_at=None,
                          converged=last.converged, eps=history, result=last)


def fix_and_recover(p, x, pairs, tol=1e-6, **kwargs):
    """Fix the smaller member of every pair at zero and re-solve.

    Ties fix the first member. If the re-solve is infeasible, every fix that
    moved its variable by more than ``1e-6`` is lifted and the lifted fixes
    are restored one by one, smallest move first, keeping each restore that
    stays feasible. ``reverted`` lists the ``(u, v)`` pairs left unfixed.
    """
    u, v = (np.asarray(a, dtype=int) for a in pairs)
    x = np.asarray(x, dtype=float)
    fixed = np.where(x[u] <= x[v], u, v)

    def attempt(which):
        lb, ub = np.array(p.lb, dtype=float), np.array(p.ub, dtype=float)
        lb[which] = 0.0
        ub[which] = 0.0
        start = x.copy()
        start[which] = 0.0
        return solve_augmented(p.with_bounds(lb, ub), start, tol, **kwargs)

    keep = np.ones(fixed.size, dtype=bool)
    res = attempt(fixed)
    if res.infeasible:
        lifted = [i for i in np.argsort(x[fixed], kind="stable") if x[fixed[i]] > 1e-6]
        keep[lifted] = False
        res = attempt(fixed[keep])
        for i in lifted:
            keep[i] = True
            trial = attempt(fixed[keep])
            if trial.infeasible:
                keep[i] = False
            else:
                res = trial
    reverted = [(int(a), int(b)) for a, b in zip(u[~keep], v[~keep])]
    if reverted:
        Msg.warning(_COMPONENT, f"recovery infeasible; reverted fixes of pairs {reverted}")
    return OptimizeResult(
        x=res.x, fun=res.fun, converged=res.converged, infeasible=res.infeasible, violation=res.violation,
        fixed=fixed[keep], reverted=reverted, result=res,
    )
