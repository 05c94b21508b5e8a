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

"""Consensus ADMM over spatial and temporal subproblems.

Load groups become one subproblem spanning every timepoint; groups without
loads become one subproblem per timepoint. Copies of tie-line end voltages,
angles and flows are tied together through consensus rows, one shared
``z`` entry per row.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import time

import networkx as nx
import numpy as np
import scipy.sparse as sp
from scipy.optimize import OptimizeResult

from desgn.core import IllegalInputError, IncompatibleInputError, Msg

from .formulation import StageLayout, StageOutcome, build_stage_problem, dead_flow_phases, total_costs, warm_start
from .nlp import NlpProblem, product_constraints, solve_augmented

_COMPONENT = "admm"

# consensus quantities per tie line, phase and timepoint
ROW_KINDS = (("v", "add"), ("v", "sub"), ("theta", "add"), ("theta", "sub"), ("pb", ""), ("qb", ""))


@dataclass(frozen=True)
class TieLine:
    branch: int
    from_bus: str
    to_bus: str
    owner: int
    neighbor: int


@dataclass(frozen=True, eq=False)
class Partition:
    """Disjoint cover of the buses.

    ``owner`` of a tie line is the group holding its end nearer the slack.
    """

    groups: tuple
    load_groups: tuple
    tie_lines: tuple
    objective: float = 0.0
    predicted: tuple = ()

    @property
    def k(self):
        return len(self.groups)

    @classmethod
    def from_groups(cls, network, groups, *, objective=0.0, predicted=()):
        groups = [set(g) for g in groups]
        for group in groups:
            unknown = group - set(network.bus_index)
            if unknown:
                raise IllegalInputError(f"partition names unknown bus {sorted(unknown)[0]}")
        groups = tuple(tuple(b.id for b in network.buses if b.id in g) for g in groups)
        seen = {}
        for index, group in enumerate(groups):
            if not group:
                raise IllegalInputError(f"partition group {index} is empty")
            for bus in group:
                if bus in seen:
                    raise IllegalInputError(f"bus {bus} is in groups {seen[bus]} and {index}")
                seen[bus] = index
        for bus in network.buses:
            if bus.id not in seen:
                raise IllegalInputError(f"bus {bus.id} is in no partition group")
        for index, group in enumerate(groups):
            if not nx.is_connected(network.graph.subgraph(group)):
                raise IllegalInputError(f"partition group {index} has no internal path to the slack side")

        depth = nx.single_source_shortest_path_length(network.graph, network.slack.id)
        ties = []
        for k, br in enumerate(network.branches):
            a, b = seen[br.from_bus], seen[br.to_bus]
            if a == b:
                continue
            owner, neighbor = (a, b) if depth[br.from_bus] < depth[br.to_bus] else (b, a)
            ties.append(TieLine(k, br.from_bus, br.to_bus, owner, neighbor))
        loaded = {load.bus for load in network.loads}
        load_groups = tuple(any(b in loaded for b in g) for g in groups)
        return cls(groups, load_groups, tuple(ties), float(objective), tuple(predicted))

    def group_of(self, bus_id):
        for index, group in enumerate(self.groups):
            if bus_id in group:
                return index
        raise IllegalInputError(f"bus {bus_id} is in no partition group")


@dataclass(frozen=True)
class AdmmParams:
    beta: float = 10.0
    zeta: float = 0.1
    eps0_nlp: float = 1e3
    eps0_comp: float = 5e3
    kappa: float = 0.99
    tau: float = 1.02
    lambda_min: float = -1e9
    lambda_max: float = 1e9
    conv_threshold: float = 1e-4
    max_iters: int = 300
    beta_mode: str = "off"
    zeta_mode: str = "off"
    workers: int = 4

    def __post_init__(self):
        if self.tau <= 1:
            raise IllegalInputError("admm.tau must exceed 1")
        if not 0 < self.kappa < 1:
            raise IllegalInputError("admm.kappa must lie in (0, 1)")
        if self.lambda_min >= self.lambda_max:
            raise IllegalInputError("admm.lambda_min must be below admm.lambda_max")
        if self.conv_threshold <= 0:
            raise IllegalInputError("admm.conv_threshold must be positive")
        if self.max_iters < 1:
            raise IllegalInputError("admm.max_iters must be at least 1")
        if self.beta_mode not in ("off", "proximal"):
            raise IllegalInputError(f"unknown admm.beta_mode {self.beta_mode!r}")
        if self.zeta_mode not in ("off", "damping"):
            raise IllegalInputError(f"unknown admm.zeta_mode {self.zeta_mode!r}")
        if self.zeta_mode == "damping" and not 0 <= self.zeta < 1:
            raise IllegalInputError("admm.zeta must lie in [0, 1) for damping")

    @property
    def damping(self):
        return self.zeta if self.zeta_mode == "damping" else 0.0

    @property
    def proximal(self):
        return self.beta if self.beta_mode == "proximal" else 0.0


@dataclass(eq=False)
class SubproblemSpec:
    name: str
    kind: str
    group: int
    layout: StageLayout
    scale: float = 1.0

    @property
    def n_buses(self):
        return len(self.layout.own)

    @property
    def n_loads(self):
        return len(self.layout.loads)


def decompose(network, part, timeline, problems=None, *, scale=1.0):
    """Subproblem specs of ``part``.

    Load groups give one spec over all ``timeline.T`` points with objective
    scale ``scale``; no-load groups give one feasibility spec per timepoint.
    """
    problems = problems or {}
    T = timeline.T
    specs = []
    for index, group in enumerate(part.groups):
        if part.load_groups[index]:
            lay = StageLayout(network, group, np.arange(T), problems)
            specs.append(SubproblemSpec(f"g{index}", "load", index, lay, scale))
        else:
            for t in range(T):
                lay = StageLayout(network, group, [t])
                specs.append(SubproblemSpec(f"g{index}/t{t}", "noload", index, lay, 1.0))
    Msg.debug(_COMPONENT, f"{part.k} group(s) over T={T} give {len(specs)} subproblem(s)")
    return specs


@dataclass(eq=False)
class ConsensusLayout:
    """Shared consensus rows.

    ``rows[i]`` are the z entries touched by subproblem ``i`` and ``A[i]``
    maps its local vector onto them; ``catalog[r]`` describes row ``r``.
    """

    n_rows: int
    rows: list
    A: list
    catalog: list = field(default_factory=list)

    @classmethod
    def empty(cls, sizes):
        return cls(0, [np.zeros(0, dtype=int) for _ in sizes], [sp.csr_matrix((0, n)) for n in sizes], [])

    @property
    def counts(self):
        out = np.zeros(self.n_rows)
        for rows in self.rows:
            np.add.at(out, rows, 1.0)
        return out


def build_consensus(specs):
    """Six consensus rows per tie line, phase and timepoint."""
    net = specs[0].layout.network if specs else None
    ties = sorted({k for s in specs for k in s.layout.ties})
    times = sorted({int(t) for s in specs for t in s.layout.times})
    entries = [[] for _ in specs]  # (row, local col, coef)
    catalog = []
    for k in ties:
        br = net.branches[k]
        holders_by_t = {t: [i for i, s in enumerate(specs) if k in s.layout.ties and s.layout.has(t)] for t in times}
        for p in br.phases:
            for t in times:
                holders = holders_by_t[t]
                if len(holders) != 2:
                    raise IncompatibleInputError(
                        f"tie line {br.from_bus}-{br.to_bus} at t={t} is held by {len(holders)} "
                        "subproblem(s), expected 2"
                    )
                for quantity, op in ROW_KINDS:
                    row = len(catalog)
                    catalog.append({"branch": k, "phase": int(p), "t": t, "quantity": quantity, "op": op})
                    for i in holders:
                        lay = specs[i].layout
                        if quantity in ("v", "theta"):
                            col = lay.col_v if quantity == "v" else lay.col_theta
                            entries[i].append((row, col(br.from_bus, p, t), 1.0))
                            entries[i].append((row, col(br.to_bus, p, t), 1.0 if op == "add" else -1.0))
                        else:
                            col = lay.col_pb if quantity == "pb" else lay.col_qb
                            entries[i].append((row, col(k, p, t), 1.0))
    rows, mats = [], []
    for spec, ent in zip(specs, entries):
        own_rows = np.array(sorted({r for r, _, _ in ent}), dtype=int)
        pos = {r: m for m, r in enumerate(own_rows)}
        if ent:
            r_loc = [pos[r] for r, _, _ in ent]
            cols = [c for _, c, _ in ent]
            vals = [v for _, _, v in ent]
        else:
            r_loc, cols, vals = [], [], []
        mats.append(sp.csr_matrix((vals, (r_loc, cols)), shape=(own_rows.size, spec.layout.n)))
        rows.append(own_rows)
    Msg.debug(_COMPONENT, f"consensus layout with {len(catalog)} row(s) over {len(ties)} tie line(s)")
    return ConsensusLayout(len(catalog), rows, mats, catalog)


def z_update(layout, xs, lams, rho):
    """Average of ``A_i x_i + lambda_i / rho`` over the contributors of each row."""
    acc = np.zeros(layout.n_rows)
    for rows, A, x, lam in zip(layout.rows, layout.A, xs, lams):
        np.add.at(acc, rows, A @ x + lam / rho)
    counts = layout.counts
    return np.divide(acc, counts, out=np.zeros_like(acc), where=counts > 0)


def contributor_gap(layout, axs):
    """Largest spread of ``A_i x_i`` between the contributors of any consensus row."""
    if layout.n_rows == 0:
        return 0.0
    hi = np.full(layout.n_rows, -np.inf)
    lo = np.full(layout.n_rows, np.inf)
    for rows, ax in zip(layout.rows, axs):
        np.maximum.at(hi, rows, ax)
        np.minimum.at(lo, rows, ax)
    used = layout.counts > 1
    return float((hi[used] - lo[used]).max(initial=0.0))


def lambda_update(lam, ax, z, rho, bounds=(-1e9, 1e9), damping=0.0):
    """``clip(lambda + (1 - damping) rho (A x - z))``."""
    return np.clip(lam + (1.0 - damping) * rho * (ax - z), bounds[0], bounds[1])


def penalty_update(rho, history, params):
    """Grow ``rho`` by ``tau`` when the residual fell by less than ``kappa``."""
    if len(history) < 2:
        return rho
    if history[-1] > params.kappa * history[-2]:
        return rho * params.tau
    return rho


def augmented_problem(problem, A, z, lam, rho, *, beta=0.0, anchor=None):
    """``problem`` with ``lam (A x - z) + rho/2 |A x - z|^2`` added to its objective.

    A positive ``beta`` adds ``beta/2 |A (x - anchor)|^2``.
    """
    base = problem.objective
    At = A.T.tocsr()
    anchor_rows = A @ anchor if beta > 0 else None

    def objective(x):
        f, g = base(x)
        r = A @ x - z
        value = f + lam @ r + 0.5 * rho * r @ r
        grad = g + At @ (lam + rho * r)
        if beta > 0:
            d = A @ x - anchor_rows
            value += 0.5 * beta * d @ d
            grad = grad + beta * (At @ d)
        return value, grad

    return NlpProblem(
        objective, problem.lb, problem.ub, A_eq=problem.A_eq, b_eq=problem.b_eq, A_in=problem.A_in,
        b_in=problem.b_in, eq=problem.eq, ineq=problem.ineq,
    )


def x_update(problem, A, z, lam, rho, x0, *, beta=0.0, anchor=None, tol=1e-6, **nlp_kwargs):
    """Local minimiser of the augmented subproblem, warm started at ``x0``."""
    aug = augmented_problem(problem, A, z, lam, rho, beta=beta, anchor=anchor if anchor is not None else x0)
    return solve_augmented(aug, x0, tol, **nlp_kwargs)


def admm_solve(problems, layout, params, x0s, *, rho0=None, lams0=None, comp=None, tol=1e-6, start_iter=0,
               **nlp_kwargs):
    """Synchronous consensus ADMM.

    ``comp`` is ``(schedule, pairs)`` with one ``(u, v)`` pair of index
    arrays per subproblem; the product bound of iteration ``k`` is
    ``schedule.eps(k)`` and convergence additionally waits for the bound to
    reach its threshold. The trace has one record per iteration.
    """
    xs = [np.asarray(x, dtype=float).copy() for x in x0s]
    rho = params.eps0_nlp if rho0 is None else float(rho0)
    lams = [np.zeros(r.size) for r in layout.rows] if lams0 is None else [lam.copy() for lam in lams0]
    z = z_update(layout, xs, lams, rho)
    history = []
    trace = []
    t_admm = 0.0
    converged = False
    clipped = False
    failures = 0
    sub_times = np.zeros(len(problems))

    def solve(i, eps):
        p = problems[i]
        if comp is not None and comp[1][i][0].size:
            p = p.with_ineq(product_constraints(comp[1][i][0], comp[1][i][1], eps))
        tick = time.perf_counter()
        res = x_update(
            p, layout.A[i], z[layout.rows[i]], lams[i], rho, xs[i], beta=params.proximal, tol=tol, **nlp_kwargs
        )
        return res, time.perf_counter() - tick

    it = 0
    gap = 0.0
    with ThreadPoolExecutor(max_workers=max(1, params.workers)) as pool:
        for it in range(1, params.max_iters + 1):
            eps = comp[0].eps(start_iter + it - 1) if comp is not None else None
            outcomes = list(pool.map(lambda i: solve(i, eps), range(len(problems))))
            for i, (res, elapsed) in enumerate(outcomes):
                xs[i] = res.x
                sub_times[i] += elapsed
                if res.infeasible:
                    failures += 1
            max_time = max((e for _, e in outcomes), default=0.0)
            t_admm += max_time
            z = z_update(layout, xs, lams, rho)
            residual = 0.0
            axs = [A @ x for A, x in zip(layout.A, xs)]
            gap = contributor_gap(layout, axs)
            for i in range(len(problems)):
                ax = axs[i]
                zi = z[layout.rows[i]]
                if ax.size:
                    residual = max(residual, float(np.abs(ax - zi).max()))
                new = lambda_update(lams[i], ax, zi, rho, (params.lambda_min, params.lambda_max), params.damping)
                clipped |= bool(np.any((new <= params.lambda_min) | (new >= params.lambda_max)))
                lams[i] = new
            history.append(residual)
            objective = float(sum(p.objective(x)[0] for p, x in zip(problems, xs)))
            trace.append({
                "iter": start_iter + it,
                "max_primal_residual": residual,
                "rho": rho,
                "max_subproblem_time_s": max_time,
                "objective": objective,
            })
            Msg.debug(
                _COMPONENT,
                f"iteration {start_iter + it}: residual {residual:.3e} gap {gap:.3e} rho {rho:.4g} f {objective:.8g}",
            )
            eps_done = comp is None or eps <= comp[0].threshold
            # contributors may differ by up to twice the residual
            if residual <= params.conv_threshold and gap <= params.conv_threshold and eps_done:
                converged = True
                break
            rho = penalty_update(rho, history, params)

    if not converged:
        Msg.warning(_COMPONENT, f"no consensus after {it} iteration(s), residual {history[-1]:.3e}")
    if clipped:
        Msg.warning(_COMPONENT, "multiplier clipping was active")
    return OptimizeResult(
        xs=xs, z=z, lams=lams, rho=rho, converged=converged, iterations=it, trace=trace, t_admm=t_admm,
        residual=history[-1] if history else 0.0, gap=gap, lambda_clipped=clipped, failures=failures,
        sub_times=sub_times / max(it, 1),
    )


def run_admm_stage(specs, fixed, start_state, params, *, stage="nlp", sched=None, v_min=0.95, v_max=1.05, tol=1e-6,
                   start=None, **nlp_kwargs):
    """One distributed stage: build, iterate, and for ``comp`` fix and polish.

    ``start`` maps load ids to the warm-start DES solutions (the siting
    solution when omitted).
    """
    if not specs:
        raise IllegalInputError("no subproblems to solve")
    if stage == "comp" and sched is None:
        raise IllegalInputError("the complementarity stage needs an epsilon schedule")
    network = specs[0].layout.network
    start = fixed if start is None else start
    dead = dead_flow_phases(network, sorted({k for s in specs for k in s.layout.ties}))
    stage_problems = [
        build_stage_problem(s.layout, fixed, stage=stage, v_min=v_min, v_max=v_max, scale=s.scale, dead_flows=dead)
        for s in specs
    ]
    layout = build_consensus(specs)
    x0s = [warm_start(p, start_state, start) for p in stage_problems]
    nlps = [p.nlp for p in stage_problems]
    rho0 = params.eps0_comp if stage == "comp" else params.eps0_nlp
    comp = (sched, [p.pairs for p in stage_problems]) if stage == "comp" else None
    res = admm_solve(nlps, layout, params, x0s, rho0=rho0, comp=comp, tol=tol, **nlp_kwargs)
    trace = list(res.trace)
    t_admm = res.t_admm
    notes = {"lambda_clipped": res.lambda_clipped, "subproblem_failures": res.failures}
    xs = res.xs
    converged = res.converged
    iterations = res.iterations

    if stage == "comp":
        fixed_nlps = []
        n_fixed = 0
        for p, x in zip(stage_problems, xs):
            u, v = p.pairs
            if u.size == 0:
                fixed_nlps.append(p.nlp)
                continue
            zero = np.where(x[u] <= x[v], u, v)
            n_fixed += zero.size
            lb, ub = p.nlp.lb.copy(), p.nlp.ub.copy()
            lb[zero] = ub[zero] = 0.0
            fixed_nlps.append(p.nlp.with_bounds(lb, ub))
        polish_start = [np.clip(x, q.lb, q.ub) for x, q in zip(xs, fixed_nlps)]
        Msg.info(_COMPONENT, f"complementarity polish with {n_fixed} fixed pair member(s)")
        polish = admm_solve(
            fixed_nlps, layout, params, polish_start, rho0=res.rho, lams0=res.lams, tol=tol, start_iter=iterations,
            **nlp_kwargs,
        )
        trace += polish.trace
        t_admm += polish.t_admm
        xs = polish.xs
        converged = converged and polish.converged
        iterations += polish.iterations
        notes.update(fixed=n_fixed, polish_iterations=polish.iterations,
                     lambda_clipped=res.lambda_clipped or polish.lambda_clipped)
        sub_times = (res.sub_times * res.iterations + polish.sub_times * polish.iterations) / max(iterations, 1)
    else:
        sub_times = res.sub_times

    state = start_state.copy()
    decisions = {}
    objective = 0.0
    violation = 0.0
    for p, x in zip(stage_problems, xs):
        p.write_state(x, state)
        decisions.update(p.decisions(x))
        objective += p.objective(x)
        violation = max(violation, p.nlp.violation(x))
    loads = {load_id: q for p in stage_problems for load_id, q in p.layout.problems.items()}
    costs = total_costs(loads, decisions)
    samples = [
        {"n_buses": s.n_buses, "n_loads": s.n_loads, "timepoints": s.layout.T, "kind": s.kind,
         "observed_time_s": float(t)}
        for s, t in zip(specs, sub_times)
    ]
    Msg.info(
        _COMPONENT,
        f"distributed {stage}: TAC {costs.tac:.4f}, {iterations} iteration(s), converged {converged}, "
        f"parallel time {t_admm:.2f} s",
    )
    return StageOutcome(
        stage, decisions, state, objective, costs, converged, iterations, t_admm, violation, trace, samples, notes
    )


def metrics(dist, cent):
    """Objective gap in percent and solve-time ratio of a distributed run.

    Both arguments need ``objective`` and ``solve_time`` attributes.
    """
    if cent.objective == 0:
        raise IllegalInputError("reference objective is zero; the gap is undefined")
    gap = (dist.objective - cent.objective) / cent.objective * 100.0
    ratio = dist.solve_time / cent.solve_time if cent.solve_time > 0 else float("nan")
    return gap, ratio
