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

"""NLP and complementarity stage problems over a set of buses.

A stage problem owns some buses of the feeder for some timepoints. Its
variables are, per timepoint, ``[V, theta]`` of every local node (owned
buses plus the far ends of tie lines) followed by ``[Pb, Qb]`` of every
tie-line phase, and then the DES variables of the loads at owned buses.
The bus injection equations hold at owned non-slack nodes; the DES models
keep their linear rows with the siting binaries frozen.
"""

from dataclasses import dataclass, field
import math
import time

import networkx as nx
import numpy as np
import scipy.sparse as sp

from desgn.core import SLACK_ANGLES, DataNotFoundError, IllegalInputError, Msg

from .acpf import admittance_matrix, branch_flow, branch_flow_jacobian, dS_dV, local_nodes
from .des import OPERATIONAL_FAMILIES, CostBreakdown, DecisionVars, cost_breakdown, reactive_injection
from .nlp import NlpProblem, complementarity_pass, fix_and_recover, solve_augmented

_COMPONENT = "formulation"
STAGES = ("nlp", "comp")


class StageLayout:
    """Column map of a stage problem.

    ``own`` are the buses whose injection equations are imposed; ``local``
    adds the far end of every branch leaving ``own``. ``problems`` maps the
    ids of loads at owned buses to their :class:`DesProblem`.
    """

    def __init__(self, network, own, times, problems=None):
        self.network = network
        own = set(own)
        unknown = own - set(network.bus_index)
        if unknown:
            raise DataNotFoundError(f"unknown bus {sorted(unknown)[0]}")
        self.own = tuple(b.id for b in network.buses if b.id in own)
        self.ties = tuple(
            k for k, br in enumerate(network.branches) if (br.from_bus in own) != (br.to_bus in own)
        )
        far = {e for k in self.ties for e in (network.branches[k].from_bus, network.branches[k].to_bus)}
        self.local = tuple(b.id for b in network.buses if b.id in own or b.id in far)
        self.times = np.atleast_1d(np.asarray(times, dtype=int))
        self._slot = {int(t): s for s, t in enumerate(self.times)}

        self.nodes = local_nodes(network, self.local)
        self.node_pos = {node: k for k, node in enumerate(self.nodes)}
        self.flow_phases = tuple((k, p) for k in self.ties for p in network.branches[k].phases)
        self.flow_pos = {fp: k for k, fp in enumerate(self.flow_phases)}
        self.n_nodes = len(self.nodes)
        self.n_flow = len(self.flow_phases)
        self.slot_size = 2 * self.n_nodes + 2 * self.n_flow

        problems = dict(problems or {})
        self.loads = tuple(load for load in network.loads if load.bus in own)
        missing = [load.id for load in self.loads if load.id not in problems]
        if missing:
            raise DataNotFoundError(f"no DES problem for load {missing[0]}")
        self.problems = {load.id: problems[load.id] for load in self.loads}
        self.des_offset = {}
        offset = self.slot_size * self.times.size
        for load in self.loads:
            self.des_offset[load.id] = offset
            offset += self.problems[load.id].index.size
        self.n = offset

    @property
    def T(self):
        return self.times.size

    def has(self, t):
        return int(t) in self._slot

    def slot(self, t):
        try:
            return self._slot[int(t)]
        except KeyError:
            raise DataNotFoundError(f"timepoint {t} is not part of this stage problem") from None

    def _node(self, bus_id, phase):
        try:
            return self.node_pos[(self.network.bus_index[bus_id], int(phase))]
        except KeyError:
            raise DataNotFoundError(f"bus {bus_id} phase {int(phase)} is not local") from None

    def col_v(self, bus_id, phase, t):
        return self.slot(t) * self.slot_size + self._node(bus_id, phase)

    def col_theta(self, bus_id, phase, t):
        return self.col_v(bus_id, phase, t) + self.n_nodes

    def col_pb(self, branch, phase, t):
        try:
            k = self.flow_pos[(branch, int(phase))]
        except KeyError:
            raise DataNotFoundError(f"branch {branch} phase {int(phase)} is not a tie line here") from None
        return self.slot(t) * self.slot_size + 2 * self.n_nodes + k

    def col_qb(self, branch, phase, t):
        return self.col_pb(branch, phase, t) + self.n_flow

    def des_cols(self, load_id):
        start = self.des_offset[load_id]
        return slice(start, start + self.problems[load_id].index.size)

    def __repr__(self):
        return (
            f"StageLayout(own={len(self.own)}, local={len(self.local)}, T={self.T}, "
            f"loads={len(self.loads)}, ties={len(self.ties)})"
        )


def downstream_buses(network, branch):
    """Buses separated from the slack by ``branch``."""
    br = network.branches[branch]
    graph = network.graph.copy()
    graph.remove_edge(br.from_bus, br.to_bus)
    slack_side = nx.node_connected_component(graph, network.slack.id)
    end = br.to_bus if br.from_bus in slack_side else br.from_bus
    return nx.node_connected_component(graph, end)


def dead_flow_phases(network, branches):
    """``(branch, phase)`` pairs that feed no load and so carry no power."""
    out = set()
    for k in branches:
        below = downstream_buses(network, k)
        loaded = {load.phase for load in network.loads if load.bus in below}
        out.update((k, p) for p in network.branches[k].phases if p not in loaded)
    return out


def _embed(A, offset, n):
    A = A.tocoo()
    return sp.csr_matrix((A.data, (A.row, A.col + offset)), shape=(A.shape[0], n))


@dataclass(eq=False)
class StageProblem:
    layout: StageLayout
    nlp: NlpProblem
    pairs: tuple
    stage: str
    scale: float

    def decisions(self, x):
        """DES solution of every load as :class:`DecisionVars`."""
        return {
            load_id: DecisionVars(p.index, x[self.layout.des_cols(load_id)])
            for load_id, p in self.layout.problems.items()
        }

    def costs(self, x):
        """Unscaled cost breakdown summed over the loads, or ``None`` without loads."""
        if not self.layout.problems:
            return None
        return total_costs(self.layout.problems, self.decisions(x))

    def objective(self, x):
        return float(self.nlp.objective(x)[0])

    def write_state(self, x, state):
        """Copy the voltages of owned buses in ``x`` into ``state`` in place."""
        lay = self.layout
        own = {lay.network.bus_index[b] for b in lay.own}
        keep = np.array([k for k, (i, _) in enumerate(lay.nodes) if i in own], dtype=int)
        idx = np.array([lay.nodes[k][0] for k in keep], dtype=int)
        ph = np.array([lay.nodes[k][1] for k in keep], dtype=int)
        for s, t in enumerate(lay.times):
            base = s * lay.slot_size
            state.vm[idx, ph, t] = x[base + keep]
            state.va[idx, ph, t] = x[base + lay.n_nodes + keep]
        return state


def build_stage_problem(layout, fixed, *, stage="nlp", v_min=0.95, v_max=1.05, scale=1.0, dead_flows=None):
    """Stage problem of ``layout`` with the binaries of ``fixed`` frozen.

    ``fixed`` maps load id to the siting :class:`DecisionVars`. The ``comp``
    stage drops the big-M rows of the operational binaries; their pairs are
    returned as global index arrays for the complementarity constraints.
    """
    if stage not in STAGES:
        raise IllegalInputError(f"unknown stage {stage!r}")
    if not 0 < v_min < v_max:
        raise IllegalInputError("voltage limits must satisfy 0 < v_min < v_max")
    lay = layout
    net = lay.network
    n = lay.n
    if dead_flows is None:
        dead_flows = dead_flow_phases(net, lay.ties)

    lb = np.full(n, -np.inf)
    ub = np.full(n, np.inf)
    slack = net.bus_index[net.slack.id]
    for s in range(lay.T):
        base = s * lay.slot_size
        for k, (i, p) in enumerate(lay.nodes):
            ref = SLACK_ANGLES[p]
            if i == slack:
                lb[base + k] = ub[base + k] = 1.0
                lb[base + lay.n_nodes + k] = ub[base + lay.n_nodes + k] = ref
            else:
                lb[base + k], ub[base + k] = v_min, v_max
                lb[base + lay.n_nodes + k] = ref - 0.5 * math.pi
                ub[base + lay.n_nodes + k] = ref + 0.5 * math.pi
        for f, fp in enumerate(lay.flow_phases):
            if fp in dead_flows:
                col = base + 2 * lay.n_nodes + f
                lb[col] = ub[col] = 0.0
                lb[col + lay.n_flow] = ub[col + lay.n_flow] = 0.0

    c = np.zeros(n)
    eq_blocks, eq_rhs, in_blocks, in_rhs = [], [], [], []
    pairs_u, pairs_v = [], []
    for load in lay.loads:
        p = lay.problems[load.id]
        off = lay.des_offset[load.id]
        cols = lay.des_cols(load.id)
        lp = p.lp
        lb[cols] = lp.lb
        ub[cols] = lp.ub
        if load.id not in fixed:
            raise DataNotFoundError(f"no siting solution for load {load.id}")
        binaries = p.binaries
        frozen = np.round(fixed[load.id].x[binaries])
        lb[off + binaries] = frozen
        ub[off + binaries] = frozen
        c[cols] = scale * lp.c

        keep = np.ones(lp.m, dtype=bool)
        if stage == "comp":
            keep &= ~np.isin(lp.families, OPERATIONAL_FAMILIES)
            u, v = p.pairs
            pairs_u.append(off + u)
            pairs_v.append(off + v)
        A = lp.A.tocsr()
        for sense, sign, blocks, rhs in (("E", 1.0, eq_blocks, eq_rhs), ("L", 1.0, in_blocks, in_rhs),
                                         ("G", -1.0, in_blocks, in_rhs)):
            rows = np.flatnonzero(keep & (lp.senses == sense))
            if rows.size:
                blocks.append(_embed(sign * A[rows], off, n))
                rhs.append(sign * lp.rhs[rows])

    A_eq = sp.vstack(eq_blocks).tocsr() if eq_blocks else None
    A_in = sp.vstack(in_blocks).tocsr() if in_blocks else None
    b_eq = np.concatenate(eq_rhs) if eq_rhs else None
    b_in = np.concatenate(in_rhs) if in_rhs else None

    def objective(x):
        return float(c @ x), c

    nlp = NlpProblem(
        objective, lb, ub, A_eq=A_eq, b_eq=b_eq, A_in=A_in, b_in=b_in, eq=_PowerFlowRows(lay).evaluate
    )
    pairs = (
        np.concatenate(pairs_u) if pairs_u else np.zeros(0, dtype=int),
        np.concatenate(pairs_v) if pairs_v else np.zeros(0, dtype=int),
    )
    Msg.debug(_COMPONENT, f"{stage} stage problem {lay!r}: {n} variables")
    return StageProblem(lay, nlp, pairs, stage, scale)


class _PowerFlowRows:
    """Injection equations at owned non-slack nodes and tie-line flow definitions."""

    def __init__(self, lay):
        net = lay.network
        self.lay = lay
        self.Y = admittance_matrix(net, lay.local)
        slack = net.bus_index[net.slack.id]
        own = {net.bus_index[b] for b in lay.own}
        self.rows = np.array([k for k, (i, _) in enumerate(lay.nodes) if i in own and i != slack], dtype=int)
        row_of = {k: r for r, k in enumerate(self.rows)}

        # P_spec = k (sold - grid) per load node, Q_spec from the building demand
        self.coupling = []
        self.q_spec = np.zeros((lay.T, self.rows.size))
        k_energy = 1e-3 / (net.s_base * next(iter(lay.problems.values())).timeline.dt) if lay.problems else 0.0
        for load in lay.loads:
            node = lay.node_pos[(net.bus_index[load.bus], int(load.phase))]
            if node not in row_of:
                continue
            p = lay.problems[load.id]
            off = lay.des_offset[load.id]
            self.coupling.append((row_of[node], off + p.index["e_pv_sold"], off + p.index["e_grid"]))
            q = reactive_injection(load.elec, p.catalog.pf, net.s_base, p.timeline.dt)
            self.q_spec[:, row_of[node]] += q[lay.times]
        self.k_energy = k_energy

        self.branches = []
        for k in lay.ties:
            br = net.branches[k]
            i, j = net.bus_index[br.from_bus], net.bus_index[br.to_bus]
            ni = [lay.node_pos.get((i, q), -1) for q in range(3)]
            nj = [lay.node_pos.get((j, q), -1) for q in range(3)]
            self.branches.append((k, br.y, ni, nj, br.phases))
        self.m_slot = 2 * self.rows.size + 2 * lay.n_flow

    def evaluate(self, x):
        lay = self.lay
        nb, nn, nf = self.rows.size, lay.n_nodes, lay.n_flow
        values = np.zeros(self.m_slot * lay.T)
        rr, cc, vv = [], [], []
        for s in range(lay.T):
            base = s * lay.slot_size
            r0 = s * self.m_slot
            vm = x[base:base + nn]
            va = x[base + nn:base + 2 * nn]
            V = vm * np.exp(1j * va)
            S = V * np.conj(self.Y @ V)
            values[r0:r0 + nb] = S.real[self.rows]
            values[r0 + nb:r0 + 2 * nb] = S.imag[self.rows] - self.q_spec[s]
            for row, sold, grid in self.coupling:
                t = lay.times[s]
                values[r0 + row] -= self.k_energy * (x[sold[t]] - x[grid[t]])
                rr += [r0 + row, r0 + row]
                cc += [sold[t], grid[t]]
                vv += [-self.k_energy, self.k_energy]

            if nb:
                dVm, dVa = dS_dV(self.Y, V)
                for part, shift in ((dVm[self.rows].tocoo(), 0), (dVa[self.rows].tocoo(), nn)):
                    cols = base + shift + part.col
                    rr += [r0 + part.row, r0 + nb + part.row]
                    cc += [cols, cols]
                    vv += [part.data.real, part.data.imag]

            flow_row = r0 + 2 * nb
            for k, y, ni, nj, phases in self.branches:
                vi = np.array([V[a] if a >= 0 else 0.0 for a in ni], dtype=complex)
                vj = np.array([V[a] if a >= 0 else 0.0 for a in nj], dtype=complex)
                Sb, dmi, dai, dmj, daj = branch_flow_jacobian(y, vi, vj)
                for p in phases:
                    f = lay.flow_pos[(k, p)]
                    rp, rq = flow_row + f, flow_row + nf + f
                    cp = base + 2 * nn + f
                    values[rp] = x[cp] - Sb[p].real
                    values[rq] = x[cp + nf] - Sb[p].imag
                    rr += [rp, rq]
                    cc += [cp, cp + nf]
                    vv += [1.0, 1.0]
                    for nodes, dm, da in ((ni, dmi, dai), (nj, dmj, daj)):
                        for q in range(3):
                            a = nodes[q]
                            if a < 0:
                                continue
                            for col, d in ((base + a, dm[p, q]), (base + nn + a, da[p, q])):
                                rr += [rp, rq]
                                cc += [col, col]
                                vv += [-d.real, -d.imag]
        rows = np.concatenate([np.atleast_1d(np.asarray(r)) for r in rr]) if rr else np.zeros(0, dtype=int)
        cols = np.concatenate([np.atleast_1d(np.asarray(c)) for c in cc]) if cc else np.zeros(0, dtype=int)
        data = np.concatenate([np.atleast_1d(np.asarray(v, dtype=float)) for v in vv]) if vv else np.zeros(0)
        jac = sp.csr_matrix((data, (rows, cols)), shape=(values.size, lay.n))
        return values, jac


def warm_start(problem, state, fixed):
    """Start point from a power-flow ``state`` and per-load DES solutions."""
    lay = problem.layout
    net = lay.network
    x = np.zeros(lay.n)
    idx = np.array([i for i, _ in lay.nodes], dtype=int)
    ph = np.array([p for _, p in lay.nodes], dtype=int)
    for s, t in enumerate(lay.times):
        base = s * lay.slot_size
        x[base:base + lay.n_nodes] = state.vm[idx, ph, t]
        x[base + lay.n_nodes:base + 2 * lay.n_nodes] = state.va[idx, ph, t]
        for k in lay.ties:
            pb, qb = branch_flow(state, net, net.branches[k], t)
            for p in net.branches[k].phases:
                f = lay.flow_pos[(k, p)]
                x[base + 2 * lay.n_nodes + f] = pb[p]
                x[base + 2 * lay.n_nodes + lay.n_flow + f] = qb[p]
    for load in lay.loads:
        x[lay.des_cols(load.id)] = fixed[load.id].x
    return np.clip(x, problem.nlp.lb, problem.nlp.ub)


def central_layout(network, problems):
    """Layout owning every bus over every timepoint."""
    T = next(iter(problems.values())).timeline.T if problems else network.timepoints
    return StageLayout(network, [b.id for b in network.buses], np.arange(T), problems)


def total_costs(problems, decisions):
    """Sum of :func:`cost_breakdown` over ``decisions``."""
    total = None
    for load_id, v in decisions.items():
        c = cost_breakdown(v, problems[load_id])
        total = c if total is None else total + c
    if total is None:
        first = next(iter(problems.values()))
        return CostBreakdown.zeros([s.name for s in first.timeline.seasons])
    return total


@dataclass
class StageOutcome:
    """Result of one NLP or complementarity stage, central or distributed."""

    stage: str
    decisions: dict
    state: object
    objective: float
    costs: CostBreakdown
    converged: bool
    iterations: int
    solve_time: float
    violation: float = 0.0
    trace: list = field(default_factory=list)
    samples: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def tac(self):
        return self.costs.tac


def solve_central_stage(network, problems, fixed, start_state, start, *, stage="nlp", sched=None,
                        v_min=0.95, v_max=1.05, scale=1.0, tol=1e-6, **nlp_kwargs):
    """Solve one stage over the whole feeder.

    ``start_state`` and ``start`` (load id to :class:`DecisionVars`) give the
    warm start; binaries stay frozen at ``fixed``. The complementarity stage
    runs the shrinking-epsilon pass, fixes the smaller member of every pair
    and keeps the warm start when that is cheaper and already complementary.
    """
    layout = central_layout(network, problems)
    problem = build_stage_problem(layout, fixed, stage=stage, v_min=v_min, v_max=v_max, scale=scale)
    x0 = warm_start(problem, start_state, start)
    tick = time.perf_counter()
    notes = {}
    if stage == "nlp":
        res = solve_augmented(problem.nlp, x0, tol, **nlp_kwargs)
        x, converged, iterations, violation = res.x, res.converged, res.nit, res.violation
        if res.infeasible:
            notes["infeasible"] = True
    else:
        if sched is None:
            raise IllegalInputError("the complementarity stage needs an epsilon schedule")
        cp = complementarity_pass(problem.nlp, problem.pairs, sched, x0, tol, **nlp_kwargs)
        fr = fix_and_recover(problem.nlp, cp.x, problem.pairs, tol, **nlp_kwargs)
        x, converged, iterations, violation = fr.x, fr.converged, len(cp.eps) + 1, fr.violation
        notes.update(
            eps_rounds=len(cp.eps),
            infeasible_at=cp.infeasible_at,
            fixed=int(fr.fixed.size),
            reverted=[list(pair) for pair in fr.reverted],
        )
        u, v = problem.pairs
        warm_ok = problem.nlp.violation(x0) <= tol and np.all(x0[u] * x0[v] == 0.0)
        if warm_ok and (fr.infeasible or problem.objective(x0) < problem.objective(x)):
            Msg.info(_COMPONENT, "complementarity stage keeps its warm start")
            x, converged, violation = x0, True, problem.nlp.violation(x0)
            notes["kept_warm_start"] = True
    elapsed = time.perf_counter() - tick
    state = problem.write_state(x, start_state.copy())
    decisions = problem.decisions(x)
    costs = total_costs(problems, decisions)
    Msg.info(_COMPONENT, f"central {stage}: TAC {costs.tac:.4f}, violation {violation:.2e}, {elapsed:.2f} s")
    return StageOutcome(
        stage, decisions, state, problem.objective(x), costs, bool(converged), int(iterations), elapsed,
        float(violation), notes=notes,
    )
