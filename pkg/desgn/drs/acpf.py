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

"""Three-phase bus injection model and Newton power flow.

Node vectors are phase-major: every present phase of every bus, phase A
nodes first, in network bus order. Complex power at the nodes is
``S = V * conj(Y V)``.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from desgn.core import (
    ContinueError,
    IllegalInputError,
    IncompatibleInputError,
    Msg,
    SystemState,
    ViolationStats,
)

_COMPONENT = "acpf"


def local_nodes(net, bus_ids=None):
    """Phase-major (bus index, phase) pairs restricted to ``bus_ids``."""
    if bus_ids is None:
        return net.nodes
    keep = {net.bus_index[b] for b in bus_ids}
    return tuple(node for node in net.nodes if node[0] in keep)


def admittance_matrix(net, bus_ids=None):
    """Sparse nodal admittance over ``bus_ids`` (all buses by default).

    Only branches with both ends inside the set contribute.
    """
    nodes = local_nodes(net, bus_ids)
    pos = {node: k for k, node in enumerate(nodes)}
    inside = {i for i, _ in nodes}
    rows, cols, vals = [], [], []
    for br in net.branches:
        i, j = net.bus_index[br.from_bus], net.bus_index[br.to_bus]
        if i not in inside or j not in inside:
            continue
        y = br.y
        phases = br.phases
        for p in phases:
            for q in phases:
                if y[p, q] == 0:
                    continue
                for a, b, sign in ((i, i, 1.0), (j, j, 1.0), (i, j, -1.0), (j, i, -1.0)):
                    rows.append(pos[(a, p)])
                    cols.append(pos[(b, q)])
                    vals.append(sign * y[p, q])
    n = len(nodes)
    return sp.coo_matrix((vals, (rows, cols)), shape=(n, n), dtype=complex).tocsr()


def power_injections(Y, V):
    return V * np.conj(Y @ V)


def dS_dV(Y, V):
    """Derivatives of nodal power w.r.t. magnitude and angle (sparse)."""
    I = Y @ V
    mag = np.abs(V)
    Vnorm = np.divide(V, mag, out=np.zeros_like(V), where=mag > 0)
    diagV = sp.diags(V, format="csr")
    diagI = sp.diags(I, format="csr")
    diagVnorm = sp.diags(Vnorm, format="csr")
    dS_dVm = diagV @ (Y @ diagVnorm).conj() + diagI.conj() @ diagVnorm
    dS_dVa = 1j * diagV @ (diagI - Y @ diagV).conj()
    return dS_dVm.tocsr(), dS_dVa.tocsr()


def branch_flow_jacobian(y, vi, vj):
    """Sending-end power of a 3x3 branch and its derivatives.

    Returns ``(S, dVm_i, dVa_i, dVm_j, dVa_j)``; each derivative is a 3x3
    complex matrix with rows indexed by phase of ``S``.
    """
    y = np.asarray(y, dtype=complex)
    current = y @ (vi - vj)
    S = vi * np.conj(current)

    def unit(v):
        mag = np.abs(v)
        return np.divide(v, mag, out=np.zeros_like(v), where=mag > 0)

    yc = np.conj(y)
    dVm_i = np.diag(np.conj(current) * unit(vi)) + np.diag(vi) @ yc @ np.diag(np.conj(unit(vi)))
    dVa_i = 1j * np.diag(np.conj(current) * vi) - 1j * np.diag(vi) @ yc @ np.diag(np.conj(vi))
    dVm_j = -np.diag(vi) @ yc @ np.diag(np.conj(unit(vj)))
    dVa_j = 1j * np.diag(vi) @ yc @ np.diag(np.conj(vj))
    return S, dVm_i, dVa_i, dVm_j, dVa_j


def _bus_phasors(state, bus, t):
    return state.vm[bus, :, t] * np.exp(1j * state.va[bus, :, t])


def branch_flow(state, net, branch, t=None):
    """``(Pb, Qb)`` per phase at the sending end; shape (3,) or (3, T)."""
    i, j = net.bus_index[branch.from_bus], net.bus_index[branch.to_bus]
    times = range(state.T) if t is None else [t]
    vi = np.array([_bus_phasors(state, i, k) for k in times]).T
    vj = np.array([_bus_phasors(state, j, k) for k in times]).T
    S = vi * np.conj(branch.y @ (vi - vj))
    if t is not None:
        S = S[:, 0]
    return S.real, S.imag


def injection_arrays(net, per_load, T=None):
    """Sum per-load ``(P, Q)`` arrays of shape (3, T) onto (n_bus, 3, T)."""
    if T is None:
        T = net.timepoints
    P = np.zeros((len(net.buses), 3, T))
    Q = np.zeros_like(P)
    for load_id, (p, q) in per_load.items():
        bus = net.bus_index[net.load(load_id).bus]
        P[bus] += p
        Q[bus] += q
    return P, Q


def _node_arrays(net, nodes):
    idx = np.array([i for i, _ in nodes], dtype=int)
    ph = np.array([p for _, p in nodes], dtype=int)
    return idx, ph


def bim_residual(state, net, inj, *, exclude_slack=True):
    """Specified minus computed injections, ``(dP, dQ)`` of shape (n_bus, 3, T)."""
    P_spec, Q_spec = inj
    n_bus = len(net.buses)
    if state.vm.shape[0] != n_bus or P_spec.shape != (n_bus, 3, state.T):
        raise IncompatibleInputError("state and injections do not match the network")
    Y = admittance_matrix(net)
    idx, ph = _node_arrays(net, net.nodes)
    dP = np.zeros((n_bus, 3, state.T))
    dQ = np.zeros_like(dP)
    for t in range(state.T):
        V = state.node_values(net, t)
        S = power_injections(Y, V)
        dP[idx, ph, t] = P_spec[idx, ph, t] - S.real
        dQ[idx, ph, t] = Q_spec[idx, ph, t] - S.imag
    if exclude_slack:
        slack = net.bus_index[net.slack.id]
        dP[slack] = 0.0
        dQ[slack] = 0.0
    return dP, dQ


@dataclass
class PowerFlowResult:
    state: SystemState
    converged: np.ndarray
    iterations: np.ndarray
    mismatch: np.ndarray

    @property
    def success(self):
        return bool(np.all(self.converged))


def _solve_timepoint(Y, free, s_spec, V0, tol, max_iter):
    V = V0.copy()

    def mismatch(V):
        d = s_spec - power_injections(Y, V)
        return np.concatenate([d.real[free], d.imag[free]])

    F = mismatch(V)
    norm = np.abs(F).max(initial=0.0)
    it = 0
    while norm > tol and it < max_iter:
        dVm, dVa = dS_dV(Y, V)
        J = sp.bmat(
            [
                [dVa[free][:, free].real, dVm[free][:, free].real],
                [dVa[free][:, free].imag, dVm[free][:, free].imag],
            ],
            format="csc",
        )
        with np.errstate(all="ignore"):
            step = spsolve(J, F)
        if not np.all(np.isfinite(step)):
            break
        nf = free.size
        va = np.angle(V)
        vm = np.abs(V)
        alpha = 1.0
        for _ in range(7):
            vm_new = vm.copy()
            va_new = va.copy()
            va_new[free] += alpha * step[:nf]
            vm_new[free] += alpha * step[nf:]
            trial = vm_new * np.exp(1j * va_new)
            F_new = mismatch(trial)
            norm_new = np.abs(F_new).max(initial=0.0)
            if norm_new < norm:
                break
            alpha *= 0.5
        V, F, norm = trial, F_new, norm_new
        it += 1
    return V, norm <= tol, it, norm


def power_flow(net, inj, start=None, *, tol=1e-8, max_iter=50, workers=1):
    """Newton power flow per timepoint; failures are flagged, not raised."""
    P, Q = inj
    T = P.shape[2]
    state = SystemState.flat(net, T) if start is None else start.copy()
    flat = SystemState.flat(net, T)
    slack = net.bus_index[net.slack.id]
    state.vm[slack] = flat.vm[slack]
    state.va[slack] = flat.va[slack]
    Y = admittance_matrix(net)
    idx, ph = _node_arrays(net, net.nodes)
    free = np.flatnonzero(idx != slack)

    def run(t):
        s_spec = P[idx, ph, t] + 1j * Q[idx, ph, t]
        return _solve_timepoint(Y, free, s_spec, state.node_values(net, t), tol, max_iter)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        outcomes = list(pool.map(run, range(T)))
    converged = np.zeros(T, dtype=bool)
    iterations = np.zeros(T, dtype=int)
    mismatch = np.zeros(T)
    for t, (V, ok, it, norm) in enumerate(outcomes):
        state.set_node_values(net, t, V)
        converged[t], iterations[t], mismatch[t] = ok, it, norm
        if not ok:
            Msg.warning(_COMPONENT, f"timepoint {t}: no convergence after {it} iterations, mismatch {norm:.3e}")
    Msg.debug(_COMPONENT, f"power flow over {T} timepoints, max iterations {iterations.max(initial=0)}")
    return PowerFlowResult(state, converged, iterations, mismatch)


def newton_pf(net, inj, start=None, *, tol=1e-8, max_iter=50, workers=1):
    """Solved :class:`SystemState`; raises :class:`ContinueError` on failure."""
    result = power_flow(net, inj, start, tol=tol, max_iter=max_iter, workers=workers)
    if not result.success:
        raise ContinueError(
            f"power flow did not converge, final mismatch {result.mismatch.max():.3e}", result=result
        )
    return result.state


def violation_stats(values, v_max, v_min, network=None):
    """Upper and lower voltage violation statistics in percent.

    ``values`` is a :class:`SystemState` (slack and absent phases are left
    out when ``network`` is given) or an array of magnitudes.
    """
    if v_max <= 0 or v_min <= 0:
        raise IllegalInputError("voltage limits must be positive")
    if isinstance(values, SystemState):
        vm = values.vm
        if network is not None:
            mask = np.zeros(vm.shape[:2], dtype=bool)
            for i, bus in enumerate(network.buses):
                if bus.id != network.slack.id:
                    mask[i, list(bus.phases)] = True
            vm = vm[mask]
        values = vm
    v = np.ravel(np.asarray(values, dtype=float))
    upper = np.maximum(0.0, (v - v_max) / v_max) * 100.0
    lower = np.maximum(0.0, (v_min - v) / v_min) * 100.0
    return _stats(upper), _stats(lower)


def _stats(viol):
    if viol.size == 0:
        return ViolationStats()
    return ViolationStats(
        avg_violation=float(viol.mean()),
        max_violation=float(viol.max()),
        pct_constraints_violated=float(np.count_nonzero(viol > 0) / viol.size * 100.0),
    )
