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

"""Solve-time regression and balanced feeder partitioning.

Load groups are grown from the paths joining their loads and may extend
towards the slack along unbranched line sections; everything else forms the
single no-load trunk group. The extension lengths are chosen by exhaustive
search so that predicted subproblem times are as equal as possible.
"""

from dataclasses import dataclass
from pathlib import Path

import networkx as nx
import numpy as np
import pandas as pd
import scipy.linalg

from desgn.core import FileIOError, IllegalInputError, IncompatibleInputError, Msg

from .admm import Partition

_COMPONENT = "partition"
KINDS = ("load", "noload")
FEATURES = {"load": ("intercept", "n_buses", "n_loads"), "noload": ("intercept", "n_buses")}
TIMING_COLUMNS = ("n_buses", "n_loads", "timepoints", "kind", "observed_time_s")
_MAX_CANDIDATES = 2_000_000


@dataclass(frozen=True)
class TimingSample:
    n_buses: int
    n_loads: int
    timepoints: int
    kind: str
    observed_time_s: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise IllegalInputError(f"unknown subproblem kind {self.kind!r}")
        if not self.observed_time_s > 0:
            raise IllegalInputError("observed solve times must be positive")
        if self.n_buses < 1 or self.n_loads < 0 or self.timepoints < 1:
            raise IllegalInputError("timing sample sizes out of range")


def read_timing_samples(path):
    path = Path(path)
    if not path.is_file():
        raise FileIOError(f"missing file {path}")
    try:
        frame = pd.read_csv(path, dtype={"kind": str})
    except (OSError, pd.errors.ParserError, UnicodeDecodeError) as err:
        raise FileIOError(f"cannot read {path}: {err}") from err
    missing = [c for c in TIMING_COLUMNS if c not in frame.columns]
    if missing:
        raise IllegalInputError(f"{path.name}: missing column(s) {', '.join(missing)}")
    return [
        TimingSample(int(r.n_buses), int(r.n_loads), int(r.timepoints), str(r.kind).strip(), float(r.observed_time_s))
        for r in frame.itertuples(index=False)
    ]


def write_timing_samples(samples, path):
    pd.DataFrame(
        [[s.n_buses, s.n_loads, s.timepoints, s.kind, s.observed_time_s] for s in samples], columns=TIMING_COLUMNS
    ).to_csv(path, index=False, float_format="%.6g")


def _design(kind, n_buses, n_loads):
    n_buses = np.asarray(n_buses, dtype=float)
    cols = [np.ones_like(n_buses), n_buses]
    if kind == "load":
        cols.append(np.broadcast_to(np.asarray(n_loads, dtype=float), n_buses.shape))
    return np.stack(cols, axis=-1)


@dataclass(frozen=True)
class RegressionModel:
    """Linear solve-time model per subproblem kind."""

    coefficients: dict
    r2: dict

    @classmethod
    def uniform(cls):
        """Constant prediction; every feasible partition scores the same."""
        return cls({"load": np.array([1.0, 0.0, 0.0]), "noload": np.array([1.0, 0.0])}, {"load": 1.0, "noload": 1.0})

    def predict(self, kind, n_buses, n_loads=0):
        if kind not in self.coefficients:
            raise IllegalInputError(f"no regression for kind {kind!r}")
        t = _design(kind, n_buses, n_loads) @ self.coefficients[kind]
        return np.maximum(t, 1e-6)

    def to_dict(self):
        return {
            kind: {"features": list(FEATURES[kind]), "coefficients": [float(c) for c in coef], "r2": self.r2[kind]}
            for kind, coef in self.coefficients.items()
        }


def fit_regression(samples):
    """Least-squares solve-time model; needs three samples per kind."""
    coefficients, r2 = {}, {}
    for kind in KINDS:
        rows = [s for s in samples if s.kind == kind]
        if len(rows) < 3:
            raise IllegalInputError(f"need at least 3 {kind} timing samples, got {len(rows)}")
        X = _design(kind, [s.n_buses for s in rows], [s.n_loads for s in rows])
        y = np.array([s.observed_time_s for s in rows])
        for j in range(1, X.shape[1] + 1):
            if np.linalg.matrix_rank(X[:, :j]) < j:
                raise IncompatibleInputError(
                    f"{kind} timing samples do not determine feature {FEATURES[kind][j - 1]} (collinear)"
                )
        coef, _, _, _ = scipy.linalg.lstsq(X, y)
        fitted = X @ coef
        ss_tot = float(((y - y.mean()) ** 2).sum())
        ss_res = float(((y - fitted) ** 2).sum())
        coefficients[kind] = coef
        r2[kind] = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
        Msg.info(_COMPONENT, f"{kind} solve-time fit over {len(rows)} samples: R^2 {r2[kind]:.4f}")
    return RegressionModel(coefficients, r2)


def _tree(network):
    if len(network.branches) != len(network.buses) - 1:
        raise IllegalInputError("partitioning needs a radial feeder")
    order = network.bus_index
    parent = dict(nx.bfs_predecessors(network.graph, network.slack.id))
    children = {b.id: [] for b in network.buses}
    for child, up in parent.items():
        children[up].append(child)
    for kids in children.values():
        kids.sort(key=order.get)
    return parent, children


def _dfs(children, root):
    out, stack = [], [root]
    while stack:
        bus = stack.pop()
        out.append(bus)
        stack.extend(reversed(children[bus]))
    return out


def _path_up(bus, parent):
    path = [bus]
    while path[-1] in parent:
        path.append(parent[path[-1]])
    return path


def _close_pairs(network, close_hops):
    """Load pairs at most ``close_hops`` branches apart."""
    pairs = set()
    for a in network.loads:
        near = nx.single_source_shortest_path_length(network.graph, a.bus, cutoff=close_hops)
        pairs.update((a.id, b.id) for b in network.loads if b.bus in near and a.id < b.id)
    return sorted(pairs)


def auto_preassign(network, k, *, close_hops=2):
    """One load group per lateral, splitting the largest lateral until ``k - 1`` remain.

    A lateral is split at its first branching bus, and only when no two
    loads on different sides of the split are electrically close.
    """
    if k < 2:
        raise IllegalInputError("auto preassignment needs k >= 2")
    parent, children = _tree(network)
    slack = network.slack.id
    loads_below = {}
    for bus in reversed(_dfs(children, slack)):
        loads_below[bus] = len(network.loads_at(bus)) + sum(loads_below[c] for c in children[bus])
    order = {bus: i for i, bus in enumerate(_dfs(children, slack))}
    close = set(_close_pairs(network, close_hops))

    def subtree_loads(root):
        return {load.id for bus in _dfs(children, root) for load in network.loads_at(bus)}

    def split(unit):
        bus = unit
        while True:
            loaded = [c for c in children[bus] if loads_below[c]]
            if network.loads_at(bus) or not loaded:
                return None
            if len(loaded) >= 2:
                break
            bus = loaded[0]
        sides = [subtree_loads(c) for c in loaded]
        for i, a in enumerate(sides):
            for b in sides[i + 1:]:
                if any((x, y) in close or (y, x) in close for x in a for y in b):
                    return None
        return loaded

    units = [c for c in children[slack] if loads_below[c]]
    if network.loads_at(slack):
        raise IllegalInputError("loads at the slack bus cannot be partitioned")
    if len(units) > k - 1:
        raise IllegalInputError(
            f"the slack feeds {len(units)} loaded laterals; auto partitioning needs k >= {len(units) + 1}"
        )
    blocked = set()
    while len(units) < k - 1:
        candidates = sorted((u for u in units if u not in blocked), key=lambda u: (-loads_below[u], order[u]))
        for unit in candidates:
            parts = split(unit)
            if parts is None:
                blocked.add(unit)
                continue
            pos = units.index(unit)
            units[pos:pos + 1] = parts
            break
        else:
            raise IllegalInputError(f"cannot form {k - 1} load groups without separating close loads")
    # splits may overshoot; fold the surplus back in DFS order
    units.sort(key=order.get)
    chunks = np.array_split(np.arange(len(units)), k - 1)
    out = {}
    for g, chunk in enumerate(chunks):
        for u in chunk:
            for load_id in subtree_loads(units[u]):
                out[load_id] = g
    return out


def optimize_partition(network, k, preassign=None, model=None, *, max_buses=0, close_hops=2):
    """Balanced partition into ``k - 1`` load groups and one trunk group.

    ``preassign`` maps every load id to a load group index in ``0..k-2``;
    the trunk is group ``k - 1``. With ``k == 1`` the whole feeder is one
    group.
    """
    model = model or RegressionModel.uniform()
    if k < 1:
        raise IllegalInputError("k must be at least 1")
    if k == 1:
        n_loads = len(network.loads)
        kind = "load" if n_loads else "noload"
        t = float(model.predict(kind, len(network.buses), n_loads))
        return Partition.from_groups(network, [[b.id for b in network.buses]], objective=0.0, predicted=(t,))

    parent, children = _tree(network)
    slack = network.slack.id
    if preassign is None:
        preassign = auto_preassign(network, k, close_hops=close_hops)
    n_groups = k - 1
    for load in network.loads:
        if load.id not in preassign:
            raise IllegalInputError(f"load {load.id} has no preassigned partition")
        if not 0 <= int(preassign[load.id]) < n_groups:
            raise IllegalInputError(f"load {load.id}: partition {preassign[load.id]} outside 0..{n_groups - 1}")
    unused = set(range(n_groups)) - {int(preassign[load.id]) for load in network.loads}
    if unused:
        raise IllegalInputError(f"load group(s) {sorted(unused)} have no loads")
    for a, b in _close_pairs(network, close_hops):
        if int(preassign[a]) != int(preassign[b]):
            raise IllegalInputError(f"loads {a} and {b} are electrically close but preassigned to different partitions")

    owner = {}
    tops = []
    n_loads = np.zeros(k, dtype=int)
    for g in range(n_groups):
        buses = sorted({ld.bus for ld in network.loads if int(preassign[ld.id]) == g}, key=network.bus_index.get)
        n_loads[g] = sum(1 for ld in network.loads if int(preassign[ld.id]) == g)
        paths = [list(reversed(_path_up(b, parent))) for b in buses]
        depth = 0
        while all(len(p) > depth + 1 for p in paths) and len({p[depth + 1] for p in paths}) == 1:
            depth += 1
        top = paths[0][depth]
        if top == slack:
            raise IllegalInputError(f"load group {g} spans the slack bus")
        core = {bus for p in paths for bus in p[depth:]}
        for bus in core:
            if bus in owner:
                raise IllegalInputError(f"load groups {owner[bus]} and {g} overlap at bus {bus}")
            owner[bus] = g
        tops.append(top)

    trunk = k - 1
    default = {}
    for bus in _dfs(children, slack):
        if bus in owner:
            default[bus] = owner[bus]
        else:
            default[bus] = default[parent[bus]] if bus in parent else trunk

    degree = dict(network.graph.degree())
    chains = []
    for top in tops:
        chain = []
        bus = parent[top]
        while bus != slack and degree[bus] < 3 and bus not in owner:
            chain.append(bus)
            bus = parent[bus]
        chains.append(chain)

    base = np.zeros(k, dtype=int)
    for bus, g in default.items():
        base[g] += 1
    shape = tuple(len(c) + 1 for c in chains)
    if int(np.prod(shape)) > _MAX_CANDIDATES:
        raise IllegalInputError(f"{int(np.prod(shape))} candidate partitions exceed the search limit")
    sizes = np.broadcast_to(base, shape + (k,)).astype(float)
    for g, chain in enumerate(chains):
        delta = np.zeros((len(chain) + 1, k))
        for e in range(1, len(chain) + 1):
            delta[e] = delta[e - 1]
            delta[e, g] += 1
            delta[e, default[chain[e - 1]]] -= 1
        view = [1] * len(chains) + [k]
        view[g] = len(chain) + 1
        sizes = sizes + delta.reshape(view)

    times = np.empty_like(sizes)
    for g in range(n_groups):
        times[..., g] = model.predict("load", sizes[..., g], n_loads[g])
    times[..., trunk] = model.predict("noload", sizes[..., trunk])
    objective = k * (times**2).sum(axis=-1) - times.sum(axis=-1) ** 2
    if max_buses > 0:
        objective = np.where((sizes <= max_buses).all(axis=-1), objective, np.inf)
    if not np.isfinite(objective).any():
        raise IllegalInputError(f"no partition keeps every group within {max_buses} buses")
    best = np.unravel_index(int(np.argmin(objective)), shape)

    assign = dict(default)
    for g, (chain, e) in enumerate(zip(chains, best)):
        for bus in chain[:e]:
            assign[bus] = g
    groups = [[b.id for b in network.buses if assign[b.id] == g] for g in range(k)]
    value = max(0.0, float(objective[best]))
    predicted = tuple(float(t) for t in times[best])
    Msg.info(
        _COMPONENT,
        f"{k} partitions, sizes {[len(g) for g in groups]}, predicted times "
        f"{', '.join(f'{t:.3g}' for t in predicted)} s",
    )
    return Partition.from_groups(network, groups, objective=value, predicted=predicted)
