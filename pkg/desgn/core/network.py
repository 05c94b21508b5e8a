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

"""Immutable feeder containers.

A :class:`Network` holds buses, three-phase branches with per-unit
admittances and the single-phase load connections. Construction validates
the graph; nothing is mutated afterwards, so a network can be shared
between worker threads.
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import networkx as nx
import numpy as np

from .error import DataNotFoundError, IllegalInputError, IncompatibleInputError
from .types import ALL_PHASES, Phase


class BusKind(Enum):
    SLACK = "slack"
    LOAD = "load"
    JUNCTION = "junction"

    @classmethod
    def parse(cls, text):
        try:
            return cls(str(text).strip().lower())
        except ValueError:
            raise IllegalInputError(f"unknown bus kind {text!r}") from None


@dataclass(frozen=True)
class Bus:
    id: str
    kind: BusKind
    phases: tuple
    v_base: float

    def __post_init__(self):
        if not self.phases:
            raise IllegalInputError(f"bus {self.id} has no phases")
        if self.v_base <= 0:
            raise IllegalInputError(f"bus {self.id} has non-positive v_base")


@dataclass(frozen=True, eq=False)
class Branch:
    """Series-only three-phase line.

    ``g`` and ``b`` are 3x3 per-unit matrices; rows and columns of absent
    phases are zero. The source impedance (ohm/km) and length are kept so the
    per-unit conversion can be reversed.
    """

    from_bus: str
    to_bus: str
    g: np.ndarray
    b: np.ndarray
    r_ohm_per_km: np.ndarray = None
    x_ohm_per_km: np.ndarray = None
    length_km: float = 0.0

    @property
    def y(self):
        return self.g + 1j * self.b

    @property
    def phases(self):
        y = self.y
        return tuple(p for p in ALL_PHASES if y[p, p] != 0)

    def same_as(self, other):
        return (
            self.from_bus == other.from_bus
            and self.to_bus == other.to_bus
            and np.array_equal(self.g, other.g)
            and np.array_equal(self.b, other.b)
        )


@dataclass(frozen=True, eq=False)
class LoadPoint:
    """A single-phase building connection with its kWh profiles."""

    id: str
    bus: str
    phase: Phase
    elec: np.ndarray = field(default_factory=lambda: np.zeros(0))
    heat: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        elec = np.asarray(self.elec, dtype=float)
        heat = np.asarray(self.heat, dtype=float)
        if elec.shape != heat.shape:
            raise IncompatibleInputError(
                f"load {self.id}: profile length mismatch ({elec.size} elec, {heat.size} heat)"
            )
        if np.any(elec < 0) or np.any(heat < 0):
            raise IllegalInputError(f"load {self.id}: negative profile entry")
        elec.setflags(write=False)
        heat.setflags(write=False)
        object.__setattr__(self, "elec", elec)
        object.__setattr__(self, "heat", heat)

    def same_as(self, other):
        return (
            self.id == other.id
            and self.bus == other.bus
            and self.phase == other.phase
            and np.array_equal(self.elec, other.elec)
            and np.array_equal(self.heat, other.heat)
        )


class Network:
    """Validated feeder: buses, branches, loads and the MVA base."""

    def __init__(self, buses, branches, loads, s_base, *, name="", version="", radial=True):
        self.buses = tuple(buses)
        self.branches = tuple(branches)
        self.loads = tuple(loads)
        self.s_base = float(s_base)
        self.name = name
        self.version = version
        self.radial = radial
        self._validate()

    def _validate(self):
        if self.s_base <= 0:
            raise IllegalInputError("s_base must be positive")
        seen = set()
        for bus in self.buses:
            if bus.id in seen:
                raise IllegalInputError(f"duplicate bus id {bus.id}")
            seen.add(bus.id)
        slacks = [bus for bus in self.buses if bus.kind is BusKind.SLACK]
        if len(slacks) != 1:
            raise IllegalInputError(f"expected exactly one slack bus, found {len(slacks)}")
        for branch in self.branches:
            for end in (branch.from_bus, branch.to_bus):
                if end not in seen:
                    raise DataNotFoundError(f"branch {branch.from_bus}-{branch.to_bus}: unknown bus {end}")
            if branch.from_bus == branch.to_bus:
                raise IllegalInputError(f"branch {branch.from_bus}-{branch.to_bus} is a self loop")
            present = set(self.bus(branch.from_bus).phases) & set(self.bus(branch.to_bus).phases)
            if not set(branch.phases) <= present:
                raise IncompatibleInputError(
                    f"branch {branch.from_bus}-{branch.to_bus} carries a phase missing at one end"
                )
        if self.buses and not nx.is_connected(self.graph):
            raise IllegalInputError("network graph is disconnected")
        if self.radial and len(self.branches) != len(self.buses) - 1:
            raise IllegalInputError(
                f"radial network needs {len(self.buses) - 1} branches, found {len(self.branches)}"
            )
        lengths = {load.elec.size for load in self.loads}
        if len(lengths) > 1:
            raise IncompatibleInputError("profile length mismatch between loads")
        ids = set()
        for load in self.loads:
            if load.id in ids:
                raise IllegalInputError(f"duplicate load id {load.id}")
            ids.add(load.id)
            if load.bus not in seen:
                raise DataNotFoundError(f"load {load.id}: unknown bus {load.bus}")
            if load.phase not in self.bus(load.bus).phases:
                raise IncompatibleInputError(f"load {load.id}: phase {load.phase.name} absent at bus {load.bus}")

    @cached_property
    def bus_index(self):
        return {bus.id: i for i, bus in enumerate(self.buses)}

    def bus(self, bus_id):
        try:
            return self.buses[self.bus_index[bus_id]]
        except KeyError:
            raise DataNotFoundError(f"unknown bus {bus_id}") from None

    def load(self, load_id):
        for load in self.loads:
            if load.id == load_id:
                return load
        raise DataNotFoundError(f"load {load_id} not found")

    @cached_property
    def slack(self):
        return next(bus for bus in self.buses if bus.kind is BusKind.SLACK)

    @cached_property
    def graph(self):
        graph = nx.Graph()
        graph.add_nodes_from(bus.id for bus in self.buses)
        for k, branch in enumerate(self.branches):
            graph.add_edge(branch.from_bus, branch.to_bus, index=k)
        return graph

    @property
    def timepoints(self):
        return self.loads[0].elec.size if self.loads else 0

    @cached_property
    def nodes(self):
        """(bus index, phase) pairs, phase-major as in the state vectors."""
        return tuple(
            (i, phase)
            for phase in ALL_PHASES
            for i, bus in enumerate(self.buses)
            if phase in bus.phases
        )

    @cached_property
    def node_index(self):
        return {node: k for k, node in enumerate(self.nodes)}

    def loads_at(self, bus_id):
        return [load for load in self.loads if load.bus == bus_id]

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return (
            self.buses == other.buses
            and self.s_base == other.s_base
            and len(self.branches) == len(other.branches)
            and all(a.same_as(b) for a, b in zip(self.branches, other.branches))
            and len(self.loads) == len(other.loads)
            and all(a.same_as(b) for a, b in zip(self.loads, other.loads))
        )

    __hash__ = None

    def __repr__(self):
        return (
            f"Network(name={self.name!r}, buses={len(self.buses)}, "
            f"branches={len(self.branches)}, loads={len(self.loads)})"
        )
