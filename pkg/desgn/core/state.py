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

from dataclasses import dataclass

import numpy as np

from .error import IllegalInputError, IncompatibleInputError
from .types import SLACK_ANGLES


class SystemState:
    """Voltage magnitude and angle per (bus, phase, timepoint).

    Arrays have shape ``(n_bus, 3, T)``; entries of absent phases are 0.
    """

    def __init__(self, vm, va):
        vm = np.array(vm, dtype=float)
        va = np.array(va, dtype=float)
        if vm.shape != va.shape or vm.ndim != 3 or vm.shape[1] != 3:
            raise IncompatibleInputError(f"state arrays must share shape (n_bus, 3, T), got {vm.shape}, {va.shape}")
        self.vm = vm
        self.va = va

    @classmethod
    def flat(cls, network, T):
        """1.0 p.u. everywhere with the slack phase angles."""
        vm = np.zeros((len(network.buses), 3, T))
        va = np.zeros_like(vm)
        for i, bus in enumerate(network.buses):
            for phase in bus.phases:
                vm[i, phase, :] = 1.0
                va[i, phase, :] = SLACK_ANGLES[phase]
        return cls(vm, va)

    @property
    def T(self):
        return self.vm.shape[2]

    def node_values(self, network, t):
        """Complex node voltages at timepoint ``t`` in ``network.nodes`` order."""
        idx = np.array([i for i, _ in network.nodes], dtype=int)
        ph = np.array([p for _, p in network.nodes], dtype=int)
        return self.vm[idx, ph, t] * np.exp(1j * self.va[idx, ph, t])

    def set_node_values(self, network, t, v):
        idx = np.array([i for i, _ in network.nodes], dtype=int)
        ph = np.array([p for _, p in network.nodes], dtype=int)
        self.vm[idx, ph, t] = np.abs(v)
        self.va[idx, ph, t] = np.angle(v)

    def check(self, network):
        present = np.zeros(self.vm.shape[:2], dtype=bool)
        for i, bus in enumerate(network.buses):
            present[i, list(bus.phases)] = True
        if np.any(self.vm[present] <= 0):
            raise IllegalInputError("voltage magnitudes must be positive")

    def copy(self):
        return SystemState(self.vm.copy(), self.va.copy())


@dataclass(frozen=True)
class ViolationStats:
    """Voltage limit violation summary in percent."""

    avg_violation: float = 0.0
    max_violation: float = 0.0
    pct_constraints_violated: float = 0.0

    def to_dict(self):
        return {
            "avg_violation": self.avg_violation,
            "max_violation": self.max_violation,
            "pct_constraints_violated": self.pct_constraints_violated,
        }
