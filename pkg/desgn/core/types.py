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

from enum import Enum, IntEnum
import math

from .error import IllegalInputError


class Type(Enum):
    """Value types understood by parameters."""

    BOOL = "bool"
    INT = "int"
    DOUBLE = "double"
    STRING = "string"

    @classmethod
    def of(cls, value):
        # bool before int: bool is an int subclass
        if isinstance(value, bool):
            return cls.BOOL
        if isinstance(value, int):
            return cls.INT
        if isinstance(value, float):
            return cls.DOUBLE
        if isinstance(value, str):
            return cls.STRING
        raise IllegalInputError(f"unsupported parameter value type {type(value).__name__}")


class Phase(IntEnum):
    """Conductor phase. The integer value is the position in phase-indexed arrays."""

    A = 0
    B = 1
    C = 2

    @classmethod
    def parse(cls, label):
        try:
            return cls[str(label).strip().upper()]
        except KeyError:
            raise IllegalInputError(f"unknown phase {label!r}") from None

    @classmethod
    def parse_set(cls, labels):
        """Parse ``"ABC"``-style phase strings into a sorted tuple."""
        text = str(labels).strip().upper()
        if not text:
            raise IllegalInputError("empty phase set")
        phases = {cls.parse(ch) for ch in text}
        if len(phases) != len(text):
            raise IllegalInputError(f"repeated phase in {labels!r}")
        return tuple(sorted(phases))

    @property
    def reference_angle(self):
        """Slack angle of this phase in radians."""
        return SLACK_ANGLES[self.value]


SLACK_ANGLES = (0.0, -2.0 * math.pi / 3.0, 2.0 * math.pi / 3.0)
ALL_PHASES = (Phase.A, Phase.B, Phase.C)
