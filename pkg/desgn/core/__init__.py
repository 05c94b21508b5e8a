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

from .error import (
    ContinueError,
    DataNotFoundError,
    Error,
    FileIOError,
    IllegalInputError,
    IllegalOutputError,
    IncompatibleInputError,
    InfeasibleProblemError,
    SingularMatrixError,
    TypeMismatchError,
)
from .msg import Msg
from .types import ALL_PHASES, SLACK_ANGLES, Phase, Type
from .network import Branch, Bus, BusKind, LoadPoint, Network
from .catalog import (
    BatterySpec,
    BigM,
    BoilerSpec,
    HeatPumpSpec,
    Logistic,
    PvSpec,
    Tariffs,
    TankSpec,
    TechCatalog,
    Water,
)
from .timeline import Season, Timeline
from .state import SystemState, ViolationStats

__all__ = [
    "ALL_PHASES",
    "SLACK_ANGLES",
    "BatterySpec",
    "BigM",
    "BoilerSpec",
    "Branch",
    "Bus",
    "BusKind",
    "ContinueError",
    "DataNotFoundError",
    "Error",
    "FileIOError",
    "HeatPumpSpec",
    "IllegalInputError",
    "IllegalOutputError",
    "IncompatibleInputError",
    "InfeasibleProblemError",
    "LoadPoint",
    "Logistic",
    "Msg",
    "Network",
    "Phase",
    "PvSpec",
    "Season",
    "SingularMatrixError",
    "SystemState",
    "Tariffs",
    "TankSpec",
    "TechCatalog",
    "Timeline",
    "Type",
    "TypeMismatchError",
    "ViolationStats",
    "Water",
]
