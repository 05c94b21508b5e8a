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

from .parameter import ParameterEnum, ParameterList, ParameterRange, ParameterValue
from .frame import Frame, FrameSet
from .recipe import Recipe
from .config import RunConfig, run_parameters

__all__ = [
    "Frame",
    "FrameSet",
    "ParameterEnum",
    "ParameterList",
    "ParameterRange",
    "ParameterValue",
    "Recipe",
    "RunConfig",
    "run_parameters",
]
