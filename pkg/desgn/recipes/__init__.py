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

from .central import CentralRecipe, run_central
from .distributed import DistributedRecipe, run_distributed
from .partition import PartitionRecipe, run_partition
from .validate import ValidateRecipe, validate_run

RECIPES = {
    recipe._name: recipe for recipe in (CentralRecipe, DistributedRecipe, ValidateRecipe, PartitionRecipe)
}

__all__ = [
    "RECIPES",
    "CentralRecipe",
    "DistributedRecipe",
    "PartitionRecipe",
    "ValidateRecipe",
    "run_central",
    "run_distributed",
    "run_partition",
    "validate_run",
]
