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

from pathlib import Path

from desgn.core import Msg
from desgn.dfs import sign_products, write_partition
from desgn.drs import auto_preassign, optimize_partition, parse_network
from desgn.ui.frame import FrameSet
from desgn.ui.parameter import ParameterList, ParameterRange, ParameterValue
from desgn.ui.recipe import Recipe

from .distributed import timing_model

_COMPONENT = "partition"


def run_partition(network, k, timings=None, *, preassign=None, max_buses=0, close_hops=2):
    """Balanced partition of ``network`` into ``k`` groups.

    ``timings`` is a timing table path; without it every candidate is
    predicted alike and the first feasible one is kept.
    """
    if preassign is None and k > 1:
        preassign = auto_preassign(network, k, close_hops=close_hops)
    part = optimize_partition(
        network, k, preassign, timing_model(timings), max_buses=max_buses, close_hops=close_hops
    )
    Msg.info(
        _COMPONENT,
        f"{part.k} group(s), {len(part.tie_lines)} tie line(s), predicted times "
        + ", ".join(f"{t:.3g} s" for t in part.predicted),
    )
    return part


class PartitionRecipe(Recipe):
    _name = "partition"
    _synopsis = "Balanced feeder partitioning"
    _description = (
        "Fits a solve-time regression to observed subproblem timings and searches the feeder "
        "partition that balances the predicted subproblem times."
    )

    def __init__(self):
        super().__init__()
        ctx = "desgn.partition"
        self.parameters = ParameterList(
            [
                ParameterRange("k", "number of groups", ctx, 2, 1, 64),
                ParameterRange("max_buses", "bus cap per group, 0 for none", ctx, 0, 0, 2**31 - 1),
                ParameterRange("close_hops", "branches within which loads stay together", ctx, 2, 0, 1000),
                ParameterRange("s_base", "MVA base used when the feeder has no metadata", ctx, 0.8, 1e-9, 1e9),
                ParameterValue("output", "product directory", ctx, "."),
            ]
        )

    def run(self, frameset, settings=None):
        self.apply_settings(settings)
        p = self.parameters
        network = parse_network(frameset.find("NETWORK").file, s_base=p["s_base"].value)
        timings = frameset.find("TIMINGS", required=False)
        part = run_partition(
            network,
            p["k"].value,
            None if timings is None else timings.file,
            max_buses=p["max_buses"].value,
            close_hops=p["close_hops"].value,
        )
        out = Path(p["output"].value)
        products = FrameSet([write_partition(part, network, out / "partition.json")])
        products.append(sign_products(products, out))
        return products
