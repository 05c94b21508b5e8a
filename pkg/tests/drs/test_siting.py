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


from dataclasses import replace

import numpy as np
import pytest

from desgn.core import IllegalInputError, LoadPoint, Phase, Timeline
from desgn.drs import LinearProgram, build_des_problem, solve_siting_milp


@pytest.fixture
def timeline(data_dir):
    return Timeline.from_json(data_dir / "timeline8.json")


def _load(load_id, T, elec, heat):
    return LoadPoint(load_id, "3", Phase.A, np.full(T, elec), np.full(T, heat))


class TestSitingMilp:
    def test_zero_price_zero_load(self, catalog, timeline):
        free = replace(catalog, tariffs=replace(catalog.tariffs, day=0.0, night=0.0, seg=0.0))
        problem = build_des_problem(_load("L1", timeline.T, 0.0, 0.0), free, timeline)
        siting = solve_siting_milp([problem], workers=1)
        assert siting.tac == pytest.approx(0.0, abs=1e-9)
        assert np.allclose(siting.solutions["L1"]["pv_panels"], 0.0)

    def test_generous_export_fills_the_roof(self, catalog, timeline):
        generous = replace(catalog, tariffs=replace(catalog.tariffs, seg=0.5))
        problem = build_des_problem(_load("L1", timeline.T, 1.0, 0.0), generous, timeline)
        siting = solve_siting_milp([problem], workers=1)
        roof_limit = generous.pv.roof_max / generous.pv.panel_area
        cap_limit = generous.pv.cap_max / generous.pv.panel_cap
        assert np.allclose(siting.solutions["L1"]["pv_panels"], min(roof_limit, cap_limit))
        assert siting.costs.seg_income > 0

    def test_costs_add_over_loads(self, catalog, timeline):
        problems = [
            build_des_problem(_load("L1", timeline.T, 1.0, 2.0), catalog, timeline),
            build_des_problem(_load("L2", timeline.T, 2.0, 1.0), catalog, timeline),
        ]
        siting = solve_siting_milp(problems, workers=2)
        assert set(siting.solutions) == {"L1", "L2"}
        assert siting.tac == pytest.approx(siting.per_load["L1"].tac + siting.per_load["L2"].tac)
        assert siting.tac > 0

    def test_dump_lp(self, catalog, timeline, tmp_path):
        problem = build_des_problem(_load("L1", timeline.T, 1.0, 2.0), catalog, timeline)
        solve_siting_milp([problem], workers=1, dump_dir=tmp_path / "lp")
        again = LinearProgram.read(tmp_path / "lp" / "L1.lp")
        assert again.n == problem.lp.n
        assert again.m == problem.lp.m

    def test_no_loads(self):
        with pytest.raises(IllegalInputError):
            solve_siting_milp([])
