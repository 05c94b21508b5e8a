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


import numpy as np
import pytest

from desgn.core import FileIOError, IllegalInputError, IncompatibleInputError
from desgn.drs import (
    RegressionModel,
    TimingSample,
    auto_preassign,
    fit_regression,
    optimize_partition,
    parse_network,
    read_timing_samples,
    write_timing_samples,
)

# solve time proportional to the bus count for both kinds
PER_BUS = RegressionModel({"load": np.array([0.0, 1.0, 0.0]), "noload": np.array([0.0, 1.0])}, {"load": 1.0,
                                                                                                  "noload": 1.0})


def _exact_samples():
    load = [TimingSample(n, m, 8, "load", 0.1 + 0.02 * n + 0.05 * m) for n, m in ((3, 1), (10, 1), (10, 4), (30, 2))]
    noload = [TimingSample(n, 0, 1, "noload", 0.1 + 0.02 * n) for n in (5, 10, 20)]
    return load + noload


@pytest.fixture
def line_feeder(make_network):
    edges = [(str(i), str(i + 1), 0.03) for i in range(1, 8)]
    return make_network(edges, [("L1", "8", "A")])


@pytest.fixture
def star_feeder(make_network):
    edges = [("1", "2", 0.03), ("1", "3", 0.03), ("1", "4", 0.03), ("2", "5", 0.03), ("3", "6", 0.03),
             ("4", "7", 0.03)]
    return make_network(edges, [("L1", "5", "A"), ("L2", "6", "B"), ("L3", "7", "C")])


class TestRegression:
    def test_exact_fit(self):
        model = fit_regression(_exact_samples())
        assert model.coefficients["load"] == pytest.approx([0.1, 0.02, 0.05])
        assert model.coefficients["noload"] == pytest.approx([0.1, 0.02])
        assert model.r2["load"] == pytest.approx(1.0)
        assert float(model.predict("noload", 15)) == pytest.approx(0.4)
        assert model.to_dict()["load"]["features"] == ["intercept", "n_buses", "n_loads"]

    def test_bundled_samples(self, data_dir):
        samples = read_timing_samples(data_dir / "timing_samples.csv")
        assert sum(s.kind == "load" for s in samples) == 8
        assert sum(s.kind == "noload" for s in samples) == 4
        model = fit_regression(samples)
        assert 0.9 < model.r2["load"] <= 1.0
        assert 0.9 < model.r2["noload"] <= 1.0
        assert float(model.predict("load", 20, 3)) > float(model.predict("load", 20, 1))

    def test_too_few_samples(self):
        samples = [s for s in _exact_samples() if s.kind == "load" or s.n_buses == 5]
        with pytest.raises(IllegalInputError):
            fit_regression(samples)

    def test_collinear(self):
        samples = [TimingSample(n, 2 * n, 8, "load", 0.1 * n) for n in (1, 2, 3, 4)]
        samples += [s for s in _exact_samples() if s.kind == "noload"]
        with pytest.raises(IncompatibleInputError):
            fit_regression(samples)

    def test_prediction_floor(self):
        model = RegressionModel({"load": np.array([-1.0, 0.0, 0.0]), "noload": np.array([0.0, 0.0])}, {})
        assert float(model.predict("load", 4, 1)) == pytest.approx(1e-6)
        with pytest.raises(IllegalInputError):
            model.predict("other", 4)

    def test_sample_checks(self):
        with pytest.raises(IllegalInputError):
            TimingSample(3, 1, 8, "mixed", 1.0)
        with pytest.raises(IllegalInputError):
            TimingSample(3, 1, 8, "load", 0.0)

    def test_write_read(self, tmp_path):
        path = tmp_path / "timing.csv"
        write_timing_samples(_exact_samples(), path)
        back = read_timing_samples(path)
        assert [(s.n_buses, s.kind) for s in back] == [(s.n_buses, s.kind) for s in _exact_samples()]
        assert back[0].observed_time_s == pytest.approx(0.21)

    def test_read_errors(self, tmp_path):
        with pytest.raises(FileIOError):
            read_timing_samples(tmp_path / "absent.csv")
        path = tmp_path / "short.csv"
        path.write_text("n_buses,kind\n3,load\n")
        with pytest.raises(IllegalInputError):
            read_timing_samples(path)


class TestOptimizePartition:
    def test_single_group(self, two_load_feeder):
        part = optimize_partition(two_load_feeder, 1)
        assert part.k == 1
        assert part.objective == 0.0
        assert len(part.predicted) == 1

    def test_line_split_in_the_middle(self, line_feeder):
        part = optimize_partition(line_feeder, 2, {"L1": 0}, PER_BUS)
        assert part.groups == (("5", "6", "7", "8"), ("1", "2", "3", "4"))
        assert part.objective == pytest.approx(0.0)
        assert part.predicted == pytest.approx((4.0, 4.0))
        assert part.load_groups == (True, False)

    def test_size_cap(self, line_feeder):
        with pytest.raises(IllegalInputError):
            optimize_partition(line_feeder, 2, {"L1": 0}, PER_BUS, max_buses=3)

    def test_uniform_model_keeps_core(self, line_feeder):
        part = optimize_partition(line_feeder, 2, {"L1": 0})
        assert part.groups[0] == ("8",)

    def test_elvtf5(self, data_dir):
        net = parse_network(data_dir / "elvtf5")
        preassign = {"L1": 0, "L2": 0, "L3": 1, "L4": 1, "L5": 1}
        part = optimize_partition(net, 3, preassign, PER_BUS)
        assert part.load_groups == (True, True, False)
        assert "1" in part.groups[2]
        for load in net.loads:
            assert part.group_of(load.bus) == preassign[load.id]
        assert sum(len(g) for g in part.groups) == 45

    @pytest.mark.parametrize(
        "preassign",
        [{"L1": 0, "L2": 1}, {"L1": 0, "L2": 0, "L3": 3}, {"L1": 0, "L2": 0, "L3": 0}],
        ids=["missing", "out-of-range", "empty-group"],
    )
    def test_bad_preassign(self, star_feeder, preassign):
        with pytest.raises(IllegalInputError):
            optimize_partition(star_feeder, 3, preassign)

    def test_close_loads_stay_together(self, star_feeder):
        with pytest.raises(IllegalInputError):
            optimize_partition(star_feeder, 3, {"L1": 0, "L2": 1, "L3": 1}, close_hops=4)

    def test_k_zero(self, two_load_feeder):
        with pytest.raises(IllegalInputError):
            optimize_partition(two_load_feeder, 0)


class TestAutoPreassign:
    def test_one_group_per_lateral(self, star_feeder):
        assert auto_preassign(star_feeder, 4) == {"L1": 0, "L2": 1, "L3": 2}

    def test_laterals_folded(self, star_feeder):
        with pytest.raises(IllegalInputError):
            auto_preassign(star_feeder, 3)

    def test_split_at_branching_bus(self, data_dir):
        net = parse_network(data_dir / "elvtf5")
        groups = auto_preassign(net, 3)
        assert groups["L1"] == groups["L2"]
        assert groups["L3"] == groups["L4"] == groups["L5"]
        assert groups["L1"] != groups["L3"]

    def test_small_k(self, two_load_feeder):
        with pytest.raises(IllegalInputError):
            auto_preassign(two_load_feeder, 1)
