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


import json
from pathlib import Path

import numpy as np
import pytest

import desgn
from desgn.core import IllegalInputError, IncompatibleInputError
from desgn.dfs import emit_report, load_report
from desgn.drs import parse_network
from desgn.recipes import (
    CentralRecipe,
    DistributedRecipe,
    PartitionRecipe,
    ValidateRecipe,
    run_central,
    run_distributed,
    run_partition,
    validate_run,
)
from desgn.recipes.common import config_frameset
from desgn.ui import Frame, FrameSet, RunConfig

DATA_DIR = Path(desgn.__file__).parent / "data"


def _config(network="micro1", timeline="timeline8.json", **settings):
    doc = {
        "network": str(DATA_DIR / network),
        "catalog": str(DATA_DIR / "catalog.json"),
        "timeline": str(DATA_DIR / timeline),
    }
    doc.update(settings)
    return RunConfig(doc)


@pytest.fixture(scope="module")
def micro1_report():
    return run_central(_config())


@pytest.fixture(scope="module")
def micro2_reports():
    central = run_central(_config("micro2", stages=["milp", "nlp"]))
    distributed = run_distributed(
        _config("micro2", mode="distributed", stages=["milp", "nlp"], partition={"source": "auto", "k": 1})
    )
    return central, distributed


class TestCentral:
    def test_siting_only(self):
        report = run_central(_config(stages=["milp"]))
        assert [s.stage for s in report.stages] == ["milp"]
        assert report.stage("milp").converged
        assert set(report.manifest["inputs"]) == {"network", "catalog", "timeline"}
        assert len(report.injections["L1"]["p"]) == 8
        assert report.violations["unconverged_timepoints"] == []

    def test_stage_ordering(self, micro1_report):
        tac = {s.stage: s.objective for s in micro1_report.stages}
        slack = 1e-3 * max(1.0, abs(tac["milp"]))
        assert tac["milp"] <= tac["comp"] + slack
        assert tac["comp"] <= tac["nlp"] + slack

    def test_scaled_milp_objective(self, micro1_report):
        milp = micro1_report.stage("milp")
        if milp.objective != 0:
            assert abs(milp.scaled_objective) == pytest.approx(1.0)

    def test_self_consistent_voltages(self, micro1_report):
        assert micro1_report.violations["upper"]["max_violation"] <= 1e-4
        assert micro1_report.violations["lower"]["max_violation"] <= 1e-4

    def test_seed_recorded_only(self):
        a = run_central(_config(stages=["milp"], seed=0))
        b = run_central(_config(stages=["milp"], seed=7))
        assert (a.manifest["seed"], b.manifest["seed"]) == (0, 7)
        assert a.stage("milp").costs == b.stage("milp").costs
        assert a.injections == b.injections

    def test_zero_export_price(self):
        report = run_central(_config(stages=["milp"], tariffs={"seg": 0.0}))
        assert report.stage("milp").costs["seg_income"] == 0.0

    def test_mode_check(self):
        with pytest.raises(IllegalInputError):
            run_central(_config(mode="distributed", partition={"k": 1}))

    def test_timeline_mismatch(self):
        with pytest.raises(IncompatibleInputError):
            run_central(_config(timeline="timeline24.json", stages=["milp"]))

    def test_recipe_products(self, make_run_config, tmp_path):
        products = CentralRecipe().run(
            config_frameset(make_run_config(stages=["milp"])), {"dump_lp": str(tmp_path / "lp")}
        )
        assert [f.tag for f in products] == ["REPORT", "COSTS", "TRACE", "VIOLATIONS", "TIMING", "CHECKSUMS"]
        assert (tmp_path / "lp" / "L1.lp").is_file()
        assert json.loads((tmp_path / "out" / "report.json").read_text())["config"]["mode"] == "central"


class TestDistributed:
    def test_single_partition_matches_central(self, micro2_reports):
        central, distributed = micro2_reports
        assert distributed.manifest["partition_k"] == 1
        assert distributed.stage("nlp").converged
        cent, dist = central.stage("nlp").objective, distributed.stage("nlp").objective
        assert dist == pytest.approx(cent, rel=1e-4, abs=1e-6)

    def test_partition_document(self, micro2_reports):
        _, distributed = micro2_reports
        assert distributed.partition["k"] == 1
        assert distributed.partition["tie_lines"] == []
        assert distributed.stage("nlp").counts == {"partitions": 1, "subproblems": 1, "tie_lines": 0}

    def test_trace_and_samples(self, micro2_reports):
        _, distributed = micro2_reports
        trace = distributed.traces["nlp"]
        assert [rec["iter"] for rec in trace] == list(range(1, len(trace) + 1))
        assert distributed.timing["samples"][0]["kind"] == "load"

    def test_reference_metrics(self, micro2_reports, tmp_path):
        central, _ = micro2_reports
        emit_report(central, tmp_path / "central")
        report = run_distributed(
            _config(
                "micro2", mode="distributed", stages=["milp", "nlp"], partition={"k": 1},
                reference=str(tmp_path / "central" / "report.json"),
            )
        )
        assert abs(report.metrics["nlp"]["obj_gap_pct"]) <= 2.0
        assert "t_ratio" in report.timing["metrics"]["nlp"]

    def test_mode_check(self):
        with pytest.raises(IllegalInputError):
            run_distributed(_config())

    def test_recipe_forces_mode(self, make_run_config, tmp_path):
        config = make_run_config(stages=["milp"], partition={"k": 1})
        products = DistributedRecipe().run(config_frameset(config))
        assert "PARTITION" in [f.tag for f in products]
        assert load_report(tmp_path / "out" / "report.json").config["mode"] == "distributed"


class TestPartitionRecipe:
    def test_run_partition(self, data_dir):
        net = parse_network(data_dir / "elvtf5")
        part = run_partition(net, 3, data_dir / "timing_samples.csv")
        assert part.k == 3
        assert part.load_groups == (True, True, False)
        assert len(part.predicted) == 3

    def test_products(self, data_dir, tmp_path):
        frames = FrameSet([Frame(data_dir / "elvtf5", tag="NETWORK")])
        products = PartitionRecipe().run(frames, {"k": 3, "output": str(tmp_path)})
        assert [f.tag for f in products] == ["PARTITION", "CHECKSUMS"]
        assert json.loads((tmp_path / "partition.json").read_text())["k"] == 3


class TestValidate:
    def test_no_injection_no_violation(self, data_dir):
        net = parse_network(data_dir / "micro2")
        report = run_central(_config("micro2", stages=["milp"]))
        for doc in report.injections.values():
            doc["p"] = [0.0] * len(doc["p"])
            doc["q"] = [0.0] * len(doc["q"])
        upper, lower = validate_run(report, net)
        assert upper.max_violation == 0.0 and lower.max_violation == 0.0
        # three phases at each of the three non-slack buses, eight timepoints
        assert len(report.violation_rows) == 3 * 3 * 8
        assert np.allclose([row["v_pu"] for row in report.violation_rows], 1.0)

    def test_connection_mismatch(self, data_dir):
        report = run_central(_config(stages=["milp"]))
        report.injections["L1"]["phase"] = "B"
        with pytest.raises(IncompatibleInputError):
            validate_run(report, parse_network(data_dir / "micro1"))

    def test_recipe(self, make_run_config, tmp_path, data_dir):
        CentralRecipe().run(config_frameset(make_run_config(stages=["milp"])))
        frames = FrameSet([
            Frame(tmp_path / "out" / "report.json", tag="REPORT"),
            Frame(data_dir / "micro1", tag="NETWORK"),
        ])
        ValidateRecipe().run(frames, {"limits.v_min": 0.9, "output": str(tmp_path / "checked")})
        report = load_report(tmp_path / "checked" / "report.json")
        assert report.violations["v_min"] == 0.9
        assert report.violations["v_max"] == 1.05
