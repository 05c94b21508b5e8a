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

import pytest

from desgn import core
from desgn.ui import RunConfig, run_parameters
from desgn.ui.config import flatten


class TestFlatten:
    def test_nested(self):
        assert flatten({"admm": {"tau": 1.05, "kappa": 0.9}, "seed": 3}) == {"admm.tau": 1.05, "admm.kappa": 0.9,
                                                                           "seed": 3}

    def test_structured_keys_kept(self):
        out = flatten({"partition": {"preassign": {"L1": 0}}, "tariffs": {"seg": 0.05}})
        assert out == {"partition.preassign": {"L1": 0}, "tariffs.seg": 0.05}

    def test_network_object(self):
        assert flatten({"network": {"path": "feeder", "s_base": 1.0}}) == {"network": "feeder", "network.s_base": 1.0}


class TestRunConfig:
    def test_defaults(self):
        cfg = RunConfig()
        assert cfg.mode == "central"
        assert cfg.stages == ("milp", "nlp", "comp")
        assert cfg.v_limits == (0.95, 1.05)
        assert cfg["milp.lp_method"] == "highs"
        assert cfg.comp_schedule().eps0 == 1e-2
        assert cfg.admm_params().tau == 1.02
        assert cfg.path("network") is None

    def test_nested_settings(self):
        cfg = RunConfig({"admm": {"tau": 1.05, "max_iters": 10}, "limits": {"v_max": 1.1}})
        assert cfg["admm.tau"] == 1.05
        assert cfg.admm_params().max_iters == 10
        assert cfg.v_limits == (0.95, 1.1)

    def test_unknown_key(self):
        with pytest.raises(core.IllegalInputError, match="admm.rho"):
            RunConfig({"admm": {"rho": 1.0}})

    def test_type_mismatch(self):
        with pytest.raises(core.TypeMismatchError):
            RunConfig({"seed": "zero"})

    @pytest.mark.parametrize(
        "settings",
        [
            {"stages": ["milp", "comp"]},
            {"stages": []},
            {"stages": "milp"},
            {"limits": {"v_min": 1.05}},
            {"admm": {"tau": 1.0}},
            {"admm": {"beta_mode": "sometimes"}},
            {"comp": {"eps0": 1e-7}},
            {"milp": {"lp_method": "interior"}},
            {"mode": "distributed", "partition": {"source": "file"}},
            {"partition": {"preassign": {"L1": True}}},
            {"partition": {"preassign": [0, 1]}},
            {"tariffs": {"seg": -0.1}},
        ],
    )
    def test_invalid(self, settings):
        with pytest.raises(core.IllegalInputError):
            RunConfig(settings)

    def test_stage_prefix(self):
        assert RunConfig({"stages": ["milp", "nlp"]}).stages == ("milp", "nlp")

    def test_structured_values(self):
        cfg = RunConfig({"partition": {"preassign": {"L1": 0, "L2": 1}}, "tariffs": {"seg": 0}})
        assert cfg.preassign == {"L1": 0, "L2": 1}
        assert cfg.seg == 0.0

    def test_paths_relative_to_document(self, tmp_path):
        path = tmp_path / "runs" / "run.json"
        path.parent.mkdir()
        path.write_text(json.dumps({"network": {"path": "../feeder", "s_base": 1.0}, "catalog": "cat.json"}))
        cfg = RunConfig.from_json(path)
        assert cfg.path("network") == (tmp_path / "feeder").resolve()
        assert cfg.path("catalog") == (tmp_path / "runs" / "cat.json").resolve()
        assert cfg["network.s_base"] == 1.0
        with pytest.raises(core.IllegalInputError):
            cfg.require_path("timeline")

    def test_bundled_runs(self, data_dir):
        cfg = RunConfig.from_json(data_dir / "runs" / "elvtf5_distributed.json")
        assert cfg.mode == "distributed"
        assert cfg.partition_source == "file"
        assert cfg.path("partition.path") == (data_dir / "elvtf5_partition.json").resolve()
        assert cfg.require_path("network").is_dir()
        for path in sorted((data_dir / "runs").glob("*.json")):
            RunConfig.from_json(path)

    def test_read_errors(self, tmp_path):
        with pytest.raises(core.FileIOError):
            RunConfig.from_json(tmp_path / "absent.json")
        path = tmp_path / "bad.json"
        path.write_text("{mode: central")
        with pytest.raises(core.IllegalInputError):
            RunConfig.from_json(path)
        path.write_text("[1, 2]")
        with pytest.raises(core.IllegalInputError):
            RunConfig.from_json(path)

    def test_to_dict(self):
        doc = RunConfig({"output": "/tmp/out"}).to_dict()
        assert "output" not in doc
        assert doc["network"] == {"path": "", "s_base": 0.8}
        assert doc["stages"] == ["milp", "nlp", "comp"]
        assert list(doc) == sorted(doc)

    def test_digest(self):
        a = RunConfig({"output": "/tmp/a"})
        b = RunConfig({"output": "/tmp/b"})
        assert a.digest() == b.digest()
        assert RunConfig({"seed": 1}).digest() != a.digest()

    def test_seed_description(self):
        seed = next(p for p in run_parameters() if p.name == "seed")
        assert "reproducibility only" in seed.description

    def test_parameter_names_unique(self):
        names = [p.name for p in run_parameters()]
        assert len(names) == len(set(names))
