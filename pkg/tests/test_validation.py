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
import os
from pathlib import Path
import shutil
import subprocess

import pytest

import desgn
from desgn.dfs import verify_checksums

desgn_exe = shutil.which("desgn")
if desgn_exe is None:
    pytest.skip("Skipping validation tests: desgn executable not found", allow_module_level=True)

RUNS_DIR = Path(desgn.__file__).parent / "data" / "runs"
PATH_KEYS = ("network", "catalog", "timeline", "output", "reference")

# The elvtf feeders take minutes; DESGN_VALIDATION=all adds them.
feeders = ["micro2"]
if os.environ.get("DESGN_VALIDATION") == "all":
    feeders += ["elvtf5", "elvtf55"]

TIMEOUT = 600


def _local_config(name, out_dir):
    """Copy of a bundled run configuration with absolute paths and outputs below ``out_dir``."""
    doc = json.loads((RUNS_DIR / f"{name}.json").read_text())
    for key in PATH_KEYS:
        if key in doc:
            doc[key] = str((RUNS_DIR / doc[key]).resolve())
    partition = doc.get("partition", {})
    if "path" in partition:
        partition["path"] = str((RUNS_DIR / partition["path"]).resolve())
    doc["output"] = str(out_dir / name)
    if "reference" in doc:
        doc["reference"] = str(out_dir / name.replace("distributed", "central") / "report.json")
    path = out_dir / f"{name}.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path, Path(doc["output"])


@pytest.fixture(scope="module")
def run_out_path(tmp_path_factory):
    return tmp_path_factory.mktemp("validation")


@pytest.fixture(scope="function")
def desgn_run(request, run_out_path):
    def _desgn_run(name):
        config, out = _local_config(name, run_out_path)
        mode = "distributed" if name.endswith("distributed") else "central"
        process = subprocess.Popen([desgn_exe, mode, "--config", str(config), "--log-level", "warning"])

        def kill_desgn():
            # Kills the desgn process if it's still running.
            if process.poll() is None:
                process.kill()

        request.addfinalizer(kill_desgn)
        return out, process

    return _desgn_run


@pytest.mark.parametrize("feeder", feeders)
def test(feeder, desgn_run):
    central_out, central = desgn_run(f"{feeder}_central")
    return_code = central.wait(timeout=TIMEOUT)
    assert return_code == 0, f"desgn error, run:{feeder}_central exit status:{return_code}"
    # The distributed run reads the central report as its reference.
    distributed_out, distributed = desgn_run(f"{feeder}_distributed")
    return_code = distributed.wait(timeout=TIMEOUT)
    assert return_code in (0, 4), f"desgn error, run:{feeder}_distributed exit status:{return_code}"

    for out in (central_out, distributed_out):
        assert verify_checksums(out / "checksums.md5") == []
    central_names = {p.name for p in central_out.iterdir()}
    distributed_names = {p.name for p in distributed_out.iterdir()} - {"partition.json"}
    assert central_names == distributed_names

    cent = json.loads((central_out / "report.json").read_text())
    dist = json.loads((distributed_out / "report.json").read_text())
    assert [s["stage"] for s in cent["stages"]] == [s["stage"] for s in dist["stages"]]
    # siting MILPs are per load in both modes
    assert dist["stages"][0]["objective"] == pytest.approx(cent["stages"][0]["objective"], rel=1e-9)
    assert set(dist["metrics"]) == {s["stage"] for s in dist["stages"]} - {"milp"}
