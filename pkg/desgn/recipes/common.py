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

"""Steps shared by the central and distributed pipelines."""

from dataclasses import dataclass
from pathlib import Path
import time

import numpy as np

from desgn import __version__
from desgn.core import IncompatibleInputError, Msg, Timeline
from desgn.dfs import RunReport, StageResult, file_md5
from desgn.drs import (
    build_des_problem,
    compute_injections,
    injection_arrays,
    load_catalog,
    parse_network,
    power_flow,
    solve_siting_milp,
)
from desgn.ui.config import RunConfig
from desgn.ui.frame import Frame, FrameSet

_COMPONENT = "pipeline"


@dataclass
class Inputs:
    network: object
    catalog: object
    timeline: object
    problems: dict
    digests: dict


def load_inputs(cfg):
    """Parse the feeder, catalog and timeline of ``cfg`` and build every load's DES problem."""
    network_dir = cfg.require_path("network")
    catalog_path = cfg.require_path("catalog")
    timeline_path = cfg.require_path("timeline")
    network = parse_network(network_dir, s_base=cfg["network.s_base"])
    catalog = load_catalog(catalog_path, seg=cfg.seg)
    timeline = Timeline.from_json(timeline_path)
    if network.loads and network.timepoints != timeline.T:
        raise IncompatibleInputError(
            f"profiles carry {network.timepoints} timepoints but the timeline has {timeline.T}"
        )
    problems = {load.id: build_des_problem(load, catalog, timeline) for load in network.loads}
    digests = {
        "network": file_md5(network_dir),
        "catalog": file_md5(catalog_path),
        "timeline": file_md5(timeline_path),
    }
    Msg.info(
        _COMPONENT,
        f"feeder {network.name}: {len(network.buses)} buses, {len(network.loads)} loads, T={timeline.T}",
    )
    return Inputs(network, catalog, timeline, problems, digests)


def new_report(cfg, inputs, *, partition_k=None):
    manifest = {
        "tool": "desgn",
        "version": __version__,
        "config_md5": cfg.digest(),
        "seed": cfg.seed,
        "inputs": inputs.digests,
        "feeder_version": inputs.network.version,
        "partition_k": partition_k,
    }
    return RunReport(manifest, cfg.to_dict())


def objective_scale(tac):
    """Objective scaling that brings the siting TAC to magnitude one."""
    return 1.0 / abs(tac) if tac != 0 else 1.0


def milp_counts(problems):
    out = {"loads": len(problems), "variables": 0, "binaries": 0, "constraints": 0}
    for p in problems.values():
        c = p.counts()
        for key in ("variables", "binaries", "constraints"):
            out[key] += c[key]
    return out


def run_milp_stage(cfg, inputs, report, *, dump_dir=None):
    """Site every load, record the stage and return the siting result with its scale."""
    tick = time.perf_counter()
    siting = solve_siting_milp(
        list(inputs.problems.values()),
        method=cfg["milp.lp_method"],
        node_limit=cfg["milp.node_limit"],
        workers=cfg["milp.workers"],
        dump_dir=dump_dir,
    )
    elapsed = time.perf_counter() - tick
    scale = objective_scale(siting.tac)
    report.add_stage(
        StageResult.from_breakdown(
            "milp",
            siting.costs,
            scaled_objective=siting.tac * scale,
            converged=True,
            iterations=sum(siting.nodes.values()),
            counts=milp_counts(inputs.problems),
            solve_time=elapsed,
        )
    )
    return siting, scale


def load_injections(inputs, decisions):
    """Per-load ``(P, Q)`` arrays of shape (3, T) in p.u."""
    net = inputs.network
    return {
        load_id: compute_injections(v, net.load(load_id), inputs.catalog, inputs.timeline, s_base=net.s_base)
        for load_id, v in decisions.items()
    }


def injection_document(network, per_load):
    """Report form of the injections: only the connected phase is stored."""
    out = {}
    for load_id in sorted(per_load):
        load = network.load(load_id)
        p, q = per_load[load_id]
        out[load_id] = {
            "bus": load.bus,
            "phase": load.phase.name,
            "p": p[load.phase].tolist(),
            "q": q[load.phase].tolist(),
        }
    return out


def warm_state(inputs, decisions, workers=1):
    """Power-flow state for the siting injections, the start of the NLP stage."""
    per_load = load_injections(inputs, decisions)
    result = power_flow(inputs.network, injection_arrays(inputs.network, per_load, inputs.timeline.T), workers=workers)
    if not result.success:
        bad = np.flatnonzero(~result.converged)
        Msg.warning(_COMPONENT, f"warm-start power flow failed at {bad.size} timepoint(s); using the last iterate")
    return result.state


def stage_failure(err, report):
    """Attach the partial report to a stage error before it propagates."""
    err.report = report
    Msg.error(_COMPONENT, f"stage failed: {err}")


def config_from_frames(frameset, settings=None):
    """Run configuration from the CONFIG frame, with ``settings`` applied on top."""
    cfg = RunConfig.from_json(frameset.find("CONFIG").file)
    if settings:
        cfg.update(settings)
    return cfg


def output_dir(cfg, default="."):
    path = cfg.path("output")
    return Path(default) if path is None else path


def config_frameset(config_path):
    return FrameSet([Frame(str(config_path), tag="CONFIG", group=Frame.FrameGroup.INPUT)])
