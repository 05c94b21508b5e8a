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

from desgn.core import DataNotFoundError, Error, IllegalInputError, Msg
from desgn.dfs import emit_report, load_partition, load_report, partition_document
from desgn.drs import (
    RegressionModel,
    auto_preassign,
    decompose,
    fit_regression,
    metrics,
    optimize_partition,
    read_timing_samples,
    run_admm_stage,
)
from desgn.ui.config import run_parameters
from desgn.ui.parameter import ParameterValue
from desgn.ui.recipe import Recipe

from .central import outcome_result
from .common import (
    config_from_frames,
    injection_document,
    load_injections,
    load_inputs,
    new_report,
    output_dir,
    run_milp_stage,
    stage_failure,
    warm_state,
)
from .validate import validate_run

_COMPONENT = "distributed"


def timing_model(path):
    """Solve-time regression from a timing table, uniform without one."""
    if path is None:
        Msg.info(_COMPONENT, "no timing samples given; every partition is predicted alike")
        return RegressionModel.uniform()
    return fit_regression(read_timing_samples(path))


def resolve_partition(cfg, network):
    """Partition from ``partition.json`` or from the balanced-partition search."""
    if cfg.partition_source == "file":
        return load_partition(cfg.require_path("partition.path"), network)
    k = cfg["partition.k"]
    close_hops = cfg["partition.close_hops"]
    preassign = cfg.preassign or (auto_preassign(network, k, close_hops=close_hops) if k > 1 else None)
    return optimize_partition(
        network, k, preassign, timing_model(cfg.path("partition.timings")),
        max_buses=cfg["partition.max_buses"], close_hops=close_hops,
    )


def reference_metrics(report, path):
    """Objective gap (report.json) and time ratio (timing.json) against a central report."""
    reference = load_report(path)
    gaps, ratios = {}, {}
    for result in report.stages:
        if result.stage == "milp":
            continue
        try:
            cent = reference.stage(result.stage)
        except DataNotFoundError:
            Msg.warning(_COMPONENT, f"reference report has no {result.stage} stage")
            continue
        gap, ratio = metrics(result, cent)
        gaps[result.stage] = {"obj_gap_pct": gap}
        ratios[result.stage] = {"t_ratio": ratio}
        Msg.info(_COMPONENT, f"{result.stage}: objective gap {gap:.3f} %, time ratio {ratio:.3f}")
    return gaps, ratios


def run_distributed(cfg, *, dump_dir=None):
    """Central siting MILP, then ADMM over the partition for the NLP and complementarity stages.

    Non-convergence is recorded in the stage result, not raised. Given a
    ``reference`` report, the objective gap and time ratio per stage are
    added.
    """
    if cfg.mode != "distributed":
        raise IllegalInputError(f"run_distributed needs mode=distributed, got {cfg.mode}")
    inputs = load_inputs(cfg)
    part = resolve_partition(cfg, inputs.network)
    report = new_report(cfg, inputs, partition_k=part.k)
    report.partition = partition_document(part, inputs.network)
    report.timing["samples"] = []
    v_min, v_max = cfg.v_limits
    params = cfg.admm_params()
    try:
        siting, scale = run_milp_stage(cfg, inputs, report, dump_dir=dump_dir)
        fixed = siting.solutions
        decisions = fixed
        if "nlp" in cfg.stages:
            state = warm_state(inputs, fixed, workers=params.workers)
            specs = decompose(inputs.network, part, inputs.timeline, inputs.problems, scale=scale)
            counts = {
                "partitions": part.k,
                "subproblems": len(specs),
                "tie_lines": len(part.tie_lines),
            }
            for stage in cfg.stages[1:]:
                outcome = run_admm_stage(
                    specs, fixed, state, params,
                    stage=stage, sched=cfg.comp_schedule(), v_min=v_min, v_max=v_max, tol=cfg["nlp.tol"],
                    start=decisions, **cfg.nlp_kwargs(),
                )
                report.add_stage(outcome_result(outcome, counts))
                report.traces[stage] = outcome.trace
                report.timing["samples"].extend(outcome.samples)
                state, decisions = outcome.state, outcome.decisions
    except Error as err:
        stage_failure(err, report)
        raise
    report.injections = injection_document(inputs.network, load_injections(inputs, decisions))
    validate_run(report, inputs.network, v_max=v_max, v_min=v_min)
    reference = cfg.path("reference")
    if reference is not None:
        gaps, ratios = reference_metrics(report, reference)
        report.metrics = gaps
        report.timing["metrics"] = ratios
    Msg.info(_COMPONENT, f"final TAC {report.final_stage.objective:.4f}")
    return report


class DistributedRecipe(Recipe):
    _name = "distributed"
    _synopsis = "Distributed staged design of a feeder"
    _description = (
        "Solves the siting MILP per load, partitions the feeder and runs consensus ADMM over the "
        "partitions for the NLP and complementarity stages."
    )

    def __init__(self):
        super().__init__()
        self.parameters = run_parameters()
        self.parameters.append(ParameterValue("dump_lp", "directory receiving each load's LP", "desgn.run", ""))

    def run(self, frameset, settings=None):
        settings = dict(settings or {})
        dump_lp = settings.pop("dump_lp", "") or None
        settings["mode"] = "distributed"
        cfg = config_from_frames(frameset, settings)
        out = output_dir(cfg)
        try:
            report = run_distributed(cfg, dump_dir=dump_lp)
        except Error as err:
            if getattr(err, "report", None) is not None:
                emit_report(err.report, out)
            raise
        return emit_report(report, out)
