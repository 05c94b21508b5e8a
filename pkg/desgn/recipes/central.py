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

from desgn.core import Error, IllegalInputError, Msg
from desgn.dfs import StageResult, emit_report
from desgn.drs import solve_central_stage
from desgn.ui.config import run_parameters
from desgn.ui.parameter import ParameterValue
from desgn.ui.recipe import Recipe

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

_COMPONENT = "central"


def outcome_result(outcome, counts):
    return StageResult.from_breakdown(
        outcome.stage,
        outcome.costs,
        scaled_objective=outcome.objective,
        converged=outcome.converged,
        iterations=outcome.iterations,
        counts=counts,
        notes=outcome.notes,
        solve_time=outcome.solve_time,
    )


def run_central(cfg, *, dump_dir=None):
    """Siting MILP, then the NLP and complementarity stages over the whole feeder.

    Each stage warm-starts the next. A failing stage raises with the report
    built so far attached as ``report``.
    """
    if cfg.mode != "central":
        raise IllegalInputError(f"run_central needs mode=central, got {cfg.mode}")
    inputs = load_inputs(cfg)
    report = new_report(cfg, inputs)
    v_min, v_max = cfg.v_limits
    try:
        siting, scale = run_milp_stage(cfg, inputs, report, dump_dir=dump_dir)
        fixed = siting.solutions
        decisions = fixed
        if "nlp" in cfg.stages:
            state = warm_state(inputs, fixed, workers=cfg["milp.workers"])
            counts = {"loads": len(inputs.problems), "buses": len(inputs.network.buses)}
            for stage in cfg.stages[1:]:
                outcome = solve_central_stage(
                    inputs.network, inputs.problems, fixed, state, decisions,
                    stage=stage, sched=cfg.comp_schedule(), v_min=v_min, v_max=v_max, scale=scale,
                    tol=cfg["nlp.tol"], **cfg.nlp_kwargs(),
                )
                report.add_stage(outcome_result(outcome, counts))
                state, decisions = outcome.state, outcome.decisions
    except Error as err:
        stage_failure(err, report)
        raise
    report.injections = injection_document(inputs.network, load_injections(inputs, decisions))
    validate_run(report, inputs.network, v_max=v_max, v_min=v_min)
    Msg.info(_COMPONENT, f"final TAC {report.final_stage.objective:.4f}")
    return report


class CentralRecipe(Recipe):
    _name = "central"
    _synopsis = "Central staged design of a feeder"
    _description = (
        "Solves the siting MILP per load, then the NLP with the AC power flow and binaries fixed, "
        "then the complementarity stage, over the whole feeder at once."
    )

    def __init__(self):
        super().__init__()
        self.parameters = run_parameters()
        self.parameters.append(ParameterValue("dump_lp", "directory receiving each load's LP", "desgn.run", ""))

    def run(self, frameset, settings=None):
        settings = dict(settings or {})
        dump_lp = settings.pop("dump_lp", "") or None
        settings["mode"] = "central"
        cfg = config_from_frames(frameset, settings)
        out = output_dir(cfg)
        try:
            report = run_central(cfg, dump_dir=dump_lp)
        except Error as err:
            if getattr(err, "report", None) is not None:
                emit_report(err.report, out)
            raise
        return emit_report(report, out)
