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

from desgn.core import IncompatibleInputError, Msg, Phase
from desgn.dfs import emit_report, load_report
from desgn.drs import injection_arrays, parse_network, power_flow, violation_stats
from desgn.ui.parameter import ParameterList, ParameterRange, ParameterValue
from desgn.ui.recipe import Recipe

_COMPONENT = "validate"


def injection_arrays_from_report(network, injections):
    """Rebuild ``(P, Q)`` of shape (n_bus, 3, T) from report injections."""
    lengths = {len(doc["p"]) for doc in injections.values()}
    if len(lengths) > 1:
        raise IncompatibleInputError("report injections differ in length")
    T = lengths.pop() if lengths else max(network.timepoints, 1)
    per_load = {}
    for load_id, doc in injections.items():
        load = network.load(load_id)
        if load.bus != doc["bus"] or load.phase is not Phase.parse(doc["phase"]):
            raise IncompatibleInputError(f"load {load_id}: report connection differs from the network")
        p = np.zeros((3, T))
        q = np.zeros((3, T))
        p[load.phase] = doc["p"]
        q[load.phase] = doc["q"]
        per_load[load_id] = (p, q)
    return injection_arrays(network, per_load, T)


def violation_rows(network, state, v_max, v_min):
    rows = []
    slack = network.slack.id
    for i, bus in enumerate(network.buses):
        if bus.id == slack:
            continue
        for phase in bus.phases:
            for t in range(state.T):
                v = float(state.vm[i, phase, t])
                rows.append(
                    {
                        "bus": bus.id,
                        "phase": phase.name,
                        "t": t,
                        "v_pu": v,
                        "upper_viol_pct": max(0.0, (v - v_max) / v_max) * 100.0,
                        "lower_viol_pct": max(0.0, (v_min - v) / v_min) * 100.0,
                    }
                )
    return rows


def validate_run(report, network, *, v_max=None, v_min=None, tol=1e-8, workers=1):
    """Newton power flow from the report's injections; upper and lower violation stats.

    Limits default to those in the report's configuration. The report's
    ``violations`` section and CSV rows are filled in; timepoints where the
    power flow fails are listed, not raised.
    """
    limits = report.config.get("limits", {})
    v_max = limits.get("v_max", 1.05) if v_max is None else v_max
    v_min = limits.get("v_min", 0.95) if v_min is None else v_min
    inj = injection_arrays_from_report(network, report.injections)
    result = power_flow(network, inj, tol=tol, workers=workers)
    upper, lower = violation_stats(result.state, v_max, v_min, network)
    failed = [int(t) for t in np.flatnonzero(~result.converged)]
    if failed:
        Msg.warning(_COMPONENT, f"power flow failed at timepoint(s) {failed}")
    report.violations = {
        "v_max": v_max,
        "v_min": v_min,
        "upper": upper.to_dict(),
        "lower": lower.to_dict(),
        "unconverged_timepoints": failed,
    }
    report.violation_rows = violation_rows(network, result.state, v_max, v_min)
    Msg.info(
        _COMPONENT,
        f"max upper violation {upper.max_violation:.3e} %, max lower violation {lower.max_violation:.3e} %",
    )
    return upper, lower


class ValidateRecipe(Recipe):
    _name = "validate"
    _synopsis = "Power-flow validation of a run's injections"
    _description = (
        "Runs a Newton power flow per timepoint from the final-stage injections of a report and "
        "writes the upper and lower voltage violation statistics."
    )

    def __init__(self):
        super().__init__()
        ctx = "desgn.validate"
        self.parameters = ParameterList(
            [
                ParameterRange("limits.v_max", "upper voltage limit (p.u.), 0 to use the report's", ctx, 0.0, 0.0, 10.0),
                ParameterRange("limits.v_min", "lower voltage limit (p.u.), 0 to use the report's", ctx, 0.0, 0.0, 10.0),
                ParameterValue("output", "product directory", ctx, "."),
            ]
        )

    def run(self, frameset, settings=None):
        self.apply_settings(settings)
        report = load_report(frameset.find("REPORT").file)
        s_base = report.config.get("network", {}).get("s_base", 0.8)
        network = parse_network(frameset.find("NETWORK").file, s_base=s_base)
        v_max = self.parameters["limits.v_max"].value or None
        v_min = self.parameters["limits.v_min"].value or None
        validate_run(report, network, v_max=v_max, v_min=v_min)
        return emit_report(report, self.parameters["output"].value)
