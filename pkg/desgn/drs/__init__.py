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

"""Numerical routines: feeder parsing, DES models, LP/MILP, power flow,
nonlinear stage problems, ADMM decomposition and partitioning."""

from .feeder import assemble_branch_admittance, branch_impedance, derive_subfeeder, parse_network, write_network
from .fit import fit_logistic, hp_profile
from .profiles import make_robust_season, synthesize_profiles
from .lp import LinearProgram, RowBuilder, VarIndex, solve_lp
from .des import (
    OPERATIONAL_FAMILIES,
    TECHNOLOGIES,
    CostBreakdown,
    DecisionVars,
    DesProblem,
    build_des_problem,
    compute_injections,
    cost_breakdown,
    crf,
    eval_feasibility,
    load_catalog,
    reactive_injection,
)
from .milp import SitingResult, branch_and_bound, solve_siting_milp
from .acpf import (
    PowerFlowResult,
    admittance_matrix,
    bim_residual,
    branch_flow,
    dS_dV,
    injection_arrays,
    newton_pf,
    power_flow,
    violation_stats,
)
from .nlp import CompSchedule, NlpProblem, complementarity_pass, fix_and_recover, presolve, solve_augmented
from .formulation import StageLayout, StageOutcome, build_stage_problem, solve_central_stage
from .admm import (
    AdmmParams,
    Partition,
    TieLine,
    admm_solve,
    build_consensus,
    contributor_gap,
    decompose,
    lambda_update,
    metrics,
    penalty_update,
    run_admm_stage,
    x_update,
    z_update,
)
from .partition import (
    RegressionModel,
    TimingSample,
    auto_preassign,
    fit_regression,
    optimize_partition,
    read_timing_samples,
    write_timing_samples,
)

__all__ = [
    "OPERATIONAL_FAMILIES",
    "TECHNOLOGIES",
    "AdmmParams",
    "CompSchedule",
    "CostBreakdown",
    "DecisionVars",
    "DesProblem",
    "LinearProgram",
    "NlpProblem",
    "Partition",
    "PowerFlowResult",
    "RegressionModel",
    "RowBuilder",
    "SitingResult",
    "StageLayout",
    "StageOutcome",
    "TieLine",
    "TimingSample",
    "VarIndex",
    "admittance_matrix",
    "admm_solve",
    "assemble_branch_admittance",
    "auto_preassign",
    "bim_residual",
    "branch_and_bound",
    "branch_flow",
    "branch_impedance",
    "build_consensus",
    "build_des_problem",
    "build_stage_problem",
    "complementarity_pass",
    "compute_injections",
    "contributor_gap",
    "cost_breakdown",
    "crf",
    "dS_dV",
    "decompose",
    "derive_subfeeder",
    "eval_feasibility",
    "fit_logistic",
    "fit_regression",
    "fix_and_recover",
    "hp_profile",
    "injection_arrays",
    "lambda_update",
    "load_catalog",
    "make_robust_season",
    "metrics",
    "newton_pf",
    "optimize_partition",
    "parse_network",
    "penalty_update",
    "power_flow",
    "presolve",
    "reactive_injection",
    "read_timing_samples",
    "run_admm_stage",
    "solve_augmented",
    "solve_central_stage",
    "solve_lp",
    "solve_siting_milp",
    "synthesize_profiles",
    "violation_stats",
    "write_network",
    "write_timing_samples",
    "x_update",
    "z_update",
]
