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

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import OptimizeResult

from desgn.core import IllegalInputError, InfeasibleProblemError, Msg

from .des import CostBreakdown, DecisionVars, cost_breakdown
from .lp import solve_lp

_COMPONENT = "milp"


@dataclass
class BnbNode:
    lb: np.ndarray
    ub: np.ndarray
    bound: float
    depth: int


def branch_and_bound(lp, binaries, *, method="highs", node_limit=20000, int_tol=1e-6):
    """Depth-first branch and bound over the 0/1 variables in ``binaries``.

    Branching picks the most fractional variable (lowest index on ties) and
    explores the 0-branch first. ``nodes`` in the result counts branchings.
    When the node limit is hit the incumbent is returned with
    ``status == "node_limit"`` and the relative ``gap`` to the best open bound.
    """
    binaries = np.asarray(binaries, dtype=int)
    if binaries.size and (np.any(lp.lb[binaries] < 0) or np.any(lp.ub[binaries] > 1)):
        raise IllegalInputError("binary variables must have bounds within [0, 1]")

    incumbent, best = None, np.inf
    nodes = 0
    stack = [BnbNode(lp.lb.copy(), lp.ub.copy(), -np.inf, 0)]
    root_status = None
    while stack:
        if nodes >= node_limit:
            break
        node = stack.pop()
        if node.bound >= best - 1e-9 * max(1.0, abs(best)):
            continue
        res = solve_lp(lp.with_bounds(node.lb, node.ub), method)
        if root_status is None:
            root_status = res.status
        if res.status == "unbounded":
            return OptimizeResult(x=None, fun=-np.inf, status="unbounded", success=False, nodes=nodes, gap=np.inf)
        if res.status != "optimal":
            continue
        if res.fun >= best - 1e-9 * max(1.0, abs(best)):
            continue
        values = res.x[binaries]
        frac = np.abs(values - np.round(values))
        if binaries.size == 0 or frac.max() <= int_tol:
            incumbent, best = res.x, res.fun
            Msg.debug(_COMPONENT, f"incumbent {best:.6g} at depth {node.depth}")
            continue
        # argmax returns the lowest index on ties
        j = binaries[int(np.argmax(frac))]
        nodes += 1
        up_lb, up_ub = node.lb.copy(), node.ub.copy()
        up_lb[j] = up_ub[j] = 1.0
        down_lb, down_ub = node.lb.copy(), node.ub.copy()
        down_lb[j] = down_ub[j] = 0.0
        stack.append(BnbNode(up_lb, up_ub, res.fun, node.depth + 1))
        stack.append(BnbNode(down_lb, down_ub, res.fun, node.depth + 1))

    if incumbent is None:
        if stack:
            return OptimizeResult(x=None, fun=np.nan, status="node_limit", success=False, nodes=nodes, gap=np.inf)
        status = "error" if root_status == "error" else "infeasible"
        return OptimizeResult(x=None, fun=np.nan, status=status, success=False, nodes=nodes, gap=np.inf)
    if stack:
        open_bound = min(n.bound for n in stack)
        gap = max(0.0, (best - open_bound) / max(1.0, abs(best)))
        Msg.warning(_COMPONENT, f"node limit {node_limit} reached, gap {gap:.3e}")
        return OptimizeResult(x=incumbent, fun=best, status="node_limit", success=False, nodes=nodes, gap=gap)
    return OptimizeResult(x=incumbent, fun=best, status="optimal", success=True, nodes=nodes, gap=0.0)


@dataclass
class SitingResult:
    """Per-load MILP solutions and their costs."""

    solutions: dict
    per_load: dict
    costs: CostBreakdown
    nodes: dict

    @property
    def tac(self):
        return self.costs.tac


def _solve_one(problem, method, node_limit, dump_dir):
    lp = problem.lp
    if dump_dir is not None:
        lp.write(Path(dump_dir) / f"{problem.load.id}.lp")
    res = branch_and_bound(lp, problem.binaries, method=method, node_limit=node_limit)
    if res.x is None:
        raise InfeasibleProblemError(
            f"siting MILP of load {problem.load.id} ended with status {res.status}", load_id=problem.load.id
        )
    # polish: re-solve the LP with the binaries frozen at their rounded values
    lb, ub = lp.lb.copy(), lp.ub.copy()
    fixed = np.round(res.x[problem.binaries])
    lb[problem.binaries] = ub[problem.binaries] = fixed
    polished = solve_lp(lp.with_bounds(lb, ub), method)
    x = polished.x if polished.status == "optimal" else res.x
    x = x.copy()
    x[problem.binaries] = fixed
    return DecisionVars(problem.index, x), res.nodes


def solve_siting_milp(problems, *, method="highs", node_limit=20000, workers=4, dump_dir=None):
    """Solve each load's MILP independently and aggregate the costs."""
    problems = list(problems)
    if not problems:
        raise IllegalInputError("no loads to site")
    if dump_dir is not None:
        Path(dump_dir).mkdir(parents=True, exist_ok=True)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        outcomes = list(pool.map(lambda p: _solve_one(p, method, node_limit, dump_dir), problems))

    solutions, per_load, nodes = {}, {}, {}
    total = None
    for problem, (v, n) in zip(problems, outcomes):
        costs = cost_breakdown(v, problem)
        solutions[problem.load.id] = v
        per_load[problem.load.id] = costs
        nodes[problem.load.id] = n
        total = costs if total is None else total + costs
        Msg.debug(_COMPONENT, f"load {problem.load.id}: TAC {costs.tac:.4f} after {n} branchings")
    Msg.info(_COMPONENT, f"siting MILP over {len(problems)} load(s): TAC {total.tac:.4f}")
    return SitingResult(solutions, per_load, total, nodes)
