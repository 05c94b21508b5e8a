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


from itertools import product

import numpy as np
import pytest

from desgn.core import DataNotFoundError, IllegalInputError, IncompatibleInputError
from desgn.drs import LinearProgram, RowBuilder, VarIndex, branch_and_bound, solve_lp


def _random_lp(rng, m=6, n=8):
    """Box-bounded LP with mixed senses around a known feasible point."""
    A = rng.normal(size=(m, n))
    x0 = rng.uniform(0.2, 0.8, size=n)
    senses = rng.choice(["L", "G", "E"], size=m, p=[0.5, 0.3, 0.2])
    rhs = A @ x0
    rhs = np.where(senses == "L", rhs + 0.5, np.where(senses == "G", rhs - 0.5, rhs))
    return LinearProgram(rng.normal(size=n), A, senses, rhs, np.zeros(n), np.ones(n))


class TestSolveLp:
    @pytest.mark.parametrize("method", ["highs", "simplex"])
    def test_simple_max(self, method):
        lp = LinearProgram([-1.0, -1.0], [[1.0, 1.0]], ["L"], [1.0], [0.0, 0.0], [1.0, 1.0])
        res = solve_lp(lp, method)
        assert res.status == "optimal"
        assert -res.fun == pytest.approx(1.0)

    @pytest.mark.parametrize("method", ["highs", "simplex"])
    def test_infeasible(self, method):
        lp = LinearProgram([1.0], [[1.0], [1.0]], ["G", "L"], [2.0, 1.0], [-np.inf], [np.inf])
        assert solve_lp(lp, method).status == "infeasible"

    def test_unbounded(self):
        lp = LinearProgram([-1.0, 0.0], [[1.0, -1.0]], ["L"], [1.0])
        assert solve_lp(lp, "simplex").status == "unbounded"

    def test_engines_agree(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            lp = _random_lp(rng)
            highs = solve_lp(lp, "highs")
            simplex = solve_lp(lp, "simplex")
            assert highs.status == simplex.status == "optimal"
            assert simplex.fun == pytest.approx(highs.fun, abs=1e-7)

    def test_free_variable(self):
        lp = LinearProgram([1.0], [[1.0]], ["G"], [-3.0], [-np.inf], [np.inf])
        assert solve_lp(lp, "simplex").x[0] == pytest.approx(-3.0)

    def test_unknown_method(self):
        lp = LinearProgram([1.0], [[1.0]], ["L"], [1.0])
        with pytest.raises(IllegalInputError):
            solve_lp(lp, "interior")

    def test_dimension_check(self):
        with pytest.raises(IncompatibleInputError):
            LinearProgram([1.0, 2.0], [[1.0, 1.0]], ["L", "L"], [1.0])
        with pytest.raises(IncompatibleInputError):
            LinearProgram([1.0], [[1.0]], ["X"], [1.0])

    def test_write_and_read(self, tmp_path):
        lp = _random_lp(np.random.default_rng(5), m=3, n=4)
        lp.write(tmp_path / "model.lp")
        again = LinearProgram.read(tmp_path / "model.lp")
        assert np.array_equal(again.c, lp.c)
        assert np.array_equal(again.A.toarray(), lp.A.toarray())
        assert list(again.senses) == list(lp.senses)
        assert np.array_equal(again.ub, lp.ub)


class TestBuilders:
    def test_var_index(self):
        ix = VarIndex()
        a = ix.add("a", (2, 3), lb=-1.0)
        b = ix.add("b", (4,), binary=True)
        assert ix.size == 10
        assert a[1, 0] == 3
        assert list(b) == [6, 7, 8, 9]
        assert list(ix.lb[:6]) == [-1.0] * 6
        assert list(ix.ub[6:]) == [1.0] * 4
        assert ix.binary.sum() == 4
        assert ix.names() == ("a", "b")
        with pytest.raises(DataNotFoundError):
            ix["c"]

    def test_row_builder(self):
        ix = VarIndex()
        x = ix.add("x", (3,))
        rb = RowBuilder()
        rb.add("Sum", "L", [2.0], (x[[0]], 1.0), (x[[1]], 1.0))
        rb.add("Each", "G", np.zeros(3), (x, [1.0, 0.0, 2.0]))
        rb.add("Empty", "E", np.zeros(0))
        lp = rb.build(np.ones(3), ix.lb, ix.ub)
        assert lp.m == 4
        assert list(lp.families) == ["Sum", "Each", "Each", "Each"]
        # zero coefficients are dropped
        assert lp.A.nnz == 4


class TestBranchAndBound:
    def test_knapsack(self):
        lp = LinearProgram([-5.0, -4.0], [[3.0, 2.0]], ["L"], [4.0], [0.0, 0.0], [1.0, 1.0])
        res = branch_and_bound(lp, [0, 1])
        assert res.status == "optimal"
        assert -res.fun == pytest.approx(5.0)
        assert np.allclose(res.x, [1.0, 0.0])

    def test_integral_relaxation(self):
        lp = LinearProgram([-1.0, -1.0], [[1.0, 0.0]], ["L"], [1.0], [0.0, 0.0], [1.0, 1.0])
        res = branch_and_bound(lp, [0, 1])
        assert res.nodes == 0
        assert -res.fun == pytest.approx(2.0)

    def test_matches_enumeration(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            n = int(rng.integers(1, 13))
            m = int(rng.integers(1, 5))
            c = rng.normal(size=n)
            A = rng.uniform(0.0, 1.0, size=(m, n))
            b = 0.4 * A.sum(axis=1)
            lp = LinearProgram(c, A, ["L"] * m, b, np.zeros(n), np.ones(n))
            points = np.array(list(product((0.0, 1.0), repeat=n)))
            feasible = np.all(points @ A.T <= b, axis=1)
            best = float((points[feasible] @ c).min())
            res = branch_and_bound(lp, np.arange(n))
            assert res.status == "optimal"
            assert res.fun == pytest.approx(best, abs=1e-7)

    def test_infeasible(self):
        lp = LinearProgram([1.0], [[1.0]], ["E"], [0.5], [0.0], [1.0])
        res = branch_and_bound(lp, [0])
        assert res.status == "infeasible"
        assert res.x is None

    def test_node_limit(self):
        rng = np.random.default_rng(4)
        c = -rng.uniform(1.0, 2.0, size=12)
        A = rng.uniform(0.5, 1.5, size=(2, 12))
        lp = LinearProgram(c, A, ["L", "L"], [4.3, 4.7], np.zeros(12), np.ones(12))
        res = branch_and_bound(lp, np.arange(12), node_limit=1)
        assert res.status == "node_limit"
        assert not res.success

    def test_binary_bounds(self):
        lp = LinearProgram([1.0], [[1.0]], ["L"], [5.0], [0.0], [3.0])
        with pytest.raises(IllegalInputError):
            branch_and_bound(lp, [0])
