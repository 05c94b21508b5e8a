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


from types import SimpleNamespace

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.optimize import minimize

from desgn.core import DataNotFoundError, IllegalInputError, IncompatibleInputError
from desgn.drs import (
    AdmmParams,
    NlpProblem,
    Partition,
    admm_solve,
    build_consensus,
    build_des_problem,
    contributor_gap,
    decompose,
    lambda_update,
    metrics,
    penalty_update,
    x_update,
    z_update,
)
from desgn.drs.admm import ConsensusLayout


def _scalar_layout(n_sub):
    """Every subproblem holds one variable tied to the single consensus row."""
    return ConsensusLayout(1, [np.array([0]) for _ in range(n_sub)], [sp.csr_matrix([[1.0]]) for _ in range(n_sub)])


def _quadratic(target):
    def objective(x):
        return float((x[0] - target) ** 2), np.array([2.0 * (x[0] - target)])

    return NlpProblem(objective, np.array([-10.0]), np.array([10.0]))


class TestUpdates:
    def test_z_update(self):
        z = z_update(_scalar_layout(2), [np.array([1.0]), np.array([3.0])], [np.array([0.5]), np.array([-0.5])], 2.0)
        assert z == pytest.approx([2.0])

    def test_z_update_unused_row(self):
        layout = ConsensusLayout(2, [np.array([0])], [sp.csr_matrix([[1.0]])])
        z = z_update(layout, [np.array([4.0])], [np.zeros(1)], 1.0)
        assert list(z) == [4.0, 0.0]

    def test_z_update_minimises_augmented_terms(self):
        rng = np.random.default_rng(11)
        rows = [np.array([0, 1]), np.array([1, 2, 3]), np.array([0, 2, 3])]
        layout = ConsensusLayout(4, rows, [sp.csr_matrix(rng.normal(size=(r.size, 5))) for r in rows])
        xs = [rng.normal(size=5) for _ in rows]
        lams = [rng.normal(size=r.size) for r in rows]
        rho = 3.0

        def augmented(z):
            value, grad = 0.0, np.zeros(layout.n_rows)
            for r, A, x, lam in zip(rows, layout.A, xs, lams):
                d = A @ x - z[r]
                value += lam @ d + 0.5 * rho * d @ d
                np.add.at(grad, r, -lam - rho * d)
            return value, grad

        oracle = minimize(augmented, np.zeros(layout.n_rows), jac=True, method="BFGS", options={"gtol": 1e-12})
        np.testing.assert_allclose(z_update(layout, xs, lams, rho), oracle.x, rtol=0, atol=1e-8)

    def test_contributor_gap(self):
        layout = ConsensusLayout(2, [np.array([0, 1]), np.array([0])], [sp.identity(2, format="csr"), sp.identity(1, format="csr")])
        # row 1 has a single contributor
        assert contributor_gap(layout, [np.array([1.0, 5.0]), np.array([1.25])]) == pytest.approx(0.25)

    def test_lambda_update(self):
        assert lambda_update(np.zeros(1), np.array([1.5]), np.array([1.0]), 2.0) == pytest.approx([1.0])

    def test_lambda_clipping(self):
        new = lambda_update(np.zeros(2), np.array([1.5, -1.5]), np.zeros(2), 2.0, bounds=(-0.5, 0.5))
        assert list(new) == [0.5, -0.5]

    def test_lambda_damping(self):
        new = lambda_update(np.zeros(1), np.array([1.5]), np.array([1.0]), 2.0, damping=0.5)
        assert new == pytest.approx([0.5])

    def test_lambda_zero_residual(self):
        lam = np.array([0.3, -0.2])
        assert np.array_equal(lambda_update(lam, np.ones(2), np.ones(2), 5.0), lam)

    def test_penalty_update(self):
        params = AdmmParams()
        assert penalty_update(10.0, [1.0, 0.995], params) == pytest.approx(10.2)
        assert penalty_update(10.0, [1.0, 0.5], params) == 10.0
        assert penalty_update(10.0, [1.0], params) == 10.0

    def test_x_update(self):
        res = x_update(_quadratic(0.0), sp.csr_matrix([[1.0]]), np.array([2.0]), np.zeros(1), 2.0, np.zeros(1))
        assert res.x == pytest.approx([1.0], abs=1e-6)


class TestAdmmParams:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"tau": 1.0},
            {"kappa": 1.0},
            {"lambda_min": 1.0, "lambda_max": 1.0},
            {"conv_threshold": 0.0},
            {"max_iters": 0},
            {"beta_mode": "always"},
            {"zeta_mode": "damping", "zeta": 1.0},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(IllegalInputError):
            AdmmParams(**kwargs)

    def test_modes(self):
        assert AdmmParams().damping == 0.0 and AdmmParams().proximal == 0.0
        params = AdmmParams(beta_mode="proximal", zeta_mode="damping", beta=3.0, zeta=0.2)
        assert params.damping == 0.2 and params.proximal == 3.0


class TestAdmmSolve:
    def test_two_quadratics_agree(self):
        params = AdmmParams(workers=1, conv_threshold=1e-5)
        res = admm_solve([_quadratic(1.0), _quadratic(3.0)], _scalar_layout(2), params, [np.zeros(1), np.zeros(1)],
                         rho0=1.0)
        assert res.converged
        assert res.xs[0] == pytest.approx([2.0], abs=1e-3)
        assert res.xs[1] == pytest.approx([2.0], abs=1e-3)
        assert len(res.trace) == res.iterations
        assert res.trace[-1]["max_primal_residual"] <= 1e-5
        rhos = [rec["rho"] for rec in res.trace]
        assert all(b >= a for a, b in zip(rhos, rhos[1:]))

    def test_iteration_cap(self):
        params = AdmmParams(workers=1, max_iters=2, conv_threshold=1e-12)
        res = admm_solve([_quadratic(1.0), _quadratic(3.0)], _scalar_layout(2), params, [np.zeros(1), np.zeros(1)],
                         rho0=1.0)
        assert not res.converged
        assert res.iterations == 2

    def test_contributors_agree_at_convergence(self):
        params = AdmmParams(workers=1, conv_threshold=0.1)
        res = admm_solve([_quadratic(1.0), _quadratic(3.0)], _scalar_layout(2), params, [np.zeros(1), np.zeros(1)],
                         rho0=1.0)
        assert res.converged
        assert res.residual <= 0.1
        assert res.gap <= 0.1
        assert abs(res.xs[0][0] - res.xs[1][0]) <= 0.1


class TestPartition:
    def test_tie_owner_is_slack_side(self, two_load_feeder):
        part = Partition.from_groups(two_load_feeder, [{"1", "2"}, {"3"}, {"4"}])
        assert part.k == 3
        assert part.load_groups == (False, True, True)
        assert [(t.branch, t.owner, t.neighbor) for t in part.tie_lines] == [(1, 0, 1), (2, 0, 2)]
        assert part.group_of("4") == 2

    def test_single_group(self, two_load_feeder):
        part = Partition.from_groups(two_load_feeder, [{"1", "2", "3", "4"}])
        assert part.tie_lines == ()

    @pytest.mark.parametrize(
        "groups",
        [
            [{"1", "2"}, {"2", "3", "4"}],
            [{"1", "2"}, {"3"}],
            [{"1", "2"}, {"3", "4"}],
            [{"1", "2", "3", "4"}, set()],
            [{"1", "2", "3", "4", "9"}],
        ],
        ids=["overlap", "uncovered", "disconnected", "empty", "unknown"],
    )
    def test_invalid(self, two_load_feeder, groups):
        with pytest.raises(IllegalInputError):
            Partition.from_groups(two_load_feeder, groups)


class TestDecompose:
    def test_noload_groups_split_in_time(self, make_network, make_timeline):
        net = make_network([("1", "2", 0.04), ("2", "3", 0.05)], T=2)
        part = Partition.from_groups(net, [{"1", "2"}, {"3"}])
        specs = decompose(net, part, make_timeline(points=2, seasons=("winter",)))
        assert [s.kind for s in specs] == ["noload"] * 4
        layout = build_consensus(specs)
        # one tie line, three phases, two timepoints, six quantities
        assert layout.n_rows == 36
        assert np.all(layout.counts == 2)

    def test_add_sub_rows_match_direct_equalities(self, make_network, make_timeline):
        net = make_network([("1", "2", 0.04), ("2", "3", 0.05)], T=2)
        part = Partition.from_groups(net, [{"1", "2"}, {"3"}])
        specs = decompose(net, part, make_timeline(points=2, seasons=("winter",)))
        layout = build_consensus(specs)
        br = net.branches[1]
        # local columns of every copied quantity, paired between the two holders
        shared = []
        for p in br.phases:
            for t in range(2):
                a, b = [i for i, s in enumerate(specs) if s.layout.has(t)]
                cols = [
                    [lay.col_v(br.from_bus, p, t), lay.col_v(br.to_bus, p, t), lay.col_theta(br.from_bus, p, t),
                     lay.col_theta(br.to_bus, p, t), lay.col_pb(1, p, t), lay.col_qb(1, p, t)]
                    for lay in (specs[a].layout, specs[b].layout)
                ]
                shared.append((a, np.array(cols[0]), b, np.array(cols[1])))

        rng = np.random.default_rng(5)
        for trial in range(1000):
            xs = [rng.normal(size=s.layout.n) for s in specs]
            for a, ca, b, cb in shared:
                xs[b][cb] = xs[a][ca]
            if trial % 2:
                a, ca, b, cb = shared[rng.integers(len(shared))]
                xs[b][cb[rng.integers(cb.size)]] += rng.uniform(0.1, 1.0)
            direct = all(np.array_equal(xs[a][ca], xs[b][cb]) for a, ca, b, cb in shared)
            gap = contributor_gap(layout, [A @ x for A, x in zip(layout.A, xs)])
            assert direct == (gap <= 1e-12)
            assert direct == (trial % 2 == 0)

    def test_load_groups(self, make_network, make_timeline, catalog):
        timeline = make_timeline(points=2)
        net = make_network(
            [("1", "2", 0.04), ("2", "3", 0.05), ("2", "4", 0.03)], [("L1", "3", "A"), ("L2", "4", "B")], T=4
        )
        problems = {load.id: build_des_problem(load, catalog, timeline) for load in net.loads}
        part = Partition.from_groups(net, [{"1", "2"}, {"3"}, {"4"}])
        specs = decompose(net, part, timeline, problems, scale=0.5)
        assert len(specs) == 6
        loaded = [s for s in specs if s.kind == "load"]
        assert [(s.n_loads, s.layout.T, s.scale) for s in loaded] == [(1, 4, 0.5), (1, 4, 0.5)]
        assert build_consensus(specs).n_rows == 2 * 3 * 4 * 6

    def test_missing_problem(self, two_load_feeder, make_timeline):
        part = Partition.from_groups(two_load_feeder, [{"1", "2"}, {"3"}, {"4"}])
        with pytest.raises(DataNotFoundError):
            decompose(two_load_feeder, part, make_timeline())

    def test_unpaired_tie(self, make_network, make_timeline):
        net = make_network([("1", "2", 0.04), ("2", "3", 0.05)], T=2)
        part = Partition.from_groups(net, [{"1", "2"}, {"3"}])
        specs = decompose(net, part, make_timeline(points=2, seasons=("winter",)))
        with pytest.raises(IncompatibleInputError):
            build_consensus(specs[:3])


class TestMetrics:
    def test_gap_and_ratio(self):
        gap, ratio = metrics(SimpleNamespace(objective=101.0, solve_time=2.0), SimpleNamespace(objective=100.0,
                                                                                              solve_time=4.0))
        assert gap == pytest.approx(1.0)
        assert ratio == pytest.approx(0.5)

    def test_zero_reference(self):
        with pytest.raises(IllegalInputError):
            metrics(SimpleNamespace(objective=1.0, solve_time=1.0), SimpleNamespace(objective=0.0, solve_time=1.0))
