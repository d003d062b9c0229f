import numpy as np
import pytest

from obro.linsolve import BranchBoundSolver, HighsSolver
from obro.master import build_master, master_layout, solve_master
from obro.model import (
    ObroProblem,
    Scenario,
    UncertainTerm,
    evaluate_v,
    reference_scenario,
)
from obro.pwl import NeighborhoodSpec, Partition, SampledFunction, trapezoid_deviation


def make_problem(points, ref_values, delta=1.0, dev=10.0, lip=3.0, epsilon=0.1, c=None):
    part = Partition(np.asarray(points, float))
    ref = SampledFunction(part, np.asarray(ref_values, float))
    spec = NeighborhoodSpec(ref, delta, dev, lip)
    return ObroProblem(
        c=np.zeros(1) if c is None else np.asarray(c, float),
        rows=[],
        lower=np.array([part.lo]),
        upper=np.array([part.hi]),
        epsilon=epsilon,
        terms=[UncertainTerm("f1", spec, (0,))],
        names=["x"],
    )


def scenario_from_values(prob, values, term=0):
    spec = prob.terms[term].spec
    f = SampledFunction(spec.partition, np.asarray(values, float))
    return Scenario((f,), (trapezoid_deviation(f, spec.reference),))


class TestReferenceOnlyMaster:
    def test_minimizes_increasing_reference(self):
        prob = make_problem([0.0, 1.0], [0.0, 1.0])
        x, eta = solve_master(prob, [reference_scenario(prob)])
        assert x[0] == pytest.approx(0.0, abs=1e-9)
        assert eta == pytest.approx(0.0, abs=1e-9)

    def test_concave_samples_pick_left_endpoint(self):
        prob = make_problem([0.0, 0.5, 1.0], [0.0, 0.6, 0.8])
        x, eta = solve_master(prob, [reference_scenario(prob)])
        assert x[0] == pytest.approx(0.0, abs=1e-9)
        assert eta == pytest.approx(0.0, abs=1e-9)

    def test_interior_minimum(self):
        prob = make_problem([0.0, 0.5, 1.0], [1.0, 0.2, 0.9])
        x, eta = solve_master(prob, [reference_scenario(prob)])
        assert x[0] == pytest.approx(0.5, abs=1e-9)
        assert eta == pytest.approx(0.2, abs=1e-9)


class TestVShapedCuts:
    def v_problem(self, epsilon=0.1):
        # identity reference, one extra scenario {1, 0}: the two cuts are
        # eta >= x and eta >= (1 - x) - eps * trapezoid(1, 1)
        prob = make_problem([0.0, 1.0], [0.0, 1.0], delta=1.0, lip=3.0, epsilon=epsilon)
        scen = scenario_from_values(prob, [1.0, 0.0])
        assert scen.deviations[0] == pytest.approx(1.0)
        return prob, [reference_scenario(prob), scen]

    def test_crossing_point(self):
        # closed form: x = (1 - eps) / 2 where x = 1 - x - eps
        prob, scens = self.v_problem(epsilon=0.1)
        x, eta = solve_master(prob, scens)
        assert x[0] == pytest.approx(0.45, abs=1e-9)
        assert eta == pytest.approx(0.45, abs=1e-9)

    def test_eta_equals_worst_scenario_value(self):
        prob, scens = self.v_problem()
        x, eta = solve_master(prob, scens)
        worst = max(evaluate_v(prob, s, x) for s in scens)
        assert eta == pytest.approx(worst, abs=1e-6)

    def test_cut_validity(self):
        prob, scens = self.v_problem()
        x, eta = solve_master(prob, scens)
        for s in scens:
            assert eta >= evaluate_v(prob, s, x) - 1e-6


class TestLbMonotonicity:
    def test_adding_violated_cut_raises_eta(self):
        prob = make_problem([0.0, 1.0], [0.0, 1.0], delta=0.6)
        scens = [reference_scenario(prob)]
        x0, eta0 = solve_master(prob, scens)
        # a cut violated at x0 = 0: value 0.6 there
        scens.append(scenario_from_values(prob, [0.6, 1.0]))
        x1, eta1 = solve_master(prob, scens)
        assert eta1 > eta0 + 1e-6
        # adding a dominated cut cannot lower the bound
        scens.append(scenario_from_values(prob, [0.0, 1.0]))
        x2, eta2 = solve_master(prob, scens)
        assert eta2 >= eta1 - 1e-9


class TestSos2Structure:
    def test_layout_blocks(self):
        prob = make_problem([0.0, 0.5, 1.0], [0.0, 0.5, 1.0])
        lay = master_layout(prob)
        assert lay.n_x == 1 and lay.eta == 1
        assert lay.alpha(0, 0) == slice(2, 5)
        assert lay.beta(0, 0) == slice(5, 7)
        assert lay.n_total == 7

    @pytest.mark.parametrize("solver", [BranchBoundSolver(), HighsSolver()], ids=["bnb", "highs"])
    def test_sos2_integrity_at_optimum(self, solver):
        prob = make_problem([0.0, 0.4, 1.0], [1.0, 0.3, 0.8])
        scens = [reference_scenario(prob), scenario_from_values(prob, [0.9, 0.5, 1.1])]
        mip = build_master(prob, scens)
        from obro.linsolve import solve_milp

        out = solve_milp(mip, solver)
        lay = master_layout(prob)
        beta = out.x[lay.beta(0, 0)]
        alpha = out.x[lay.alpha(0, 0)]
        assert np.sum(np.round(beta)) == 1
        seg = int(np.argmax(beta))
        mask = np.zeros(alpha.size, dtype=bool)
        mask[seg : seg + 2] = True
        assert np.all(alpha[~mask] <= 1e-6)
        assert np.sum(alpha) == pytest.approx(1.0, abs=1e-6)

    def test_polyhedron_rows_respected(self):
        from obro.linsolve import Row

        prob = make_problem([0.0, 1.0], [1.0, 0.0])
        prob.rows = [Row({0: 1.0}, "<=", 0.25, "cap")]
        x, eta = solve_master(prob, [reference_scenario(prob)])
        assert x[0] <= 0.25 + 1e-9
        assert eta == pytest.approx(0.75, abs=1e-9)


class TestErrors:
    def test_empty_scenarios(self):
        prob = make_problem([0.0, 1.0], [0.0, 1.0])
        with pytest.raises(ValueError):
            build_master(prob, [])

    def test_invalid_scenario(self):
        prob = make_problem([0.0, 1.0], [0.0, 1.0], delta=0.1)
        bad = scenario_from_values(prob, [5.0, 1.0])
        with pytest.raises(ValueError, match="scenario 0"):
            build_master(prob, [bad])

    def test_infeasible_polyhedron(self):
        from obro.linsolve import Row
        from obro.master import MasterError

        prob = make_problem([0.0, 1.0], [0.0, 1.0])
        prob.rows = [Row({0: 1.0}, "<=", -0.5)]
        with pytest.raises(MasterError, match="empty"):
            solve_master(prob, [reference_scenario(prob)])
