import numpy as np
import pytest

from obro.linsolve import Row
from obro.master import solve_master
from obro.model import ObroProblem, Scenario, UncertainTerm, reference_scenario
from obro.oracle import (
    GridBudgetError,
    brute_force_subproblem,
    enumerate_master,
    refinement_study,
)
from obro.pwl import (
    NeighborhoodSpec,
    Partition,
    SampledFunction,
    make_partition,
    sample_reference,
    trapezoid_deviation,
)
from obro.subproblem import solve_subproblem


def one_term(points, ref_values, delta, lip=2.0, dev=10.0, eps=0.1):
    part = Partition(np.asarray(points, float))
    ref = SampledFunction(part, np.asarray(ref_values, float))
    spec = NeighborhoodSpec(ref, delta, dev, lip)
    return ObroProblem(
        c=np.zeros(1), rows=[],
        lower=np.array([part.lo]), upper=np.array([part.hi]),
        epsilon=eps, terms=[UncertainTerm("f1", spec, (0,))], names=["x"],
    )


class TestBruteForceSubproblem:
    def test_zero_delta_single_point(self):
        prob = one_term([0.0, 1.0], [0.0, 1.0], delta=0.0)
        value, funcs = brute_force_subproblem(prob, np.array([0.7]), levels=11)
        assert value == pytest.approx(0.7)
        np.testing.assert_array_equal(funcs[0].values, [0.0, 1.0])

    def test_two_sample_identity_instance(self):
        prob = one_term([0.0, 1.0], [0.0, 1.0], delta=0.1)
        value, _ = brute_force_subproblem(prob, np.array([1.0]), levels=201)
        assert value == pytest.approx(1.095, abs=2e-3)

    def test_dominated_by_lp_and_within_lipschitz_gap(self):
        rng = np.random.default_rng(42)
        for _ in range(6):
            mid = float(rng.uniform(0.3, 0.7))
            prob = one_term(
                [0.0, mid, 1.0],
                [0.0, rng.uniform(0.3, 0.7), rng.uniform(1.0, 1.4)],
                delta=float(rng.uniform(0.02, 0.06)),
                lip=4.0,
            )
            x = np.array([float(rng.uniform(0, 1))])
            levels = 101
            value, funcs = brute_force_subproblem(prob, x, levels=levels)
            _, lp_value = solve_subproblem(prob, x)
            spec = prob.terms[0].spec
            step = 2 * spec.delta_max / (levels - 1)
            lipschitz = 1 + prob.epsilon * (spec.partition.hi - spec.partition.lo)
            assert value <= lp_value + 1e-9
            assert lp_value <= value + lipschitz * step + 1e-9

    def test_levels_refinement_never_hurts(self):
        prob = one_term([0.0, 0.5, 1.0], [0.0, 0.6, 1.1], delta=0.05)
        x = np.array([0.8])
        coarse, _ = brute_force_subproblem(prob, x, levels=51)
        fine, _ = brute_force_subproblem(prob, x, levels=101)
        assert fine >= coarse - 1e-12

    def test_grid_budget_guard(self):
        prob = one_term(np.linspace(0, 1, 10), np.linspace(0, 1, 10), delta=0.1)
        with pytest.raises(GridBudgetError):
            brute_force_subproblem(prob, np.array([0.5]), levels=101)

    def test_two_terms_decompose(self):
        part = Partition(np.array([0.0, 1.0]))
        ref = SampledFunction(part, part.points.copy())
        mk = lambda name: UncertainTerm(name, NeighborhoodSpec(ref, 0.1, 10.0, 2.0), ())
        t1 = UncertainTerm("f1", NeighborhoodSpec(ref, 0.1, 10.0, 2.0), (0,))
        t2 = UncertainTerm("f2", NeighborhoodSpec(ref, 0.1, 10.0, 2.0), (1,))
        prob = ObroProblem(
            c=np.zeros(2), rows=[], lower=np.zeros(2), upper=np.ones(2),
            epsilon=0.1, terms=[t1, t2],
        )
        value, funcs = brute_force_subproblem(prob, np.array([1.0, 1.0]), levels=201)
        assert value == pytest.approx(2 * 1.095, abs=4e-3)
        assert len(funcs) == 2


class TestEnumerateMaster:
    def test_single_segment_equals_master(self):
        prob = one_term([0.0, 1.0], [0.0, 1.0], delta=0.5)
        scens = [reference_scenario(prob)]
        v_enum, x_enum = enumerate_master(prob, scens)
        x_m, eta = solve_master(prob, scens)
        assert v_enum == pytest.approx(eta, abs=1e-9)
        assert x_enum[0] == pytest.approx(x_m[0], abs=1e-9)

    def test_v_shape_crossing(self):
        # cuts eta >= x and eta >= 1 - x - eps cross at (1 - eps)/2
        prob = one_term([0.0, 1.0], [0.0, 1.0], delta=1.0, lip=3.0)
        f = SampledFunction(prob.terms[0].spec.partition, np.array([1.0, 0.0]))
        scen = Scenario((f,), (trapezoid_deviation(f, prob.terms[0].spec.reference),))
        scens = [reference_scenario(prob), scen]
        v_enum, x_enum = enumerate_master(prob, scens)
        assert x_enum[0] == pytest.approx(0.45, abs=1e-9)
        assert v_enum == pytest.approx(0.45, abs=1e-9)
        x_m, eta = solve_master(prob, scens)
        assert v_enum == pytest.approx(eta, abs=1e-6)

    def test_multi_segment_grid(self):
        prob = one_term([0.0, 0.4, 1.0], [1.0, 0.3, 0.8], delta=0.5, lip=4.0)
        f = SampledFunction(prob.terms[0].spec.partition, np.array([0.8, 0.7, 1.2]))
        scen = Scenario((f,), (trapezoid_deviation(f, prob.terms[0].spec.reference),))
        scens = [reference_scenario(prob), scen]
        v_enum, _ = enumerate_master(prob, scens)
        _, eta = solve_master(prob, scens)
        assert v_enum == pytest.approx(eta, abs=1e-6)

    @pytest.mark.parametrize("seed", range(6))
    def test_random_instances_match_branch_and_bound(self, seed):
        rng = np.random.default_rng(300 + seed)
        points = np.array([0.0, rng.uniform(0.2, 0.5), rng.uniform(0.6, 0.9), 1.0])
        prob = one_term(points, rng.uniform(0, 1, 4), delta=0.4, lip=6.0)
        scens = [reference_scenario(prob)]
        for _ in range(int(rng.integers(1, 3))):
            # worst cases at random decisions are guaranteed members
            scen, _ = solve_subproblem(prob, np.array([float(rng.uniform(0, 1))]))
            scens.append(scen)
        v_enum, _ = enumerate_master(prob, scens)
        _, eta = solve_master(prob, scens)
        assert v_enum == pytest.approx(eta, abs=1e-6)


class TestRefinementStudy:
    @staticmethod
    def builder(step):
        part = make_partition(0.0, 0.04, step)
        curve = lambda p: 9.62 * (p / 0.2) - 4.7 * (p / 0.2) ** 2
        ref = sample_reference(curve, part)
        spec = NeighborhoodSpec(ref, 0.05, 1e-3, 1.5)
        # mild pull toward charging so the optimum is interior-ish
        return ObroProblem(
            c=np.array([-30.0]), rows=[],
            lower=np.zeros(1), upper=np.array([0.04]),
            epsilon=0.1, terms=[UncertainTerm("f1", spec, (0,))], names=["p"],
        )

    def test_zero_delta_family_is_stable(self):
        def builder(step):
            prob = self.builder(step)
            spec = prob.terms[0].spec
            prob.terms = [
                UncertainTerm(
                    "f1",
                    NeighborhoodSpec(spec.reference, 0.0, spec.dev_max, spec.lip_ratio),
                    (0,),
                )
            ]
            return prob

        table = refinement_study(builder, [0.02, 0.01, 0.005], tol=1e-6)
        # the nominal optimizer sits on a shared grid point, so refinement
        # cannot move it
        assert max(table.x_distances[1:]) <= 1e-9
        assert table.trend_ok

    def test_step_trend(self):
        table = refinement_study(self.builder, [0.004, 0.002, 0.001], tol=1e-6)
        assert table.steps == (0.004, 0.002, 0.001)
        assert np.isnan(table.x_distances[0])
        assert len(table.values) == 3

    def test_rejects_bad_steps(self):
        with pytest.raises(ValueError):
            refinement_study(self.builder, [0.004])
        with pytest.raises(ValueError):
            refinement_study(self.builder, [0.002, 0.004])

    def test_failure_attributed_to_step(self):
        def bad_builder(step):
            prob = self.builder(step)
            if step < 0.003:
                prob.rows = [Row({0: 1.0}, "<=", -1.0)]  # empty polyhedron
            return prob

        with pytest.raises(Exception, match="0.002"):
            refinement_study(bad_builder, [0.004, 0.002], tol=1e-6)

    def test_csv_shape(self):
        table = refinement_study(self.builder, [0.008, 0.004], tol=1e-6)
        lines = table.to_csv().strip().splitlines()
        assert lines[0] == "step,value,x_distance_to_previous,value_distance_to_previous"
        assert len(lines) == 3
