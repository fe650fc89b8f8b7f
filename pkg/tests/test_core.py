from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fifdim import (CallableScaling, ConditionNotMet, ContractivityViolation, DomainError,
                    InterpolationProblem, MalformedInput, ResourceLimit, ScalingFunction,
                    evaluate_grid, evaluate_point, evaluate_rational, grid_residual,
                    knot_values, normalize, validate)
from fifdim.core import branch_index

from conftest import (EXAMPLE_COEFFS, THIRDS, constant_problem, example_problem,
                      random_positive_problem)


def naive_value(system, x: Fraction, depth: int) -> Fraction:
    """Direct recursion of the functional equation, truncated with f ~ 0."""
    if depth == 0 or x in (0, 1):
        return Fraction(0)
    n = system.n
    i = min(int(n * x) + 1, n)
    return system.scaling.exact(x) * naive_value(system, n * x - (i - 1), depth - 1) \
        + system.h_exact(x)


class TestValidate:
    def test_example_satisfies_everything(self):
        rep = validate(example_problem())
        for cond in ("A1", "A2", "A3", "A4", "A5", "A6", "A6'", "contractive"):
            assert rep.holds(cond), cond
        assert rep.n == 3 and rep.lipschitz == pytest.approx(4 / 3)
        assert rep.sup_abs_s == pytest.approx(7 / 9) and rep.min_s == pytest.approx(4 / 9)
        assert not rep.collinear

    def test_collinear_detected(self):
        assert validate(example_problem(("0", "1", "2", "3"))).collinear

    def test_non_uniform_knots_recorded_not_raised(self):
        sf = ScalingFunction.from_pieces(["0", "1"], [["1/2"]])
        p = InterpolationProblem.create(["0", "1/4", "1"], ["0", "1", "0"], sf)
        rep = validate(p)
        assert not rep.holds("A4")
        with pytest.raises(ConditionNotMet):
            rep.require("A4")
        with pytest.raises(ConditionNotMet):
            normalize(p)

    def test_sign_changing_scaling(self):
        sf = ScalingFunction.from_pieces(["0", "1"], [["-1/2", "1"]])
        rep = validate(InterpolationProblem.create(THIRDS, ["0", "1", "1", "0"], sf))
        assert not rep.positive and rep.nonvanishing and rep.contractive

    @pytest.mark.parametrize("knots, values", [
        (["0", "1/2", "1"], ["0", "1"]),
        (["0", "1"], ["0", "1"]),
        (["0", "2/3", "1/3", "1"], ["0", "1", "1", "0"]),
    ])
    def test_malformed(self, knots, values):
        sf = ScalingFunction.constant("1/2")
        with pytest.raises(MalformedInput):
            validate(InterpolationProblem.create(knots, values, sf))

    def test_domain_mismatch(self):
        sf = ScalingFunction.constant("1/2", domain=(0, 2))
        with pytest.raises(MalformedInput):
            validate(InterpolationProblem.create(THIRDS, ["0", "1", "1", "0"], sf))

    def test_non_contractive(self):
        p = constant_problem("1")
        assert not validate(p).contractive
        with pytest.raises(ContractivityViolation):
            normalize(p)

    def test_report_to_dict(self):
        d = validate(example_problem()).to_dict()
        assert d["conditions"]["A6'"] is True and d["n"] == 3


class TestNormalize:
    def test_example_constants(self, example_system):
        s = example_system
        assert s.beta == Fraction(7, 9)
        assert s.sup_f_bound == Fraction(9, 2)
        assert s.h_values == (0, 1, 1, 0)
        assert s.lipschitz == Fraction(4, 3)

    def test_baseline_subtracted_on_general_interval(self):
        sf = ScalingFunction.from_pieces(["2", "5"], [["1/2", "-1/20"]])
        p = InterpolationProblem.create(["2", "3", "4", "5"], ["1", "3", "2", "4"], sf)
        s = normalize(p)
        assert s.h_values == (0, 1, -1, 0)
        assert s.scaling.domain == (0, 1)
        assert s.lipschitz == Fraction(3, 20)


class TestBranchIndex:
    @pytest.mark.parametrize("x, n, i", [
        (Fraction(0), 3, 1), (Fraction(1, 3), 3, 2), (Fraction(1, 2), 3, 2),
        (Fraction(2, 3), 3, 3), (Fraction(1), 3, 3), (Fraction(1, 4), 4, 2),
    ])
    def test_values(self, x, n, i):
        assert branch_index(x, n) == i


class TestEvaluateGrid:
    @pytest.mark.parametrize("level", [1, 2, 5, 8])
    def test_residual_and_knots(self, example_system, level):
        g = evaluate_grid(example_system, level)
        assert grid_residual(example_system, g) <= 1e-13
        assert knot_values(g).tolist() == [0.0, 1.0, 1.0, 0.0]
        assert g.size == 3 ** level + 1
        assert g.sweeps <= level + 2

    def test_matches_point_evaluation(self, example_system):
        g = evaluate_grid(example_system, 6)
        rng = np.random.default_rng(0)
        for j in rng.integers(0, 3 ** 6 + 1, 40):
            value, err = evaluate_point(example_system, Fraction(int(j), 3 ** 6), 60)
            assert err == 0.0  # grid points reach an endpoint after at most six digits
            assert abs(g.values[j] - value) <= g.error_bound + 1e-15

    def test_constant_scaling_closed_form(self, constant_system):
        # with S = 1/2 and hat-shaped h the values at 1/2 solve f = f/2 + 1
        g = evaluate_grid(constant_system, 4)
        assert grid_residual(constant_system, g) <= 1e-15
        assert evaluate_rational(constant_system, Fraction(1, 2)) == 2

    def test_resource_limit(self, example_system):
        with pytest.raises(ResourceLimit):
            evaluate_grid(example_system, 17)

    def test_bad_arguments(self, example_system):
        with pytest.raises(DomainError):
            evaluate_grid(example_system, 0)
        with pytest.raises(DomainError):
            evaluate_grid(example_system, 3, tol=0.0)

    def test_cell_bound_dominates_sampled_oscillation(self, example_system):
        coarse = evaluate_grid(example_system, 6)
        fine = evaluate_grid(example_system, 10)
        # every level-6 cell's oscillation seen at level 10 stays within W(6) + 2e
        v = fine.values
        per = 3 ** 4
        cells = np.lib.stride_tricks.sliding_window_view(v, per + 1)[::per]
        osc = cells.max(axis=1) - cells.min(axis=1)
        assert osc.max() <= coarse.cell_bound + 2 * coarse.error_bound

    def test_callable_scaling_agrees_with_polynomial(self):
        sf = ScalingFunction.from_pieces(THIRDS, EXAMPLE_COEFFS)
        cs = CallableScaling(lambda x: sf(x), lipschitz=4 / 3)
        a = normalize(example_problem())
        b = normalize(InterpolationProblem.create(THIRDS, ["0", "1", "1", "0"], cs))
        ga, gb = evaluate_grid(a, 7), evaluate_grid(b, 7)
        assert np.max(np.abs(ga.values - gb.values)) <= 1e-12


class TestPointEvaluation:
    def test_example_oracles(self, example_system):
        # hand solution: 1/2 is fixed by the middle branch, so f = (7/12) f + 1
        assert evaluate_rational(example_system, Fraction(1, 2)) == Fraction(12, 5)
        # 1/6 maps to 1/2 under the first branch: f = (4/9)(12/5) + 1/2
        assert evaluate_rational(example_system, Fraction(1, 6)) == Fraction(47, 30)
        v, err = evaluate_point(example_system, Fraction(1, 2), 100)
        assert abs(v - 2.4) <= max(err, 1e-12) and err < 1e-9

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 60), st.integers(61, 97))
    def test_rational_vs_naive_recursion(self, p, q):
        system = normalize(example_problem())
        x = Fraction(p % q, q)
        exact = evaluate_rational(system, x)
        depth = 40
        approx = naive_value(system, x, depth)
        bound = system.beta ** depth * system.sup_f_bound
        assert abs(exact - approx) <= bound
        v, err = evaluate_point(system, x, depth)
        assert abs(v - float(exact)) <= err + 1e-12

    def test_domain_checks(self, example_system):
        with pytest.raises(DomainError):
            evaluate_point(example_system, Fraction(3, 2), 10)
        with pytest.raises(DomainError):
            evaluate_point(example_system, Fraction(1, 2), 0)
        with pytest.raises(DomainError):
            evaluate_rational(example_system, -1)

    @pytest.mark.parametrize("seed", range(5))
    def test_random_problems_grid_vs_rational(self, seed):
        problem = random_positive_problem(seed)
        system = normalize(problem)
        n = system.n
        g = evaluate_grid(system, 5)
        for j in (1, n ** 5 // 3, n ** 5 - 1):
            exact = evaluate_rational(system, Fraction(j, n ** 5))
            assert abs(g.values[j] - float(exact)) <= g.error_bound + 1e-14
