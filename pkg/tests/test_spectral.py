from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from fifdim import (ConditionNotMet, DomainError, InterpolationProblem, Kind, NoConvergence,
                    ResourceLimit, SampleRule, ScalingFunction, ScalingMatrix,
                    build_extrema_table, build_sampled_matrix, check_monotone,
                    estimate_rho_S, lower_matrix, normalize, rho_bracket, spectral_radius,
                    sum_function_report, upper_matrix)
from fifdim.spectral import dense_csv, entries_csv, matvec, sum_function

from conftest import THIRDS, random_positive_problem

REFERENCE_RADII = [  # (rho(M_k), rho(M'_k)), k = 1..8, four decimals
    (1.7622, 1.5380), (1.6852, 1.6102), (1.6599, 1.6349), (1.6515, 1.6432),
    (1.6488, 1.6460), (1.6478, 1.6469), (1.6475, 1.6472), (1.6474, 1.6473),
]


def dense_from_definition(system, k: int, upper: bool) -> np.ndarray:
    """Build M_k / M'_k entry by entry from exact extrema of |S| on I^k_{i,j}."""
    n = system.n
    blocks = n ** (k - 1)
    out = np.zeros((n ** k, n ** k))
    for i in range(1, n + 1):
        for l in range(1, blocks + 1):
            for m in range(1, n + 1):
                j = (l - 1) * n + m
                a = Fraction(i - 1, n) + Fraction(j - 1, n ** (k + 1))
                b = a + Fraction(1, n ** (k + 1))
                lo, hi = system.scaling.abs_extrema(a, b)
                out[(i - 1) * blocks + l - 1, j - 1] = float(hi if upper else lo)
    return out


def dominant_eigenvalue(a: np.ndarray) -> float:
    return float(np.max(np.abs(scipy.linalg.eigvals(a))))


class TestExtremaTables:
    def test_example_level_one_exact(self, example_system):
        t = build_extrema_table(example_system, 1)
        f = lambda p, q: float(Fraction(p, q))  # noqa: E731
        assert t.upper.tolist() == [[f(4, 9)] * 3, [f(43, 81), f(52, 81), f(7, 9)],
                                    [f(7, 9), f(2, 3), f(5, 9)]]
        assert t.lower.tolist() == [[f(4, 9)] * 3, [f(4, 9), f(43, 81), f(52, 81)],
                                    [f(2, 3), f(5, 9), f(4, 9)]]

    @pytest.mark.parametrize("k", [1, 2, 3])
    @pytest.mark.parametrize("upper", [True, False])
    def test_placement_matches_definition(self, example_system, k, upper):
        t = build_extrema_table(example_system, k)
        m = upper_matrix(t) if upper else lower_matrix(t)
        np.testing.assert_array_equal(m.to_dense(), dense_from_definition(example_system, k, upper))

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_refinement(self, example_system, k):
        # each level-k cell splits into N level-(k+1) cells: max of children = parent
        a = build_extrema_table(example_system, k)
        b = build_extrema_table(example_system, k + 1)
        n = a.n
        np.testing.assert_array_equal(b.upper.reshape(n, -1, n).max(axis=2), a.upper)
        np.testing.assert_array_equal(b.lower.reshape(n, -1, n).min(axis=2), a.lower)

    @pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
    def test_gap_bound(self, example_system, k):
        t = build_extrema_table(example_system, k)
        assert t.max_gap <= t.certified_gap + 1e-12
        assert t.certified_gap == pytest.approx(4 / 3 * 3.0 ** (-k - 1))

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_primitive(self, example_system, k):
        a = (upper_matrix(build_extrema_table(example_system, k)).to_dense() > 0).astype(float)
        p = np.linalg.matrix_power(a, k + 1)
        assert np.all(p > 0)

    @pytest.mark.parametrize("rule", list(SampleRule))
    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_sampled_between_bounds(self, example_system, rule, k):
        t = build_extrema_table(example_system, k)
        s = build_sampled_matrix(example_system, k, rule)
        assert s.kind is Kind.SAMPLED
        assert np.all(t.lower <= s.entries) and np.all(s.entries <= t.upper)

    def test_resource_cap(self, example_system):
        with pytest.raises(ResourceLimit):
            build_extrema_table(example_system, 5, cap=100)
        with pytest.raises(DomainError):
            build_extrema_table(example_system, 0)


class TestMatvec:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 4), st.integers(1, 3), st.integers(0, 2 ** 32 - 1))
    def test_matches_dense(self, n, k, seed):
        rng = np.random.default_rng(seed)
        m = ScalingMatrix(n, k, Kind.UPPER, rng.random((n, n ** k)))
        v = rng.random(n ** k)
        np.testing.assert_allclose(matvec(m, v), m.to_dense() @ v, rtol=1e-14, atol=1e-15)

    def test_dense_size_guard(self, example_system):
        m = upper_matrix(build_extrema_table(example_system, 7))
        with pytest.raises(ResourceLimit):
            m.to_dense()


class TestSpectralRadius:
    @pytest.mark.parametrize("k", [1, 2, 3, 4, 5, 6])
    def test_against_dense_eigensolver(self, example_system, k):
        t = build_extrema_table(example_system, k)
        for m in (upper_matrix(t), lower_matrix(t)):
            r = spectral_radius(m)
            assert abs(r.radius - dominant_eigenvalue(m.to_dense())) <= 1e-9
            assert r.lower <= r.radius <= r.upper

    def test_eigenvector_positive_and_normalized(self, example_system):
        r = spectral_radius(upper_matrix(build_extrema_table(example_system, 3)))
        assert np.all(r.eigenvector > 0)
        assert r.eigenvector.sum() == pytest.approx(1.0)
        assert r.residual <= 1e-9

    def test_constant_scaling_exact(self, constant_system):
        b = rho_bracket(constant_system, 1)
        assert b.lower == b.upper == 1.5

    def test_zero_matrix(self):
        with pytest.raises(NoConvergence):
            spectral_radius(ScalingMatrix(2, 1, Kind.UPPER, np.zeros((2, 2))))

    def test_non_converging_budget(self, example_system):
        with pytest.raises(NoConvergence):
            spectral_radius(upper_matrix(build_extrema_table(example_system, 2)),
                            tol=1e-15, max_iter=3)


class TestBrackets:
    @pytest.mark.parametrize("k", range(1, 9))
    def test_reference_radii(self, example_system, k):
        b = rho_bracket(example_system, k)
        up, lo = REFERENCE_RADII[k - 1]
        assert abs(b.upper - up) <= 5e-5 and abs(b.lower - lo) <= 5e-5
        assert b.certified and b.c == pytest.approx(9 / 4)
        assert b.upper - b.lower <= b.width_bound + 2e-10

    def test_history_monotone(self, example_system):
        hist = [rho_bracket(example_system, k) for k in range(1, 7)]
        assert check_monotone(hist)
        assert not check_monotone(hist[::-1])

    def test_estimate_reaches_target(self, example_system):
        rho, hist = estimate_rho_S(example_system, target_width=2e-4, k_max=8)
        assert hist[-1].level == 8 and abs(rho - 1.64735) < 1e-4

    def test_estimate_reports_shortfall(self, example_system):
        # the level-8 bracket is 1.03e-4 wide, just above the default target
        with pytest.raises(ResourceLimit) as info:
            estimate_rho_S(example_system, target_width=1e-4, k_max=8)
        assert len(info.value.history) == 8
        assert 1e-4 < info.value.achieved_width < 1.1e-4

    def test_non_positive_scaling(self):
        sf = ScalingFunction.from_pieces(["0", "1"], [["-3/5", "6/5"]])
        s = normalize(InterpolationProblem.create(THIRDS, ["0", "1", "1", "0"], sf))
        with pytest.raises(ConditionNotMet):
            estimate_rho_S(s)
        b = rho_bracket(s, 2)
        assert not b.certified and b.width_bound is None
        assert b.lower is None or b.lower <= b.upper + 1e-10


class TestSumFunction:
    def test_example_exact(self, example_system):
        g = sum_function_report(example_system, 3)
        assert g.exact
        assert g.gamma_star_lower == Fraction(59, 36)
        assert g.gamma_star_upper == Fraction(5, 3)
        assert g.lambda_prime == Fraction(1, 9)
        assert not g.is_constant

    def test_example_polynomial(self, example_system):
        breaks, pieces = sum_function(example_system)
        x = Fraction(2, 7)
        p = pieces[sum(1 for b in breaks[1:-1] if b <= x)]
        assert sum(c * x ** e for e, c in enumerate(p)) == Fraction(5, 3) - x / 9 + x * x / 9

    def test_rho_between_gamma_extrema(self, example_system):
        g = sum_function_report(example_system, 4)
        for k in range(1, 5):
            b = rho_bracket(example_system, k)
            # rho_S lies in [gamma_*, gamma^*] and inside every bracket
            assert float(g.gamma_star_lower) - 1e-10 <= b.upper
            assert b.lower <= float(g.gamma_star_upper) + 1e-10
            # column sums bound the Perron root at each level
            assert b.upper <= g.gamma_bar[k - 1] + 1e-10
            assert g.gamma_under[k - 1] <= b.lower + 1e-10

    def test_constant(self, constant_system):
        g = sum_function_report(constant_system)
        assert g.is_constant and g.gamma_star_lower == Fraction(3, 2)
        assert g.lambda_prime == 0

    def test_level_check(self, example_system):
        with pytest.raises(DomainError):
            sum_function_report(example_system, 0)

    @pytest.mark.parametrize("seed", range(6))
    def test_random_sandwich(self, seed):
        s = normalize(random_positive_problem(seed))
        g = sum_function_report(s, 1)
        b = rho_bracket(s, 3)
        assert b.lower <= b.upper
        assert float(g.gamma_star_lower) - 1e-10 <= b.upper
        assert b.lower <= float(g.gamma_star_upper) + 1e-10


class TestCsv:
    def test_entries_csv(self, example_system):
        t = build_extrema_table(example_system, 1)
        text = entries_csv([upper_matrix(t)])
        lines = text.split("\n")
        assert lines[0] == "kind,level,i,j,value"
        assert lines[4] == "upper,1,2,1,0.53086419753086422"
        assert "\r" not in text and len(lines) == 11

    def test_dense_csv_round_trip(self, example_system):
        m = lower_matrix(build_extrema_table(example_system, 2))
        rows = dense_csv(m).strip().split("\n")[1:]
        back = np.array([[float(v) for v in r.split(",")] for r in rows])
        np.testing.assert_array_equal(back, m.to_dense())
