"""Gap/threshold arithmetic, optimal subsets, and sample-size bounds."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hullcheck import (
    compare_upper_bounds,
    gaps,
    label_instance,
    lower_bound_feasible,
    lower_bound_infeasible,
    optimal_subset,
    solve_s,
    upper_bound_lucb_mean,
    upper_bound_uniform,
)
from hullcheck.confidence import MarginSpec, margin

from conftest import spec_d2, spec_d3

MSPEC10 = MarginSpec(delta=0.01, k=10)


def inst(means, spec):
    return label_instance(means, spec)


class TestSolveS:
    def test_unit_gap_crossover(self):
        s = solve_s(1.0, MSPEC10)
        assert s == 29
        assert 2 * margin(29, MSPEC10) < 1.0 < 2 * margin(28, MSPEC10)

    def test_immediate_satisfaction(self):
        big = 2 * margin(1, MSPEC10) + 0.5
        assert solve_s(big, MSPEC10) == 1

    def test_exact_crossover_property(self):
        for gap in np.geomspace(0.02, 3.0, 40):
            s = solve_s(float(gap), MSPEC10)
            assert 2 * margin(s, MSPEC10) < gap
            if s > 1:
                assert gap <= 2 * margin(s - 1, MSPEC10)

    @given(st.floats(min_value=0.01, max_value=3.0), st.floats(min_value=0.0, max_value=0.5))
    def test_monotone_in_gap(self, gap, shrink):
        smaller = gap * (1 - shrink)
        if smaller <= 0:
            return
        assert solve_s(smaller, MSPEC10) >= solve_s(gap, MSPEC10)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            solve_s(0.0, MSPEC10)
        with pytest.raises(ValueError):
            solve_s(-1.0, MSPEC10)


class TestGaps:
    def test_below_window(self):
        spec = spec_d2(k=1)
        report = gaps(inst((0.3,), spec), spec)
        assert report.gap_min[0] == pytest.approx(0.1)
        assert report.gap_max[0] == pytest.approx(0.3)

    def test_centered(self):
        spec = spec_d2(k=1)
        report = gaps(inst((0.5,), spec), spec)
        assert report.gap_min[0] == pytest.approx(0.1)
        assert report.gap_max[0] == pytest.approx(0.1)

    def test_inside_window(self):
        spec = spec_d2(k=1)
        report = gaps(inst((0.45,), spec), spec)
        assert report.gap_min[0] == pytest.approx(0.05)
        assert report.gap_max[0] == pytest.approx(0.15)

    def test_outside_window_spread_is_2eps(self):
        spec = spec_d2(k=3)
        report = gaps(inst((0.2, 0.3, 0.9), spec), spec)
        for lo, hi in zip(report.gap_min, report.gap_max):
            assert hi - lo == pytest.approx(2 * spec.epsilon)

    def test_inside_window_gaps_sum_to_2eps(self):
        spec = spec_d2(k=2)
        report = gaps(inst((0.45, 0.58), spec), spec)
        for lo, hi in zip(report.gap_min, report.gap_max):
            assert hi + lo == pytest.approx(2 * spec.epsilon)

    def test_pairwise(self):
        spec = spec_d2(k=3)
        report = gaps(inst((0.3, 0.7, 0.5), spec), spec)
        assert report.gap_pair[0][1] == pytest.approx(0.4)
        assert report.s_pair[0][0] == math.inf
        assert report.s_pair[0][1] == solve_s(report.gap_pair[0][1], spec.margin_spec())

    def test_rejects_d3(self):
        spec = spec_d3()
        instance = inst(((0.2, 0.1, 0.7), (0.7, 0.2, 0.1), (0.1, 0.7, 0.2)), spec)
        with pytest.raises(ValueError, match="d=2"):
            gaps(instance, spec)


class TestOptimalSubset:
    def test_center_singleton_beats_off_center(self):
        spec = spec_d2(k=5)
        sub = optimal_subset(inst((0.5, 0.48, 0.52, 0.48, 0.52), spec), spec)
        assert sub.kind == "singleton"
        assert sub.indices == (0,)

    def test_bracketing_pair_beats_window_singletons(self):
        spec = spec_d2(k=4)
        sub = optimal_subset(inst((0.3, 0.7, 0.48, 0.52), spec), spec)
        assert sub.kind == "pair"
        assert sub.indices == (0, 1)

    def test_single_feasible_mean(self):
        spec = spec_d2(k=1)
        sub = optimal_subset(inst((0.47,), spec), spec)
        assert sub.indices == (0,)

    def test_duplicate_optima_take_lowest_index(self):
        spec = spec_d2(k=4)
        sub = optimal_subset(inst((0.5, 0.5, 0.48, 0.52), spec), spec)
        assert sub.indices == (0,)

    def test_infeasible_rejected(self):
        spec = spec_d2(k=2)
        with pytest.raises(ValueError):
            optimal_subset(inst((0.1, 0.2), spec), spec)


class TestLowerBounds:
    def test_pair_value(self):
        # [1/D(0.7||0.4) + 1/D(0.3||0.6)] * ln(25)/2, frozen from
        # 40-digit arithmetic
        spec = spec_d2(k=2)
        value = lower_bound_feasible(inst((0.3, 0.7), spec), spec)
        assert value == pytest.approx(17.514174680763574, rel=1e-12)

    def test_singleton_value(self):
        spec = spec_d2(k=1)
        value = lower_bound_feasible(inst((0.5,), spec), spec)
        assert value == pytest.approx(78.85150793577843, rel=1e-12)

    def test_infeasible_single_action(self):
        spec = spec_d2(k=1)
        value = lower_bound_infeasible(inst((0.1,), spec), spec)
        assert value == pytest.approx(7.112306678779772, rel=1e-12)

    def test_infeasible_additive(self):
        one = spec_d2(k=1)
        two = spec_d2(k=2)
        single = lower_bound_infeasible(inst((0.1,), one), one)
        double = lower_bound_infeasible(inst((0.1, 0.1), two), two)
        assert double == pytest.approx(2 * single, rel=1e-12)

    def test_quarter_delta_gives_zero(self):
        spec = spec_d2(k=2, delta=0.25)
        assert lower_bound_feasible(inst((0.3, 0.7), spec), spec) == 0.0
        spec1 = spec_d2(k=1, delta=0.25)
        assert lower_bound_infeasible(inst((0.1,), spec1), spec1) == 0.0

    def test_feasible_bound_nonincreasing_in_epsilon(self):
        # a larger relaxation never makes feasibility harder to certify
        means = (0.35, 0.68)
        last_f = math.inf
        for eps in (0.02, 0.05, 0.1, 0.15):
            spec = spec_d2(k=2, epsilon=eps)
            value = lower_bound_feasible(inst(means, spec), spec)
            assert value <= last_f + 1e-9
            last_f = value

    def test_infeasible_bound_nondecreasing_in_epsilon(self):
        # a larger window leaves its boundary closer to the means, so
        # refuting it takes more samples
        last_i = 0.0
        for eps in (0.02, 0.05, 0.08):
            spec = spec_d2(k=1, epsilon=eps)
            value = lower_bound_infeasible(inst((0.2,), spec), spec)
            assert value >= last_i - 1e-9
            last_i = value

    def test_grows_toward_boundary(self):
        # an infeasible mean creeping toward the window edge needs more samples
        last = 0.0
        for p in (0.1, 0.2, 0.3, 0.35, 0.39):
            spec = spec_d2(k=1)
            value = lower_bound_infeasible(inst((p,), spec), spec)
            assert value >= last
            last = value

    def test_boundary_mean_is_infinite(self):
        # dyadic epsilon makes the boundary mean exact
        spec = spec_d2(k=1, epsilon=0.125)
        value = lower_bound_infeasible(inst((0.375,), spec), spec)
        assert value == math.inf


class TestUpperBounds:
    def test_bracketing_pair_uniform(self):
        spec = spec_d2(k=2)
        mspec = spec.margin_spec()
        value = upper_bound_uniform(inst((0.3, 0.7), spec), spec)
        assert value == 2 * solve_s(0.3, mspec)

    def test_infeasible_uniform(self):
        spec = spec_d2(k=2)
        mspec = spec.margin_spec()
        value = upper_bound_uniform(inst((0.1, 0.2), spec), spec)
        assert value == solve_s(0.3, mspec) + solve_s(0.2, mspec)

    def test_identical_actions_scale_linearly(self):
        spec5 = spec_d2(k=5)
        spec1 = spec_d2(k=1)
        # same margin parameters so the thresholds agree across the two specs
        v5 = upper_bound_uniform(inst((0.45,) * 5, spec5), spec5)
        v1 = upper_bound_uniform(inst((0.45,), spec1), spec1)
        assert v1 * 5 != v5  # different k changes the margin
        report5 = gaps(inst((0.45,) * 5, spec5), spec5)
        assert v5 == 5 * report5.s_min[0]

    def test_bracketing_pair_lucb(self):
        spec = spec_d2(k=2)
        mspec = spec.margin_spec()
        value = upper_bound_lucb_mean(inst((0.3, 0.7), spec), spec)
        assert value == 2 * solve_s(0.3, mspec)

    def test_all_means_at_center_uses_near_threshold(self):
        spec = spec_d2(k=3)
        mspec = spec.margin_spec()
        value = upper_bound_lucb_mean(inst((0.5, 0.5, 0.5), spec), spec)
        assert value == 3 * solve_s(0.1, mspec)

    def test_infeasible_lucb(self):
        spec = spec_d2(k=2)
        value = upper_bound_lucb_mean(inst((0.1, 0.2), spec), spec)
        assert value == upper_bound_uniform(inst((0.1, 0.2), spec), spec)

    def test_dominance_random_sweep(self):
        rng = np.random.default_rng(321)
        checked = 0
        while checked < 200:
            k = int(rng.integers(2, 11))
            means = tuple(float(v) for v in rng.random(k))
            spec = spec_d2(k=k)
            instance = label_instance(means, spec)
            lo, hi = min(means), max(means)
            dist = max(0.0, max(lo - spec.x, spec.x - hi))
            if instance.label != "feasible" or abs(dist - spec.epsilon) < 1e-3:
                continue
            checked += 1
            cmp = compare_upper_bounds(instance, spec)
            assert cmp.lucb_mean <= cmp.uniform

    def test_rejects_d3(self):
        spec = spec_d3()
        instance = inst(((0.2, 0.1, 0.7), (0.7, 0.2, 0.1), (0.1, 0.7, 0.2)), spec)
        with pytest.raises(ValueError, match="d=2"):
            upper_bound_uniform(instance, spec)
