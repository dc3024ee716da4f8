"""Margin formula values, monotonicity, and the deviation-budget validator."""

import math

import numpy as np
import pytest

from hullcheck.confidence import MARGIN_FORMS, BudgetReport, MarginSpec, margin, validate_budget

MSPEC = MarginSpec(delta=0.01, k=10)


class TestMargin:
    def test_value_n100(self):
        # sqrt(ln(1e4 * 5*10/(3*0.01)) / 200), frozen from 40-digit arithmetic
        assert margin(100, MSPEC) == pytest.approx(0.2883480646261070, rel=1e-12)

    def test_value_n1(self):
        assert margin(1, MSPEC) == pytest.approx(1.9259518299724071, rel=1e-12)

    def test_strictly_decreasing_to_a_million(self):
        n = np.arange(1, 1_000_001, dtype=np.float64)
        b = np.sqrt(np.log(n * n * (5 * 10 / (3 * 0.01))) / (2 * n))
        assert np.all(np.diff(b) < 0)
        # the vectorized formula is the same function margin() evaluates
        for probe in (1, 2, 17, 1000, 999_999):
            assert margin(probe, MSPEC) == pytest.approx(b[probe - 1], rel=1e-14)

    def test_vanishes(self):
        assert margin(1_000_000, MSPEC) < 0.005

    def test_rejects_n0(self):
        with pytest.raises(ValueError):
            margin(0, MSPEC)

    def test_form_must_exist(self):
        with pytest.raises(ValueError):
            MarginSpec(delta=0.01, k=10, form="nope")


class TestValidateBudget:
    def test_single_term_closed_form(self):
        # first term is exactly 6*delta/(5k)
        rep = validate_budget(MSPEC, horizon=1)
        assert rep.partial_sum == pytest.approx(6 * 0.01 / (5 * 10), rel=1e-12)
        assert rep.budget == pytest.approx(0.001, rel=1e-15)

    def test_horizon_1e5(self):
        # sum of 6 delta/(5 k n^2), frozen from 40-digit arithmetic
        rep = validate_budget(MSPEC, horizon=100_000)
        assert rep.partial_sum == pytest.approx(0.0019739088802778715, rel=1e-9)
        # exceeding the budget is the point being documented, not a failure
        assert not rep.within_budget
        assert rep.partial_sum / rep.budget == pytest.approx(1.9739, abs=2e-4)

    def test_partial_sums_monotone(self):
        sums = [validate_budget(MSPEC, h).partial_sum for h in (1, 2, 5, 10, 100, 1000)]
        assert all(b >= a for a, b in zip(sums, sums[1:]))

    def test_termwise_compliant_margin_stays_within_budget(self):
        # any margin with 2 exp(-2 n B^2) <= delta/(2 k n^2) termwise keeps
        # every partial sum strictly below delta/k (sum 1/n^2 < 2)
        def tight(n, delta, k):
            return math.sqrt(math.log(4.0 * k * n * n / delta) / (2.0 * n))

        MARGIN_FORMS["tight-test"] = tight
        try:
            spec = MarginSpec(delta=0.01, k=10, form="tight-test")
            for h in (1, 10, 1000, 50_000):
                rep = validate_budget(spec, h)
                assert rep.partial_sum < rep.budget
        finally:
            del MARGIN_FORMS["tight-test"]

    def test_rejects_horizon_0(self):
        with pytest.raises(ValueError):
            validate_budget(MSPEC, 0)


class TestEmpiricalCoverage:
    def test_running_mean_rarely_escapes_margin(self):
        # bernoulli(0.5), 1000 runs of length 1000: the escape event
        # {exists n <= 1000 with |mean - 0.5| > B(n)} should be rare
        runs, length = 1000, 1000
        rng = np.random.default_rng(2024)
        labels = rng.random((runs, length)) < 0.5
        means = labels.cumsum(axis=1) / np.arange(1, length + 1)
        b = np.array([margin(n, MSPEC) for n in range(1, length + 1)])
        escaped = (np.abs(means - 0.5) > b).any(axis=1)
        assert escaped.mean() <= 0.02
