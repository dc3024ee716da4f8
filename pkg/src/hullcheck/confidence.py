"""Anytime confidence margins and the deviation-probability budget check.

The margin B(n, delta) is the half-width of each action's confidence region
after n samples. A valid margin must keep the total probability of the
empirical mean ever escaping its region below delta/k, summed over all n
(the per-action share of the error budget).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def _margin_default(n: int, delta: float, k: int) -> float:
    # sqrt((1/2n) * ln(n^2 * 5k / (3 delta))), natural log
    return math.sqrt(math.log(n * n * (5.0 * k / (3.0 * delta))) / (2.0 * n))


#: Registered margin formulas; alternatives must satisfy the summed budget.
MARGIN_FORMS = {"default": _margin_default}


@dataclass(frozen=True)
class MarginSpec:
    """Parameters of the confidence margin: budget delta split over k actions."""

    delta: float
    k: int
    form: str = "default"

    def __post_init__(self):
        if not 0 < self.delta < 0.5:
            raise ValueError(f"delta must be in (0, 1/2), got {self.delta}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.form not in MARGIN_FORMS:
            raise ValueError(f"unknown margin form {self.form!r}")


def margin(n: int, spec: MarginSpec) -> float:
    """Confidence half-width after n samples. Strictly decreasing in n."""
    if n < 1:
        raise ValueError(f"margin requires n >= 1, got {n}")
    return MARGIN_FORMS[spec.form](n, spec.delta, spec.k)


@dataclass(frozen=True)
class BudgetReport:
    """Partial sum of per-n deviation probabilities next to its budget delta/k."""

    partial_sum: float
    budget: float

    @property
    def within_budget(self) -> bool:
        return self.partial_sum < self.budget


def validate_budget(spec: MarginSpec, horizon: int) -> BudgetReport:
    """Sum the two-sided Hoeffding deviation bounds 2*exp(-2n B(n)^2) up to horizon.

    For the default margin each term equals 6 delta / (5 k n^2), so the sum
    converges to (pi^2/5) * delta/k ~= 1.974 * delta/k -- above the strict
    delta/k budget by a constant factor. The report exposes the computed sum
    rather than hiding the discrepancy.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    n = np.arange(1, horizon + 1, dtype=np.float64)
    if spec.form == "default":
        b = np.sqrt(np.log(n * n * (5.0 * spec.k / (3.0 * spec.delta))) / (2.0 * n))
    else:
        b = np.array([margin(int(i), spec) for i in range(1, horizon + 1)])
    terms = 2.0 * np.exp(-2.0 * n * b * b)
    return BudgetReport(partial_sum=float(terms.sum()), budget=spec.delta / spec.k)
