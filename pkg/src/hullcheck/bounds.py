"""Gap quantities, sample-count thresholds, optimal subsets, and expected
sample-size bounds for the two-group (d=2) setting.

Gaps measure distances from each true mean to the boundaries of the target
window (x - eps, x + eps); thresholds convert a gap into the minimal sample
count at which twice the confidence margin drops below it. Lower bounds are
oracle bounds on any sound policy's expected stopping time; upper bounds are
the high-probability bounds for the uniform and confidence-boundary
(lucb_mean) policies, evaluated as bare sums with no hidden constant, for
ordering comparisons and diagnostics only.

Everything here rejects d >= 3: no multinomial bound theory is defined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from . import confidence
from .core import FEASIBLE, Instance, ProblemSpec
from .geometry import kl_bernoulli


def _require_line(spec: ProblemSpec):
    if spec.d != 2:
        raise ValueError("bounds are defined for the d=2 (Bernoulli) setting only")


def solve_s(gap: float, spec: confidence.MarginSpec) -> int:
    """Smallest integer s >= 1 with gap > 2 * margin(s).

    Exponential bracketing plus bisection on the monotone predicate.
    """
    if gap <= 0:
        raise ValueError(f"threshold undefined for gap {gap} <= 0")

    def ok(s):
        return gap > 2.0 * confidence.margin(s, spec)

    if ok(1):
        return 1
    lo, hi = 1, 2
    while not ok(hi):
        lo = hi
        hi *= 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _solve_or_inf(gap: float, spec: confidence.MarginSpec):
    return solve_s(gap, spec) if gap > 0 else math.inf


@dataclass(frozen=True)
class GapReport:
    """Per-action gaps to the target-window boundaries, pairwise mean gaps,
    and the matching sample-count thresholds (inf where the gap is zero)."""

    gap_max: tuple
    gap_min: tuple
    gap_pair: tuple
    s_max: tuple
    s_min: tuple
    s_pair: tuple


def gaps(instance: Instance, spec: ProblemSpec) -> GapReport:
    """Distances from each mean to the far/near boundary of the target
    window, pairwise distances, and their thresholds."""
    _require_line(spec)
    mspec = spec.margin_spec()
    lo_b = spec.x - spec.epsilon
    hi_b = spec.x + spec.epsilon
    means = instance.means
    gmax = tuple(max(abs(p - lo_b), abs(p - hi_b)) for p in means)
    gmin = tuple(min(abs(p - lo_b), abs(p - hi_b)) for p in means)
    gpair = tuple(tuple(abs(p - q) for q in means) for p in means)
    return GapReport(
        gap_max=gmax,
        gap_min=gmin,
        gap_pair=gpair,
        s_max=tuple(_solve_or_inf(g, mspec) for g in gmax),
        s_min=tuple(_solve_or_inf(g, mspec) for g in gmin),
        s_pair=tuple(tuple(_solve_or_inf(g, mspec) for g in row) for row in gpair),
    )


@dataclass(frozen=True)
class OptimalSubset:
    """The feasible subset of actions furthest (in KL) from any infeasible
    instance: a single in-window action or the bracketing extreme pair."""

    indices: tuple
    kind: str  # "singleton" | "pair"


def _extreme_indices(means):
    """(largest-mean index, smallest-mean index), lowest index on ties."""
    k = len(means)
    imax = max(range(k), key=lambda i: (means[i], -i))
    imin = min(range(k), key=lambda i: (means[i], i))
    return imax, imin


def optimal_subset(instance: Instance, spec: ProblemSpec) -> OptimalSubset:
    """Identify the optimal subset of a feasible d=2 instance.

    Candidates are the in-window singletons, scored by the smaller KL
    divergence to a window boundary, plus the extreme pair when the means
    bracket the window, scored by the cheaper single-endpoint move to its
    violating boundary. Ties prefer a singleton, then the lowest index.
    """
    _require_line(spec)
    if instance.label != FEASIBLE:
        raise ValueError("optimal subset is defined for feasible instances only")
    lo_b = spec.x - spec.epsilon
    hi_b = spec.x + spec.epsilon
    means = instance.means
    candidates = []  # (score, kind_rank, indices, kind)
    for i, p in enumerate(means):
        if lo_b < p < hi_b:
            score = min(kl_bernoulli(p, lo_b), kl_bernoulli(p, hi_b))
            candidates.append((score, 0, (i,), "singleton"))
    imax, imin = _extreme_indices(means)
    if means[imax] >= hi_b and means[imin] <= lo_b:
        score = min(kl_bernoulli(means[imax], lo_b), kl_bernoulli(means[imin], hi_b))
        candidates.append((score, 1, tuple(sorted((imin, imax))), "pair"))
    if not candidates:
        raise ValueError("feasible instance produced no subset candidates")
    best = max(candidates, key=lambda c: (c[0], -c[1], tuple(-i for i in c[2])))
    return OptimalSubset(indices=best[2], kind=best[3])


def _log_term(delta: float) -> float:
    return 0.5 * math.log(1.0 / (4.0 * delta))


def _inv(d: float) -> float:
    return math.inf if d == 0 else 1.0 / d


def lower_bound_feasible(instance: Instance, spec: ProblemSpec) -> float:
    """Oracle lower bound on expected samples for a feasible instance.

    Clamped at zero where the log factor goes nonpositive (delta >= 1/4);
    a zero KL divergence (mean exactly on a boundary) contributes +inf.
    """
    _require_line(spec)
    sub = optimal_subset(instance, spec)
    lo_b = spec.x - spec.epsilon
    hi_b = spec.x + spec.epsilon
    if sub.kind == "singleton":
        p = instance.means[sub.indices[0]]
        scale = max(_inv(kl_bernoulli(p, lo_b)), _inv(kl_bernoulli(p, hi_b)))
    else:
        imax, imin = _extreme_indices(instance.means)
        scale = _inv(kl_bernoulli(instance.means[imax], lo_b)) + _inv(
            kl_bernoulli(instance.means[imin], hi_b)
        )
    return max(0.0, scale * _log_term(spec.delta))


def lower_bound_infeasible(instance: Instance, spec: ProblemSpec) -> float:
    """Lower bound on expected samples for an infeasible instance: every
    action must be pushed away from its nearest window boundary."""
    _require_line(spec)
    if instance.label == FEASIBLE:
        raise ValueError("instance is feasible; use lower_bound_feasible")
    lo_b = spec.x - spec.epsilon
    hi_b = spec.x + spec.epsilon
    scale = sum(
        max(_inv(kl_bernoulli(p, lo_b)), _inv(kl_bernoulli(p, hi_b)))
        for p in instance.means
    )
    return max(0.0, scale * _log_term(spec.delta))


def _pick_j_star(report: GapReport, means) -> int:
    """Extreme action with the larger far-boundary threshold; the largest-mean
    extreme wins ties (the analysis enumerates extremes largest first)."""
    imax, imin = _extreme_indices(means)
    return imax if report.s_max[imax] >= report.s_max[imin] else imin


def upper_bound_uniform(instance: Instance, spec: ProblemSpec) -> float:
    """High-probability sample-size bound for the uniform policy, as the bare
    case sum (order-level value; no hidden constant)."""
    _require_line(spec)
    report = gaps(instance, spec)
    k = instance.k
    if instance.label != FEASIBLE:
        return sum(report.s_min)
    sub = optimal_subset(instance, spec)
    if sub.kind == "pair":
        j = _pick_j_star(report, instance.means)
        cap = report.s_max[j]
    else:
        cap = report.s_min[sub.indices[0]]
    return sum(min(cap, report.s_min[i]) for i in range(k))


def upper_bound_lucb_mean(instance: Instance, spec: ProblemSpec) -> float:
    """High-probability sample-size bound for the confidence-boundary policy
    (bare case sum). Zero pairwise gaps contribute infinite pair thresholds;
    the min/max structure keeps the total finite."""
    _require_line(spec)
    report = gaps(instance, spec)
    k = instance.k
    means = instance.means
    if instance.label != FEASIBLE:
        return sum(report.s_min)
    j = _pick_j_star(report, means)
    bracket = any(p < spec.x for p in means) and any(p > spec.x for p in means)
    if bracket:
        imax, imin = _extreme_indices(means)
        i_star = imin if report.s_max[imax] >= report.s_max[imin] else imax
        total = 0
        for i in range(k):
            if report.gap_pair[i][j] <= report.gap_max[j]:
                total += report.s_max[j]
            else:
                total += max(report.s_pair[i][j], report.s_max[i_star])
        return total
    return sum(min(report.s_pair[i][j], report.s_min[j]) for i in range(k))


@dataclass(frozen=True)
class BoundComparison:
    uniform: float
    lucb_mean: float

    @property
    def lucb_mean_dominates(self) -> bool:
        return self.lucb_mean <= self.uniform


def compare_upper_bounds(instance: Instance, spec: ProblemSpec) -> BoundComparison:
    """Side-by-side upper bounds; the confidence-boundary policy's bound never
    exceeds the uniform policy's on feasible instances."""
    return BoundComparison(
        uniform=upper_bound_uniform(instance, spec),
        lucb_mean=upper_bound_lucb_mean(instance, spec),
    )


@dataclass(frozen=True)
class BoundReport:
    """Everything the bounds machinery knows about one instance."""

    gaps: GapReport
    subset: Optional[OptimalSubset]
    lower_bound: float
    upper_uniform: float
    upper_lucb_mean: float


def report(instance: Instance, spec: ProblemSpec) -> BoundReport:
    """Full gap/threshold/bound report for one d=2 instance."""
    _require_line(spec)
    g = gaps(instance, spec)
    if instance.label == FEASIBLE:
        sub = optimal_subset(instance, spec)
        lower = lower_bound_feasible(instance, spec)
    else:
        sub = None
        lower = lower_bound_infeasible(instance, spec)
    return BoundReport(
        gaps=g,
        subset=sub,
        lower_bound=lower,
        upper_uniform=upper_bound_uniform(instance, spec),
        upper_lucb_mean=upper_bound_lucb_mean(instance, spec),
    )
