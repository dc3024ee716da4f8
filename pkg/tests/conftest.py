"""Shared fixture helpers for constructing specs and injected stats."""

from fractions import Fraction

from hullcheck import ActionStats, ProblemSpec


def spec_d2(k=2, x=0.5, epsilon=0.1, delta=0.01, lam=0.99):
    return ProblemSpec(d=2, k=k, x=x, epsilon=epsilon, delta=delta, lam=lam)


def spec_d3(k=3, x=(1 / 3, 1 / 3, 1 / 3), epsilon=0.1, delta=0.01, lam=0.99):
    return ProblemSpec(d=3, k=k, x=x, epsilon=epsilon, delta=delta, lam=lam)


def stats_d2(p, margin, n=10000):
    """ActionStats with an exactly representable scalar mean p = succ/n."""
    succ = round(Fraction(p).limit_denominator(10**6) * n)
    assert 0 <= succ <= n
    counts = (n - succ, succ)
    return ActionStats(n=n, counts=counts, mean_hat=(counts[0] / n, counts[1] / n), margin=margin)


def stats_d3(mean, margin, n=100):
    """ActionStats for d=3 with counts n*mean (must come out integral)."""
    counts = tuple(round(m * n) for m in mean)
    assert sum(counts) == n, f"mean {mean} not representable at n={n}"
    return ActionStats(n=n, counts=counts, mean_hat=tuple(c / n for c in counts), margin=margin)
