"""Domain types, sample sources, and the deterministic-randomness contract.

The Bernoulli setting (two groups) is stored as a d=2 categorical problem:
per-action category counts of length 2, with the scalar success proportion
being coordinate 1 of the categorical mean. The target ``x`` is a scalar in
[0, 1] for d=2 and a probability vector on the simplex for d >= 3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from . import confidence

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
UNDECIDED = "undecided"

SIMPLEX_TOL = 1e-9

#: Block size used when pre-drawing labels from distribution-backed sources.
DRAW_BLOCK = 4096


class SourceDrainedError(RuntimeError):
    """A replay source ran out of recorded labels."""


@dataclass(frozen=True)
class ProblemSpec:
    """One feasibility question.

    d: number of groups (categories per draw).
    k: number of sampleable actions (data sources).
    x: desired group proportion; scalar in [0, 1] for d=2, simplex vector
       for d >= 3.
    epsilon: relaxation radius around x (the question is asked of the open
       ball of this radius, not of x itself).
    delta: allowed total error probability, in (0, 1/2).
    lam: slack factor in (0, 1) applied to the feasible stopping threshold
       when d >= 3, compensating for grid-search suboptimality. Ignored
       for d=2.
    """

    d: int
    k: int
    x: Union[float, tuple]
    epsilon: float
    delta: float
    lam: float = 0.99

    def __post_init__(self):
        if self.d < 2:
            raise ValueError(f"d must be >= 2, got {self.d}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not 0 < self.delta < 0.5:
            raise ValueError(f"delta must be in (0, 1/2), got {self.delta}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if not 0 < self.lam < 1:
            raise ValueError(f"lam must be in (0, 1), got {self.lam}")
        if self.d == 2:
            if not isinstance(self.x, (int, float)):
                raise ValueError("x must be a scalar in [0, 1] when d=2")
            if not 0 <= self.x <= 1:
                raise ValueError(f"x must lie in [0, 1], got {self.x}")
        else:
            x = tuple(float(v) for v in self.x)
            if len(x) != self.d:
                raise ValueError(f"x has {len(x)} coordinates, expected {self.d}")
            if min(x) < 0:
                raise ValueError(f"x coordinates must be nonnegative, got {x}")
            if abs(sum(x) - 1.0) > SIMPLEX_TOL:
                raise ValueError(f"x must sum to 1, got sum {sum(x)!r}")
            object.__setattr__(self, "x", x)

    @property
    def x_vector(self) -> np.ndarray:
        if self.d == 2:
            raise ValueError("x is scalar for d=2")
        return np.asarray(self.x, dtype=float)

    def margin_spec(self) -> confidence.MarginSpec:
        return confidence.MarginSpec(delta=self.delta, k=self.k)


def _check_mean(mean, d: int):
    if d == 2:
        if not isinstance(mean, (int, float)):
            raise ValueError("means must be scalars in [0, 1] when d=2")
        if not 0 <= mean <= 1:
            raise ValueError(f"mean {mean} outside [0, 1]")
        return float(mean)
    m = tuple(float(v) for v in mean)
    if len(m) != d:
        raise ValueError(f"mean {m} has {len(m)} coordinates, expected {d}")
    if min(m) < 0:
        raise ValueError(f"mean {m} has a negative coordinate")
    if abs(sum(m) - 1.0) > SIMPLEX_TOL:
        raise ValueError(f"mean {m} must sum to 1")
    return m


@dataclass(frozen=True)
class Instance:
    """Ground-truth action means plus their feasibility label.

    The label is always computed from the geometry oracle; use
    ``geometry.label_instance`` rather than constructing by hand.
    """

    means: tuple
    label: str

    def __post_init__(self):
        if len(self.means) == 0:
            raise ValueError("instance needs at least one mean")
        if self.label not in (FEASIBLE, INFEASIBLE):
            raise ValueError(f"label must be feasible/infeasible, got {self.label!r}")

    @property
    def k(self) -> int:
        return len(self.means)


class SampleSource:
    """A stream of group labels in {0, ..., d-1}."""

    dims: int

    def draw(self, rng: np.random.Generator) -> int:
        raise NotImplementedError

    def draw_block(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Draw up to ``count`` labels at once.

        Distribution-backed sources always return exactly ``count`` labels
        and consume the stream identically to ``count`` single draws.
        Replay sources may return fewer (the remainder); an empty block
        signals exhaustion.
        """
        return np.array([self.draw(rng) for _ in range(count)], dtype=np.int64)


class BernoulliSource(SampleSource):
    """Emits label 1 with probability p, label 0 otherwise."""

    dims = 2

    def __init__(self, p: float):
        if not 0 <= p <= 1:
            raise ValueError(f"p must be in [0, 1], got {p}")
        self.p = float(p)

    def draw(self, rng):
        return int(rng.random() < self.p)

    def draw_block(self, rng, count):
        return (rng.random(count) < self.p).astype(np.int64)

    def __repr__(self):
        return f"BernoulliSource(p={self.p})"


class MultinomialSource(SampleSource):
    """Emits label j with probability mu[j]."""

    def __init__(self, mu: Sequence[float]):
        mu = np.asarray(mu, dtype=float)
        if mu.ndim != 1 or len(mu) < 2:
            raise ValueError("mu must be a probability vector of length >= 2")
        if mu.min() < 0 or abs(mu.sum() - 1.0) > SIMPLEX_TOL:
            raise ValueError(f"mu must be a probability vector, got {mu}")
        self.mu = mu
        self.dims = len(mu)
        self._cum = np.cumsum(mu)
        self._cum[-1] = 1.0  # guard against cumsum rounding below 1

    def draw(self, rng):
        return int(np.searchsorted(self._cum, rng.random(), side="right"))

    def draw_block(self, rng, count):
        return np.searchsorted(self._cum, rng.random(count), side="right").astype(np.int64)

    def __repr__(self):
        return f"MultinomialSource(mu={self.mu.tolist()})"


class ReplaySource(SampleSource):
    """Replays a fixed recorded label sequence; errors when drained."""

    def __init__(self, labels: Iterable[int], dims: int):
        self.dims = int(dims)
        self._labels = np.asarray(list(labels), dtype=np.int64)
        if len(self._labels) and (self._labels.min() < 0 or self._labels.max() >= self.dims):
            raise ValueError(f"replay labels must lie in [0, {self.dims - 1}]")
        self._pos = 0

    @classmethod
    def from_text(cls, lines: Iterable[str], dims: int) -> "ReplaySource":
        """Build from a newline-delimited stream of integer labels."""
        labels = [int(s) for s in (line.strip() for line in lines) if s]
        return cls(labels, dims)

    @property
    def remaining(self) -> int:
        return len(self._labels) - self._pos

    def draw(self, rng):
        if self._pos >= len(self._labels):
            raise SourceDrainedError("source drained: replay stream exhausted")
        label = int(self._labels[self._pos])
        self._pos += 1
        return label

    def draw_block(self, rng, count):
        take = min(count, self.remaining)
        block = self._labels[self._pos : self._pos + take]
        self._pos += take
        return block


def draw(source: SampleSource, rng_stream: np.random.Generator) -> int:
    """Draw one group label from a source using the given seeded stream."""
    return source.draw(rng_stream)


@dataclass(frozen=True)
class ActionStats:
    """Running per-action state: sample count, category tallies, mean, margin.

    For d=2, ``counts[1]`` is the success count and ``mean_hat[1]`` the scalar
    success proportion. ``mean_hat`` is None until the first sample; policies
    always sample each action once before any selection, so selection logic
    never sees it.
    """

    n: int
    counts: tuple
    mean_hat: Optional[tuple]
    margin: float

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be >= 0")
        if sum(self.counts) != self.n:
            raise ValueError(f"counts {self.counts} do not sum to n={self.n}")
        if self.n == 0:
            if self.mean_hat is not None:
                raise ValueError("mean_hat is undefined at n=0")
        else:
            expected = tuple(c / self.n for c in self.counts)
            if self.mean_hat is None or any(
                abs(a - b) > 1e-12 for a, b in zip(self.mean_hat, expected)
            ):
                raise ValueError("mean_hat must equal counts/n")

    @classmethod
    def empty(cls, d: int) -> "ActionStats":
        return cls(n=0, counts=(0,) * d, mean_hat=None, margin=math.inf)

    @property
    def d(self) -> int:
        return len(self.counts)

    @property
    def scalar_mean(self) -> float:
        """Success proportion (coordinate 1); d=2 view."""
        if self.mean_hat is None:
            raise ValueError("no samples yet: mean is undefined")
        return self.mean_hat[1]


def update(stats: ActionStats, label: int, spec: ProblemSpec) -> ActionStats:
    """Record one observed label: bump counts, recompute mean and margin."""
    if not 0 <= label < spec.d:
        raise ValueError(f"label {label} outside [0, {spec.d - 1}]")
    counts = list(stats.counts)
    counts[label] += 1
    n = stats.n + 1
    return ActionStats(
        n=n,
        counts=tuple(counts),
        mean_hat=tuple(c / n for c in counts),
        margin=confidence.margin(n, spec.margin_spec()),
    )


@dataclass(frozen=True)
class Decision:
    """Outcome of one sequential run.

    verdict is "feasible" or "infeasible" when a stopping rule fired, or
    "undecided" when the step budget ran out first (never coerced into a
    verdict). tau counts every sample drawn, including the one-per-action
    initialization round.
    """

    verdict: str
    tau: int
    per_action: tuple
    trajectory: Optional[tuple] = None

    def __post_init__(self):
        if self.verdict not in (FEASIBLE, INFEASIBLE, UNDECIDED):
            raise ValueError(f"bad verdict {self.verdict!r}")
        total = sum(s.n for s in self.per_action)
        if total != self.tau:
            raise ValueError(f"tau={self.tau} but per-action counts sum to {total}")

    @property
    def decided(self) -> bool:
        return self.verdict != UNDECIDED


# --- seeded stream derivation -------------------------------------------
#
# One master seed splits into per-trial seeds, and a trial seed splits into
# per-action sample streams plus one selection stream. Action streams depend
# only on (seed, action), so policies that sample actions in different orders
# still see identical per-action label sequences (variance-paired runs).


def action_stream(seed: int, action: int) -> np.random.Generator:
    """Sample stream for one action under the given run seed."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0, action])))


def selection_stream(seed: int) -> np.random.Generator:
    """Stream for randomized selection rules (posterior draws)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 1])))


def trial_seeds(master_seed: int, trials: int) -> list:
    """Derive one reproducible run seed per trial from a master seed."""
    state = np.random.SeedSequence(master_seed).generate_state(trials)
    return [int(s) for s in state]
