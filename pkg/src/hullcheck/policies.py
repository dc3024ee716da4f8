"""Selection rules and the sequential stopping engine.

All four policies share the same stopping rules (evaluated before every
selection) and the same one-sample-per-action initialization round. The
run loop keeps per-action bounds incrementally and feeds them to the same
kernels that back the public pure functions, so a selection computed from
an ActionStats snapshot matches the in-run selection exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import confidence, geometry
from .core import (
    DRAW_BLOCK,
    FEASIBLE,
    INFEASIBLE,
    UNDECIDED,
    ActionStats,
    Decision,
    ProblemSpec,
    SampleSource,
    SourceDrainedError,
    action_stream,
    selection_stream,
)
from .geometry import DirectionGrid

POLICY_NAMES = ("uniform", "lucb_mean", "lucb_ratio", "thompson")


@dataclass(frozen=True)
class PolicyKind:
    """Identity of a selection rule; thompson carries posterior prior
    pseudo-counts (default flat: all ones)."""

    name: str
    prior: Optional[tuple] = None

    def __post_init__(self):
        if self.name not in POLICY_NAMES:
            raise ValueError(f"unknown policy {self.name!r}; expected one of {POLICY_NAMES}")
        if self.prior is not None:
            prior = tuple(float(v) for v in self.prior)
            if min(prior) <= 0:
                raise ValueError("thompson prior parameters must be strictly positive")
            object.__setattr__(self, "prior", prior)


UNIFORM = PolicyKind("uniform")
LUCB_MEAN = PolicyKind("lucb_mean")
LUCB_RATIO = PolicyKind("lucb_ratio")
THOMPSON = PolicyKind("thompson")
ALL_POLICIES = (UNIFORM, LUCB_MEAN, LUCB_RATIO, THOMPSON)


@dataclass(frozen=True)
class StopCheck:
    """Outcome of one stopping-rule evaluation, with the margins that drove it."""

    fired: bool
    verdict: Optional[str]
    inner: float
    outer: float


def check_stop(stats: Sequence[ActionStats], spec: ProblemSpec, grid: DirectionGrid) -> StopCheck:
    """Evaluate both stopping rules on the current confidence regions.

    Feasible fires when the inner margin clears -epsilon (-lam*epsilon for
    d>=3, compensating grid coarseness); infeasible fires when the outer
    margin drops below -epsilon. If both hold at once (a numerical
    coincidence), feasible wins.
    """
    m = geometry.separability_margins(stats, spec, grid)
    inner, outer = m["inner"], m["outer"]
    feas = -spec.epsilon if spec.d == 2 else -spec.lam * spec.epsilon
    if inner > feas:
        return StopCheck(True, FEASIBLE, inner, outer)
    if outer < -spec.epsilon:
        return StopCheck(True, INFEASIBLE, inner, outer)
    return StopCheck(False, None, inner, outer)


# --- selection kernels ----------------------------------------------------
#
# Kernels take plain per-action sequences (d=2) or arrays (d>=3). All
# argmin/argmax ties break toward the lowest index.


def _is_active(dev: float, margin: float, eps: float) -> bool:
    # region contains a boundary point of the target window
    return abs(dev + eps) <= margin or abs(dev - eps) <= margin


def _pick_uniform_line(n, active):
    best = -1
    best_n = 0
    for i in range(len(n)):
        if active[i] and (best < 0 or n[i] < best_n):
            best = i
            best_n = n[i]
    if best < 0:
        raise RuntimeError("no active actions: a stopping rule must already hold")
    return best


def _pick_least_sampled(n):
    best = 0
    best_n = n[0]
    for i in range(1, len(n)):
        if n[i] < best_n:
            best = i
            best_n = n[i]
    return best


def _direction_sign(lo, hi):
    up = max(lo)
    down = -min(hi)
    return 1.0 if up <= down else -1.0


def _pick_lucb_mean_line(lo, hi):
    if _direction_sign(lo, hi) > 0:
        # score = dev + B = hi
        best = 0
        best_v = hi[0]
        for i in range(1, len(hi)):
            if hi[i] > best_v:
                best = i
                best_v = hi[i]
        return best
    # score = -dev + B = -lo
    best = 0
    best_v = lo[0]
    for i in range(1, len(lo)):
        if lo[i] < best_v:
            best = i
            best_v = lo[i]
    return best


def _pick_lucb_ratio_line(dev, margin, n, lo, hi):
    u = _direction_sign(lo, hi)
    inf_best = -1
    inf_n = 0
    best = -1
    best_score = -math.inf
    for i in range(len(dev)):
        den = -u * dev[i] + margin[i]
        if den <= 0.0:
            # region wholly past the target in direction u: maximal evidence
            if inf_best < 0 or n[i] < inf_n:
                inf_best = i
                inf_n = n[i]
        elif inf_best < 0:
            score = (u * dev[i] + margin[i]) / (den * math.sqrt(n[i]))
            if score > best_score:
                best = i
                best_score = score
    return inf_best if inf_best >= 0 else best


def _pick_thompson_line(draws, x, lo, hi):
    u = _direction_sign(lo, hi)
    if u > 0:
        best = 0
        best_v = draws[0]
        for i in range(1, len(draws)):
            if draws[i] > best_v:
                best = i
                best_v = draws[i]
        return best
    best = 0
    best_v = draws[0]
    for i in range(1, len(draws)):
        if draws[i] < best_v:
            best = i
            best_v = draws[i]
    return best


def _grid_direction_index(proj, margin):
    return int((proj - margin[:, None]).max(axis=0).argmin())


def _pick_lucb_mean_grid(proj, margin):
    g = _grid_direction_index(proj, margin)
    return int(np.argmax(proj[:, g] + margin))


def _pick_lucb_ratio_grid(proj, margin, n):
    g = _grid_direction_index(proj, margin)
    along = proj[:, g]
    den = -along + margin
    blown = np.flatnonzero(den <= 0.0)
    if len(blown):
        return int(blown[np.argmin(np.asarray(n)[blown])])
    scores = (along + margin) / (den * np.sqrt(np.asarray(n, dtype=float)))
    return int(np.argmax(scores))


def _pick_thompson_grid(draws, x, proj, margin, directions):
    g = _grid_direction_index(proj, margin)
    scores = (np.asarray(draws, dtype=float) - x) @ directions[g]
    return int(np.argmax(scores))


# --- public selection functions ------------------------------------------


def active_actions(stats: Sequence[ActionStats], spec: ProblemSpec) -> list:
    """Indices whose confidence region contains a boundary point of the
    target window (d=2 only; higher dimensions keep every action active)."""
    if spec.d != 2:
        return list(range(len(stats)))
    out = []
    for i, s in enumerate(stats):
        if _is_active(s.scalar_mean - spec.x, s.margin, spec.epsilon):
            out.append(i)
    return out


def select_uniform(stats, spec: ProblemSpec, grid: DirectionGrid) -> int:
    """Least-sampled action; restricted to the active set for d=2."""
    geometry._require_sampled(stats)
    n = [s.n for s in stats]
    if spec.d == 2:
        act = [_is_active(s.scalar_mean - spec.x, s.margin, spec.epsilon) for s in stats]
        return _pick_uniform_line(n, act)
    return _pick_least_sampled(n)


def select_lucb_mean(stats, spec: ProblemSpec, grid: DirectionGrid) -> int:
    """Action whose confidence boundary reaches furthest from the target
    along the direction of greatest uncertainty."""
    geometry._require_sampled(stats)
    if spec.d == 2:
        lo, hi = geometry.stats_bounds_1d(stats, spec.x)
        return _pick_lucb_mean_line(lo, hi)
    proj, margin = geometry.stats_projections(stats, spec.x_vector, grid)
    return _pick_lucb_mean_grid(proj, margin)


def select_lucb_ratio(stats, spec: ProblemSpec, grid: DirectionGrid) -> int:
    """Action with the largest confidence-interval ratio past the target in
    the uncertain direction, scaled down by sqrt of its sample count."""
    geometry._require_sampled(stats)
    if spec.d == 2:
        lo, hi = geometry.stats_bounds_1d(stats, spec.x)
        dev = [s.scalar_mean - spec.x for s in stats]
        margin = [s.margin for s in stats]
        n = [s.n for s in stats]
        return _pick_lucb_ratio_line(dev, margin, n, lo, hi)
    proj, margin = geometry.stats_projections(stats, spec.x_vector, grid)
    return _pick_lucb_ratio_grid(proj, margin, [s.n for s in stats])


def thompson_posterior_draws(
    stats: Sequence[ActionStats],
    spec: ProblemSpec,
    rng: np.random.Generator,
    prior: Optional[tuple] = None,
) -> np.ndarray:
    """One posterior mean draw per action (Beta for d=2, Dirichlet for d>=3)."""
    if spec.d == 2:
        a0, b0 = prior if prior is not None else (1.0, 1.0)
        alphas = np.array([a0 + s.counts[1] for s in stats])
        betas = np.array([b0 + s.counts[0] for s in stats])
        return rng.beta(alphas, betas)
    base = np.asarray(prior if prior is not None else np.ones(spec.d), dtype=float)
    counts = np.array([s.counts for s in stats], dtype=float)
    g = rng.standard_gamma(counts + base)
    return g / g.sum(axis=1, keepdims=True)


def select_thompson(
    stats,
    spec: ProblemSpec,
    grid: DirectionGrid,
    rng_stream: np.random.Generator,
    prior: Optional[tuple] = None,
    draws=None,
) -> int:
    """Action whose posterior draw lies furthest from the target along the
    direction of greatest uncertainty. ``draws`` overrides the posterior
    sampling (testing hook)."""
    geometry._require_sampled(stats)
    if draws is None:
        draws = thompson_posterior_draws(stats, spec, rng_stream, prior)
    if spec.d == 2:
        lo, hi = geometry.stats_bounds_1d(stats, spec.x)
        return _pick_thompson_line(draws, spec.x, lo, hi)
    proj, margin = geometry.stats_projections(stats, spec.x_vector, grid)
    return _pick_thompson_grid(draws, spec.x_vector, proj, margin, grid.directions)


# --- run engine ------------------------------------------------------------


class _MarginTable:
    """Cache of margin(n) values, grown on demand."""

    def __init__(self, mspec: confidence.MarginSpec):
        self._mspec = mspec
        self._vals = [math.inf]  # index 0 unused

    def __call__(self, n: int) -> float:
        vals = self._vals
        while len(vals) <= n:
            vals.append(confidence.margin(len(vals), self._mspec))
        return vals[n]


class _Buffers:
    """Per-action label buffers fed by block draws from each source."""

    def __init__(self, sources: Sequence[SampleSource], seed: int):
        self._sources = sources
        self._streams = [action_stream(seed, a) for a in range(len(sources))]
        self._blocks = [None] * len(sources)
        self._pos = [0] * len(sources)

    def next(self, a: int) -> int:
        block = self._blocks[a]
        pos = self._pos[a]
        if block is None or pos >= len(block):
            block = self._sources[a].draw_block(self._streams[a], DRAW_BLOCK)
            if len(block) == 0:
                raise SourceDrainedError(f"source drained: action {a} has no more labels")
            self._blocks[a] = block
            pos = 0
        self._pos[a] = pos + 1
        return int(block[pos])


def _run_line(kind, sources, spec, seed, max_steps, record):
    k = spec.k
    x = spec.x
    eps = spec.epsilon
    table = _MarginTable(spec.margin_spec())
    buffers = _Buffers(sources, seed)
    sel_rng = selection_stream(seed)
    prior = kind.prior if kind.prior is not None else (1.0, 1.0)
    if len(prior) != 2:
        raise ValueError("thompson prior for d=2 needs two parameters")

    n = [0] * k
    succ = [0] * k
    dev = [0.0] * k
    mar = [math.inf] * k
    lo = [-math.inf] * k
    hi = [math.inf] * k
    act = [True] * k
    traj = [] if record else None
    # posterior parameters, maintained incrementally for the thompson branch
    ts_alpha = np.full(k, prior[0])
    ts_beta = np.full(k, prior[1])

    def observe(a):
        label = buffers.next(a)
        n[a] += 1
        succ[a] += label
        if label:
            ts_alpha[a] += 1.0
        else:
            ts_beta[a] += 1.0
        d = succ[a] / n[a] - x
        b = table(n[a])
        dev[a] = d
        mar[a] = b
        lo[a] = d - b
        hi[a] = d + b
        act[a] = _is_active(d, b, eps)
        if record:
            traj.append(a)

    for a in range(k):
        observe(a)
    t = k

    name = kind.name
    while True:
        up_in = max(lo)
        down_in = -min(hi)
        inner = up_in if up_in < down_in else down_in
        if inner > -eps:
            verdict = FEASIBLE
            break
        up_out = max(hi)
        down_out = -min(lo)
        outer = up_out if up_out < down_out else down_out
        if outer < -eps:
            verdict = INFEASIBLE
            break
        if t >= max_steps:
            verdict = UNDECIDED
            break
        if name == "uniform":
            a = _pick_uniform_line(n, act)
        elif name == "lucb_mean":
            a = _pick_lucb_mean_line(lo, hi)
        elif name == "lucb_ratio":
            a = _pick_lucb_ratio_line(dev, mar, n, lo, hi)
        else:
            # scalar draws consume the stream identically to one vectorized
            # call but skip numpy's small-array overhead
            beta = sel_rng.beta
            draws = [beta(ts_alpha[i], ts_beta[i]) for i in range(k)]
            a = _pick_thompson_line(draws, x, lo, hi)
        observe(a)
        t += 1

    per_action = tuple(
        ActionStats(
            n=n[i],
            counts=(n[i] - succ[i], succ[i]),
            mean_hat=((n[i] - succ[i]) / n[i], succ[i] / n[i]),
            margin=mar[i],
        )
        for i in range(k)
    )
    return Decision(verdict, tau=t, per_action=per_action, trajectory=tuple(traj) if record else None)


def _run_grid(kind, sources, spec, grid, seed, max_steps, record):
    k = spec.k
    d = spec.d
    x = spec.x_vector
    eps = spec.epsilon
    feas_thresh = -spec.lam * eps
    G = grid.directions
    table = _MarginTable(spec.margin_spec())
    buffers = _Buffers(sources, seed)
    sel_rng = selection_stream(seed)
    prior = np.asarray(kind.prior if kind.prior is not None else np.ones(d), dtype=float)
    if prior.shape != (d,):
        raise ValueError(f"thompson prior for d={d} needs {d} parameters")

    counts = np.zeros((k, d), dtype=np.int64)
    n = np.zeros(k, dtype=np.int64)
    proj = np.zeros((k, grid.size))
    mar = np.full(k, math.inf)
    traj = [] if record else None

    def observe(a):
        label = buffers.next(a)
        counts[a, label] += 1
        n[a] += 1
        proj[a] = G @ (counts[a] / n[a] - x)
        mar[a] = table(int(n[a]))
        if record:
            traj.append(a)

    for a in range(k):
        observe(a)
    t = k

    name = kind.name
    while True:
        col_lo = (proj - mar[:, None]).max(axis=0)
        inner = float(col_lo.min())
        if inner > feas_thresh:
            verdict = FEASIBLE
            break
        outer = float((proj + mar[:, None]).max(axis=0).min())
        if outer < -eps:
            verdict = INFEASIBLE
            break
        if t >= max_steps:
            verdict = UNDECIDED
            break
        if name == "uniform":
            a = _pick_least_sampled(n)
        elif name == "lucb_mean":
            g = int(col_lo.argmin())
            a = int(np.argmax(proj[:, g] + mar))
        elif name == "lucb_ratio":
            g = int(col_lo.argmin())
            along = proj[:, g]
            den = -along + mar
            blown = np.flatnonzero(den <= 0.0)
            if len(blown):
                a = int(blown[np.argmin(n[blown])])
            else:
                a = int(np.argmax((along + mar) / (den * np.sqrt(n))))
        else:
            gd = sel_rng.standard_gamma(counts + prior)
            draws = gd / gd.sum(axis=1, keepdims=True)
            g = int(col_lo.argmin())
            a = int(np.argmax((draws - x) @ G[g]))
        observe(a)
        t += 1

    per_action = tuple(
        ActionStats(
            n=int(n[i]),
            counts=tuple(int(c) for c in counts[i]),
            mean_hat=tuple(int(c) / int(n[i]) for c in counts[i]),
            margin=float(mar[i]),
        )
        for i in range(k)
    )
    return Decision(verdict, tau=t, per_action=per_action, trajectory=tuple(traj) if record else None)


def run_policy(
    kind: PolicyKind,
    sources: Sequence[SampleSource],
    spec: ProblemSpec,
    grid: DirectionGrid,
    seed: int,
    max_steps: int,
    record_trajectory: bool = False,
) -> Decision:
    """Run one sequential experiment to a Decision.

    Samples each action once, then repeats: stopping check, selection, draw,
    update. Exhausting ``max_steps`` yields the distinguished "undecided"
    outcome carrying final stats. Fixed (kind, sources, seed, spec) reproduce
    the identical trajectory and Decision.
    """
    if len(sources) != spec.k:
        raise ValueError(f"expected {spec.k} sources, got {len(sources)}")
    if max_steps < spec.k:
        raise ValueError(f"max_steps must be >= k={spec.k}")
    if spec.d == 2:
        return _run_line(kind, sources, spec, seed, max_steps, record_trajectory)
    return _run_grid(kind, sources, spec, grid, seed, max_steps, record_trajectory)
