"""Scenario library, Monte-Carlo trial runner, aggregation, and persistence.

Built-in scenarios reproduce the simulation study's parameter sheet at desk
scale: target 0.5 (two groups) or the simplex center (three groups), window
radius 0.1, confidence 0.01, ten actions, thirty trials, and a 300-direction
grid with slack 0.99 in the three-group setting. Listed mean sheets carry
fewer than ten values; scenarios pad by cycling the non-optimal row. The
non-unique variants duplicate the optimal row so several equally good
subsets exist (the three-group |J|=3 non-unique sheet is its near-center
row cycled alone).
"""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence, Union

from . import geometry
from .core import (
    FEASIBLE,
    INFEASIBLE,
    UNDECIDED,
    BernoulliSource,
    Instance,
    MultinomialSource,
    ProblemSpec,
    trial_seeds,
)
from .geometry import label_instance, sphere_grid
from .policies import ALL_POLICIES, POLICY_NAMES, PolicyKind, run_policy

DEFAULT_SEED = 2718
DEFAULT_TRIALS = 30
DEFAULT_GRID_SIZE = 300
BERNOULLI_MAX_STEPS = 10**7
MULTINOMIAL_MAX_STEPS = 10**8

TRIAL_HEADER = ("scenario", "policy", "trial", "seed", "tau", "verdict", "correct")
AGGREGATE_HEADER = ("scenario", "policy", "mean_tau", "std_tau", "error_rate", "undecided")


class ScenarioError(ValueError):
    """A scenario failed to parse or validate."""


@dataclass(frozen=True)
class Scenario:
    """One reproducible experiment: an instance, the policies to race on it,
    and the trial/seed/step-budget bookkeeping."""

    name: str
    spec: ProblemSpec
    instance: Instance
    policies: tuple
    trials: int
    seed: int
    max_steps: int
    grid_size: int = DEFAULT_GRID_SIZE

    def __post_init__(self):
        if self.trials < 1:
            raise ScenarioError("trials must be >= 1")
        if self.max_steps < self.spec.k:
            raise ScenarioError("max_steps must be >= k")
        if self.spec.d > 2 and self.grid_size < self.spec.d + 1:
            raise ScenarioError("grid_size must be >= d+1")
        if len(self.instance.means) != self.spec.k:
            raise ScenarioError(
                f"instance has {len(self.instance.means)} means but k={self.spec.k}"
            )


def make_scenario(
    name: str,
    means,
    *,
    d: int,
    x,
    epsilon: float = 0.1,
    delta: float = 0.01,
    lam: float = 0.99,
    policies: Sequence[PolicyKind] = ALL_POLICIES,
    trials: int = DEFAULT_TRIALS,
    seed: int = DEFAULT_SEED,
    max_steps: Optional[int] = None,
    grid_size: int = DEFAULT_GRID_SIZE,
) -> Scenario:
    """Build a validated scenario; the instance label comes from the oracle."""
    spec = ProblemSpec(d=d, k=len(means), x=x, epsilon=epsilon, delta=delta, lam=lam)
    if max_steps is None:
        max_steps = BERNOULLI_MAX_STEPS if d == 2 else MULTINOMIAL_MAX_STEPS
    return Scenario(
        name=name,
        spec=spec,
        instance=label_instance(means, spec),
        policies=tuple(policies),
        trials=trials,
        seed=seed,
        max_steps=max_steps,
        grid_size=grid_size,
    )


def vary(scenario: Scenario, **overrides) -> Scenario:
    """Scenario with some fields replaced; spec-level overrides (delta,
    epsilon, ...) rebuild the spec and relabel the instance."""
    spec_fields = {"d", "k", "x", "epsilon", "delta", "lam"}
    spec_over = {f: overrides.pop(f) for f in list(overrides) if f in spec_fields}
    if spec_over:
        spec = replace(scenario.spec, **spec_over)
        overrides["spec"] = spec
        overrides["instance"] = label_instance(scenario.instance.means, spec)
    return replace(scenario, **overrides)


# --- built-in scenario sheets ----------------------------------------------

_X3 = (1 / 3, 1 / 3, 1 / 3)

_BERN_OPTIMAL = {1: (0.5,), 2: (0.3, 0.7)}
_BERN_NONOPT = (0.48, 0.52)
_MULTI_OPTIMAL = {
    1: (_X3,),
    2: ((0.1, 0.57, 0.33), (0.57, 0.1, 0.33)),
    3: ((0.2, 0.1, 0.7), (0.7, 0.2, 0.1), (0.1, 0.7, 0.2)),
}
_MULTI_NONOPT = {
    1: ((0.0, 0.0, 1.0),),
    2: ((0.2, 0.47, 0.33), (0.47, 0.2, 0.33)),
    3: ((0.33, 0.33, 0.34), (0.33, 0.34, 0.33), (0.34, 0.33, 0.33)),
}


def _pad(lead, filler, k):
    means = list(lead)
    i = 0
    while len(means) < k:
        means.append(filler[i % len(filler)])
        i += 1
    return tuple(means)


def builtin_scenarios() -> dict:
    """All ten built-in scenarios keyed by name."""
    out = {}
    for size, opt in _BERN_OPTIMAL.items():
        out[f"bern-J{size}-unique"] = make_scenario(
            f"bern-J{size}-unique", _pad(opt, _BERN_NONOPT, 10), d=2, x=0.5
        )
        out[f"bern-J{size}-nonunique"] = make_scenario(
            f"bern-J{size}-nonunique", _pad(opt + opt, _BERN_NONOPT, 10), d=2, x=0.5
        )
    for size, opt in _MULTI_OPTIMAL.items():
        non = _MULTI_NONOPT[size]
        out[f"multi-J{size}-unique"] = make_scenario(
            f"multi-J{size}-unique", _pad(opt, non, 10), d=3, x=_X3
        )
        lead = non if size == 3 else opt + opt
        out[f"multi-J{size}-nonunique"] = make_scenario(
            f"multi-J{size}-nonunique", _pad(lead, non, 10), d=3, x=_X3
        )
    return out


def _parse_policies(names) -> tuple:
    kinds = []
    for name in names:
        if name not in POLICY_NAMES:
            raise ScenarioError(f"field 'policies': unknown policy {name!r}")
        kinds.append(PolicyKind(name))
    return tuple(kinds)


def load_scenario(path_or_name: Union[str, Path]) -> Scenario:
    """Load a built-in scenario by name or parse a scenario file.

    Scenario files are JSON objects with fields {name, d, k, x, epsilon,
    delta, lambda, means, policies, trials, seed, grid_size, max_steps};
    everything after means is optional.
    """
    builtins = builtin_scenarios()
    key = str(path_or_name)
    if key in builtins:
        return builtins[key]
    path = Path(path_or_name)
    if not path.exists():
        raise ScenarioError(
            f"{key!r} is neither a built-in scenario ({', '.join(sorted(builtins))}) nor a file"
        )
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ScenarioError(f"{path}: scenario file must hold a JSON object")
    required = ("name", "d", "k", "x", "epsilon", "delta", "means")
    for field in required:
        if field not in raw:
            raise ScenarioError(f"{path}: missing required field {field!r}")
    try:
        d = int(raw["d"])
        x = raw["x"] if d == 2 else tuple(raw["x"])
        means = tuple(raw["means"]) if d == 2 else tuple(tuple(m) for m in raw["means"])
        scenario = make_scenario(
            str(raw["name"]),
            means,
            d=d,
            x=x,
            epsilon=float(raw["epsilon"]),
            delta=float(raw["delta"]),
            lam=float(raw.get("lambda", 0.99)),
            policies=_parse_policies(raw.get("policies", POLICY_NAMES)),
            trials=int(raw.get("trials", DEFAULT_TRIALS)),
            seed=int(raw.get("seed", DEFAULT_SEED)),
            max_steps=int(raw["max_steps"]) if raw.get("max_steps") is not None else None,
            grid_size=int(raw.get("grid_size", DEFAULT_GRID_SIZE)),
        )
    except ScenarioError:
        raise
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
    if len(means) != int(raw["k"]):
        raise ScenarioError(f"{path}: field 'k' is {raw['k']} but {len(means)} means given")
    return scenario


def sources_for(instance: Instance, spec: ProblemSpec) -> list:
    """Simulated sources matching the instance's true means."""
    if spec.d == 2:
        return [BernoulliSource(p) for p in instance.means]
    return [MultinomialSource(mu) for mu in instance.means]


# --- trial running ----------------------------------------------------------


@dataclass(frozen=True)
class TrialResult:
    scenario: str
    policy: str
    trial: int
    seed: int
    tau: int
    verdict: str
    correct: Optional[bool]


@dataclass(frozen=True)
class Aggregate:
    scenario: str
    policy: str
    mean_tau: float
    std_tau: float
    error_rate: float
    undecided: int


def _run_one_trial(scenario: Scenario, trial: int, seed: int) -> list:
    grid = sphere_grid(scenario.spec.d, scenario.grid_size)
    sources = sources_for(scenario.instance, scenario.spec)
    rows = []
    for kind in scenario.policies:
        decision = run_policy(
            kind, sources, scenario.spec, grid, seed, scenario.max_steps
        )
        correct = None
        if decision.decided:
            correct = decision.verdict == scenario.instance.label
        rows.append(
            TrialResult(
                scenario=scenario.name,
                policy=kind.name,
                trial=trial,
                seed=seed,
                tau=decision.tau,
                verdict=decision.verdict,
                correct=correct,
            )
        )
    return rows


def _trial_worker(args):
    return _run_one_trial(*args)


def run_trials(scenario: Scenario, workers: int = 1) -> list:
    """Run trials x policies variance-paired runs.

    Every policy in a given trial shares the trial's seed, hence the same
    per-action sample streams. Rows come back ordered by (trial, policy
    position) regardless of worker count.
    """
    seeds = trial_seeds(scenario.seed, scenario.trials)
    jobs = [(scenario, t, seeds[t]) for t in range(scenario.trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_trial = list(pool.map(_trial_worker, jobs))
    else:
        per_trial = [_run_one_trial(*job) for job in jobs]
    return [row for rows in per_trial for row in rows]


def aggregate(results: Sequence[TrialResult]) -> list:
    """Per (scenario, policy) mean/stddev of tau, error rate over decided
    trials, and undecided count. Population stddev (a single row has 0)."""
    if not results:
        raise ValueError("no results to aggregate")
    groups = {}
    for row in results:
        groups.setdefault((row.scenario, row.policy), []).append(row)
    out = []
    for (scen, policy) in sorted(groups):
        rows = groups[(scen, policy)]
        taus = [r.tau for r in rows]
        decided = [r for r in rows if r.verdict != UNDECIDED]
        wrong = sum(1 for r in decided if r.correct is False)
        out.append(
            Aggregate(
                scenario=scen,
                policy=policy,
                mean_tau=statistics.fmean(taus),
                std_tau=statistics.pstdev(taus),
                error_rate=wrong / len(decided) if decided else 0.0,
                undecided=len(rows) - len(decided),
            )
        )
    return out


# --- persistence -------------------------------------------------------------


def _open_dest(destination, mode="w"):
    if hasattr(destination, "write"):
        return destination, False
    try:
        return open(destination, mode, newline=""), True
    except OSError as exc:
        raise OSError(f"cannot write {destination}: {exc}") from exc


def _correct_str(correct: Optional[bool]) -> str:
    if correct is None:
        return ""
    return "true" if correct else "false"


def emit_trials(results: Sequence[TrialResult], destination) -> None:
    """Write per-trial rows as CSV (byte-identical for identical inputs)."""
    fh, owned = _open_dest(destination)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRIAL_HEADER)
        for r in results:
            w.writerow(
                (r.scenario, r.policy, r.trial, r.seed, r.tau, r.verdict, _correct_str(r.correct))
            )
    finally:
        if owned:
            fh.close()


def emit_aggregates(aggregates: Sequence[Aggregate], destination) -> None:
    """Write aggregate rows as CSV."""
    fh, owned = _open_dest(destination)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGGREGATE_HEADER)
        for a in aggregates:
            w.writerow(
                (a.scenario, a.policy, repr(a.mean_tau), repr(a.std_tau), repr(a.error_rate), a.undecided)
            )
    finally:
        if owned:
            fh.close()


def emit(results, destination) -> None:
    """Write TrialResult or Aggregate rows to a CSV destination."""
    rows = list(results)
    if not rows:
        raise ValueError("nothing to emit")
    if isinstance(rows[0], TrialResult):
        emit_trials(rows, destination)
    elif isinstance(rows[0], Aggregate):
        emit_aggregates(rows, destination)
    else:
        raise TypeError(f"cannot emit rows of type {type(rows[0]).__name__}")


def read_trials(source) -> list:
    """Parse a per-trial CSV back into TrialResult rows (emit's inverse)."""
    if hasattr(source, "read"):
        fh, owned = source, False
    else:
        try:
            fh, owned = open(source, newline=""), True
        except OSError as exc:
            raise OSError(f"cannot read {source}: {exc}") from exc
    try:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != TRIAL_HEADER:
            raise ValueError(f"unexpected header {header!r}")
        rows = []
        for rec in reader:
            scen, policy, trial, seed, tau, verdict, correct = rec
            rows.append(
                TrialResult(
                    scenario=scen,
                    policy=policy,
                    trial=int(trial),
                    seed=int(seed),
                    tau=int(tau),
                    verdict=verdict,
                    correct=None if correct == "" else correct == "true",
                )
            )
        return rows
    finally:
        if owned:
            fh.close()


def run_manifest(scenario: Scenario, version: str) -> dict:
    """Structured record of one run's configuration, for auditable reruns."""
    spec = scenario.spec
    return {
        "scenario": scenario.name,
        "d": spec.d,
        "k": spec.k,
        "x": spec.x,
        "epsilon": spec.epsilon,
        "delta": spec.delta,
        "lambda": spec.lam,
        "means": scenario.instance.means,
        "label": scenario.instance.label,
        "policies": [p.name for p in scenario.policies],
        "trials": scenario.trials,
        "seed": scenario.seed,
        "max_steps": scenario.max_steps,
        "grid_size": scenario.grid_size,
        "version": version,
    }
