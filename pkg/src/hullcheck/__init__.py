"""hullcheck: adaptive sampling to decide whether a target group proportion
lies within reach of a set of unknown data sources.

Sample k sources with unknown category distributions, one label at a time,
until either some mixture of their estimated means provably covers the
relaxed target (feasible) or the target window is provably separated from
every source (infeasible), with probability at least 1 - delta.
"""

from .bounds import (
    BoundComparison,
    BoundReport,
    GapReport,
    OptimalSubset,
    compare_upper_bounds,
    gaps,
    lower_bound_feasible,
    lower_bound_infeasible,
    optimal_subset,
    solve_s,
    upper_bound_lucb_mean,
    upper_bound_uniform,
)
from .confidence import BudgetReport, MarginSpec, margin, validate_budget
from .core import (
    FEASIBLE,
    INFEASIBLE,
    UNDECIDED,
    ActionStats,
    BernoulliSource,
    Decision,
    Instance,
    MultinomialSource,
    ProblemSpec,
    ReplaySource,
    SampleSource,
    SourceDrainedError,
    action_stream,
    draw,
    selection_stream,
    trial_seeds,
    update,
)
from .geometry import (
    DirectionGrid,
    FeasibilityCertificate,
    hull_distance,
    kl_bernoulli,
    label_instance,
    oracle_feasibility,
    separability_margins,
    sphere_grid,
    uncertainty_direction,
)
from .harness import (
    Aggregate,
    Scenario,
    ScenarioError,
    TrialResult,
    aggregate,
    builtin_scenarios,
    emit,
    emit_aggregates,
    emit_trials,
    load_scenario,
    make_scenario,
    read_trials,
    run_trials,
    sources_for,
    vary,
)
from .policies import (
    ALL_POLICIES,
    LUCB_MEAN,
    LUCB_RATIO,
    THOMPSON,
    UNIFORM,
    PolicyKind,
    StopCheck,
    active_actions,
    check_stop,
    run_policy,
    select_lucb_mean,
    select_lucb_ratio,
    select_thompson,
    select_uniform,
)

__version__ = "0.1.0"
