"""Figure rendering for emitted trial results.

Turns per-trial rows into one stopping-time comparison figure per scenario
(mean samples to decision per policy, with spread bars), written next to the
aggregate CSV. The data path stays in `harness`; this module only draws.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .harness import Aggregate, TrialResult, aggregate, emit_aggregates

POLICY_LABELS = {
    "uniform": "Uniform",
    "lucb_mean": "LUCB Mean",
    "lucb_ratio": "LUCB Ratio",
    "thompson": "Thompson",
}

_BAR_COLORS = ("#888888", "#4878d0", "#ee854a", "#6acc64")


def render_scenario_figure(aggs: Sequence[Aggregate], path: Path, dpi: int = 150) -> None:
    """Bar chart of mean stopping time per policy for one scenario."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    labels = [POLICY_LABELS.get(a.policy, a.policy) for a in aggs]
    means = [a.mean_tau for a in aggs]
    stds = [a.std_tau for a in aggs]
    colors = [_BAR_COLORS[i % len(_BAR_COLORS)] for i in range(len(aggs))]
    bars = ax.bar(labels, means, yerr=stds, capsize=4, color=colors)
    for bar, a in zip(bars, aggs):
        note = f"{a.mean_tau:.0f}"
        if a.undecided:
            note += f"\n({a.undecided} undecided)"
        ax.annotate(
            note,
            xy=(bar.get_x() + bar.get_width() / 2, bar.get_height()),
            xytext=(0, 3),
            textcoords="offset points",
            ha="center",
            fontsize=8,
        )
    ax.set_ylabel("mean samples to decision")
    ax.set_title(aggs[0].scenario)
    ax.grid(axis="y", alpha=0.3)
    ax.margins(y=0.15)
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)


def render_report(
    results: Sequence[TrialResult],
    out_dir,
    *,
    dpi: int = 150,
    image_format: str = "png",
) -> list:
    """Write the aggregate CSV plus one figure per scenario into out_dir.

    Returns the written paths (aggregate first).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    aggs = aggregate(results)
    agg_path = out_dir / "aggregate.csv"
    emit_aggregates(aggs, agg_path)
    written = [agg_path]
    by_scenario = {}
    for a in aggs:
        by_scenario.setdefault(a.scenario, []).append(a)
    for scenario in sorted(by_scenario):
        path = out_dir / f"{scenario}_stopping_time.{image_format}"
        render_scenario_figure(by_scenario[scenario], path, dpi=dpi)
        written.append(path)
    return written
