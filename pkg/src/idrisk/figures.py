"""SVG renderings of study results.

All functions draw with the Agg backend and write a vector file, so they
work headless.  The 2D box drawing puts quartile rectangles around the
(risk, utility) cloud and whiskers that run from the median point out to
the minimum and maximum on each axis.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .experiments import Box2D, MStudyResult, ScenarioStudyResult, SweepResult


def _draw_box2d(ax, box: Box2D, color: str) -> None:
    r, u = box.risk, box.utility
    ax.add_patch(plt.Rectangle((r.q1, u.q1), r.q3 - r.q1, u.q3 - u.q1,
                               fill=False, edgecolor=color, linewidth=1.5))
    ax.plot([r.min, r.max], [u.median, u.median], color=color, linewidth=1.0)
    ax.plot([r.median, r.median], [u.min, u.max], color=color, linewidth=1.0)


def sweep_figure(result: SweepResult, path: str | Path) -> Path:
    """Boxplot of file risk per radius."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.boxplot([row for row in result.file_risks], tick_labels=[f"{r:g}" for r in result.radii])
    ax.set_xlabel("radius r")
    ax.set_ylabel("file-level risk")
    ax.set_title(f"{result.scenario.id}: risk across radii (maximizing r = {result.maximizing_radius:g})")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def scenario_figure(result: ScenarioStudyResult, path: str | Path) -> Path:
    """Risk-utility scatter with a quartile rectangle per scenario."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7, 5))
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for k, o in enumerate(result.outcomes):
        color = colors[k % len(colors)]
        ax.scatter(o.file_risks, o.u_p, s=18, color=color, alpha=0.7,
                   label=f"{o.scenario.id} (r = {o.radius:g})")
        _draw_box2d(ax, o.box, color)
    ax.set_xlabel("file-level risk")
    ax.set_ylabel("propensity utility (lower = better)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def mstudy_figure(result: MStudyResult, path: str | Path) -> Path:
    """2D boxes of repetition-averaged risk and utility, one per m."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7, 5))
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for k, m in enumerate(result.m_values):
        color = colors[k % len(colors)]
        ax.scatter(result.mean_risks[k], result.mean_utils[k], s=10, color=color,
                   alpha=0.4, label=f"m = {m}")
        _draw_box2d(ax, result.boxes[k], color)
    ax.set_xlabel("mean file-level risk")
    ax.set_ylabel("mean propensity utility")
    ax.set_title(f"{result.scenario.id} at r = {result.radius:g}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path
