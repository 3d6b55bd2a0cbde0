"""Pareto-frontier figure: mean CTR vs mean JSD-O per moderation setting,
with error bars from the cross-seed standard deviations."""

from __future__ import annotations

import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


class EmptyFigureError(ValueError):
    """Requested scenario has no rows in the aggregate CSV."""


def read_aggregate_csv(path: str) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"no rows in {path}")
    required = {"scenario", "moderator", "lambda", "alpha",
                "ctr_mean", "ctr_std", "jsd_o_mean", "jsd_o_std"}
    missing = required - set(rows[0])
    if missing:
        raise ValueError(f"{path} is missing columns: {sorted(missing)}")
    return rows


def cell_label(row: dict) -> str:
    """Marker label with hyperparameters bracketed, e.g. 'kc[λ=0.4]'."""
    moderator = row["moderator"]
    if moderator == "kc" and row.get("lambda"):
        return f"kc[λ={float(row['lambda']):g}]"
    if moderator in ("rd", "sd") and row.get("alpha"):
        return f"{moderator}[α={float(row['alpha']):g}]"
    return moderator


def _plot_panel(ax, rows, scenario: int) -> None:
    markers = "osD^vPXp*h"
    cmap = plt.get_cmap("tab10")
    for idx, row in enumerate(rows):
        label = cell_label(row)
        ax.errorbar(
            float(row["jsd_o_mean"]), float(row["ctr_mean"]),
            xerr=float(row["jsd_o_std"] or 0.0),
            yerr=float(row["ctr_std"] or 0.0),
            marker=markers[idx % len(markers)], color=cmap(idx % 10),
            markersize=7, capsize=3, linestyle="none", label=label)
        ax.annotate(label,
                    (float(row["jsd_o_mean"]), float(row["ctr_mean"])),
                    textcoords="offset points", xytext=(6, 6), fontsize=8)
    ax.set_xlabel("JSD-O (stance divergence from uniform)")
    ax.set_ylabel("CTR")
    ax.set_title(f"Scenario {scenario}")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8, loc="best")


def pareto_plot(aggregate_csv: str, scenarios, out_path: str) -> str:
    """Render one panel per scenario; a marker per moderation cell sits at
    (mean JSD-O, mean CTR) with std-dev error bars."""
    if isinstance(scenarios, int):
        scenarios = [scenarios]
    rows = read_aggregate_csv(aggregate_csv)
    per_scenario = []
    for scenario in scenarios:
        subset = [r for r in rows if int(r["scenario"]) == int(scenario)]
        if not subset:
            raise EmptyFigureError(
                f"scenario {scenario} has no rows in {aggregate_csv}")
        subset.sort(key=cell_label)
        per_scenario.append(subset)

    fig, axes = plt.subplots(1, len(scenarios),
                             figsize=(5.5 * len(scenarios), 4.5),
                             squeeze=False)
    for ax, subset, scenario in zip(axes[0], per_scenario, scenarios):
        _plot_panel(ax, subset, int(scenario))
    fig.suptitle("Engagement vs stance neutrality per moderation strategy")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path
