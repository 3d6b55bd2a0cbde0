"""User-opinion scatter: per-user preference rows projected onto the stance
simplex at t0 and at the final step, colored by group, annotated with the
population mean stance (UMS) and mean opinion entropy proxy (UMOE)."""

from __future__ import annotations

import os

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt

GROUP_NAMES = ("Left", "Neutral", "Right")
GROUP_COLORS = ("#1f77b4", "#7f7f7f", "#d62728")


def _load_matrix(path: str) -> np.ndarray:
    if not os.path.exists(path):
        raise FileNotFoundError(f"missing preference export: {path}")
    return np.atleast_2d(np.loadtxt(path, delimiter=","))


def normalized_rows(U: np.ndarray) -> np.ndarray:
    sums = U.sum(axis=1, keepdims=True)
    sums[sums == 0] = 1.0
    return U / sums


def ums(U: np.ndarray) -> float:
    """Population mean stance on the [-1, 1] axis."""
    rows = normalized_rows(np.asarray(U, dtype=float))
    scores = rows @ np.linspace(-1.0, 1.0, rows.shape[1])
    return float(scores.mean())


def umoe(U: np.ndarray) -> float:
    """Mean per-user population variance of the normalized preference row."""
    rows = normalized_rows(np.asarray(U, dtype=float))
    return float(rows.var(axis=1).mean())


def simplex_xy(U: np.ndarray) -> np.ndarray:
    """Barycentric projection of normalized rows onto the 2-simplex triangle
    with corners Left=(0,0), Neutral=(0.5, sqrt(3)/2), Right=(1,0)."""
    rows = normalized_rows(np.asarray(U, dtype=float))
    if rows.shape[1] != 3:
        raise ValueError("simplex scatter expects 3-stance preference rows")
    corners = np.array([[0.0, 0.0], [0.5, np.sqrt(3.0) / 2.0], [1.0, 0.0]])
    return rows @ corners


def _panel(ax, U: np.ndarray, groups: np.ndarray, title: str) -> None:
    xy = simplex_xy(U)
    for gid, (name, color) in enumerate(zip(GROUP_NAMES, GROUP_COLORS)):
        mask = groups == gid
        if mask.any():
            ax.scatter(xy[mask, 0], xy[mask, 1], s=14, alpha=0.7,
                       color=color, label=name, edgecolors="none")
    triangle = np.array([[0, 0], [0.5, np.sqrt(3.0) / 2.0], [1, 0], [0, 0]])
    ax.plot(triangle[:, 0], triangle[:, 1], color="0.6", linewidth=0.8)
    for (x, y), corner in zip([(0, 0), (0.5, np.sqrt(3.0) / 2.0), (1, 0)],
                              GROUP_NAMES):
        ax.annotate(corner, (x, y), textcoords="offset points",
                    xytext=(0, -12 if y == 0 else 6),
                    ha="center", fontsize=8, color="0.4")
    ax.annotate(f"UMS={ums(U):+.3f}\nUMOE={umoe(U):.4f}",
                xy=(0.02, 0.96), xycoords="axes fraction",
                va="top", fontsize=9,
                bbox=dict(boxstyle="round", fc="white", alpha=0.8))
    ax.set_title(title)
    ax.set_aspect("equal")
    ax.set_xticks([])
    ax.set_yticks([])
    ax.legend(fontsize=8, loc="lower right")


def opinion_scatter(run_dirs, out_path: str) -> str:
    """One row of panels per run directory: user preferences at t0 and, when
    exported, at the final step."""
    if isinstance(run_dirs, str):
        run_dirs = [run_dirs]
    if not run_dirs:
        raise ValueError("no run directories given")

    panels = []  # (row_label, [(title, U, groups), ...])
    for run_dir in run_dirs:
        t0_path = os.path.join(run_dir, "preferences_t0.csv")
        final_path = os.path.join(run_dir, "preferences_final.csv")
        groups_path = os.path.join(run_dir, "groups.csv")
        if not os.path.exists(groups_path):
            raise FileNotFoundError(f"missing group export: {groups_path}")
        groups = np.atleast_1d(np.loadtxt(groups_path, delimiter=",",
                                          dtype=int))
        U0 = _load_matrix(t0_path)
        row = [("t = 0", U0, groups)]
        if os.path.exists(final_path):
            row.append(("final step", _load_matrix(final_path), groups))
        panels.append((os.path.basename(os.path.normpath(run_dir)), row))

    n_cols = max(len(row) for _label, row in panels)
    fig, axes = plt.subplots(len(panels), n_cols,
                             figsize=(4.6 * n_cols, 4.4 * len(panels)),
                             squeeze=False)
    for row_idx, (label, row) in enumerate(panels):
        for col_idx in range(n_cols):
            ax = axes[row_idx][col_idx]
            if col_idx < len(row):
                title, U, groups = row[col_idx]
                _panel(ax, U, groups, f"{label}\n{title}")
            else:
                ax.axis("off")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path
