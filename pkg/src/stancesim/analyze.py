"""Cross-seed aggregation: per-cell means, standard deviations, percent
change versus a baseline cell, and Welch-test significance stars."""

from __future__ import annotations

import csv
import math
from collections import defaultdict

import numpy as np

from .metrics import welch_t

CELL_KEYS = ("scenario", "recommender", "moderator", "lambda", "alpha", "gamma")
METRICS = ("ctr", "jsd_o", "jsd_g", "jsd_o_read", "jsd_g_read", "ums", "umoe",
           "mod_seconds_per_step")


def group_cells(rows):
    cells = defaultdict(list)
    for row in rows:
        key = tuple(row.get(k, "") for k in CELL_KEYS)
        cells[key].append(row)
    return cells


def _baseline_key(key, baseline: str):
    scenario, recommender, moderator, lam, alpha, gamma = key
    if baseline == "moderator":
        return (scenario, recommender, "none", "", "", gamma)
    if baseline == "recommender":
        return (scenario, "oracle", moderator, lam, alpha, gamma)
    raise ValueError(f"unknown baseline {baseline!r}")


def _samples(cell_rows, metric):
    vals = [row[metric] for row in cell_rows
            if not (isinstance(row[metric], float) and math.isnan(row[metric]))]
    return np.array(vals, dtype=float)


def format_cell(mean: float, delta_pct: float | None, star: str | None) -> str:
    """Paper-style table cell, e.g. '0.762 (-13.3%**)'."""
    if delta_pct is None:
        return f"{mean:.3f}"
    return f"{mean:.3f} ({delta_pct:+.1f}%{star})"


def aggregate(rows, baseline: str = "moderator"):
    """One output row per (scenario, recommender, moderator, hyper, gamma)
    cell with means, stds, deltas and stars versus the baseline cell."""
    cells = group_cells(rows)
    out = []
    for key in sorted(cells, key=lambda k: tuple(str(part) for part in k)):
        cell_rows = cells[key]
        record = dict(zip(CELL_KEYS, key))
        record["n_seeds"] = len(cell_rows)
        base_key = _baseline_key(key, baseline)
        base_rows = cells.get(base_key) if base_key != key else cell_rows
        record["comparable"] = base_rows is not None
        for metric in METRICS:
            vals = _samples(cell_rows, metric)
            if len(vals) == 0:
                record[f"{metric}_mean"] = float("nan")
                record[f"{metric}_std"] = float("nan")
                record[f"{metric}_stars"] = ""
                continue
            record[f"{metric}_mean"] = float(vals.mean())
            record[f"{metric}_std"] = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
            star = ""
            if base_rows is not None and base_key != key:
                base_vals = _samples(base_rows, metric)
                if len(vals) >= 2 and len(base_vals) >= 2:
                    _t, _p, star = welch_t(vals, base_vals)
            record[f"{metric}_stars"] = star
        if base_rows is not None and base_key != key:
            base_ctr = _samples(base_rows, "ctr").mean()
            delta = 100.0 * (record["ctr_mean"] - base_ctr) / base_ctr
            record["ctr_delta_pct"] = delta
            record["ctr_cell"] = format_cell(record["ctr_mean"], delta,
                                             record["ctr_stars"] or "ns")
        else:
            record["ctr_delta_pct"] = 0.0 if base_rows is not None else float("nan")
            record["ctr_cell"] = format_cell(record.get("ctr_mean", float("nan")),
                                             None, None)
        out.append(record)
    return out


def write_aggregate_csv(records, path):
    if not records:
        raise ValueError("no aggregate rows to write")
    cols = list(CELL_KEYS) + ["n_seeds", "comparable", "ctr_cell", "ctr_delta_pct"]
    for metric in METRICS:
        cols += [f"{metric}_mean", f"{metric}_std", f"{metric}_stars"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for record in records:
            writer.writerow([_fmt(record.get(c, "")) for c in cols])


def _fmt(value):
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)
