"""Desk-scale acceptance grid: the run cells shared by the acceptance
criteria, executed in parallel and reduced to one summary row per run.

Also usable standalone to pre-compute the grid into a JSON cache:
    python3 tests/_acceptance_grid.py /tmp/grid.json
"""

from __future__ import annotations

import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from stancesim.engine import (ModeratorConfig, RecommenderConfig, RunConfig,
                              run)
from stancesim.scenario import ScenarioConfig
from stancesim.usermodel import UserModelConfig

N_SEEDS = 10

# (scenario, recommender, moderator kind, lam, alpha)
MODERATOR_SET = [("none", None, None), ("rr", None, None),
                 ("kc", 0.4, None), ("rd", None, 1), ("sd", None, 1)]
CELLS = (
    [(1, "oracle", *mod) for mod in MODERATOR_SET]
    + [(1, "oracle", "kc", 0.6, None)]          # runtime-contrast cell
    + [(2, "oracle", *mod) for mod in MODERATOR_SET]
    + [(3, "oracle", *mod) for mod in MODERATOR_SET]
    + [(1, "mf", "none", None, None), (1, "pp", "none", None, None)]
)


def desk_config(scenario: int, recommender: str, moderator: str,
                lam, alpha, seed: int) -> RunConfig:
    mod_kwargs = {}
    if lam is not None:
        mod_kwargs["lam"] = lam
    if alpha is not None:
        mod_kwargs["alpha"] = alpha
    return RunConfig(
        scenario=ScenarioConfig(id=scenario),
        recommender=RecommenderConfig(kind=recommender),
        moderator=ModeratorConfig(kind=moderator, **mod_kwargs),
        user=UserModelConfig(gamma=0.001),
        seed=seed)


def run_cell(spec) -> dict:
    scenario, recommender, moderator, lam, alpha, seed = spec
    result = run(desk_config(scenario, recommender, moderator, lam, alpha,
                             seed))
    row = dict(result.summary)
    manifest = result.manifest
    row["mod_seconds_per_step"] = manifest["mod_seconds_per_step"]
    row["kc_max_budget_violation"] = manifest["kc_max_budget_violation"]
    row["rr_quota_ok"] = manifest["rr_quota_ok"]
    row["rr_fallback_warnings"] = manifest["rr_fallback_warnings"]
    row["n_warnings"] = len(manifest["warnings"])
    return row


def run_grid(workers: int | None = None) -> list[dict]:
    specs = [(*cell, seed) for cell in CELLS for seed in range(N_SEEDS)]
    workers = workers or min(8, os.cpu_count() or 1)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(run_cell, specs))
    return rows


def select(rows, scenario=None, recommender=None, moderator=None,
           lam=None, alpha=None):
    """Seed-ordered rows of one grid cell."""
    out = []
    for row in rows:
        if scenario is not None and row["scenario"] != scenario:
            continue
        if recommender is not None and row["recommender"] != recommender:
            continue
        if moderator is not None and row["moderator"] != moderator:
            continue
        if lam is not None and row["lambda"] != lam:
            continue
        if alpha is not None and row["alpha"] != alpha:
            continue
        out.append(row)
    return sorted(out, key=lambda r: r["seed"])


def main() -> int:
    out_path = sys.argv[1] if len(sys.argv) > 1 else "grid.json"
    rows = run_grid()
    with open(out_path, "w") as fh:
        json.dump(rows, fh)
    print(f"wrote {len(rows)} rows to {out_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
