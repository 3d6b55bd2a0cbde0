"""Closed-loop orchestration: scenario -> bootstrap -> (recommend, moderate,
choose, update) for T steps, with metric accumulation, timing and atomic
persistence of run outputs.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import os
import shutil
import tempfile
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .core import (InteractionLog, Slate, check_slates, exposure_from_slates,
                   write_exposure_csv)
from .metrics import ctr as ctr_metric
from .metrics import jsd_group, jsd_overall, ums, umoe
from .moderate import cocluster, disperse, kc_moderate, rr_moderate, rr_quota
from .recommend import (MFConfig, MFState, inaccurate_cb, mf_rec, oracle_cb,
                        pp_rec, random_rec)
from .rng import substream
from .scenario import (BootstrapConfig, ScenarioConfig, bootstrap,
                       generate_items, generate_users)
from .usermodel import UserModelConfig, choose, update_preferences


@dataclass
class RecommenderConfig:
    kind: str = "oracle"
    noise_sigma: float = 0.3
    mf: MFConfig = field(default_factory=MFConfig)


@dataclass
class ModeratorConfig:
    kind: str = "none"
    lam: float = 0.4
    alpha: int = 1
    beta: float = 0.45
    n_clusters: int = 2
    per_step_quota: bool = False
    global_silhouette: bool = False
    raw_space_silhouette: bool = False
    proportional: bool = False


@dataclass
class RunConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    bootstrap_cfg: BootstrapConfig = field(default_factory=BootstrapConfig)
    recommender: RecommenderConfig = field(default_factory=RecommenderConfig)
    moderator: ModeratorConfig = field(default_factory=ModeratorConfig)
    user: UserModelConfig = field(default_factory=UserModelConfig)
    k: int = 5
    T: int = 60
    seed: int = 0

    def __post_init__(self):
        if self.k < 1 or self.T < 0:
            raise ValueError("k must be >= 1 and T >= 0")

    def run_id(self) -> str:
        mod = self.moderator
        suffix = ""
        if mod.kind == "kc":
            suffix = f"-l{mod.lam:g}"
        elif mod.kind in ("rd", "sd"):
            suffix = f"-a{mod.alpha}"
        return (f"s{self.scenario.id}_{self.recommender.kind}_"
                f"{mod.kind}{suffix}_g{self.user.gamma:g}_seed{self.seed}")


@dataclass
class RunResult:
    config: RunConfig
    summary: dict
    steps: list
    manifest: dict
    log: InteractionLog
    preferences_t0: np.ndarray
    preferences_final: np.ndarray
    groups: np.ndarray
    exposure_agg: np.ndarray


class _Counters:
    """Cumulative shown/read stance tallies over the loop window."""

    def __init__(self, num_groups: int, num_stances: int):
        self.shown = np.zeros(num_stances, dtype=np.int64)
        self.read = np.zeros(num_stances, dtype=np.int64)
        self.group_shown = np.zeros((num_groups, num_stances), dtype=np.int64)
        self.group_read = np.zeros((num_groups, num_stances), dtype=np.int64)
        self.exposures = 0
        self.clicks = 0

    def add(self, group: int, stance: int, clicked: bool):
        self.shown[stance] += 1
        self.group_shown[group, stance] += 1
        self.exposures += 1
        if clicked:
            self.read[stance] += 1
            self.group_read[group, stance] += 1
            self.clicks += 1


def _jsd_pair(counts: np.ndarray, group_counts: np.ndarray, warnings: list,
              label: str):
    total = counts.sum()
    if total == 0:
        warnings.append(f"no {label} events in window; JSD undefined")
        return float("nan"), float("nan")
    overall = jsd_overall(counts / total)
    dists = []
    for g, row in enumerate(group_counts):
        if row.sum() == 0:
            warnings.append(f"group {g} has zero {label} exposure; excluded from JSD-G")
            continue
        dists.append(row / row.sum())
    return overall, jsd_group(dists)


def _metric_row(counters: _Counters, U: np.ndarray, warnings: list) -> dict:
    jsd_o, jsd_g = _jsd_pair(counters.shown, counters.group_shown, warnings, "shown")
    jsd_o_read, jsd_g_read = _jsd_pair(counters.read, counters.group_read,
                                       warnings, "read")
    return {
        "ctr": ctr_metric(counters.clicks, counters.exposures),
        "jsd_o": jsd_o,
        "jsd_g": jsd_g,
        "jsd_o_read": jsd_o_read,
        "jsd_g_read": jsd_g_read,
        "ums": ums(U),
        "umoe": umoe(U),
    }


def run(cfg: RunConfig) -> RunResult:
    """Execute one full simulation run; deterministic in (config, seed)."""
    seed = cfg.seed
    scen = cfg.scenario
    warnings: list = []

    A = generate_items(scen, seed)
    U0, groups = generate_users(scen, seed)
    U = U0.copy()
    stance_of = A.argmax(axis=1)

    t_boot = time.perf_counter()
    exposure0, log, clicked, boot_warnings = bootstrap(
        U, A, cfg.user, cfg.bootstrap_cfg, seed)
    boot_seconds = time.perf_counter() - t_boot
    warnings.extend(boot_warnings)

    # RM_agg spans the loop window t = 1..T only; bootstrap exposure is step 0
    rm_agg = np.zeros_like(exposure0)
    counters = _Counters(scen.num_stances, scen.num_stances)
    mf_state: MFState | None = None
    mod = cfg.moderator
    rr_last_quota = None
    steps_out = []
    mod_seconds_total = 0.0
    kc_max_violation = 0.0
    rr_quota_ok = True
    rr_fallbacks = 0
    loop_start = time.perf_counter()

    for t in range(1, cfg.T + 1):
        rec_rng = substream(seed, "recommender", t)
        kind = cfg.recommender.kind
        if kind == "oracle":
            slates = oracle_cb(U, A, clicked, cfg.k, rec_rng)
        elif kind == "inaccurate":
            slates = inaccurate_cb(U, A, clicked, cfg.k,
                                   cfg.recommender.noise_sigma, rec_rng)
        elif kind == "random":
            slates = random_rec(clicked, cfg.k, rec_rng)
        elif kind == "pp":
            slates = pp_rec(clicked.sum(axis=0), clicked, cfg.k, rec_rng)
        elif kind == "mf":
            slates, mf_state, mf_warnings = mf_rec(
                clicked, clicked, cfg.k, cfg.recommender.mf, mf_state, rec_rng)
            warnings.extend(f"step {t}: {w}" for w in mf_warnings)
        else:
            raise ValueError(f"unknown recommender kind {kind!r}")
        check_slates(slates, scen.m, cfg.k, clicked)

        mod_rng = substream(seed, "moderator", t)
        t0 = time.perf_counter()
        if mod.kind == "none":
            pass
        elif mod.kind == "rr":
            slates, mod_warnings, rr_info = rr_moderate(
                slates, t, rm_agg.sum(axis=0), clicked, cfg.k, mod_rng,
                per_step_quota=mod.per_step_quota)
            rr_last_quota = rr_info["quota"]
            rr_fallbacks += len(mod_warnings)
            warnings.extend(f"step {t}: {w}" for w in mod_warnings)
        elif mod.kind == "kc":
            slates, kc_info = kc_moderate(slates, cfg.k, mod.lam, ~clicked, mod_rng)
            kc_max_violation = max(kc_max_violation,
                                   kc_info["weight_total"] - kc_info["budget"])
        elif mod.kind in ("rd", "sd"):
            km_seed = int(substream(seed, "moderator", "kmeans", t).integers(2 ** 31))
            model = cocluster(rm_agg, mod.n_clusters, km_seed,
                              raw_space_silhouette=mod.raw_space_silhouette)
            slates, mod_warnings = disperse(
                slates, model, mod.alpha, mod.beta, mod.kind, clicked, mod_rng,
                global_silhouette=mod.global_silhouette,
                proportional=mod.proportional)
            warnings.extend(f"step {t}: {w}" for w in mod_warnings)
        else:
            raise ValueError(f"unknown moderator kind {mod.kind!r}")
        mod_elapsed = time.perf_counter() - t0
        mod_seconds_total += mod_elapsed
        check_slates(slates, scen.m, cfg.k, clicked)

        rm_step = exposure_from_slates(slates, scen.m, scen.n)
        if mod.kind == "rr" and not rr_fallbacks:
            # only items that gained exposure this step are bound by the quota
            # (bootstrap may have pushed some items past it already)
            step_items = rm_step.sum(axis=0)
            exposure_after = (rm_step if mod.per_step_quota
                              else rm_agg + rm_step).sum(axis=0)
            if ((step_items > 0) & (exposure_after > rr_last_quota)).any():
                rr_quota_ok = False

        user_rng = substream(seed, "user", t)
        step_clicks = 0
        for slate in sorted(slates, key=lambda s: s.user):
            user = slate.user
            picks = choose(U[user], np.array(slate.items), A, cfg.user, user_rng)
            clicked_items = []
            for rank, (item, hit) in enumerate(zip(slate.items, picks)):
                log.append(t, user, item, rank, bool(hit))
                counters.add(groups[user], stance_of[item], bool(hit))
                if hit:
                    clicked_items.append(item)
                    clicked[user, item] = True
                    step_clicks += 1
            if clicked_items:
                U[user] = update_preferences(U[user], clicked_items, A,
                                             cfg.user.gamma)
        rm_agg += rm_step

        row = {"step": t,
               "ctr_step": step_clicks / (scen.m * cfg.k),
               "mod_seconds": mod_elapsed}
        row.update(_metric_row(counters, U, []))
        steps_out.append(row)

    loop_seconds = time.perf_counter() - loop_start

    final_warnings: list = []
    if cfg.T == 0:
        # bootstrap-only run: report the bootstrap window
        boot_counters = _Counters(scen.num_stances, scen.num_stances)
        for _step, user, item, _rank, hit in log.records:
            boot_counters.add(groups[user], stance_of[item], hit)
        summary = _metric_row(boot_counters, U, final_warnings)
    else:
        summary = _metric_row(counters, U, final_warnings)
    warnings.extend(final_warnings)

    summary.update({
        "scenario": scen.id,
        "recommender": cfg.recommender.kind,
        "moderator": mod.kind,
        "gamma": cfg.user.gamma,
        "lambda": mod.lam if mod.kind == "kc" else "",
        "alpha": mod.alpha if mod.kind in ("rd", "sd") else "",
        "seed": seed,
    })

    manifest = {
        "run_id": cfg.run_id(),
        "version": __version__,
        "config": dataclasses.asdict(cfg),
        "seed": seed,
        "bootstrap_seconds": boot_seconds,
        "loop_seconds": loop_seconds,
        "mod_seconds_total": mod_seconds_total,
        "mod_seconds_per_step": (mod_seconds_total / cfg.T) if cfg.T else 0.0,
        "kc_max_budget_violation": kc_max_violation,
        "rr_quota": rr_last_quota,
        "rr_quota_ok": rr_quota_ok,
        "rr_fallback_warnings": rr_fallbacks,
        "ums_t0": ums(U0),
        "umoe_t0": umoe(U0),
        "warnings": warnings,
    }

    return RunResult(cfg, summary, steps_out, manifest, log, U0, U, groups, rm_agg)


SUMMARY_COLUMNS = ["scenario", "recommender", "moderator", "gamma", "lambda",
                   "alpha", "seed", "ctr", "jsd_o", "jsd_g", "jsd_o_read",
                   "jsd_g_read", "ums", "umoe"]


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def write_run(result: RunResult, out_dir: str) -> str:
    """Persist one run atomically under out_dir/<run_id>/."""
    run_dir = os.path.join(out_dir, result.manifest["run_id"])
    os.makedirs(out_dir, exist_ok=True)
    tmp = tempfile.mkdtemp(prefix=".tmp_run_", dir=out_dir)
    try:
        with open(os.path.join(tmp, "manifest.json"), "w") as fh:
            json.dump(result.manifest, fh, indent=2, default=str)
        result.log.write_csv(os.path.join(tmp, "log.csv"))
        with open(os.path.join(tmp, "steps.csv"), "w", newline="") as fh:
            # wall-clock timings stay out of the CSVs so identical configs
            # produce byte-identical runs; they live in manifest.json
            cols = ["step", "ctr_step", "ctr", "jsd_o", "jsd_g",
                    "jsd_o_read", "jsd_g_read", "ums", "umoe"]
            writer = csv.writer(fh)
            writer.writerow(cols)
            for row in result.steps:
                writer.writerow([_fmt(row[c]) for c in cols])
        with open(os.path.join(tmp, "summary.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(SUMMARY_COLUMNS)
            writer.writerow([_fmt(result.summary[c]) for c in SUMMARY_COLUMNS])
        np.savetxt(os.path.join(tmp, "preferences_t0.csv"),
                   result.preferences_t0, delimiter=",", fmt="%.12g")
        np.savetxt(os.path.join(tmp, "preferences_final.csv"),
                   result.preferences_final, delimiter=",", fmt="%.12g")
        np.savetxt(os.path.join(tmp, "groups.csv"), result.groups,
                   delimiter=",", fmt="%d")
        write_exposure_csv(result.exposure_agg,
                           os.path.join(tmp, "exposure.csv"), sparse=True)
        if os.path.isdir(run_dir):
            shutil.rmtree(run_dir)
        os.replace(tmp, run_dir)
    except Exception:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return run_dir


def _run_one(cfg: RunConfig):
    result = run(cfg)
    row = dict(result.summary)
    row["mod_seconds_per_step"] = result.manifest["mod_seconds_per_step"]
    return row, result


def sweep(configs, seeds, workers: int = 1, out_dir: str | None = None,
          keep_runs: bool = False):
    """Execute every (config, seed) pair; returns (summary_rows, failures).

    Results are sorted deterministically by (run id), so the output does not
    depend on the parallelism level.
    """
    jobs = []
    for cfg in configs:
        for seed in seeds:
            jobs.append(dataclasses.replace(cfg, seed=seed))
    rows = []
    failures = []
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_run_one, job): job for job in jobs}
            for future, job in futures.items():
                try:
                    row, result = future.result()
                    rows.append(row)
                    if out_dir and keep_runs:
                        write_run(result, os.path.join(out_dir, "runs"))
                except Exception as exc:  # record and continue
                    failures.append({"run_id": job.run_id(), "error": str(exc)})
    else:
        for job in jobs:
            try:
                row, result = _run_one(job)
                rows.append(row)
                if out_dir and keep_runs:
                    write_run(result, os.path.join(out_dir, "runs"))
            except Exception as exc:
                failures.append({"run_id": job.run_id(), "error": str(exc)})

    rows.sort(key=_row_key)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        write_summary_csv(rows, os.path.join(out_dir, "summary.csv"))
        if failures:
            with open(os.path.join(out_dir, "failures.json"), "w") as fh:
                json.dump(failures, fh, indent=2)
    return rows, failures


def _row_key(row):
    return (row["scenario"], row["recommender"], row["moderator"],
            str(row["lambda"]), str(row["alpha"]), row["gamma"], row["seed"])


def write_summary_csv(rows, path):
    cols = SUMMARY_COLUMNS + ["mod_seconds_per_step"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for row in rows:
            writer.writerow([_fmt(row.get(c, "")) for c in cols])


def read_summary_csv(path):
    rows = []
    with open(path, newline="") as fh:
        for raw in csv.DictReader(fh):
            row = dict(raw)
            for key in ("scenario", "seed"):
                row[key] = int(row[key])
            for key in ("gamma", "ctr", "jsd_o", "jsd_g", "jsd_o_read",
                        "jsd_g_read", "ums", "umoe", "mod_seconds_per_step"):
                row[key] = float(row[key]) if row.get(key) not in ("", None) else float("nan")
            rows.append(row)
    return rows
