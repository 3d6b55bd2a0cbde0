"""Command-line surface: generate / run / sweep / reproduce / analyze.

Exit codes: 0 success, 1 usage error, 2 run failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from .analyze import aggregate, write_aggregate_csv
from .engine import (ModeratorConfig, RecommenderConfig, RunConfig,
                     read_summary_csv, run, sweep, write_run,
                     write_summary_csv)
from .recommend import MFConfig
from .scenario import (BootstrapConfig, ScenarioConfig, bootstrap,
                       generate_items, generate_users)
from .usermodel import UserModelConfig


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(1)


def _add_run_flags(parser):
    parser.add_argument("--scenario", type=int, default=1, choices=[1, 2, 3, 4])
    parser.add_argument("--users", type=int, default=100, help="user count m")
    parser.add_argument("--items", type=int, default=3000, help="item count n")
    parser.add_argument("--amplification", type=float, default=2.0,
                        help="scenario-4 Right-group preference scale factor")
    parser.add_argument("--dirichlet-peak", type=float, default=8.0,
                        help="preference concentration on the own stance")
    parser.add_argument("--recommender", default="oracle",
                        choices=["oracle", "inaccurate", "random", "mf", "pp"])
    parser.add_argument("--noise-sigma", type=float, default=0.3,
                        help="inaccurate-CB score noise")
    parser.add_argument("--moderator", default="none",
                        choices=["none", "rr", "kc", "rd", "sd"])
    parser.add_argument("--lambda", dest="lam", type=float, default=0.4,
                        help="KC moderation strength in (0, 1]")
    parser.add_argument("--alpha", type=int, default=1,
                        help="items swapped per user for RD/SD")
    parser.add_argument("--beta", type=float, default=0.45,
                        help="silhouette threshold for tight clusters")
    parser.add_argument("--clusters", type=int, default=2,
                        help="number of co-clusters")
    parser.add_argument("--gamma", type=float, default=0.001,
                        help="preference update coefficient")
    parser.add_argument("--click-noise", type=float, default=0.05,
                        help="choice-model Gaussian noise sigma")
    parser.add_argument("--initial-items", type=int, default=10,
                        help="bootstrap items shown per user")
    parser.add_argument("--k", type=int, default=5, help="slate size")
    parser.add_argument("--steps", type=int, default=60, help="loop length T")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--config", default=None,
                        help="JSON config file; CLI flags override its values")


def _config_from_args(args) -> RunConfig:
    file_cfg = {}
    if args.config:
        with open(args.config) as fh:
            file_cfg = json.load(fh)

    def pick(section, key, fallback):
        return file_cfg.get(section, {}).get(key, fallback)

    scen = ScenarioConfig(
        id=args.scenario, m=args.users, n=args.items,
        amplification_factor=args.amplification,
        dirichlet_peak=args.dirichlet_peak,
        item_split=pick("scenario", "item_split", None),
        group_split=tuple(pick("scenario", "group_split", (0.56, 0.11, 0.33))),
    )
    boot = BootstrapConfig(initial_items_per_user=args.initial_items)
    rec = RecommenderConfig(kind=args.recommender, noise_sigma=args.noise_sigma,
                            mf=MFConfig(**file_cfg.get("mf", {})))
    mod = ModeratorConfig(kind=args.moderator, lam=args.lam, alpha=args.alpha,
                          beta=args.beta, n_clusters=args.clusters,
                          **{key: file_cfg["moderator"][key]
                             for key in ("per_step_quota", "global_silhouette",
                                         "raw_space_silhouette", "proportional")
                             if key in file_cfg.get("moderator", {})})
    user = UserModelConfig(gamma=args.gamma, click_noise_sigma=args.click_noise)
    return RunConfig(scenario=scen, bootstrap_cfg=boot, recommender=rec,
                     moderator=mod, user=user, k=args.k, T=args.steps,
                     seed=args.seed)


def cmd_generate(args) -> int:
    cfg = _config_from_args(args)
    os.makedirs(args.out, exist_ok=True)
    A = generate_items(cfg.scenario, cfg.seed)
    U, groups = generate_users(cfg.scenario, cfg.seed)
    exposure, log, _clicked, warnings = bootstrap(U, A, cfg.user,
                                                  cfg.bootstrap_cfg, cfg.seed)
    np.savetxt(os.path.join(args.out, "preferences.csv"), U, delimiter=",",
               fmt="%.12g")
    np.savetxt(os.path.join(args.out, "stances.csv"), A, delimiter=",", fmt="%d")
    np.savetxt(os.path.join(args.out, "groups.csv"), groups, delimiter=",",
               fmt="%d")
    log.write_csv(os.path.join(args.out, "bootstrap_log.csv"))
    for warning in warnings:
        print(f"warning: {warning}", file=sys.stderr)
    print(f"wrote generated data to {args.out}")
    return 0


def cmd_run(args) -> int:
    cfg = _config_from_args(args)
    result = run(cfg)
    run_dir = write_run(result, args.out)
    summary = {key: result.summary[key]
               for key in ("ctr", "jsd_o", "jsd_g", "jsd_o_read", "jsd_g_read",
                           "ums", "umoe")}
    print(json.dumps({"run_dir": run_dir, **summary}, indent=2))
    return 0


def _grid_configs(scenarios, recommenders, moderators, gammas, base_args):
    configs = []
    for scen_id in scenarios:
        for rec_kind in recommenders:
            for mod_spec in moderators:
                for gamma in gammas:
                    args = argparse.Namespace(**vars(base_args))
                    args.scenario = scen_id
                    args.recommender = rec_kind
                    args.gamma = gamma
                    if isinstance(mod_spec, tuple):
                        args.moderator = mod_spec[0]
                        for key, value in mod_spec[1].items():
                            setattr(args, key, value)
                    else:
                        args.moderator = mod_spec
                    configs.append(_config_from_args(args))
    return configs


MODERATOR_GRID = ["none", "rr", ("kc", {"lam": 0.4}), ("rd", {"alpha": 1}),
                  ("sd", {"alpha": 1})]

PRESETS = {
    "rq1": dict(scenarios=[1, 2, 3, 4], recommenders=["oracle", "mf", "pp"],
                moderators=["none"], gammas=[0.0, 0.001]),
    "rq2-oracle": dict(scenarios=[1, 2, 3, 4], recommenders=["oracle"],
                       moderators=MODERATOR_GRID, gammas=[0.001]),
    "rq2-inaccurate": dict(scenarios=[1, 2, 3, 4], recommenders=["inaccurate"],
                           moderators=MODERATOR_GRID, gammas=[0.001]),
    "rq2-random": dict(scenarios=[1, 2, 3, 4], recommenders=["random"],
                       moderators=MODERATOR_GRID, gammas=[0.001]),
    "rq3": dict(scenarios=[1, 2, 3, 4], recommenders=["oracle"],
                moderators=MODERATOR_GRID, gammas=[0.001, 0.01]),
    "runtime": dict(scenarios=[1, 2, 3, 4], recommenders=["oracle"],
                    moderators=["rr", ("kc", {"lam": 0.4}), ("kc", {"lam": 0.6}),
                                ("rd", {"alpha": 1}), ("rd", {"alpha": 2}),
                                ("sd", {"alpha": 1}), ("sd", {"alpha": 2})],
                    gammas=[0.001]),
}


def _execute_sweep(configs, seeds, workers, out, keep_runs=False) -> int:
    rows, failures = sweep(configs, seeds, workers=workers, out_dir=out,
                           keep_runs=keep_runs)
    if rows:
        records = aggregate(rows, baseline="moderator")
        write_aggregate_csv(records, os.path.join(out, "aggregate.csv"))
    for failure in failures:
        print(f"run failed: {failure['run_id']}: {failure['error']}",
              file=sys.stderr)
    print(f"{len(rows)} runs completed, {len(failures)} failed; "
          f"outputs in {out}")
    if failures and not rows:
        return 2
    return 0


def cmd_sweep(args) -> int:
    scenarios = [int(s) for s in args.scenarios.split(",")]
    recommenders = args.recommenders.split(",")
    moderators = []
    for spec in args.moderators.split(","):
        moderators.append(spec)
    gammas = [float(g) for g in args.gammas.split(",")]
    configs = _grid_configs(scenarios, recommenders, moderators, gammas, args)
    seeds = list(range(args.seeds))
    return _execute_sweep(configs, seeds, args.workers, args.out,
                          keep_runs=args.keep_runs)


def cmd_reproduce(args) -> int:
    preset = PRESETS.get(args.table)
    if preset is None:
        print(f"error: unknown preset {args.table!r}; choose from "
              f"{sorted(PRESETS)}", file=sys.stderr)
        return 1
    configs = _grid_configs(preset["scenarios"], preset["recommenders"],
                            preset["moderators"], preset["gammas"], args)
    seeds = list(range(args.seeds))
    return _execute_sweep(configs, seeds, args.workers, args.out,
                          keep_runs=args.keep_runs)


def cmd_analyze(args) -> int:
    rows = read_summary_csv(args.input)
    records = aggregate(rows, baseline=args.baseline)
    write_aggregate_csv(records, args.out)
    print(f"wrote {len(records)} aggregate rows to {args.out}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(
        prog="stancesim",
        description="Simulate personalized recommendation under "
                    "content-agnostic moderation",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_generate = sub.add_parser(
        "generate", help="generate scenario data and the bootstrap log",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _add_run_flags(p_generate)
    p_generate.add_argument("--out", default="generated")
    p_generate.set_defaults(func=cmd_generate)

    p_run = sub.add_parser(
        "run", help="execute a single simulation run",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _add_run_flags(p_run)
    p_run.add_argument("--out", default="runs")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser(
        "sweep", help="run a grid of configurations over seeds",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _add_run_flags(p_sweep)
    p_sweep.add_argument("--scenarios", default="1")
    p_sweep.add_argument("--recommenders", default="oracle")
    p_sweep.add_argument("--moderators", default="none")
    p_sweep.add_argument("--gammas", default="0.001")
    p_sweep.add_argument("--seeds", type=int, default=10)
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.add_argument("--keep-runs", action="store_true",
                         help="persist per-run directories")
    p_sweep.add_argument("--out", default="sweep")
    p_sweep.set_defaults(func=cmd_sweep)

    p_repro = sub.add_parser(
        "reproduce", help="run a preset experiment grid",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _add_run_flags(p_repro)
    p_repro.add_argument("table", help=f"one of {sorted(PRESETS)}")
    p_repro.add_argument("--seeds", type=int, default=10)
    p_repro.add_argument("--workers", type=int, default=1)
    p_repro.add_argument("--keep-runs", action="store_true")
    p_repro.add_argument("--out", default="reproduce")
    p_repro.set_defaults(func=cmd_reproduce)

    p_analyze = sub.add_parser(
        "analyze", help="aggregate a summary CSV with deltas and stars",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p_analyze.add_argument("--in", dest="input", required=True)
    p_analyze.add_argument("--baseline", default="moderator",
                           choices=["moderator", "recommender"])
    p_analyze.add_argument("--out", default="aggregate.csv")
    p_analyze.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # run failure
        print(f"run failed: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
