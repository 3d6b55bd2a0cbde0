"""Engine orchestration tests: determinism, accounting, persistence,
sweep/aggregate plumbing. Unit-scale runs only; full desk scale lives in
test_acceptance."""

import dataclasses
import filecmp
import os

import numpy as np
import pytest

from stancesim.analyze import aggregate, format_cell, write_aggregate_csv
from stancesim.core import exposure_from_log
from stancesim.engine import (ModeratorConfig, RunConfig, read_summary_csv,
                              run, sweep, write_run, write_summary_csv)

from conftest import small_config


class TestRunBasics:
    def test_summary_fields_present(self, small_run_result):
        summary = small_run_result.summary
        for key in ("ctr", "jsd_o", "jsd_g", "jsd_o_read", "jsd_g_read",
                    "ums", "umoe", "scenario", "recommender", "moderator",
                    "gamma", "seed"):
            assert key in summary
        assert 0.0 <= summary["ctr"] <= 1.0
        assert 0.0 <= summary["jsd_o"] <= 1.0

    def test_per_step_accounting(self, small_run_result):
        cfg = small_run_result.config
        m, k = cfg.scenario.m, cfg.k
        by_step = {}
        for step, _user, _item, _rank, hit in small_run_result.log.records:
            shown, clicks = by_step.get(step, (0, 0))
            by_step[step] = (shown + 1, clicks + int(hit))
        for step in range(1, cfg.T + 1):
            shown, clicks = by_step[step]
            assert shown == m * k
            assert clicks <= shown

    def test_exposure_agg_matches_log_replay(self, small_run_result):
        cfg = small_run_result.config
        replay = exposure_from_log(small_run_result.log, cfg.scenario.m,
                                   cfg.scenario.n,
                                   steps=range(1, cfg.T + 1))
        np.testing.assert_array_equal(small_run_result.exposure_agg, replay)

    def test_steps_series_length(self, small_run_result):
        assert len(small_run_result.steps) == small_run_result.config.T

    def test_preference_updates_applied(self, small_run_result):
        assert small_run_result.preferences_final.sum() > \
            small_run_result.preferences_t0.sum()

    def test_gamma_zero_freezes_preferences(self):
        cfg = small_config()
        cfg = dataclasses.replace(
            cfg, user=dataclasses.replace(cfg.user, gamma=0.0))
        result = run(cfg)
        np.testing.assert_array_equal(result.preferences_t0,
                                      result.preferences_final)

    def test_t_zero_reports_bootstrap_window(self):
        result = run(small_config(T=0))
        assert result.steps == []
        assert all(r[0] == 0 for r in result.log.records)
        assert 0.0 <= result.summary["ctr"] <= 1.0

    def test_unknown_kinds_rejected(self):
        cfg = small_config()
        bad_rec = dataclasses.replace(
            cfg, recommender=dataclasses.replace(cfg.recommender, kind="zz"))
        with pytest.raises(ValueError):
            run(bad_rec)
        bad_mod = dataclasses.replace(cfg, moderator=ModeratorConfig(kind="zz"))
        with pytest.raises(ValueError):
            run(bad_mod)


class TestModeratedRuns:
    @pytest.mark.parametrize("moderator", ["rr", "kc", "rd", "sd"])
    def test_moderated_run_completes(self, moderator):
        result = run(small_config(moderator=moderator, T=4))
        assert len(result.steps) == 4
        assert result.manifest["mod_seconds_per_step"] >= 0.0

    def test_kc_budget_flag_in_manifest(self):
        result = run(small_config(moderator="kc", T=4, lam=0.5))
        assert result.manifest["kc_max_budget_violation"] <= 0.0

    def test_rr_quota_flags_in_manifest(self):
        result = run(small_config(moderator="rr", T=4))
        assert result.manifest["rr_quota_ok"]
        assert result.manifest["rr_quota"] >= 1


class TestDeterminism:
    def test_same_config_identical_outputs(self):
        cfg = small_config(moderator="rd", T=4)
        a, b = run(cfg), run(dataclasses.replace(cfg))
        assert a.summary == b.summary
        assert a.log.records == b.log.records
        np.testing.assert_array_equal(a.preferences_final, b.preferences_final)

    def test_written_files_byte_identical(self, tmp_path):
        cfg = small_config(moderator="sd", T=4)
        dir_a = write_run(run(cfg), str(tmp_path / "a"))
        dir_b = write_run(run(cfg), str(tmp_path / "b"))
        for name in ("summary.csv", "log.csv", "steps.csv", "exposure.csv",
                     "preferences_t0.csv", "preferences_final.csv",
                     "groups.csv"):
            assert filecmp.cmp(os.path.join(dir_a, name),
                               os.path.join(dir_b, name), shallow=False), name

    def test_different_seeds_differ(self):
        a = run(small_config(seed=0))
        b = run(small_config(seed=1))
        assert a.log.records != b.log.records


class TestSweep:
    def test_counting_and_aggregate(self, tmp_path):
        rows, failures = sweep([small_config(T=3)], seeds=[1, 2],
                               out_dir=str(tmp_path))
        assert not failures
        assert len(rows) == 2
        records = aggregate(rows, baseline="moderator")
        assert len(records) == 1
        assert records[0]["n_seeds"] == 2

    def test_order_insensitive_to_parallelism(self, tmp_path):
        configs = [small_config(T=3), small_config(T=3, moderator="rr")]
        serial, _ = sweep(configs, seeds=[0, 1], workers=1)
        parallel, _ = sweep(configs, seeds=[0, 1], workers=2)

        def strip_timing(rows):
            return [{k: v for k, v in row.items()
                     if k != "mod_seconds_per_step"} for row in rows]

        assert strip_timing(serial) == strip_timing(parallel)

    def test_failures_recorded_not_fatal(self, tmp_path):
        good = small_config(T=2)
        bad = small_config(T=2, m=4, n=5)  # users exhaust eligible items
        rows, failures = sweep([good, bad], seeds=[0], out_dir=str(tmp_path))
        assert len(rows) == 1
        assert len(failures) == 1
        assert (tmp_path / "failures.json").exists()

    def test_summary_csv_round_trip(self, tmp_path):
        rows, _ = sweep([small_config(T=3)], seeds=[0, 1])
        path = tmp_path / "summary.csv"
        write_summary_csv(rows, path)
        back = read_summary_csv(path)
        assert len(back) == 2
        for orig, loaded in zip(rows, back):
            assert loaded["seed"] == orig["seed"]
            assert loaded["ctr"] == pytest.approx(orig["ctr"], abs=1e-9)


class TestAnalyze:
    def test_baseline_cell_is_unstarred(self):
        rows, _ = sweep([small_config(T=3)], seeds=[0, 1])
        record = aggregate(rows, baseline="moderator")[0]
        assert record["ctr_delta_pct"] == 0.0
        assert record["ctr_stars"] == ""

    def test_disjoint_constant_samples_star(self):
        rows = []
        for moderator, ctr in (("none", 1.0), ("rr", 0.0)):
            for seed in range(4):
                rows.append({"scenario": 1, "recommender": "oracle",
                             "moderator": moderator, "lambda": "", "alpha": "",
                             "gamma": 0.001, "seed": seed, "ctr": ctr,
                             "jsd_o": 0.1, "jsd_g": 0.1, "jsd_o_read": 0.1,
                             "jsd_g_read": 0.1, "ums": 0.0, "umoe": 0.1,
                             "mod_seconds_per_step": 0.0})
        records = aggregate(rows, baseline="moderator")
        starred = [r for r in records if r["moderator"] == "rr"]
        assert starred[0]["ctr_stars"] == "**"

    def test_paper_style_cell_format(self):
        assert format_cell(0.762, -13.3, "**") == "0.762 (-13.3%**)"

    def test_missing_baseline_marked_incomparable(self):
        rows = [{"scenario": 1, "recommender": "oracle", "moderator": "rr",
                 "lambda": "", "alpha": "", "gamma": 0.001, "seed": s,
                 "ctr": 0.5, "jsd_o": 0.1, "jsd_g": 0.1, "jsd_o_read": 0.1,
                 "jsd_g_read": 0.1, "ums": 0.0, "umoe": 0.1,
                 "mod_seconds_per_step": 0.0} for s in range(2)]
        record = aggregate(rows, baseline="moderator")[0]
        assert not record["comparable"]

    def test_aggregate_csv_written(self, tmp_path):
        rows, _ = sweep([small_config(T=3)], seeds=[0, 1])
        path = tmp_path / "aggregate.csv"
        write_aggregate_csv(aggregate(rows), path)
        header = path.read_text().splitlines()[0]
        assert "ctr_mean" in header and "ctr_stars" in header
