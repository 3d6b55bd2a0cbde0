"""Tests for the plots package. Inputs are synthetic CSV exports written with
the same column layout the simulator produces; nothing here imports it."""

import csv

import numpy as np
import pytest

from plots.cli import main
from plots.opinions import opinion_scatter, simplex_xy, umoe, ums
from plots.pareto import EmptyFigureError, cell_label, pareto_plot

AGG_COLS = ["scenario", "recommender", "moderator", "lambda", "alpha",
            "gamma", "n_seeds", "comparable", "ctr_cell", "ctr_delta_pct",
            "ctr_mean", "ctr_std", "ctr_stars",
            "jsd_o_mean", "jsd_o_std", "jsd_o_stars"]


def write_aggregate(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=AGG_COLS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def agg_row(scenario, moderator, lam="", alpha="", ctr=0.8, jsd=0.2):
    return {"scenario": scenario, "recommender": "oracle",
            "moderator": moderator, "lambda": lam, "alpha": alpha,
            "gamma": 0.001, "n_seeds": 10, "comparable": True,
            "ctr_cell": f"{ctr:.3f}", "ctr_delta_pct": 0.0,
            "ctr_mean": ctr, "ctr_std": 0.01, "ctr_stars": "",
            "jsd_o_mean": jsd, "jsd_o_std": 0.02, "jsd_o_stars": ""}


def write_run_dir(path, U0, U_final=None, groups=None):
    path.mkdir(parents=True, exist_ok=True)
    m = len(U0)
    if groups is None:
        groups = np.arange(m) % 3
    np.savetxt(path / "preferences_t0.csv", U0, delimiter=",", fmt="%.12g")
    if U_final is not None:
        np.savetxt(path / "preferences_final.csv", U_final, delimiter=",",
                   fmt="%.12g")
    np.savetxt(path / "groups.csv", groups, delimiter=",", fmt="%d")


def random_prefs(m, rng):
    U = rng.dirichlet([2.0, 2.0, 2.0], size=m)
    return U


class TestParetoPlot:
    def test_single_setting_single_marker(self, tmp_path):
        agg = tmp_path / "agg.csv"
        write_aggregate(agg, [agg_row(1, "rr")])
        out = pareto_plot(str(agg), 1, str(tmp_path / "fig.png"))
        assert (tmp_path / "fig.png").stat().st_size > 0
        assert out.endswith("fig.png")

    def test_identical_means_both_rendered(self, tmp_path):
        agg = tmp_path / "agg.csv"
        write_aggregate(agg, [agg_row(1, "rr", ctr=0.7, jsd=0.3),
                              agg_row(1, "kc", lam=0.4, ctr=0.7, jsd=0.3)])
        pareto_plot(str(agg), 1, str(tmp_path / "fig.png"))
        assert (tmp_path / "fig.png").stat().st_size > 0

    def test_two_scenarios_two_panels(self, tmp_path):
        rows = []
        for scenario in (2, 3):
            rows += [agg_row(scenario, "none"), agg_row(scenario, "rr"),
                     agg_row(scenario, "kc", lam=0.4),
                     agg_row(scenario, "rd", alpha=1),
                     agg_row(scenario, "sd", alpha=1)]
        agg = tmp_path / "agg.csv"
        write_aggregate(agg, rows)
        one = pareto_plot(str(agg), 2, str(tmp_path / "one.png"))
        both = pareto_plot(str(agg), [2, 3], str(tmp_path / "both.png"))
        # the two-panel figure is strictly wider than the single panel
        import matplotlib.image as mpimg
        assert mpimg.imread(both).shape[1] > mpimg.imread(one).shape[1]

    def test_missing_scenario_raises_empty_figure_error(self, tmp_path):
        agg = tmp_path / "agg.csv"
        write_aggregate(agg, [agg_row(1, "rr")])
        with pytest.raises(EmptyFigureError):
            pareto_plot(str(agg), 4, str(tmp_path / "fig.png"))

    def test_missing_columns_rejected(self, tmp_path):
        bad = tmp_path / "bad.csv"
        with open(bad, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["scenario", "ctr_mean"])
            writer.writerow([1, 0.8])
        with pytest.raises(ValueError, match="missing columns"):
            pareto_plot(str(bad), 1, str(tmp_path / "fig.png"))

    def test_hyperparameters_bracketed_in_labels(self):
        assert cell_label(agg_row(1, "kc", lam=0.4)) == "kc[λ=0.4]"
        assert cell_label(agg_row(1, "sd", alpha=2)) == "sd[α=2]"
        assert cell_label(agg_row(1, "rd", alpha=1)) == "rd[α=1]"
        assert cell_label(agg_row(1, "rr")) == "rr"
        assert cell_label(agg_row(1, "none")) == "none"

    def test_same_inputs_byte_identical(self, tmp_path):
        agg = tmp_path / "agg.csv"
        write_aggregate(agg, [agg_row(1, "rr"), agg_row(1, "sd", alpha=1,
                                                        ctr=0.75, jsd=0.12)])
        a = pareto_plot(str(agg), 1, str(tmp_path / "a.png"))
        b = pareto_plot(str(agg), 1, str(tmp_path / "b.png"))
        assert open(a, "rb").read() == open(b, "rb").read()


class TestOpinionScatter:
    def test_t0_only_renders_one_panel(self, tmp_path):
        rng = np.random.default_rng(0)
        write_run_dir(tmp_path / "run", random_prefs(30, rng))
        out = opinion_scatter(str(tmp_path / "run"), str(tmp_path / "fig.png"))
        assert (tmp_path / "fig.png").stat().st_size > 0
        assert out.endswith("fig.png")

    def test_gamma_zero_identical_point_sets(self, tmp_path):
        rng = np.random.default_rng(1)
        U = random_prefs(30, rng)
        write_run_dir(tmp_path / "run", U, U_final=U.copy())
        opinion_scatter(str(tmp_path / "run"), str(tmp_path / "fig.png"))
        np.testing.assert_array_equal(simplex_xy(U), simplex_xy(U.copy()))

    def test_moderated_run_lower_umoe(self, tmp_path):
        rng = np.random.default_rng(2)
        # unmoderated drift concentrates preferences; moderation keeps them
        # closer to uniform, which is exactly a lower per-row variance
        concentrated = rng.dirichlet([20.0, 1.0, 1.0], size=40)
        dispersed = rng.dirichlet([5.0, 5.0, 5.0], size=40)
        assert umoe(dispersed) < umoe(concentrated)
        write_run_dir(tmp_path / "none", concentrated, concentrated)
        write_run_dir(tmp_path / "sd", dispersed, dispersed)
        out = opinion_scatter([str(tmp_path / "none"), str(tmp_path / "sd")],
                              str(tmp_path / "fig.png"))
        assert (tmp_path / "fig.png").stat().st_size > 0

    def test_missing_export_is_input_error(self, tmp_path):
        (tmp_path / "empty").mkdir()
        with pytest.raises(FileNotFoundError):
            opinion_scatter(str(tmp_path / "empty"), str(tmp_path / "f.png"))

    def test_local_metrics_match_definitions(self):
        one_sided = np.array([[1.0, 0.0, 0.0]])
        assert ums(one_sided) == -1.0
        assert umoe(one_sided) == pytest.approx(2.0 / 9.0)
        uniform = np.full((5, 3), 1.0 / 3.0)
        assert ums(uniform) == pytest.approx(0.0)
        assert umoe(uniform) == pytest.approx(0.0)

    def test_simplex_projection_corners(self):
        corners = simplex_xy(np.eye(3))
        np.testing.assert_allclose(
            corners, [[0, 0], [0.5, np.sqrt(3) / 2], [1, 0]], atol=1e-12)


class TestCli:
    def test_pareto_cli_success(self, tmp_path, capsys):
        agg = tmp_path / "agg.csv"
        write_aggregate(agg, [agg_row(2, "rr"), agg_row(2, "sd", alpha=1)])
        code = main(["pareto", "--in", str(agg), "--scenario", "2",
                     "--out", str(tmp_path / "s2.png")])
        assert code == 0
        assert (tmp_path / "s2.png").exists()

    def test_pareto_cli_missing_scenario_is_1(self, tmp_path, capsys):
        agg = tmp_path / "agg.csv"
        write_aggregate(agg, [agg_row(2, "rr")])
        code = main(["pareto", "--in", str(agg), "--scenario", "3",
                     "--out", str(tmp_path / "s3.png")])
        assert code == 1
        assert "scenario 3" in capsys.readouterr().err

    def test_pareto_cli_missing_file_is_1(self, tmp_path, capsys):
        code = main(["pareto", "--in", str(tmp_path / "none.csv"),
                     "--scenario", "2", "--out", str(tmp_path / "f.png")])
        assert code == 1

    def test_opinions_cli_success(self, tmp_path):
        rng = np.random.default_rng(3)
        write_run_dir(tmp_path / "run", random_prefs(20, rng),
                      random_prefs(20, rng))
        code = main(["opinions", "--run", str(tmp_path / "run"),
                     "--out", str(tmp_path / "fig.png")])
        assert code == 0
        assert (tmp_path / "fig.png").exists()

    def test_usage_error_is_1(self):
        with pytest.raises(SystemExit) as exc:
            main(["pareto"])
        assert exc.value.code == 1
