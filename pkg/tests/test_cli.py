"""Command line contracts: flags, row counts, manifests, determinism, the
scoring front end, self-checks, and figure rendering."""

import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from scoreselect import report
from scoreselect.cli import main
from scoreselect.plots import boxplot_statistics


def run_cli(args, cwd=None, env_extra=None):
    """Run the CLI in a subprocess (fresh interpreter, controlled env)."""
    import os

    env = dict(os.environ)
    if env_extra:
        env.update(env_extra)
    return subprocess.run(
        [sys.executable, "-m", "scoreselect", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
        env=env,
    )


@pytest.fixture(scope="module")
def fig1_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("fig1") / "run"
    code = main([
        "simulate", "--scenario", "fig1", "--reps", "10", "--n", "100",
        "--sigma2", "10", "--seed", "1", "--prior", "improper",
        "--out", str(out),
    ])
    assert code == 0
    return out


@pytest.fixture(scope="module")
def fig2_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("fig2") / "run"
    code = main([
        "simulate", "--scenario", "fig2", "--reps", "2", "--n", "50",
        "--seed", "1", "--out", str(out),
    ])
    assert code == 0
    return out


class TestSimulate:
    def test_fig1_row_count(self, fig1_run):
        header, rows = report.read_csv(f"{fig1_run}.csv")
        assert header == report.FIG1_HEADER
        assert len(rows) == 4 * 7 * 10

    def test_fig2_row_count(self, fig2_run):
        header, rows = report.read_csv(f"{fig2_run}.csv")
        assert header == report.TRAJECTORY_HEADER
        assert len(rows) == 50 * 4 * 2  # n * default c-grid size * reps

    def test_same_flags_reproduce_identical_bytes(self, tmp_path, fig1_run):
        out = tmp_path / "again"
        code = main([
            "simulate", "--scenario", "fig1", "--reps", "10", "--n", "100",
            "--sigma2", "10", "--seed", "1", "--prior", "improper",
            "--out", str(out),
        ])
        assert code == 0
        assert Path(f"{out}.csv").read_bytes() == Path(f"{fig1_run}.csv").read_bytes()

    def test_manifest_hashes_outputs(self, fig1_run):
        manifest = json.loads(Path(f"{fig1_run}.manifest.json").read_text())
        assert manifest["tool"] == "scoreselect"
        assert manifest["config"]["scenario"] == "fig1"
        assert manifest["config"]["master_seed"] == 1
        assert manifest["config"]["prior"] == "improper"
        entry = next(o for o in manifest["outputs"] if o["file"].endswith(".csv"))
        assert entry["sha256"] == report.sha256_of(f"{fig1_run}.csv")

    def test_floats_round_trip_exactly(self, fig2_run):
        _, rows = report.read_csv(f"{fig2_run}.csv")
        for row in rows[:200]:
            for key in ("log_bf", "score_diff"):
                value = float(row[key])
                assert report.format_float(value) == row[key]

    def test_univariate_schema(self, tmp_path):
        out = tmp_path / "uni"
        code = main([
            "simulate", "--scenario", "pareto-normal", "--reps", "5",
            "--seed", "2", "--out", str(out),
        ])
        assert code == 0
        header, rows = report.read_csv(f"{out}.csv")
        assert header == report.UNIVARIATE_HEADER
        assert len(rows) == 5 * 2
        assert {r["criterion"] for r in rows} == {"hyvarinen", "bf"}

    def test_config_file_with_flag_override(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "scenario": "fig1", "reps": 3, "n": 40, "seed": 7,
        }))
        out = tmp_path / "cfgrun"
        code = main([
            "simulate", "--config", str(cfg), "--reps", "2", "--out", str(out),
        ])
        assert code == 0
        manifest = json.loads(Path(f"{out}.manifest.json").read_text())
        assert manifest["config"]["reps"] == 2   # flag wins
        assert manifest["config"]["n"] == 40     # file value kept

    def test_bad_flags_exit_2(self, tmp_path):
        assert main(["simulate", "--scenario", "bogus"]) == 2
        assert main([
            "simulate", "--scenario", "fig1", "--prior", "proper",
            "--out", str(tmp_path / "x"),
        ]) == 2
        assert main([
            "simulate", "--scenario", "fig2", "--c-grid", "1,zebra",
            "--out", str(tmp_path / "y"),
        ]) == 2
        assert main(["simulate"]) == 2

    def test_threads_env_determinism(self, tmp_path):
        args = ["simulate", "--scenario", "fig1", "--reps", "6", "--n", "60",
                "--seed", "3", "--out", "run"]
        one = tmp_path / "t1"
        auto = tmp_path / "t0"
        one.mkdir()
        auto.mkdir()
        r1 = run_cli(args, cwd=one, env_extra={"SCORE_SELECT_THREADS": "1"})
        r2 = run_cli(args, cwd=auto, env_extra={"SCORE_SELECT_THREADS": "0"})
        assert r1.returncode == 0 and r2.returncode == 0, (r1.stderr, r2.stderr)
        assert (one / "run.csv").read_bytes() == (auto / "run.csv").read_bytes()


class TestScore:
    @staticmethod
    def write_linear_model(path, prior_a="improper", prior_b="improper"):
        model = {
            "kind": "linear",
            "sigma2": 10.0,
            "candidates": [
                {"name": "first", "design": [[1.0]] * 6, "prior": prior_a},
                {"name": "second", "design": [[1.0]] * 6, "prior": prior_b},
            ],
        }
        path.write_text(json.dumps(model))

    @staticmethod
    def write_data(path, values):
        path.write_text("\n".join(str(v) for v in values) + "\n")

    def test_identical_candidates_tie_to_index_zero(self, tmp_path, capsys):
        model, data = tmp_path / "m.json", tmp_path / "d.txt"
        self.write_linear_model(model)
        self.write_data(data, [1.0, 2.0, 0.5, 1.2, 0.8, 1.4])
        code = main(["score", "--model", str(model), "--data", str(data),
                     "--criterion", "hyvarinen"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["selected"] == 0
        assert payload["selected_name"] == "first"
        assert payload["tie"] is True
        assert payload["scores"][0] == payload["scores"][1]

    def test_flat_prior_under_bayes_factor_exits_3(self, tmp_path, capsys):
        model, data = tmp_path / "m.json", tmp_path / "d.txt"
        self.write_linear_model(model)
        self.write_data(data, [1.0, 2.0, 0.5, 1.2, 0.8, 1.4])
        code = main(["score", "--model", str(model), "--data", str(data),
                     "--criterion", "bf"])
        assert code == 3
        err = capsys.readouterr().err
        assert "first" in err  # names the offending candidate

    def test_flat_prior_under_score_is_finite(self, tmp_path, capsys):
        model, data = tmp_path / "m.json", tmp_path / "d.txt"
        self.write_linear_model(model, prior_b={"type": "proper", "c": 100.0})
        self.write_data(data, [1.0, 2.0, 0.5, 1.2, 0.8, 1.4])
        code = main(["score", "--model", str(model), "--data", str(data),
                     "--criterion", "hyvarinen"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert all(math.isfinite(s) for s in payload["scores"])

    def test_parse_error_reports_line_number(self, tmp_path, capsys):
        model, data = tmp_path / "m.json", tmp_path / "d.txt"
        self.write_linear_model(model)
        data.write_text("1.0\nnot-a-number\n")
        code = main(["score", "--model", str(model), "--data", str(data),
                     "--criterion", "hyvarinen"])
        assert code == 2
        assert ":2:" in capsys.readouterr().err

    def test_univariate_candidates(self, tmp_path, capsys):
        model, data = tmp_path / "m.json", tmp_path / "d.txt"
        model.write_text(json.dumps({
            "kind": "univariate",
            "candidates": [
                {"name": "gamma", "family": "gamma-known-shape", "shape": 2.0},
                {"name": "normal", "family": "normal-known-var", "sigma2": 1.0},
            ],
        }))
        self.write_data(data, [0.8, 1.7, 2.4, 0.9])
        code = main(["score", "--model", str(model), "--data", str(data),
                     "--criterion", "bf"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["criterion"] == "bf"
        assert len(payload["scores"]) == 2

    def test_disqualified_candidate_reported_as_inf(self, tmp_path, capsys):
        model, data = tmp_path / "m.json", tmp_path / "d.txt"
        model.write_text(json.dumps({
            "kind": "univariate",
            "candidates": [
                {"name": "gamma", "family": "gamma-known-shape", "shape": 2.0},
                {"name": "normal", "family": "normal-known-var", "sigma2": 1.0},
            ],
        }))
        self.write_data(data, [0.8, -1.7, 2.4])
        code = main(["score", "--model", str(model), "--data", str(data),
                     "--criterion", "hyvarinen"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["scores"][0] == "inf"
        assert payload["selected_name"] == "normal"

    def test_laplace_candidate_rejected(self, tmp_path, capsys):
        model, data = tmp_path / "m.json", tmp_path / "d.txt"
        model.write_text(json.dumps({
            "kind": "univariate",
            "candidates": [
                {"name": "laplace_model", "family": "laplace"},
                {"name": "normal", "family": "normal-known-var", "sigma2": 1.0},
            ],
        }))
        self.write_data(data, [0.5, 1.5])
        code = main(["score", "--model", str(model), "--data", str(data),
                     "--criterion", "hyvarinen"])
        assert code == 3
        assert "NonSmoothDensity" in capsys.readouterr().err

    def test_poisson_candidate_rejected(self, tmp_path, capsys):
        model, data = tmp_path / "m.json", tmp_path / "d.txt"
        model.write_text(json.dumps({
            "kind": "univariate",
            "candidates": [
                {"name": "poisson_model", "family": "poisson", "rate": 2.0},
                {"name": "normal", "family": "normal-known-var", "sigma2": 1.0},
            ],
        }))
        self.write_data(data, [1.0, 2.0])
        code = main(["score", "--model", str(model), "--data", str(data),
                     "--criterion", "hyvarinen"])
        assert code == 3
        assert "DiscreteSupport" in capsys.readouterr().err

    def test_vector_rows_rejected_for_scalar_models(self, tmp_path, capsys):
        model, data = tmp_path / "m.json", tmp_path / "d.txt"
        self.write_linear_model(model)
        data.write_text("1.0,2.0\n0.5,0.7\n")
        code = main(["score", "--model", str(model), "--data", str(data),
                     "--criterion", "hyvarinen"])
        assert code == 2


class TestCheck:
    def test_clean_build_passes(self, capsys):
        assert main(["check"]) == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out
        assert out.count("PASS") >= 5

    def test_injected_bug_fails_the_derivative_check(self, capsys):
        assert main(["check", "--inject-gaussian-bug"]) == 1
        out = capsys.readouterr().out
        assert "FAIL  finite-difference derivatives" in out


class TestPlot:
    def test_box_determinism(self, fig1_run, tmp_path):
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        assert main(["plot", "--in", f"{fig1_run}.csv", "--kind", "box",
                     "--out", str(a)]) == 0
        assert main(["plot", "--in", f"{fig1_run}.csv", "--kind", "box",
                     "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_line_determinism(self, fig2_run, tmp_path):
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        assert main(["plot", "--in", f"{fig2_run}.csv", "--kind", "line",
                     "--out", str(a)]) == 0
        assert main(["plot", "--in", f"{fig2_run}.csv", "--kind", "line",
                     "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_empty_csv_exits_2(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        assert main(["plot", "--in", str(empty), "--kind", "box",
                     "--out", str(tmp_path / "x.svg")]) == 2

    def test_schema_mismatch_exits_2(self, fig2_run, tmp_path):
        assert main(["plot", "--in", f"{fig2_run}.csv", "--kind", "box",
                     "--out", str(tmp_path / "x.svg")]) == 2

    def test_box_statistics_match_independent_recomputation(self, fig1_run):
        _, rows = report.read_csv(f"{fig1_run}.csv")
        scores = sorted(
            float(r["score"]) for r in rows
            if r["true_model"] == "M3" and r["candidate"] == "M3"
        )
        stats = boxplot_statistics(scores)

        def quantile(sorted_vals, q):
            # linear interpolation between order statistics
            pos = q * (len(sorted_vals) - 1)
            lo = int(math.floor(pos))
            hi = int(math.ceil(pos))
            frac = pos - lo
            return sorted_vals[lo] * (1 - frac) + sorted_vals[hi] * frac

        q1 = quantile(scores, 0.25)
        q3 = quantile(scores, 0.75)
        assert stats["med"] == pytest.approx(quantile(scores, 0.5), rel=1e-12)
        assert stats["q1"] == pytest.approx(q1, rel=1e-12)
        assert stats["q3"] == pytest.approx(q3, rel=1e-12)
        iqr = q3 - q1
        inside = [v for v in scores if q1 - 1.5 * iqr <= v <= q3 + 1.5 * iqr]
        assert stats["whislo"] == pytest.approx(min(inside), rel=1e-12)
        assert stats["whishi"] == pytest.approx(max(inside), rel=1e-12)
        expected_fliers = [v for v in scores if v < min(inside) or v > max(inside)]
        assert stats["fliers"] == pytest.approx(expected_fliers)


class TestFormatting:
    def test_seventeen_digit_round_trip(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            x = float(rng.standard_normal() * 10.0 ** float(rng.integers(-8, 8)))
            assert float(report.format_float(x)) == x
        assert report.format_float(float("inf")) == "inf"
        assert report.format_float(float("-inf")) == "-inf"
        assert report.format_float(float("nan")) == "nan"
