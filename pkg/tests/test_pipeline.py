# -*- coding: utf-8 -*-
"""Tests for the subcommand stages and their artifacts"""

import json
import math

import pytest

from forward_performance.config import config_hash, load_config
from forward_performance.errors import ConfigError
from forward_performance.pipeline import run_subcommand
from forward_performance.reporting import read_csv, read_header


class TestEval:
    def test_initial_time_reproduces_the_datum(self, cir_power_config, tmp_path):
        summary = run_subcommand(cir_power_config, "eval", tmp_path)
        assert summary["success"]
        frame = read_csv(tmp_path / "eval.csv")
        initial = frame[frame["t"] == 0.0]
        assert len(initial) > 0
        assert (initial["combined"] == initial["datum"]).all()
        assert (frame["error"] >= 0.0).all()

    def test_header_carries_hash_and_seed(self, cir_power_config, tmp_path):
        summary = run_subcommand(cir_power_config, "eval", tmp_path)
        header = read_header(tmp_path / "eval.csv")
        assert header["config_hash"] == config_hash(cir_power_config) == summary["config_hash"]
        assert header["seed"] == str(cir_power_config.seed)

    def test_reruns_are_byte_identical(self, cir_power_config, tmp_path):
        run_subcommand(cir_power_config, "eval", tmp_path / "a")
        run_subcommand(cir_power_config, "eval", tmp_path / "b")
        assert (tmp_path / "a" / "eval.csv").read_bytes() == (tmp_path / "b" / "eval.csv").read_bytes()

    def test_unknown_subcommand(self, cir_power_config, tmp_path):
        with pytest.raises(ConfigError):
            run_subcommand(cir_power_config, "nope", tmp_path)


class TestConverge:
    def test_slow_slopes(self, tmp_path):
        summary = run_subcommand(load_config(preset="cir-power"), "converge", tmp_path)
        slopes = json.loads((tmp_path / "slopes.json").read_text())
        assert slopes == json.loads(json.dumps(summary["slopes"], default=float))
        assert 0.85 <= slopes["slow"]["two_term_slope"] <= 1.15
        assert 0.4 <= slopes["slow"]["one_term_slope"] <= 0.6
        assert (tmp_path / "converge_slow.csv").exists()
        assert not (tmp_path / "converge_multiscale.csv").exists()


class TestPortfolioStage:
    def test_columns_and_exact_reference(self, cir_power_config, tmp_path):
        run_subcommand(cir_power_config, "portfolio", tmp_path)
        frame = read_csv(tmp_path / "portfolio.csv")
        for column in ("weight_0", "myopic_0", "slow_hedge_0", "fast_hedge_0", "exact_0"):
            assert column in frame.columns
        total = frame["myopic_0"] + frame["slow_hedge_0"] + frame["fast_hedge_0"]
        assert ((frame["weight_0"] - total).abs() <= 1e-12 * frame["weight_0"].abs()).all()


class TestDriftStage:
    def test_exact_feedback_has_no_drift(self, cir_power_config, tmp_path):
        summary = run_subcommand(cir_power_config, "drift", tmp_path, options={"feedback": "exact"})
        assert summary["feedback"] == "exact"
        frame = read_csv(tmp_path / "drift.csv")
        assert (frame["theta"].abs() <= 1e-8).all()

    def test_exact_feedback_needs_a_benchmark(self, tmp_path):
        cfg = load_config(preset="ou-linear", overrides={"grid": {"t": [0.5], "x": [1.0], "y1": [0.5], "y2": [0.0]}})
        with pytest.raises(ConfigError):
            run_subcommand(cfg, "drift", tmp_path, options={"feedback": "exact"})


class TestSimulateStage:
    def test_martingale_row(self, tmp_path):
        cfg = load_config(preset="cir-power", overrides={
            "simulation": {"n_paths": 256, "horizon": 0.01, "dt": 1e-3}, "seed": 4})
        summary = run_subcommand(cfg, "simulate", tmp_path, options={"paths": True})
        assert summary["value_kind"] == "exact"
        assert summary["rng_seed"] == 4
        assert (tmp_path / "simulate.csv").exists()
        assert (tmp_path / "paths.npz").exists()
        assert math.isfinite(summary["z_score"])


class TestPoissonStage:
    def test_residual_is_small(self, tmp_path):
        summary = run_subcommand(load_config(preset="cir-fast"), "poisson", tmp_path)
        assert summary["max_residual"] <= 1e-5
        frame = read_csv(tmp_path / "poisson.csv")
        assert ((frame["phi_prime"] - 1.0).abs() <= 1e-6).all()

    def test_needs_an_active_fast_factor(self, cir_power_config, tmp_path):
        with pytest.raises(ConfigError):
            run_subcommand(cir_power_config, "poisson", tmp_path)


class TestPlotStage:
    def test_svg_is_reproducible(self, cir_power_config, tmp_path):
        run_subcommand(cir_power_config, "eval", tmp_path)
        options = {"input": str(tmp_path / "eval.csv"), "x": "x", "y": "combined"}
        run_subcommand(cir_power_config, "plot", tmp_path / "a", options=options)
        run_subcommand(cir_power_config, "plot", tmp_path / "b", options=options)
        first = (tmp_path / "a" / "plot.svg").read_bytes()
        assert first.lstrip().startswith(b"<?xml")
        assert first == (tmp_path / "b" / "plot.svg").read_bytes()

    def test_missing_column(self, cir_power_config, tmp_path):
        run_subcommand(cir_power_config, "eval", tmp_path)
        with pytest.raises(ConfigError, match="no column"):
            run_subcommand(cir_power_config, "plot", tmp_path,
                           options={"input": str(tmp_path / "eval.csv"), "x": "x", "y": "nope"})

    def test_needs_options(self, cir_power_config, tmp_path):
        with pytest.raises(ConfigError):
            run_subcommand(cir_power_config, "plot", tmp_path)
