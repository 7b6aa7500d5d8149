# -*- coding: utf-8 -*-
"""
Subcommand orchestration

Each subcommand is one stage: it evaluates the library on the configured
grids, writes its artifacts into the output directory and returns a summary
dict. Failures surface as ForwardPerformanceError subclasses.

Stages:
- eval       surface values and corrections on the state grid
- converge   rate tables and slope fits against the exact benchmarks
- portfolio  approximate portfolio broken into myopic and hedging parts
- drift      generator drift Theta over the state grid
- simulate   Monte Carlo martingale check of the value along a feedback
- poisson    fast corrector slope, corrector and plug-back residual
- plot       SVG chart of two columns of an earlier CSV
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from .config import RunConfig, benchmark_params, build_market_model, config_hash
from .drift import (
    ExactPowerSurface,
    GeneratorInput,
    approx_feedback,
    exact_feedback,
    expansion_surface,
    per_path_feedback,
    simulate_paths,
    theta_scan,
    zero_feedback,
)
from .errors import ConfigError
from .expansion import ValueSurface, approx_value
from .factors import MarketModel, invariant_density, lambda_bar, phi, phi_prime, poisson_residual
from .portfolio import pi_approx
from .power import SeparableBenchmark, error_study, fast_reparam_study, multiscale_properties, multiscale_study
from .reporting import plot_svg, write_csv, write_json

logger = logging.getLogger(__name__)


SUBCOMMANDS = ("eval", "converge", "portfolio", "drift", "simulate", "poisson", "plot")


def _banner(title: str) -> None:
    logger.info("=" * 60)
    logger.info(title)
    logger.info("=" * 60)


# ============ Run Context ============

@dataclass
class RunContext:
    """Validated config plus the objects every stage shares"""
    cfg: RunConfig
    out_dir: Path
    threads: int = 1
    options: dict = field(default_factory=dict)

    @cached_property
    def config_hash(self) -> str:
        return config_hash(self.cfg)

    @cached_property
    def model(self) -> MarketModel:
        return build_market_model(self.cfg)

    @cached_property
    def surface(self) -> ValueSurface:
        return ValueSurface(self.model, tol=self.cfg.tolerances.quad)

    @cached_property
    def params(self):
        return benchmark_params(self.cfg)

    @property
    def benchmark(self) -> Optional[str]:
        return self.cfg.model.benchmark

    @property
    def fd_steps(self) -> Dict[str, float]:
        step = self.cfg.tolerances.fd_step
        return {"t": step, "x": step, "y1": step, "y2": step}

    def exact_surface(self, delta: float, epsilon: float) -> Optional[ExactPowerSurface]:
        p_slow, p_fast = self.params
        if self.benchmark == "slow":
            return ExactPowerSurface.slow_benchmark(p_slow, delta)
        if self.benchmark == "fast":
            return ExactPowerSurface.fast_benchmark(p_fast, epsilon)
        if self.benchmark == "separable":
            return ExactPowerSurface.separable(SeparableBenchmark(p_slow, p_fast), delta, epsilon)
        return None

    def write(self, rows: List[dict], name: str) -> str:
        return str(write_csv(rows, self.out_dir / name, self.config_hash, self.cfg.seed))


# ============ Stages ============

def run_eval(ctx: RunContext) -> dict:
    _banner("EVAL: EXPANSION ON THE STATE GRID")
    rows = []
    for delta, epsilon in ctx.cfg.scale_pairs():
        exact = ctx.exact_surface(delta, epsilon)
        for t, x, y1, y2 in ctx.cfg.states():
            result = approx_value(ctx.surface, t, x, y1, y2, delta, epsilon)
            row = {"t": t, "x": x, "y1": y1, "y2": y2, "delta": delta, "epsilon": epsilon,
                   "datum": ctx.model.v0(x), **result.model_dump(exclude={"delta", "epsilon"})}
            if exact is not None:
                row["exact"] = float(exact.value(t, x, y1, y2))
                row["error"] = abs(row["exact"] - result.combined)
            rows.append(row)
    path = ctx.write(rows, "eval.csv")
    return {"stage": "EVAL", "rows": len(rows), "artifacts": [path]}


def run_converge(ctx: RunContext) -> dict:
    _banner("CONVERGE: RATE STUDIES")
    study = ctx.cfg.study
    p_slow, p_fast = ctx.params
    slopes: dict = {"benchmark": ctx.benchmark}
    artifacts = []

    if p_slow is not None:
        result = error_study(p_slow, ctx.cfg.grid.delta, study.t, study.x, study.y1, ctx.threads)
        artifacts.append(ctx.write([r.model_dump() for r in result.rows], "converge_slow.csv"))
        slopes["slow"] = result.model_dump(exclude={"rows"})
    if p_fast is not None:
        result = fast_reparam_study(p_fast, ctx.cfg.grid.epsilon, study.t, study.x, study.y2, ctx.threads)
        artifacts.append(ctx.write([r.model_dump() for r in result.rows], "converge_fast.csv"))
        slopes["fast"] = result.model_dump(exclude={"rows"})

    pairs = ctx.cfg.scale_pairs()
    if ctx.benchmark == "separable":
        multiscale = multiscale_study(p_slow, p_fast, pairs, study.t, study.x, study.y1, study.y2, ctx.threads)
    elif ctx.benchmark is None:
        multiscale = multiscale_properties(ctx.surface, pairs, study.t, study.x, study.y1, study.y2, ctx.threads)
    else:
        multiscale = None
    if multiscale is not None:
        artifacts.append(ctx.write([r.model_dump() for r in multiscale.rows], "converge_multiscale.csv"))
        slopes["multiscale"] = {"oracle": multiscale.oracle, **multiscale.property_checks}

    artifacts.append(str(write_json(slopes, ctx.out_dir / "slopes.json")))
    return {"stage": "CONVERGE", "slopes": slopes, "artifacts": artifacts}


def run_portfolio(ctx: RunContext) -> dict:
    _banner("PORTFOLIO: MYOPIC AND HEDGING DEMANDS")
    rows = []
    for delta, epsilon in ctx.cfg.scale_pairs():
        exact = ctx.exact_surface(delta, epsilon)
        optimizer = exact_feedback(exact, ctx.model, delta, epsilon) if exact is not None else None
        for t, x, y1, y2 in ctx.cfg.states():
            pi = pi_approx(ctx.surface, t, x, y1, y2, delta, epsilon)
            row = {"t": t, "x": x, "y1": y1, "y2": y2, "delta": delta, "epsilon": epsilon}
            for i in range(len(pi.weights)):
                row[f"weight_{i}"] = pi.weights[i]
                row[f"myopic_{i}"] = pi.myopic[i]
                row[f"slow_hedge_{i}"] = pi.slow_hedge[i]
                row[f"fast_hedge_{i}"] = pi.fast_hedge[i]
            if optimizer is not None:
                for i, value in enumerate(np.atleast_1d(optimizer(t, x, y1, y2))):
                    row[f"exact_{i}"] = float(value)
            rows.append(row)
    path = ctx.write(rows, "portfolio.csv")
    return {"stage": "PORTFOLIO", "rows": len(rows), "artifacts": [path]}


def _value_and_feedback(ctx: RunContext, feedback: str, delta: float, epsilon: float):
    """Value function to audit and the feedback map to follow"""
    exact = ctx.exact_surface(delta, epsilon)
    if exact is not None:
        value_fn = exact
    else:
        value_fn = expansion_surface(ctx.surface, delta, epsilon, ctx.fd_steps)
    if feedback == "exact":
        if exact is None:
            raise ConfigError("the exact feedback needs a configured benchmark")
        return value_fn, exact_feedback(exact, ctx.model, delta, epsilon)
    if feedback == "approx":
        return value_fn, approx_feedback(ctx.surface, delta, epsilon)
    return value_fn, zero_feedback(ctx.model.n_assets(1.0, 1.0))


def run_drift(ctx: RunContext) -> dict:
    _banner("DRIFT: GENERATOR AUDIT")
    feedback = ctx.options.get("feedback") or ctx.cfg.drift.feedback
    grid = ctx.cfg.states()

    def build(delta: float, epsilon: float) -> GeneratorInput:
        value_fn, portfolio_fn = _value_and_feedback(ctx, feedback, delta, epsilon)
        return GeneratorInput(value_fn=value_fn, portfolio_fn=portfolio_fn, model=ctx.model,
                              delta=delta, epsilon=epsilon)

    report = theta_scan(build, grid, ctx.cfg.scale_pairs(), ctx.threads)
    rows = []
    for scan in report.rows:
        for (t, x, y1, y2), theta in zip(report.grid, scan.theta):
            rows.append({"delta": scan.delta, "epsilon": scan.epsilon, "t": t, "x": x, "y1": y1, "y2": y2,
                         "theta": theta, "sup_abs_theta": scan.sup_abs_theta,
                         "ratio": math.nan if scan.ratio is None else scan.ratio})
    path = ctx.write(rows, "drift.csv")
    logger.info("drift: sup |Theta| = %.3e with %s feedback", report.sup_abs_theta, feedback)
    return {"stage": "DRIFT", "feedback": feedback, "sup_abs_theta": report.sup_abs_theta,
            "ratios": report.ratios, "artifacts": [path]}


def run_simulate(ctx: RunContext) -> dict:
    _banner("SIMULATE: MARTINGALE CHECK")
    sim = ctx.cfg.simulation
    keep_paths = bool(ctx.options.get("paths")) or sim.keep_paths
    value_fn, portfolio_fn = _value_and_feedback(ctx, sim.feedback, sim.delta, sim.epsilon)
    if sim.feedback == "approx":
        portfolio_fn = per_path_feedback(portfolio_fn)

    ensemble, report = simulate_paths(
        ctx.model, portfolio_fn, sim.x0, sim.y10, sim.y20, sim.horizon, sim.dt, sim.n_paths, ctx.cfg.seed,
        value_fn=value_fn, delta=sim.delta, epsilon=sim.epsilon, antithetic=sim.antithetic,
        threads=ctx.threads, keep_paths=keep_paths,
    )
    stats = report.mc
    z_score = stats.mean_deviation / stats.standard_error if stats.standard_error > 0.0 else math.nan
    row = {**stats.model_dump(), "feedback": sim.feedback, "z_score": z_score,
           "value_kind": "exact" if isinstance(value_fn, ExactPowerSurface) else "expansion"}
    artifacts = [ctx.write([row], "simulate.csv")]
    if keep_paths:
        ensemble.save(ctx.out_dir / "paths.npz")
        artifacts.append(str(ctx.out_dir / "paths.npz"))
    logger.info("simulate: mean deviation %.3e (se %.3e) over %d paths",
                stats.mean_deviation, stats.standard_error, stats.n_paths)
    return {"stage": "SIMULATE", **row, "artifacts": artifacts}


def run_poisson(ctx: RunContext) -> dict:
    _banner("POISSON: FAST CORRECTOR")
    if ctx.model.fast.is_frozen:
        raise ConfigError("the poisson subcommand needs an active fast factor")
    law = invariant_density(ctx.model.fast)
    rows = []
    worst = 0.0
    for y1 in ctx.cfg.grid.y1:
        lbar_sq = lambda_bar(ctx.model, y1) ** 2
        for y2 in ctx.cfg.grid.y2:
            residual = poisson_residual(ctx.model, y1, y2)
            worst = max(worst, residual)
            rows.append({"y1": y1, "y2": y2, "phi_prime": phi_prime(ctx.model, y1, y2),
                         "phi": phi(ctx.model, y1, y2), "residual": residual, "lambda_bar_sq": lbar_sq,
                         "lower": law.lower, "upper": law.upper})
    path = ctx.write(rows, "poisson.csv")
    return {"stage": "POISSON", "rows": len(rows), "max_residual": worst,
            "bounds": [law.lower, law.upper], "artifacts": [path]}


def run_plot(ctx: RunContext) -> dict:
    _banner("PLOT")
    source, x, y = (ctx.options.get(k) for k in ("input", "x", "y"))
    if not (source and x and y):
        raise ConfigError("plot needs --input, --x and --y")
    path = plot_svg(source, x, y, ctx.out_dir / "plot.svg", log_scale=bool(ctx.options.get("log")))
    return {"stage": "PLOT", "artifacts": [str(path)]}


STAGES: Dict[str, Callable[[RunContext], dict]] = {
    "eval": run_eval,
    "converge": run_converge,
    "portfolio": run_portfolio,
    "drift": run_drift,
    "simulate": run_simulate,
    "poisson": run_poisson,
    "plot": run_plot,
}


def run_subcommand(cfg: RunConfig, name: str, out_dir, threads: int = 1,
                   options: Optional[dict] = None) -> dict:
    """Run one stage and return its summary; artifacts land in `out_dir`"""
    if name not in STAGES:
        raise ConfigError(f"unknown subcommand {name!r}; choose one of {', '.join(SUBCOMMANDS)}")
    ctx = RunContext(cfg=cfg, out_dir=Path(out_dir), threads=threads, options=dict(options or {}))
    ctx.out_dir.mkdir(parents=True, exist_ok=True)
    summary = STAGES[name](ctx)
    summary.update({"success": True, "config_hash": ctx.config_hash, "seed": cfg.seed})
    logger.info("%s finished: %s", name, ", ".join(summary["artifacts"]))
    return summary
