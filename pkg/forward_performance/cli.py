# -*- coding: utf-8 -*-
"""
Command-line entry point

    python -m forward_performance <subcommand> (--config FILE | --preset NAME) [options]

Exit status is 0 on success, 2 for validation errors and 3 for numerical
failures; errors are printed to stderr as a JSON object.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .config import Settings, load_config, resolve_out_dir, resolve_threads
from .errors import ConfigError, ForwardPerformanceError, NumericError
from .pipeline import SUBCOMMANDS, run_subcommand
from .presets import preset_names
from .reporting import plot_svg

logger = logging.getLogger(__name__)


def _common(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--config", help="TOML run configuration")
    source.add_argument("--preset", choices=preset_names(), help="named model preset")
    parser.add_argument("--out-dir", help="directory for artifacts (default: $FPP_OUT_DIR or results)")
    parser.add_argument("--seed", type=int, help="RNG seed, overrides the config")
    parser.add_argument("--threads", type=int, help="worker threads for studies and simulation")
    parser.add_argument("--tol-quad", type=float, help="quadrature tolerance, overrides the config")
    fmt = parser.add_mutually_exclusive_group()
    fmt.add_argument("--csv", dest="json", action="store_false", help="print a plain summary (default)")
    fmt.add_argument("--json", dest="json", action="store_true", help="print the summary as JSON")
    parser.set_defaults(json=False)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="forward_performance",
        description="Multiscale expansion of time-monotone forward performance processes",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "eval": "expansion values on the state grid",
        "converge": "convergence-rate studies against the exact benchmarks",
        "portfolio": "approximate portfolio with its myopic and hedging parts",
        "drift": "generator drift along a feedback portfolio",
        "simulate": "Monte Carlo martingale check",
        "poisson": "fast corrector and its plug-back residual",
        "plot": "SVG chart from an earlier CSV",
    }
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=helps[name])
        _common(p)
        if name == "plot":
            p.add_argument("--input", required=True, help="CSV written by another subcommand")
            p.add_argument("--x", required=True, help="column for the horizontal axis")
            p.add_argument("--y", required=True, help="column for the vertical axis")
            p.add_argument("--log", action="store_true", help="log-log axes")
        if name == "simulate":
            p.add_argument("--paths", action="store_true", help="also dump every path to paths.npz")
        if name == "drift":
            p.add_argument("--feedback", choices=("exact", "approx", "zero"), help="portfolio to audit")
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    overrides: dict = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.tol_quad is not None:
        overrides["tolerances"] = {"quad": args.tol_quad}
    return overrides


def _print_summary(summary: dict, as_json: bool) -> None:
    if as_json:
        print(json.dumps(summary, indent=2, sort_keys=True, default=float))
        return
    for key, value in summary.items():
        if isinstance(value, list):
            value = ", ".join(map(str, value))
        print(f"{key:>16}: {value}")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = Settings.from_env()
        logging.basicConfig(
            level=logging.DEBUG if args.verbose else getattr(logging, settings.log_level, logging.INFO),
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
            stream=sys.stderr,
        )
        options = {k: getattr(args, k, None) for k in ("input", "x", "y", "log", "paths", "feedback")}

        if args.command == "plot" and args.config is None and args.preset is None:
            out_dir = Path(args.out_dir) if args.out_dir else settings.out_dir
            path = plot_svg(args.input, args.x, args.y, out_dir / "plot.svg", log_scale=args.log)
            _print_summary({"success": True, "stage": "PLOT", "artifacts": [str(path)]}, args.json)
            return 0

        if args.config is None and args.preset is None:
            raise ConfigError("either --config or --preset is required")
        cfg = load_config(args.config, args.preset, overrides=_overrides(args))
        summary = run_subcommand(
            cfg, args.command,
            out_dir=resolve_out_dir(cfg, settings, args.out_dir),
            threads=resolve_threads(cfg, settings, args.threads),
            options=options,
        )
    except ForwardPerformanceError as exc:
        print(json.dumps(exc.to_dict()), file=sys.stderr)
        return exc.exit_code
    except Exception as exc:
        logger.error("unexpected failure in %s", args.command, exc_info=True)
        error = NumericError(f"{type(exc).__name__}: {exc}")
        print(json.dumps(error.to_dict()), file=sys.stderr)
        return error.exit_code
    _print_summary(summary, args.json)
    return 0


if __name__ == "__main__":
    sys.exit(main())
