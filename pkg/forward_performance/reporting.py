# -*- coding: utf-8 -*-
"""
Result emission: CSV tables, JSON summaries and SVG charts

CSV files start with `# config_hash=` and `# seed=` comment lines and print
floats with 17 significant digits, so identical runs give identical bytes.
"""

import json
import logging
from pathlib import Path
from typing import Iterable, Optional, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from .errors import ConfigError  # noqa: E402

logger = logging.getLogger(__name__)


FLOAT_FORMAT = "%.17g"
PathLike = Union[str, Path]


def write_csv(rows: Iterable[dict], path: PathLike, config_hash: str, seed: int) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(list(rows))
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(f"# config_hash={config_hash}\n")
        handle.write(f"# seed={seed}\n")
        frame.to_csv(handle, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info("wrote %s (%d rows)", path, len(frame))
    return path


def read_csv(path: PathLike) -> pd.DataFrame:
    try:
        return pd.read_csv(path, comment="#")
    except FileNotFoundError as exc:
        raise ConfigError(f"no such CSV: {path}") from exc
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise ConfigError(f"cannot parse CSV {path}: {exc}") from exc


def read_header(path: PathLike) -> dict:
    """The `# key=value` comment lines at the top of an emitted CSV"""
    header = {}
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition("=")
            header[key] = value
    return header


def write_json(payload: dict, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=float) + "\n", encoding="utf-8")
    return path


def plot_svg(source: PathLike, x: str, y: str, path: PathLike, title: Optional[str] = None,
             log_scale: bool = False) -> Path:
    """Line chart of column `y` against column `x` from a previously written CSV"""
    frame = read_csv(source)
    missing = [c for c in (x, y) if c not in frame.columns]
    if missing:
        raise ConfigError(f"{source} has no column(s) {', '.join(missing)}; available: {', '.join(frame.columns)}")
    frame = frame.sort_values(x)

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context({"svg.hashsalt": "forward-performance", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        ax.plot(frame[x], frame[y], marker="o")
        if log_scale:
            ax.set_xscale("log")
            ax.set_yscale("log")
        ax.set_xlabel(x)
        ax.set_ylabel(y)
        ax.set_title(title or f"{y} vs {x}")
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    logger.info("wrote %s", path)
    return path
