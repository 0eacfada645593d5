import json
import logging
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import scipy

logger = logging.getLogger(__name__)

TOOL_VERSION = "0.1.0"
RESULT_COLUMNS = ["experiment", "fixture", "resolution", "metric", "value", "pass"]


def json_serializable(obj):
    """
    Converts NumPy scalars, arrays, tuples and paths into JSON-compatible types.
    """
    if isinstance(obj, np.bool_):
        return bool(obj)
    elif isinstance(obj, np.integer):
        return int(obj)
    elif isinstance(obj, np.floating):
        return float(obj)
    elif isinstance(obj, np.ndarray):
        return obj.tolist()
    elif isinstance(obj, tuple):
        return list(obj)
    elif isinstance(obj, Path):
        return str(obj)
    return obj


def safe_json_dump(data, file_path):
    """
    Recursively converts and saves a dictionary to a JSON file.
    """
    def convert_item(item):
        if isinstance(item, dict):
            return {k: convert_item(v) for k, v in item.items()}
        elif isinstance(item, (list, tuple)):
            return [convert_item(v) for v in item]
        return json_serializable(item)

    with open(file_path, 'w') as f:
        json.dump(convert_item(data), f, indent=2)


@dataclass
class ResultTable:
    """
    Long-form results of one experiment run.

    Every row carries the fixed columns experiment, fixture, resolution,
    metric, value and pass. Rows without a pass criterion store pass=True.
    """
    experiment: str
    rows: list = field(default_factory=list)

    def add(self, fixture: str, resolution, metric: str, value, passed: bool = True):
        self.rows.append({
            "experiment": self.experiment,
            "fixture": fixture,
            "resolution": str(resolution),
            "metric": metric,
            "value": float(value),
            "pass": bool(passed),
        })

    def extend(self, other: "ResultTable"):
        self.rows.extend(other.rows)

    @property
    def all_passed(self) -> bool:
        return all(row["pass"] for row in self.rows)

    def failures(self) -> list:
        return [row for row in self.rows if not row["pass"]]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=RESULT_COLUMNS)


def run_timestamp() -> str:
    return datetime.now().strftime("%Y%m%d_%H%M%S")


def make_run_dir(output_dir: str | Path, experiment: str, timestamp: str | None = None) -> Path:
    """Creates <output_dir>/<experiment>/<timestamp>/ and returns it."""
    run_dir = Path(output_dir) / experiment / (timestamp or run_timestamp())
    run_dir.mkdir(parents=True, exist_ok=True)
    return run_dir


def save_results(table: ResultTable, run_dir: str | Path) -> Path:
    path = Path(run_dir) / "results.csv"
    table.to_frame().to_csv(path, index=False, float_format="%.12g")
    logger.info(f"Results saved to: {path}")
    return path


def write_manifest(run_dir: str | Path, experiment: str, timestamp: str, config_hash: str, seed) -> Path:
    """Writes manifest.txt with the run identity and the numeric package versions."""
    packages = f"numpy=={np.__version__}, scipy=={scipy.__version__}, pandas=={pd.__version__}"
    lines = [
        f"experiment: {experiment}",
        f"timestamp: {timestamp}",
        f"config_hash: {config_hash}",
        f"seed: {seed}",
        f"tool_version: {TOOL_VERSION}",
        f"python_packages: {packages}",
    ]
    path = Path(run_dir) / "manifest.txt"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_summary(table: ResultTable, run_dir: str | Path) -> Path:
    frame = table.to_frame()
    summary = {
        "experiment": table.experiment,
        "rows": len(frame),
        "failures": int((~frame["pass"].astype(bool)).sum()) if len(frame) else 0,
        "fixtures": sorted(frame["fixture"].unique().tolist()) if len(frame) else [],
        "passed": table.all_passed,
    }
    path = Path(run_dir) / "summary.json"
    safe_json_dump(summary, path)
    return path


def save_summary_figure(table: ResultTable, run_dir: str | Path) -> Path | None:
    """
    Plots each metric against resolution, one panel per metric, as summary.png.

    Returns None when the table is empty.
    """
    frame = table.to_frame()
    if frame.empty:
        return None
    metrics = list(dict.fromkeys(frame["metric"]))
    cols = min(3, len(metrics))
    rows = int(np.ceil(len(metrics) / cols))
    fig, axes = plt.subplots(rows, cols, figsize=(5 * cols, 3.5 * rows), squeeze=False)
    for ax, metric in zip(axes.ravel(), metrics):
        subset = frame[frame["metric"] == metric]
        for fixture, group in subset.groupby("fixture", sort=True):
            ax.plot(group["resolution"], group["value"], marker="o", label=fixture)
        failed = subset[~subset["pass"].astype(bool)]
        if not failed.empty:
            ax.scatter(failed["resolution"], failed["value"], color="red", zorder=3)
        ax.set_title(metric, fontsize=10)
        ax.tick_params(axis="x", labelrotation=30, labelsize=8)
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=7)
    for ax in axes.ravel()[len(metrics):]:
        ax.axis("off")
    fig.suptitle(f"{table.experiment} summary", fontsize=12, fontweight="bold")
    fig.tight_layout()
    path = Path(run_dir) / "summary.png"
    plt.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    logger.info(f"Summary figure saved to: {path}")
    return path
