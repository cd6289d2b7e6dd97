"""Run output bundle: trajectory CSV, metrics JSON, resolved-config echo.

CSV rows use repr formatting (shortest round-trip decimal), so re-parsing
reproduces the exact doubles; the header row is always present and the
column count is constant within a file.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Dict

from .simulate import RunMetrics, TrajectoryLog

TRAJECTORY_CSV = "trajectory.csv"
METRICS_JSON = "metrics.json"
RESOLVED_ECHO = "scenario.resolved"


def write_trajectory_csv(path, log: TrajectoryLog) -> None:
    with open(path, "w", newline="") as f:
        f.write(",".join(log.columns) + "\r\n")
        for row in log.data:
            f.write(",".join(repr(float(v)) for v in row) + "\r\n")


def read_trajectory_csv(path):
    with open(path, "r", newline="") as f:
        header = f.readline().strip("\r\n").split(",")
        rows = [[float(v) for v in line.strip("\r\n").split(",")]
                for line in f if line.strip()]
    return header, rows


def write_bundle(out_dir, log: TrajectoryLog, metrics: RunMetrics,
                 resolved: Dict) -> Path:
    """Write the per-run directory; returns its path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(out / TRAJECTORY_CSV, log)
    payload = metrics.to_dict()
    payload["events"] = log.events
    (out / METRICS_JSON).write_text(json.dumps(payload, indent=2, sort_keys=True))
    (out / RESOLVED_ECHO).write_text(json.dumps(resolved, indent=2, sort_keys=True))
    return out
