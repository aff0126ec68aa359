"""
CSV tables written by the CLI.

Column contract:

    trajectory.csv   t, left_limit, x_1..x_M      impulse nodes get a left-limit row (left_limit=1)
                                                  followed by the right-limit row (left_limit=0)
    control.csv      t, u_1..u_m
    summary.csv      epsilon, terminal_error, control_energy, outer_iterations,
                     identity_residual, defect_norm, verdict
    sweep.csv        epsilon, terminal_error, control_energy, outer_iterations
    decay.csv        epsilon, probe_1..probe_n, verdict

Floats are written with 17 significant digits, so identical runs give
identical files.
"""

import logging
from pathlib import Path
from typing import Any, Dict, List

import pandas as pd

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def _write(frame: pd.DataFrame, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info(f"💾 Wrote {len(frame)} rows: {path.name}")
    return path


def trajectory_frame(traj) -> pd.DataFrame:
    columns = ["t", "left_limit"] + [f"x_{k + 1}" for k in range(traj.state_dim)]
    rows: List[List[Any]] = []
    for i, t in enumerate(traj.grid.nodes):
        if i in traj.left_limits:
            rows.append([float(t), 1, *traj.left_limits[i].tolist()])
        rows.append([float(t), 0, *traj.values[i].tolist()])
    return pd.DataFrame(rows, columns=columns)


def control_frame(control) -> pd.DataFrame:
    frame = pd.DataFrame(control.values, columns=[f"u_{k + 1}" for k in range(control.control_dim)])
    frame.insert(0, "t", control.grid.nodes)
    return frame


def summary_frame(synthesis, verdict: str) -> pd.DataFrame:
    row: Dict[str, Any] = synthesis.summary()
    row['verdict'] = verdict
    return pd.DataFrame([row])


def sweep_frame(sweep) -> pd.DataFrame:
    return pd.DataFrame(
        sweep.rows,
        columns=["epsilon", "terminal_error", "control_energy", "outer_iterations"],
    )


def decay_frame(report) -> pd.DataFrame:
    """One row per ε of the controllability table; the verdict is repeated on every row."""
    frame = pd.DataFrame(report.table, columns=[f"probe_{k + 1}" for k in range(report.table.shape[1])])
    frame.insert(0, "epsilon", report.epsilons)
    frame["verdict"] = report.verdict
    return frame


def write_trajectory(traj, path: Path) -> Path:
    return _write(trajectory_frame(traj), path)


def write_control(control, path: Path) -> Path:
    return _write(control_frame(control), path)


def write_summary(synthesis, verdict: str, path: Path) -> Path:
    return _write(summary_frame(synthesis, verdict), path)


def write_sweep(sweep, path: Path) -> Path:
    return _write(sweep_frame(sweep), path)


def write_decay(report, path: Path) -> Path:
    return _write(decay_frame(report), path)
