"""Run artifacts: trajectory/curve/sweep CSVs, the JSON summary and the key-value criteria report."""

import json
from pathlib import Path

import numpy as np
from django.core.serializers.json import DjangoJSONEncoder

from .agents import wrap_angle

FLOAT_FORMAT = "%.17g"


def _save_table(path: Path, columns: list[str], table: np.ndarray) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table = np.asarray(table, dtype=float).reshape(-1, len(columns))
    np.savetxt(path, table, fmt=FLOAT_FORMAT, delimiter=",", header=",".join(columns), comments="")
    return path


def trajectory_columns(n: int, N: int) -> list[str]:
    states = [f"x_{i}_{k}" for i in range(1, N + 1) for k in range(1, n + 1)]
    controls = [f"u_{i}_{k}" for i in range(1, N + 1) for k in range(1, n + 1)]
    return ["t", *states, *controls, "e_norm", "V", "int_z2", "int_w2"]


def write_trajectory_csv(trajectory, path) -> Path:
    table = np.column_stack([
        trajectory.times, trajectory.states, trajectory.controls, trajectory.e_norm,
        trajectory.lyapunov, trajectory.int_z2, trajectory.int_w2,
    ])
    return _save_table(path, trajectory_columns(trajectory.n, trajectory.N), table)


def write_poses_csv(trajectory, path) -> Path | None:
    """Unicycle poses with headings wrapped into (-π, π]."""
    if trajectory.poses is None:
        return None
    poses = trajectory.poses.reshape(len(trajectory), trajectory.N, 3).copy()
    poses[:, :, 2] = wrap_angle(poses[:, :, 2])
    columns = ["t"] + [f"{name}_{i}" for i in range(1, trajectory.N + 1) for name in ("x_c", "y_c", "theta")]
    return _save_table(path, columns, np.column_stack([trajectory.times, poses.reshape(len(trajectory), -1)]))


def write_tracking_csv(trajectory, path) -> Path | None:
    if trajectory.tracking is None:
        return None
    columns = ["t"] + [f"e_l_{k}" for k in range(1, trajectory.n + 1)]
    return _save_table(path, columns, np.column_stack([trajectory.times, trajectory.tracking]))


def write_monte_carlo_csv(result, path) -> Path:
    table = np.column_stack([result.times, result.mean, result.q05, result.q95])
    return _save_table(path, ["t", "mean_e_norm", "q05_e_norm", "q95_e_norm"], table)


SWEEP_COLUMNS = ["value", "q", "settling_bound", "settling_time", "feasible"]


def write_sweep_csv(rows: list[dict], path) -> Path:
    """Sweep rows; missing bounds and unsettled runs are written as nan."""
    def number(value):
        return np.nan if value is None else float(value)

    table = np.array([[number(row[key]) for key in SWEEP_COLUMNS] for row in rows]).reshape(-1, len(SWEEP_COLUMNS))
    return _save_table(path, SWEEP_COLUMNS, table)


def write_summary(summary: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(summary, indent=2, cls=DjangoJSONEncoder, allow_nan=True) + "\n", encoding="utf-8")
    return path


def write_report(text: str, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path
