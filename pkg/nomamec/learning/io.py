"""Q-table files and learner CSVs.

Q-table layout: b"QTBL1", uint64 rows, uint64 cols, then row-major
little-endian float64 values.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from ..errors import PersistenceError
from .bla import ConvergenceTrace
from .maq import MaqResult
from .saq import QTable

MAGIC = b"QTBL1"
DIMS = np.dtype("<u8")
VALUES = np.dtype("<f8")


def _prepare(path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def save_qtable(q: QTable, path: Path) -> None:
    rows, cols = q.values.shape
    dims = np.array([rows, cols], dtype=DIMS)
    _prepare(path).write_bytes(MAGIC + dims.tobytes() + np.ascontiguousarray(q.values, dtype=VALUES).tobytes())


def load_qtable(path: Path, gamma: float = 0.1, beta: float = 0.9) -> QTable:
    path = Path(path)
    if not path.exists():
        raise PersistenceError(f"Q-table file not found: {path}")
    raw = path.read_bytes()
    if raw[: len(MAGIC)] != MAGIC:
        raise PersistenceError(f"{path}: not a QTBL1 file")
    offset = len(MAGIC)
    if len(raw) < offset + 2 * DIMS.itemsize:
        raise PersistenceError(f"{path}: truncated header")
    rows, cols = (int(v) for v in np.frombuffer(raw, DIMS, 2, offset))
    offset += 2 * DIMS.itemsize
    if len(raw) != offset + rows * cols * VALUES.itemsize:
        raise PersistenceError(f"{path}: body does not hold {rows} x {cols} values")
    values = np.frombuffer(raw, VALUES, rows * cols, offset).reshape(rows, cols).astype(float)
    return QTable(values, np.zeros((rows, cols), dtype=np.int64), gamma, beta)


def trace_frame(trace: Sequence[float]) -> pd.DataFrame:
    return pd.DataFrame({"episode": np.arange(1, len(trace) + 1), "mean_energy_J": list(trace)})


def write_trace_csv(trace: Sequence[float], path: Path) -> None:
    trace_frame(trace).to_csv(_prepare(path), index=False, float_format="%.12g")


def write_arm_table(result: MaqResult, path: Path) -> None:
    result.arm_table().to_csv(_prepare(path), index=False)


def trajectory_frame(trace: ConvergenceTrace) -> pd.DataFrame:
    steps = len(trace.actions)
    return pd.DataFrame({
        "step": np.arange(1, steps + 1),
        "p_local_closed_form": trace.p_local[1:],
        "action_taken": np.where(trace.actions == 1, "local", "offload"),
    })


def write_trajectory_csv(trace: ConvergenceTrace, path: Path) -> None:
    trajectory_frame(trace).to_csv(_prepare(path), index=False, float_format="%.12g")
