"""Paired-seed comparisons and trend checks over result rows."""

from __future__ import annotations

from pathlib import Path
from typing import List, Sequence

import numpy as np
import orjson
import pandas as pd
from scipy.stats import spearmanr

from ..errors import PersistenceError, PreconditionError
from .plan import ResultRow

CONVERGENCE_WINDOW = 10
CONVERGENCE_TOL = 0.01


def episodes_to_converge(trace: Sequence[float], window: int = CONVERGENCE_WINDOW, tol: float = CONVERGENCE_TOL) -> int:
    """First episode (1-based) whose smoothed energy is within `tol` of the final smoothed value."""
    if not trace:
        return 0
    smooth = pd.Series(list(trace)).rolling(window, min_periods=1).mean().to_numpy()
    final = smooth[-1]
    close = np.abs(smooth - final) <= tol * max(abs(final), 1e-12)
    return int(np.argmax(close)) + 1


def rows_frame(rows: Sequence[ResultRow]) -> pd.DataFrame:
    return pd.DataFrame([r.model_dump() for r in rows], columns=list(ResultRow.model_fields))


def read_results(path: Path) -> List[ResultRow]:
    path = Path(path)
    if not path.exists():
        raise PersistenceError(f"results file not found: {path}")
    # through JSON so blanks become None and numpy scalars become plain numbers
    records = orjson.loads(pd.read_csv(path).to_json(orient="records", double_precision=15))
    return [ResultRow(**rec) for rec in records]


def paired_differences(rows: Sequence[ResultRow], candidate: str, reference: str) -> pd.DataFrame:
    """reference - candidate energy per (sweep value, seed); positive means the candidate used less."""
    df = rows_frame(rows)
    df["sweep_value"] = df["sweep_value"].fillna(-1.0)
    wide = df.pivot_table(index=["sweep_value", "seed"], columns="algorithm", values="mean_energy_j")
    if candidate not in wide or reference not in wide:
        raise PreconditionError(f"results need both {candidate!r} and {reference!r}")
    out = (wide[reference] - wide[candidate]).rename("saving_j").reset_index()
    out["sweep_value"] = out["sweep_value"].where(out["sweep_value"] != -1.0, None)
    return out


def dominates(rows: Sequence[ResultRow], candidate: str, reference: str, rtol: float = 1e-9) -> bool:
    """Candidate's mean over paired seeds is no worse than the reference's."""
    diff = paired_differences(rows, candidate, reference)
    df = rows_frame(rows)
    scale = max(df["mean_energy_j"].abs().max(), 1e-12)
    return bool(diff["saving_j"].mean() >= -rtol * scale)


def trend_spearman(values: Sequence[float], energies: Sequence[float]) -> float:
    """Rank correlation between a swept quantity and the mean energy (nan when energies are constant)."""
    if len(values) != len(energies) or len(values) < 2:
        raise PreconditionError("need at least two matched points")
    if np.ptp(np.asarray(energies, dtype=float)) == 0.0:
        return float("nan")
    rho, _ = spearmanr(values, energies)
    return float(rho)


def sweep_trend(rows: Sequence[ResultRow], algorithm: str) -> float:
    df = rows_frame(rows)
    df = df[df["algorithm"] == algorithm]
    means = df.groupby("sweep_value")["mean_energy_j"].mean().sort_index()
    return trend_spearman(means.index.to_list(), means.to_list())
