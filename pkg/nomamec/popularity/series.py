"""Task-popularity time series."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from ..config import SystemConfig
from ..errors import DimensionError, DomainError, PreconditionError
from ..system.generators import stream_rng
from ..system.types import PopularityMatrix

FLOOR = 1e-4
SUM_ATOL = 1e-9


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Clamp at zero and renormalise; an all-zero vector maps to uniform."""
    p = np.maximum(np.asarray(v, dtype=float), 0.0)
    s = p.sum(axis=-1, keepdims=True)
    n = p.shape[-1]
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(s > 0, p / np.where(s > 0, s, 1.0), 1.0 / n)
    return out


@dataclass(frozen=True)
class SeriesDataset:
    series: np.ndarray  # (T_p, N_t)
    split: int  # slots [0, split) are training data

    def __post_init__(self):
        s = np.array(self.series, dtype=float, copy=True)
        if s.ndim != 2 or s.shape[0] < 2:
            raise DimensionError("series must be (slots >= 2, tasks)")
        if np.any(s < -SUM_ATOL) or np.any(s > 1 + SUM_ATOL):
            raise DomainError("popularity entries must lie in [0, 1]")
        if not np.allclose(s.sum(axis=1), 1.0, rtol=0.0, atol=SUM_ATOL):
            raise DomainError("every slot of the series must sum to 1")
        if not 2 <= self.split <= s.shape[0]:
            raise PreconditionError(f"split {self.split} outside [2, {s.shape[0]}]")
        s.setflags(write=False)
        object.__setattr__(self, "series", s)

    __hash__ = None  # type: ignore[assignment]

    @classmethod
    def from_array(cls, series: np.ndarray, train_fraction: float = 0.8) -> "SeriesDataset":
        n = np.asarray(series).shape[0]
        split = min(n, max(2, int(round(n * train_fraction))))
        return cls(series, split)

    @property
    def n_slots(self) -> int:
        return self.series.shape[0]

    @property
    def n_tasks(self) -> int:
        return self.series.shape[1]

    @property
    def train(self) -> np.ndarray:
        return self.series[: self.split]

    @property
    def test(self) -> np.ndarray:
        # overlap by one slot so the first test target has an input
        return self.series[self.split - 1:]

    def matrices(self, n_users: int, start: int = 0) -> List[PopularityMatrix]:
        return [PopularityMatrix.shared(row, n_users, start + t) for t, row in enumerate(self.series)]


def random_walk_series(
    cfg: SystemConfig,
    length: int,
    step_scale: float = 0.05,
    rng: Optional[np.random.Generator] = None,
    train_fraction: float = 0.8,
) -> SeriesDataset:
    """p(0) uniform; p(t+1) = renormalise(max(p(t) + N(0, step_scale), 1e-4))."""
    if length < 2:
        raise PreconditionError("series length must be >= 2")
    if not 0 < step_scale <= 0.5:
        raise PreconditionError("step_scale must lie in (0, 0.5]")
    rng = rng if rng is not None else stream_rng(cfg.rng_seed, "popularity")
    out = np.empty((length, cfg.n_tasks))
    p = np.full(cfg.n_tasks, 1.0 / cfg.n_tasks)
    out[0] = p
    for t in range(1, length):
        p = np.maximum(p + rng.normal(0.0, step_scale, size=cfg.n_tasks), FLOOR)
        p = p / p.sum()
        out[t] = p
    return SeriesDataset.from_array(out, train_fraction)


def per_user_series(
    cfg: SystemConfig,
    length: int,
    step_scale: float = 0.05,
    train_fraction: float = 0.8,
) -> List[SeriesDataset]:
    """One independent walk per user, each on its own popularity stream."""
    return [
        random_walk_series(cfg, length, step_scale, stream_rng(cfg.rng_seed, "popularity", i + 1), train_fraction)
        for i in range(cfg.n_users)
    ]


def stack_users(rows: Sequence[np.ndarray], slot: int) -> PopularityMatrix:
    """Per-user task distributions for one slot as a popularity matrix."""
    return PopularityMatrix(np.vstack([np.asarray(r, dtype=float) for r in rows]), slot)
