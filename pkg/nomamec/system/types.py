from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

from ..errors import DimensionError, DomainError

GRID_TOL = 1e-9


def _frozen(a: Sequence[float] | np.ndarray, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TaskSpec:
    """One computation task: input size pi_j, CPU cycles omega_j, result size kappa_j."""
    id: int  # 1-based
    input_bits: float
    cycles: float
    result_bits: float

    def __post_init__(self):
        if self.id < 1:
            raise DomainError(f"task id must be >= 1, got {self.id}")
        if not (self.input_bits > 0 and self.cycles > 0 and self.result_bits > 0):
            raise DomainError(f"task {self.id}: sizes and cycles must be positive")
        if self.result_bits > self.input_bits:
            raise DomainError(f"task {self.id}: result larger than input")


@dataclass(frozen=True)
class Topology:
    user_positions: np.ndarray  # (N_u, 2) metres
    ap_position: np.ndarray  # (2,)

    def __post_init__(self):
        object.__setattr__(self, "user_positions", _frozen(self.user_positions).reshape(-1, 2))
        object.__setattr__(self, "ap_position", _frozen(self.ap_position).reshape(2))

    @property
    def n_users(self) -> int:
        return self.user_positions.shape[0]

    def distances(self) -> np.ndarray:
        return np.linalg.norm(self.user_positions - self.ap_position, axis=1)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Topology):
            return NotImplemented
        return (np.array_equal(self.user_positions, other.user_positions)
                and np.array_equal(self.ap_position, other.ap_position))

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class ChannelState:
    gains: np.ndarray  # |h_i(t)|^2 per user
    slot: int

    def __post_init__(self):
        g = _frozen(self.gains)
        if g.ndim != 1:
            raise DimensionError("gains must be a vector")
        if not np.all(g > 0):
            raise DomainError("channel gains must be strictly positive")
        object.__setattr__(self, "gains", g)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class DecisionVector:
    """One slot's (X, Y, Z). x_i = 1 computes locally, 0 offloads; z_j = 1 caches task j."""
    x: Tuple[int, ...]
    y: Tuple[float, ...]
    z: Tuple[int, ...]

    def __post_init__(self):
        x = tuple(int(v) for v in self.x)
        z = tuple(int(v) for v in self.z)
        y = tuple(float(v) for v in self.y)
        if any(v not in (0, 1) for v in x):
            raise DomainError(f"x must be binary, got {x}")
        if any(v not in (0, 1) for v in z):
            raise DomainError(f"z must be binary, got {z}")
        if len(y) != len(x):
            raise DimensionError(f"x and y lengths differ ({len(x)} vs {len(y)})")
        if any(not (-GRID_TOL <= v <= 1 + GRID_TOL) for v in y):
            raise DomainError(f"y must lie in [0, 1], got {y}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)

    @classmethod
    def from_slices(cls, x: Sequence[int], slices: Sequence[int], z: Sequence[int], n_freq_slices: int) -> "DecisionVector":
        return cls(tuple(x), tuple(s / n_freq_slices for s in slices), tuple(z))

    @property
    def n_users(self) -> int:
        return len(self.x)

    @property
    def n_tasks(self) -> int:
        return len(self.z)

    @property
    def offloaders(self) -> Tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.x) if v == 0)

    def slices(self, n_freq_slices: int) -> Tuple[int, ...]:
        return tuple(int(round(v * n_freq_slices)) for v in self.y)

    def on_grid(self, n_freq_slices: int) -> bool:
        return all(abs(v * n_freq_slices - round(v * n_freq_slices)) <= GRID_TOL * n_freq_slices for v in self.y)

    def check_dims(self, n_users: int, n_tasks: int) -> None:
        if self.n_users != n_users or self.n_tasks != n_tasks:
            raise DimensionError(
                f"decision has {self.n_users} users / {self.n_tasks} tasks, expected {n_users} / {n_tasks}")

    def with_cache(self, z: Sequence[int]) -> "DecisionVector":
        return DecisionVector(self.x, self.y, tuple(z))


@dataclass(frozen=True)
class PopularityMatrix:
    """Pr_i^j: row i is user i's request distribution over tasks in one slot."""
    probs: np.ndarray  # (N_u, N_t)
    slot: int
    atol: float = field(default=1e-9, repr=False)

    def __post_init__(self):
        p = _frozen(self.probs)
        if p.ndim != 2:
            raise DimensionError("popularity matrix must be 2-D")
        if np.any(p < -self.atol) or np.any(p > 1 + self.atol):
            raise DomainError("popularities must lie in [0, 1]")
        if not np.allclose(p.sum(axis=1), 1.0, rtol=0.0, atol=self.atol):
            raise DomainError("each popularity row must sum to 1")
        object.__setattr__(self, "probs", p)

    @classmethod
    def shared(cls, task_probs: Sequence[float], n_users: int, slot: int) -> "PopularityMatrix":
        """All users follow the same task distribution."""
        row = np.asarray(task_probs, dtype=float)
        return cls(np.tile(row, (n_users, 1)), slot)

    @property
    def task_popularity(self) -> np.ndarray:
        return self.probs.sum(axis=0)

    __hash__ = None  # type: ignore[assignment]
