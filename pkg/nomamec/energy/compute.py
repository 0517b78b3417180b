"""Local and MEC computing time / energy for a single task."""

from __future__ import annotations

from ..config import SystemConfig
from ..errors import DomainError, InfeasibleAllocationError
from ..system.types import TaskSpec


def local_time(task: TaskSpec, local_cpu_hz: float) -> float:
    if not local_cpu_hz > 0:
        raise DomainError(f"local CPU frequency must be positive, got {local_cpu_hz}")
    return task.cycles / local_cpu_hz


def local_energy(task: TaskSpec, local_cpu_hz: float, p_local_w: float) -> float:
    if p_local_w < 0:
        raise DomainError(f"local power must be nonnegative, got {p_local_w}")
    return p_local_w * local_time(task, local_cpu_hz)


def mec_time(task: TaskSpec, y_frac: float, c_mec_hz: float) -> float:
    if not c_mec_hz > 0:
        raise DomainError(f"MEC capacity must be positive, got {c_mec_hz}")
    if not 0 < y_frac <= 1:
        raise InfeasibleAllocationError(f"task {task.id}: MEC share {y_frac} outside (0, 1]")
    return task.cycles / (y_frac * c_mec_hz)


def mec_energy(task: TaskSpec, y_frac: float, cfg: SystemConfig) -> float:
    return cfg.p_mec_w * mec_time(task, y_frac, cfg.c_mec_hz)


def check_latency(t_offload: float, t_mec: float, cfg: SystemConfig) -> bool:
    """Offload path deadline; pass t_mec = 0 to check a local time against the same limit."""
    if t_offload < 0 or t_mec < 0:
        raise DomainError("times must be nonnegative")
    return t_offload + t_mec <= cfg.latency_limit_s


def check_local_latency(t_local: float, cfg: SystemConfig) -> bool:
    return check_latency(t_local, 0.0, cfg)
