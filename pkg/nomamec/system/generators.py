"""Seeded generators for topology, channels and tasks.

Every generator is a pure function of (cfg, seed, slot): callers either pass
an explicit `numpy.random.Generator` or let the helper derive one from the
config seed and a named stream.
"""

from __future__ import annotations

from typing import List, Optional, Sequence

import numpy as np

from ..config import SystemConfig
from .types import ChannelState, TaskSpec, Topology

MIN_DISTANCE_M = 1.0

STREAMS = {"topology": 0, "channel": 1, "tasks": 2, "popularity": 3, "lstm": 4, "agent": 5}


def stream_rng(seed: int, stream: str, *keys: int) -> np.random.Generator:
    """Independent generator per (seed, stream, keys...)."""
    return np.random.default_rng([int(seed), STREAMS[stream], *(int(k) for k in keys)])


def generate_topology(cfg: SystemConfig, rng: Optional[np.random.Generator] = None) -> Topology:
    rng = rng if rng is not None else stream_rng(cfg.rng_seed, "topology")
    side = cfg.area_side_m
    users = rng.uniform(0.0, side, size=(cfg.n_users, 2))
    return Topology(user_positions=users, ap_position=np.array([side / 2.0, side / 2.0]))


def path_gain(distance_m: np.ndarray | float, exponent: float) -> np.ndarray:
    d = np.maximum(np.asarray(distance_m, dtype=float), MIN_DISTANCE_M)
    return d ** (-exponent)


def draw_channel(
    cfg: SystemConfig,
    topo: Topology,
    slot: int,
    rng: Optional[np.random.Generator] = None,
    fading: Optional[Sequence[float]] = None,
) -> ChannelState:
    """|h_i|^2 = d_i^-alpha * e_i with e_i ~ Exp(1) redrawn every slot."""
    if fading is None:
        rng = rng if rng is not None else stream_rng(cfg.rng_seed, "channel", slot)
        fading = rng.exponential(1.0, size=topo.n_users)
        # Exp(1) can return exactly 0.0 with vanishing probability
        fading = np.maximum(fading, np.finfo(float).tiny)
    gains = path_gain(topo.distances(), cfg.pathloss_exponent) * np.asarray(fading, dtype=float)
    return ChannelState(gains=gains, slot=slot)


def generate_tasks(cfg: SystemConfig, rng: Optional[np.random.Generator] = None) -> List[TaskSpec]:
    rng = rng if rng is not None else stream_rng(cfg.rng_seed, "tasks")
    bits = rng.uniform(cfg.task_input_min_bits, cfg.task_input_max_bits, size=cfg.n_tasks)
    cpb = rng.uniform(cfg.cycles_per_bit_min, cfg.cycles_per_bit_max, size=cfg.n_tasks)
    return [
        TaskSpec(id=j + 1, input_bits=float(b), cycles=float(b * c), result_bits=float(b * cfg.result_ratio))
        for j, (b, c) in enumerate(zip(bits, cpb))
    ]
