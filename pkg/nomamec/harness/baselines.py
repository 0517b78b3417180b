"""Reference schemes the learners are compared against."""

from __future__ import annotations

from typing import List

import numpy as np

from ..config import SaqHyper
from ..energy.objective import EnergyBreakdown
from ..learning import saq
from ..learning.env import SlotEnvironment
from ..system.types import DecisionVector


def baseline_full_local(env: SlotEnvironment) -> List[EnergyBreakdown]:
    """Everyone computes locally; the cache is unused."""
    d = env.all_local()
    return [env.breakdown(d, t) for t in range(env.horizon)]


def baseline_full_offload(env: SlotEnvironment) -> List[EnergyBreakdown]:
    """Everyone offloads, MEC slices split evenly; the cache is unused."""
    n = env.cfg.n_users
    x = (0,) * n
    z = (0,) * env.cfg.n_tasks
    return [env.breakdown(DecisionVector(x, env.equal_split(x, t), z), t) for t in range(env.horizon)]


def baseline_conventional_mec(env: SlotEnvironment, hyper: SaqHyper, rng: np.random.Generator) -> saq.SaqResult:
    """The SAQ allocator on the same slots with no cache at the AP."""
    no_cache = env.with_config(env.cfg.replace(c_cache_slots=0, cache_capacity_bits=None))
    return saq.train(no_cache, hyper, rng)
