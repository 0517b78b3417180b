# tests/conftest.py
from typing import Callable

import pytest

from nomamec.config import SystemConfig
from nomamec.harness.scenario import build_scenario
from nomamec.learning.env import SlotEnvironment


@pytest.fixture
def small_cfg() -> SystemConfig:
    """Two users, three tasks, two slices, one cache slot."""
    return SystemConfig(n_users=2, n_tasks=3, n_freq_slices=2, c_cache_slots=1, horizon_slots=20, rng_seed=0)


@pytest.fixture
def relaxed_cfg(small_cfg: SystemConfig) -> SystemConfig:
    """Deadline never binds and a fast MEC server: exactly one offloader is the cheapest layout."""
    return small_cfg.replace(latency_limit_s=100.0, c_mec_hz=20e9)


@pytest.fixture
def make_env() -> Callable[[SystemConfig], SlotEnvironment]:
    """Environment whose predicted popularity is the true one."""
    def _make(cfg: SystemConfig) -> SlotEnvironment:
        return build_scenario(cfg, "oracle", warmup_slots=0).env
    return _make
