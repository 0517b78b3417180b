# nomamec/harness/presets.py
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict

from ..config import LstmHyper, MaqHyper, SaqHyper, SystemConfig
from ..errors import ConfigError


@dataclass
class ScenarioPreset:
    name: str
    description: str
    system: Dict[str, Any] = field(default_factory=dict)
    saq: SaqHyper = field(default_factory=SaqHyper)
    maq: MaqHyper = field(default_factory=MaqHyper)
    lstm: LstmHyper = field(default_factory=LstmHyper)
    warmup_slots: int = 200
    step_scale: float = 0.05

    def config(self, base: SystemConfig | None = None) -> SystemConfig:
        return (base or SystemConfig()).replace(**self.system)


PRESETS: Dict[str, ScenarioPreset] = {
    "canonical": ScenarioPreset(
        name="canonical",
        description="3 users, 5 tasks, 4 MEC slices, 2 cache slots, 200 slots x 500 episodes",
        system={"n_users": 3, "n_tasks": 5, "n_freq_slices": 4, "c_cache_slots": 2, "horizon_slots": 200},
        saq=SaqHyper(episodes=500),
    ),
    "oracle-small": ScenarioPreset(
        name="oracle-small",
        description="2 users, 3 tasks, 2 slices, 1 cache slot; small enough for exhaustive search every slot",
        system={"n_users": 2, "n_tasks": 3, "n_freq_slices": 2, "c_cache_slots": 1, "horizon_slots": 50},
        saq=SaqHyper(episodes=300),
        maq=MaqHyper(episodes=40),
        lstm=LstmHyper(hidden_size=8, epochs=50),
        warmup_slots=100,
    ),
    "four-user": ScenarioPreset(
        name="four-user",
        description="4 users with the remaining constants at their defaults",
        system={"n_users": 4, "n_tasks": 5, "n_freq_slices": 4, "c_cache_slots": 2, "horizon_slots": 200},
        saq=SaqHyper(episodes=500),
    ),
}


def get_preset(name: str) -> ScenarioPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown scenario {name!r}; choose from {', '.join(sorted(PRESETS))}") from None
