"""Configuration management for nomamec"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Any, Literal, Optional, Tuple, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, create_model, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .errors import ConfigError

KB_BITS = 8 * 1024

PerUser = Union[float, Tuple[float, ...]]


def dbm_to_w(dbm: float) -> float:
    return 10 ** (dbm / 10.0) / 1000.0


class SystemConfig(BaseModel):
    """Physical and network constants of one cache-aided NOMA-MEC cell."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_users: int = 3
    n_tasks: int = 5
    bandwidth_hz: float = 20e6
    noise_power_w: float = dbm_to_w(-95.0)
    c_mec_hz: float = 10e9
    c_cache_slots: int = 2  # 0 allowed: conventional MEC has no cache
    local_cpu_hz: PerUser = 1e9
    p_local_w: PerUser = 0.5
    p_mec_w: float = 5.0
    user_tx_power_w: PerUser = dbm_to_w(20.0)
    latency_limit_s: float = 5.0
    n_freq_slices: int = 4
    area_side_m: float = 300.0
    pathloss_exponent: float = 3.0
    horizon_slots: int = 200
    rng_seed: int = 0

    # task generator
    task_input_min_bits: float = 300 * KB_BITS
    task_input_max_bits: float = 800 * KB_BITS
    cycles_per_bit_min: float = 1000.0
    cycles_per_bit_max: float = 1500.0
    result_ratio: float = 0.1

    # objective / constraint switches
    cache_capacity_bits: Optional[float] = None
    formula_mode: Literal["consistent", "as-printed"] = "consistent"
    strict_c4: bool = False
    strict_local_latency: bool = True
    penalty_factor: float = 10.0

    @model_validator(mode="after")
    def _check(self) -> "SystemConfig":
        problems = []
        for name in ("n_users", "n_tasks", "n_freq_slices", "horizon_slots"):
            if getattr(self, name) < 1:
                problems.append(f"{name} must be >= 1")
        if self.c_cache_slots < 0:
            problems.append("c_cache_slots must be >= 0")
        if self.c_cache_slots > self.n_tasks:
            problems.append("c_cache_slots must not exceed n_tasks")
        for name in ("bandwidth_hz", "noise_power_w", "c_mec_hz", "p_mec_w", "latency_limit_s",
                     "area_side_m", "pathloss_exponent", "task_input_min_bits", "cycles_per_bit_min",
                     "penalty_factor"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                problems.append(f"{name} must be positive and finite")
        for name in ("local_cpu_hz", "p_local_w", "user_tx_power_w"):
            v = getattr(self, name)
            vals = v if isinstance(v, tuple) else (v,)
            if isinstance(v, tuple) and len(v) != self.n_users:
                problems.append(f"{name} needs one value per user ({self.n_users})")
            if any(not (x > 0 and math.isfinite(x)) for x in vals):
                problems.append(f"{name} must be positive and finite")
        if self.task_input_max_bits < self.task_input_min_bits:
            problems.append("task_input_max_bits < task_input_min_bits")
        if self.cycles_per_bit_max < self.cycles_per_bit_min:
            problems.append("cycles_per_bit_max < cycles_per_bit_min")
        if not 0 < self.result_ratio <= 1:
            problems.append("result_ratio must be in (0, 1]")
        if self.cache_capacity_bits is not None and self.cache_capacity_bits < 0:
            problems.append("cache_capacity_bits must be >= 0")
        if problems:
            raise ValueError("; ".join(problems))
        return self

    def _per_user(self, value: PerUser) -> np.ndarray:
        if isinstance(value, tuple):
            return np.asarray(value, dtype=float)
        return np.full(self.n_users, float(value))

    @property
    def local_cpu(self) -> np.ndarray:
        return self._per_user(self.local_cpu_hz)

    @property
    def p_local(self) -> np.ndarray:
        return self._per_user(self.p_local_w)

    @property
    def tx_power(self) -> np.ndarray:
        return self._per_user(self.user_tx_power_w)

    def replace(self, **changes: Any) -> "SystemConfig":
        """Validated copy with some fields changed."""
        try:
            return SystemConfig(**{**self.model_dump(), **changes})
        except ValidationError as e:
            raise ConfigError(str(e)) from e


class LstmHyper(BaseModel):
    """LSTM popularity predictor hyperparameters"""
    hidden_size: int = Field(default=32, ge=1)
    epochs: int = Field(default=200, ge=1)
    lr: float = Field(default=0.01, gt=0)  # constant BPTT step
    mode: Literal["bptt", "rtrl", "hybrid"] = "hybrid"
    bptt_window: int = Field(default=20, ge=1)
    clip_norm: float = Field(default=5.0, gt=0)
    rtrl_scale: float = Field(default=1.0, gt=0)  # mu_t = rtrl_scale / t
    goal: Optional[float] = Field(default=None, gt=0)  # early-stop train-loss threshold
    init_scale: float = Field(default=0.1, gt=0)
    train_fraction: float = Field(default=0.8, gt=0, lt=1)


class SaqHyper(BaseModel):
    """Single-agent Q-learning hyperparameters"""
    gamma: float = Field(default=0.1, gt=0, le=1)  # learning rate
    beta: float = Field(default=0.9, ge=0, lt=1)  # discount factor
    eps_start: float = Field(default=0.5, ge=0, le=1)
    eps_end: float = Field(default=0.01, ge=0, le=1)
    episodes: int = Field(default=500, ge=1)
    cache_outside_state: bool = True
    best_response_cache: bool = False  # default caches by predicted popularity
    reward_mode: Literal["previous-slot", "same-slot"] = "previous-slot"
    max_cells: int = Field(default=50_000_000, ge=1)


class MaqHyper(BaseModel):
    """BLA multi-agent hyperparameters"""
    episodes: int = Field(default=50, ge=1)
    reward_threshold: float = 0.0  # outcome = reward iff r > threshold
    n_energy_bins: int = Field(default=8, ge=1)
    energy_bin_low: float = Field(default=1e-3, gt=0)
    energy_bin_high: float = Field(default=1e3, gt=0)
    team_reward: bool = False


class _EnvBase(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="NOMAMEC_", case_sensitive=False, extra="ignore")


# Every SystemConfig field, optional, read from NOMAMEC_<FIELD>
SystemEnv = create_model(
    "SystemEnv",
    __base__=_EnvBase,
    **{name: (Optional[f.annotation], None) for name, f in SystemConfig.model_fields.items()},
)


def _parse_flat(text: str) -> dict[str, Any]:
    data: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in SystemConfig.model_fields:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        data[key] = [v.strip() for v in value.split(",")] if "," in value else value
    return data


def read_config_file(path: Path) -> dict[str, Any]:
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() in {".yaml", ".yml"}:
        data = yaml.safe_load(text) or {}
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        unknown = set(data) - set(SystemConfig.model_fields)
        if unknown:
            raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
        return data
    return _parse_flat(text)


def env_overrides() -> dict[str, Any]:
    return SystemEnv().model_dump(exclude_none=True)


def load_config(
    path: Optional[Path] = None,
    use_env: bool = True,
    defaults: Optional[dict[str, Any]] = None,
    **overrides: Any,
) -> SystemConfig:
    """Defaults (model, then `defaults`), then the file (flat or YAML), then NOMAMEC_* variables, then overrides."""
    data: dict[str, Any] = dict(defaults or {})
    if path is not None:
        data.update(read_config_file(Path(path)))
    try:
        if use_env:
            data.update(env_overrides())
        data.update(overrides)
        return SystemConfig(**data)
    except ValidationError as e:
        raise ConfigError(str(e)) from e


def _fmt(value: Any) -> str:
    if isinstance(value, tuple):
        return ", ".join(repr(v) for v in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def save_config(cfg: SystemConfig, path: Path) -> None:
    """Write the flat `key = value` format"""
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["# nomamec system configuration"]
    for key, value in cfg.model_dump().items():
        if value is None:
            continue
        lines.append(f"{key} = {_fmt(value)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
