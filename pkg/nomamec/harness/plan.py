"""Experiment plans and result rows."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..config import LstmHyper, MaqHyper, SaqHyper
from ..errors import ConfigError

Algorithm = Literal["saq", "bla-maq", "full-local", "full-offload", "conventional-mec"]
SweepVariable = Literal["task_input_bits", "c_mec_hz", "c_cache_slots", "learning_rate", "none"]

ALGORITHMS: tuple[str, ...] = ("saq", "bla-maq", "full-local", "full-offload", "conventional-mec")
LEARNERS = {"saq", "bla-maq", "conventional-mec"}


class ExperimentPlan(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scenario: str = "canonical"
    algorithms: List[Algorithm] = Field(default_factory=lambda: ["saq"])
    sweep_variable: SweepVariable = "none"
    sweep_values: List[float] = Field(default_factory=list)
    seeds: List[int] = Field(default_factory=lambda: [0])
    out_dir: Path = Path("results")
    config_path: Optional[Path] = None
    overrides: Dict[str, Any] = Field(default_factory=dict)  # SystemConfig fields
    popularity_source: Literal["lstm", "oracle"] = "lstm"
    per_user_popularity: bool = False
    warmup_slots: Optional[int] = Field(default=None, ge=0)
    step_scale: Optional[float] = Field(default=None, gt=0, le=0.5)
    saq: Optional[SaqHyper] = None
    maq: Optional[MaqHyper] = None
    lstm: Optional[LstmHyper] = None
    workers: int = Field(default=1, ge=1)

    @field_validator("algorithms", mode="before")
    @classmethod
    def _one_or_many(cls, v: Any) -> Any:
        return [v] if isinstance(v, str) else v

    @model_validator(mode="after")
    def _check(self) -> "ExperimentPlan":
        if not self.algorithms:
            raise ValueError("at least one algorithm is required")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ValueError("algorithms must be distinct")
        if not self.seeds or len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be a nonempty list of distinct integers")
        if self.sweep_variable == "none":
            if self.sweep_values:
                raise ValueError("sweep values given without a sweep variable")
        else:
            if not self.sweep_values:
                raise ValueError(f"sweep over {self.sweep_variable} needs values")
            if any(b <= a for a, b in zip(self.sweep_values, self.sweep_values[1:])):
                raise ValueError("sweep values must be strictly increasing")
            if self.sweep_variable == "c_cache_slots" and any(v != int(v) or v < 0 for v in self.sweep_values):
                raise ValueError("cache sweep values must be nonnegative integers")
        return self

    @property
    def cells(self) -> List[Optional[float]]:
        return list(self.sweep_values) if self.sweep_variable != "none" else [None]


class ResultRow(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scenario: str
    algorithm: Algorithm
    sweep_variable: SweepVariable = "none"
    sweep_value: Optional[float] = None
    seed: int
    mean_energy_j: float = Field(ge=0)
    feasible_fraction: float = Field(default=1.0, ge=0, le=1)
    episodes_to_converge: Optional[int] = Field(default=None, ge=0)
    wall_time_s: float = Field(default=0.0, ge=0)

    @field_validator("mean_energy_j", "wall_time_s")
    @classmethod
    def _finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("must be finite")
        return v

    @field_validator("sweep_value", "episodes_to_converge", mode="before")
    @classmethod
    def _blank_is_none(cls, v: Any) -> Any:
        # pandas reads empty CSV cells back as NaN
        if isinstance(v, float) and math.isnan(v):
            return None
        return v


def load_plan(path: Path) -> ExperimentPlan:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"plan file not found: {path}")
    data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    try:
        return ExperimentPlan(**data)
    except ValidationError as e:
        raise ConfigError(str(e)) from e
