"""Exception hierarchy for nomamec"""

from __future__ import annotations

from typing import Sequence


class NomaMecError(Exception):
    """Base class; `exit_code` is what the CLI returns when this escapes."""
    exit_code: int = 1


class ConfigError(NomaMecError):
    exit_code = 2


class DimensionError(NomaMecError):
    pass


class DomainError(NomaMecError, ValueError):
    """Nonpositive rate, CPU frequency or power, or an argument outside its domain."""
    exit_code = 3


class InfeasibleAllocationError(NomaMecError):
    """An offloaded task was given no MEC share (y_i = 0)."""


class InfeasibleDecisionError(NomaMecError):
    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("infeasible decision: " + "; ".join(self.violations))


class SizeLimitError(NomaMecError):
    def __init__(self, message: str, **sizes: int | float):
        self.sizes = sizes
        detail = ", ".join(f"{k}={v}" for k, v in sizes.items())
        super().__init__(f"{message} ({detail})" if detail else message)


class EncodingError(NomaMecError):
    pass


class TrainingDivergedError(NomaMecError):
    exit_code = 3

    def __init__(self, epoch: int, loss: float):
        self.epoch = epoch
        self.loss = loss
        super().__init__(f"training diverged at epoch {epoch} (loss={loss})")


class NumericConsistencyError(NomaMecError):
    exit_code = 3


class PreconditionError(NomaMecError, ValueError):
    pass


class PersistenceError(NomaMecError):
    pass
