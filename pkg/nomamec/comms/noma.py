"""NOMA uplink with successive interference cancellation.

All offloading users superpose in one resource block. The AP decodes the
strongest received signal first; every user still undecoded when user k is
decoded counts as interference for k.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from ..config import SystemConfig
from ..errors import DimensionError, DomainError, PreconditionError
from ..system.types import ChannelState, DecisionVector, TaskSpec


@dataclass(frozen=True)
class UplinkSet:
    members: Tuple[int, ...]  # user indices in decoding order
    gains: Tuple[float, ...]
    tx_powers: Tuple[float, ...]

    def __len__(self) -> int:
        return len(self.members)

    def received_powers(self) -> np.ndarray:
        return np.asarray(self.gains) * np.asarray(self.tx_powers)

    def without(self, user: int) -> "UplinkSet":
        keep = [k for k, m in enumerate(self.members) if m != user]
        return UplinkSet(
            tuple(self.members[k] for k in keep),
            tuple(self.gains[k] for k in keep),
            tuple(self.tx_powers[k] for k in keep),
        )


def shannon_rate(bandwidth_hz: float, sinr: float | np.ndarray) -> float | np.ndarray:
    """B log2(1 + sinr), through log1p so a tiny sinr keeps a positive rate."""
    return bandwidth_hz * np.log1p(sinr) / np.log(2.0)


def decoding_order(x: Sequence[int], gains: np.ndarray) -> Tuple[int, ...]:
    """Offloaders by descending gain; equal gains keep ascending user index."""
    up = [i for i, v in enumerate(x) if v == 0]
    return tuple(sorted(up, key=lambda i: (-gains[i], i)))


def build_uplink_set(decision: DecisionVector, chan: ChannelState, cfg: SystemConfig) -> UplinkSet:
    if decision.n_users != cfg.n_users or chan.gains.shape[0] != cfg.n_users:
        raise DimensionError("decision / channel size does not match n_users")
    order = decoding_order(decision.x, chan.gains)
    p = cfg.tx_power
    return UplinkSet(
        members=order,
        gains=tuple(float(chan.gains[i]) for i in order),
        tx_powers=tuple(float(p[i]) for i in order),
    )


def noma_rate(uplink: UplinkSet, position: int, cfg: SystemConfig) -> float:
    """Achievable rate (bit/s) of the member decoded at `position`."""
    if len(uplink) == 0:
        raise PreconditionError("uplink set is empty")
    if not 0 <= position < len(uplink):
        raise PreconditionError(f"position {position} outside 0..{len(uplink) - 1}")
    rx = uplink.received_powers()
    interference = rx[position + 1:].sum()
    return float(shannon_rate(cfg.bandwidth_hz, rx[position] / (interference + cfg.noise_power_w)))


def uplink_rates(x: Sequence[int], gains: np.ndarray, cfg: SystemConfig) -> np.ndarray:
    """Per-user rate vector; zero for users that compute locally."""
    rates = np.zeros(len(x))
    order = decoding_order(x, gains)
    if not order:
        return rates
    idx = np.asarray(order)
    rx = gains[idx] * cfg.tx_power[idx]
    # interference seen at rank k = sum of received power at ranks > k
    tail = np.concatenate([np.cumsum(rx[::-1])[::-1][1:], [0.0]])
    rates[idx] = shannon_rate(cfg.bandwidth_hz, rx / (tail + cfg.noise_power_w))
    return rates


def offload_time(task: TaskSpec, rate: float) -> float:
    if not rate > 0:
        raise DomainError(f"uplink rate must be positive, got {rate}")
    return task.input_bits / rate


def offload_energy(task: TaskSpec, rate: float, tx_power: float) -> float:
    if not tx_power > 0:
        raise DomainError(f"transmit power must be positive, got {tx_power}")
    return tx_power * offload_time(task, rate)
