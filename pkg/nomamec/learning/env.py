# nomamec/learning/env.py
"""Slot environment shared by the learners and the baselines.

Each slot t carries a channel realisation, the true popularity matrix (what
energy is charged with) and a predicted one (what caching decisions rank
by). Everything is fixed at construction, so replaying an episode sees
exactly the same slots.
"""

from __future__ import annotations

from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from ..config import SystemConfig
from ..energy.objective import EnergyBreakdown, EnergyEvaluator
from ..errors import DimensionError
from ..system.generators import draw_channel, generate_tasks, generate_topology
from ..system.types import ChannelState, DecisionVector, PopularityMatrix, TaskSpec, Topology


class SlotEnvironment:
    def __init__(
        self,
        cfg: SystemConfig,
        popularity: Sequence[PopularityMatrix],
        predicted: Optional[Sequence[PopularityMatrix]] = None,
        topology: Optional[Topology] = None,
        tasks: Optional[Sequence[TaskSpec]] = None,
        channels: Optional[Sequence[ChannelState]] = None,
    ):
        if len(popularity) < 1:
            raise DimensionError("environment needs at least one slot")
        predicted = predicted if predicted is not None else popularity
        if len(predicted) != len(popularity):
            raise DimensionError("true and predicted popularity cover different horizons")
        self.cfg = cfg
        self.popularity = list(popularity)
        self.predicted = list(predicted)
        self.topology = topology if topology is not None else generate_topology(cfg)
        self.tasks = list(tasks) if tasks is not None else generate_tasks(cfg)
        if channels is None:
            channels = [draw_channel(cfg, self.topology, t) for t in range(len(self.popularity))]
        if len(channels) != len(self.popularity):
            raise DimensionError("channel sequence length differs from the horizon")
        self.channels = list(channels)
        self._true: Dict[int, EnergyEvaluator] = {}
        self._pred: Dict[int, EnergyEvaluator] = {}
        self._memo: Dict[Tuple[Tuple[int, ...], Tuple[float, ...], Tuple[int, ...], int], EnergyBreakdown] = {}

    @property
    def horizon(self) -> int:
        return len(self.popularity)

    def with_config(self, cfg: SystemConfig) -> "SlotEnvironment":
        """Same slots under different constants (e.g. caching disabled)."""
        return SlotEnvironment(cfg, self.popularity, self.predicted, self.topology, self.tasks, self.channels)

    def evaluator(self, slot: int) -> EnergyEvaluator:
        ev = self._true.get(slot)
        if ev is None:
            ev = EnergyEvaluator(self.popularity[slot], self.channels[slot], self.tasks, self.cfg)
            self._true[slot] = ev
        return ev

    def predicted_evaluator(self, slot: int) -> EnergyEvaluator:
        ev = self._pred.get(slot)
        if ev is None:
            ev = EnergyEvaluator(self.predicted[slot], self.channels[slot], self.tasks, self.cfg)
            self._pred[slot] = ev
        return ev

    def breakdown(self, decision: DecisionVector, slot: int) -> EnergyBreakdown:
        key = (decision.x, decision.y, decision.z, slot)
        b = self._memo.get(key)
        if b is None:
            b = self.evaluator(slot).breakdown(decision)
            self._memo[key] = b
        return b

    def objective(self, decision: DecisionVector, slot: int) -> float:
        return self.breakdown(decision, slot).objective

    # -- decision helpers -------------------------------------------------

    def _fill_cache(self, order: Sequence[int]) -> Tuple[int, ...]:
        cfg = self.cfg
        z = [0] * cfg.n_tasks
        used_bits = 0.0
        placed = 0
        for j in order:
            if placed >= cfg.c_cache_slots:
                break
            size = self.tasks[j].result_bits
            if cfg.cache_capacity_bits is not None and used_bits + size > cfg.cache_capacity_bits:
                continue
            z[j] = 1
            used_bits += size
            placed += 1
        return tuple(z)

    def popularity_cache(self, slot: int) -> Tuple[int, ...]:
        """Top-C_cache tasks by predicted popularity, lower task index on ties."""
        pop = self.predicted[slot].task_popularity
        order = sorted(range(self.cfg.n_tasks), key=lambda j: (-pop[j], j))
        return self._fill_cache(order)

    def best_response_cache(self, x: Sequence[int], y: Sequence[float], slot: int) -> Tuple[int, ...]:
        """Cache for fixed (X, Y): deadline-missing tasks first, then by expected saving."""
        ev = self.predicted_evaluator(slot)
        layout = DecisionVector(tuple(x), tuple(y), (0,) * self.cfg.n_tasks)
        saving = ev.task_costs(layout)
        late = self._late_tasks(ev, layout)
        order = sorted(range(self.cfg.n_tasks), key=lambda j: (not late[j], -saving[j], j))
        return self._fill_cache(order)

    def _late_tasks(self, ev: EnergyEvaluator, d: DecisionVector) -> np.ndarray:
        cfg = self.cfg
        t_off, t_mec, *_ = ev.terms(d)
        limit = cfg.latency_limit_s
        x = np.asarray(d.x)
        y = np.asarray(d.y)
        offload_late = (x == 0)[:, None] & (y > 0)[:, None] & (t_off + t_mec > limit)
        local_late = (x == 1)[:, None] & (ev.t_loc > limit) if cfg.strict_local_latency else np.zeros_like(offload_late)
        requested = ev.pop.probs > 0
        return ((offload_late | local_late) & requested).any(axis=0)

    def equal_split(self, x: Sequence[int], slot: int) -> Tuple[float, ...]:
        """N_f slices split evenly among offloaders, leftovers to the strongest channel."""
        n_f = self.cfg.n_freq_slices
        up = [i for i, v in enumerate(x) if v == 0]
        slices = [0] * len(x)
        if not up:
            return tuple(0.0 for _ in x)
        gains = self.channels[slot].gains
        ranked = sorted(up, key=lambda i: (-gains[i], i))
        if len(up) > n_f:
            # not enough slices: the weakest offloaders get none (C4 then fails)
            for i in ranked[:n_f]:
                slices[i] = 1
        else:
            base, extra = divmod(n_f, len(up))
            for i in up:
                slices[i] = base
            slices[ranked[0]] += extra
        return tuple(s / n_f for s in slices)

    def all_local(self) -> DecisionVector:
        n = self.cfg.n_users
        return DecisionVector((1,) * n, (0.0,) * n, (0,) * self.cfg.n_tasks)
