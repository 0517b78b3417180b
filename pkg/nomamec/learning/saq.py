"""Single-agent tabular Q-learning over joint (X, Y, Z) configurations.

State index (mixed radix, least significant first):

    offload bits   b_i = 1 - x_i                      2^N_u values
    slice owners   owner of each of the N_f slices    N_u^N_f values
    cache rank     index into the cache sets          only when caching is folded in

Actions are elementary moves on that configuration:

    [0, N_u*N_f)              give slice a // N_u to user a % N_u
    next N_u                  flip one user's offload bit
    next N_t (folded cache)   toggle one task's cache bit
    the rest                  no-op

Slices are interchangeable, so the owner digits of a reachable state are
kept sorted (see `StateSpace.canonical`); unsorted indices alias a sorted one
and are never visited.

In the default layout the cache is not part of the state: each slot caches
the most popular tasks by prediction, or with `best_response_cache` the best
response to the current (X, Y).

The reward is the previous slot's realized energy minus the current one;
the first slot of an episode compares against the all-local start state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from ..config import SaqHyper, SystemConfig
from ..energy.objective import EnergyBreakdown
from ..energy.oracle import cache_sets
from ..errors import EncodingError, PreconditionError, SizeLimitError
from ..log import get_logger
from ..system.types import DecisionVector
from .env import SlotEnvironment

log = get_logger(__name__)


@dataclass(frozen=True)
class StateSpace:
    n_users: int
    n_tasks: int
    n_slices: int
    strict_c4: bool
    fold_cache: bool
    cache_sets: Tuple[Tuple[int, ...], ...]

    @classmethod
    def for_config(cls, cfg: SystemConfig, cache_outside_state: bool = True) -> "StateSpace":
        sets = tuple(sorted(cache_sets(cfg))) if not cache_outside_state else ((0,) * cfg.n_tasks,)
        return cls(cfg.n_users, cfg.n_tasks, cfg.n_freq_slices, cfg.strict_c4, not cache_outside_state, sets)

    @property
    def x_range(self) -> int:
        return 2 ** self.n_users

    @property
    def y_range(self) -> int:
        return self.n_users ** self.n_slices

    @property
    def n_states(self) -> int:
        return self.x_range * self.y_range * len(self.cache_sets)

    @property
    def n_actions(self) -> int:
        moves = self.n_users * self.n_slices + self.n_users
        if self.fold_cache:
            moves += self.n_tasks
        return max(2 * self.n_users * self.n_slices, moves)

    # -- encoding ---------------------------------------------------------

    def split(self, s: int) -> Tuple[int, int, int]:
        if not 0 <= s < self.n_states:
            raise EncodingError(f"state {s} outside [0, {self.n_states})")
        xbits, rest = s % self.x_range, s // self.x_range
        return xbits, rest % self.y_range, rest // self.y_range

    def join(self, xbits: int, owners: int, zrank: int) -> int:
        return xbits + self.x_range * (owners + self.y_range * zrank)

    def owner_digits(self, owners: int) -> List[int]:
        digits = []
        for _ in range(self.n_slices):
            owners, d = divmod(owners, self.n_users)
            digits.append(d)
        return digits

    def owners_index(self, digits: List[int]) -> int:
        return sum(v * self.n_users ** k for k, v in enumerate(digits))

    def canonical(self, s: int) -> int:
        """Representative of the states that decode like `s`.

        Owner digits are sorted. Without strict C4 an all-local state keeps
        no owners, since its shares decode to zero whatever they were.
        """
        xbits, owners, zrank = self.split(s)
        if not self.strict_c4 and xbits == 0:
            return self.join(xbits, 0, zrank)
        return self.join(xbits, self.owners_index(sorted(self.owner_digits(owners))), zrank)

    def is_canonical(self, s: int) -> bool:
        return self.canonical(s) == s

    def decode(self, s: int) -> DecisionVector:
        xbits, owners, zrank = self.split(s)
        x = tuple(1 - ((xbits >> i) & 1) for i in range(self.n_users))
        counts = [0] * self.n_users
        for d in self.owner_digits(owners):
            counts[d] += 1
        if not self.strict_c4:
            counts = [c if x[i] == 0 else 0 for i, c in enumerate(counts)]
        return DecisionVector.from_slices(x, counts, self.cache_sets[zrank], self.n_slices)

    def encode(self, d: DecisionVector) -> int:
        if d.n_users != self.n_users or d.n_tasks != self.n_tasks:
            raise EncodingError("decision dimensions do not match the state space")
        if not d.on_grid(self.n_slices):
            raise EncodingError(f"shares {d.y} are not on the 1/{self.n_slices} grid")
        slices = d.slices(self.n_slices)
        up = d.offloaders
        if self.strict_c4:
            if sum(slices) != self.n_slices:
                raise EncodingError("shares must sum to 1")
        elif up:
            if sum(slices[i] for i in up) != self.n_slices or any(slices[i] for i in range(self.n_users) if i not in up):
                raise EncodingError("offloaders' shares must sum to 1 and local users hold none")
        elif any(slices):
            raise EncodingError("shares allocated while nobody offloads")
        xbits = sum((1 - v) << i for i, v in enumerate(d.x))
        digits: List[int] = []
        for i, c in enumerate(slices):
            digits.extend([i] * c)
        owners = self.owners_index(digits or [0] * self.n_slices)
        if self.fold_cache:
            try:
                zrank = self.cache_sets.index(tuple(d.z))
            except ValueError:
                raise EncodingError(f"cache vector {d.z} exceeds the cache capacity") from None
        else:
            zrank = 0
        return self.join(xbits, owners, zrank)

    # -- actions ----------------------------------------------------------

    def describe_action(self, a: int) -> Tuple[str, int, int]:
        if not 0 <= a < self.n_actions:
            raise EncodingError(f"action {a} outside [0, {self.n_actions})")
        reassign = self.n_users * self.n_slices
        if a < reassign:
            return "reassign", a // self.n_users, a % self.n_users
        b = a - reassign
        if b < self.n_users:
            return "flip", b, -1
        b -= self.n_users
        if self.fold_cache and b < self.n_tasks:
            return "toggle", b, -1
        return "noop", -1, -1

    def apply(self, s: int, a: int) -> Optional[int]:
        """Canonical successor state, or None when the move breaks the cache capacity."""
        kind, p, q = self.describe_action(a)
        xbits, owners, zrank = self.split(s)
        if kind == "reassign":
            current = self.owner_digits(owners)[p]
            owners += (q - current) * self.n_users ** p
        elif kind == "flip":
            xbits ^= 1 << p
        elif kind == "toggle":
            z = list(self.cache_sets[zrank])
            z[p] ^= 1
            try:
                zrank = self.cache_sets.index(tuple(z))
            except ValueError:
                return None
        return self.canonical(self.join(xbits, owners, zrank))

    def action_mask(self, s: int) -> np.ndarray:
        mask = np.ones(self.n_actions, dtype=bool)
        if self.fold_cache:
            base = self.n_users * self.n_slices + self.n_users
            for j in range(self.n_tasks):
                mask[base + j] = self.apply(s, base + j) is not None
        return mask


def table_sizes(cfg: SystemConfig, cache_outside_state: bool = True) -> Tuple[int, int]:
    space = StateSpace.for_config(cfg, cache_outside_state)
    return space.n_states, space.n_actions


def encode_state(decision: DecisionVector, cfg: SystemConfig, cache_outside_state: bool = True) -> int:
    return StateSpace.for_config(cfg, cache_outside_state).encode(decision)


def decode_state(s: int, cfg: SystemConfig, cache_outside_state: bool = True) -> DecisionVector:
    return StateSpace.for_config(cfg, cache_outside_state).decode(s)


@dataclass
class QTable:
    values: np.ndarray
    visits: np.ndarray
    gamma: float = 0.1  # learning rate
    beta: float = 0.9  # discount factor

    @classmethod
    def zeros(cls, n_states: int, n_actions: int, gamma: float = 0.1, beta: float = 0.9,
              max_cells: int = 50_000_000) -> "QTable":
        if n_states * n_actions > max_cells:
            raise SizeLimitError("Q-table exceeds the memory guard", N1=n_states, N2=n_actions, limit=max_cells)
        return cls(np.zeros((n_states, n_actions)), np.zeros((n_states, n_actions), dtype=np.int64), gamma, beta)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape  # type: ignore[return-value]


def reward(prev_energy: float, cur_energy: float) -> float:
    return prev_energy - cur_energy


def q_update(q: QTable, s: int, a: int, r: float, s_next: int) -> QTable:
    """Q(s,a) <- (1 - gamma) Q(s,a) + gamma (r + beta max_a' Q(s', a'))"""
    target = r + q.beta * float(q.values[s_next].max())
    q.values[s, a] = (1.0 - q.gamma) * q.values[s, a] + q.gamma * target
    q.visits[s, a] += 1
    return q


def greedy_action(row: np.ndarray, mask: Optional[np.ndarray] = None) -> int:
    """Argmax with the lowest index winning ties."""
    if mask is None:
        return int(np.argmax(row))
    if not mask.any():
        raise PreconditionError("no feasible action")
    return int(np.argmax(np.where(mask, row, -np.inf)))


def select_action_eps_greedy(
    q: QTable,
    s: int,
    eps: float,
    rng: np.random.Generator,
    mask: Optional[np.ndarray] = None,
) -> int:
    if not 0.0 <= eps <= 1.0:
        raise PreconditionError(f"epsilon must lie in [0, 1], got {eps}")
    if mask is not None and not mask.any():
        raise PreconditionError("no feasible action")
    if rng.random() < eps:
        choices = np.flatnonzero(mask) if mask is not None else np.arange(q.values.shape[1])
        return int(choices[rng.integers(len(choices))])
    return greedy_action(q.values[s], mask)


def extract_policy(q: QTable, mask_fn: Optional[Callable[[int], np.ndarray]] = None) -> np.ndarray:
    if mask_fn is None:
        return np.argmax(q.values, axis=1)
    return np.array([greedy_action(q.values[s], mask_fn(s)) for s in range(q.values.shape[0])])


def epsilon_schedule(hyper: SaqHyper, episode: int) -> float:
    if hyper.episodes <= 1:
        return hyper.eps_end
    frac = episode / (hyper.episodes - 1)
    return hyper.eps_start + (hyper.eps_end - hyper.eps_start) * frac


class SaqAgent:
    """Central agent: Q-table plus the environment view it acts on."""

    def __init__(self, env: SlotEnvironment, hyper: SaqHyper):
        self.env = env
        self.hyper = hyper
        self.space = StateSpace.for_config(env.cfg, hyper.cache_outside_state)
        self.q = QTable.zeros(self.space.n_states, self.space.n_actions, hyper.gamma, hyper.beta, hyper.max_cells)
        self._energy: dict[Tuple[int, int], float] = {}
        self._masks: dict[int, np.ndarray] = {}
        log.debug("Q-table %d x %d (fold_cache=%s)", self.space.n_states, self.space.n_actions, self.space.fold_cache)

    def decision(self, s: int, slot: int) -> DecisionVector:
        d = self.space.decode(s)
        if self.space.fold_cache:
            return d
        if self.hyper.best_response_cache:
            return d.with_cache(self.env.best_response_cache(d.x, d.y, slot))
        return d.with_cache(self.env.popularity_cache(slot))

    def energy(self, s: int, slot: int) -> float:
        key = (s, slot)
        e = self._energy.get(key)
        if e is None:
            e = self.env.objective(self.decision(s, slot), slot)
            self._energy[key] = e
        return e

    def mask(self, s: int) -> Optional[np.ndarray]:
        if not self.space.fold_cache:
            return None
        m = self._masks.get(s)
        if m is None:
            m = self.space.action_mask(s)
            self._masks[s] = m
        return m

    def run_episode(self, eps: float, rng: np.random.Generator, learn: bool = True) -> float:
        """One pass over the horizon from the all-local state; returns the mean objective."""
        s = 0
        prev = self.energy(s, 0)
        total = 0.0
        for t in range(self.env.horizon):
            a = select_action_eps_greedy(self.q, s, eps, rng, self.mask(s))
            s_next = self.space.apply(s, a)
            assert s_next is not None
            cur = self.energy(s_next, t)
            if learn:
                before = self.energy(s, t) if self.hyper.reward_mode == "same-slot" else prev
                q_update(self.q, s, a, reward(before, cur), s_next)
            total += cur
            prev = cur
            s = s_next
        return total / self.env.horizon

    def train(self, rng: np.random.Generator) -> List[float]:
        trace = []
        for e in range(self.hyper.episodes):
            trace.append(self.run_episode(epsilon_schedule(self.hyper, e), rng))
            if (e + 1) % 50 == 0:
                log.debug("episode %d: mean energy %.6g J", e + 1, trace[-1])
        return trace

    def rollout(self) -> List[EnergyBreakdown]:
        """Greedy policy from the all-local state, one breakdown per slot."""
        s = 0
        out = []
        for t in range(self.env.horizon):
            a = greedy_action(self.q.values[s], self.mask(s))
            s = self.space.apply(s, a)
            assert s is not None
            out.append(self.env.breakdown(self.decision(s, t), t))
        return out

    def policy(self) -> np.ndarray:
        return extract_policy(self.q, self.mask if self.space.fold_cache else None)


@dataclass
class SaqResult:
    agent: SaqAgent
    trace: List[float] = field(default_factory=list)
    greedy: List[EnergyBreakdown] = field(default_factory=list)

    @property
    def q(self) -> QTable:
        return self.agent.q


def train(env: SlotEnvironment, hyper: SaqHyper, rng: np.random.Generator) -> SaqResult:
    agent = SaqAgent(env, hyper)
    trace = agent.train(rng)
    greedy = agent.rollout()
    log.info("SAQ: %d episodes, final %.6g J, greedy %.6g J", len(trace), trace[-1],
             float(np.mean([b.objective for b in greedy])))
    return SaqResult(agent, trace, greedy)
