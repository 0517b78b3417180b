"""Exhaustive search over one slot's (X, Y, Z) decisions.

Used as a ground truth by the learners' tests and by `nomamec oracle`.
"""

from __future__ import annotations

from itertools import combinations, product
from math import comb
from typing import Iterator, List, Sequence, Tuple

from ..config import SystemConfig
from ..errors import SizeLimitError
from ..log import get_logger
from ..system.types import ChannelState, DecisionVector, PopularityMatrix, TaskSpec
from .objective import EnergyBreakdown, EnergyEvaluator

log = get_logger(__name__)

MAX_COMBINATIONS = 1_000_000


def compositions(total: int, parts: int, positive: bool = True) -> Iterator[Tuple[int, ...]]:
    """Ordered integer tuples of length `parts` summing to `total`."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    low = 1 if positive else 0
    if parts == 1:
        if total >= low:
            yield (total,)
        return
    for first in range(low, total - low * (parts - 1) + 1):
        for rest in compositions(total - first, parts - 1, positive):
            yield (first,) + rest


def _n_compositions(total: int, parts: int, positive: bool) -> int:
    if parts == 0:
        return 1 if total == 0 else 0
    if positive:
        return comb(total - 1, parts - 1) if total >= parts else 0
    return comb(total + parts - 1, parts - 1)


def cache_sets(cfg: SystemConfig) -> List[Tuple[int, ...]]:
    sets = []
    for k in range(cfg.c_cache_slots + 1):
        for chosen in combinations(range(cfg.n_tasks), k):
            z = [0] * cfg.n_tasks
            for j in chosen:
                z[j] = 1
            sets.append(tuple(z))
    return sets


def allocation_slices(x: Sequence[int], cfg: SystemConfig) -> Iterator[Tuple[int, ...]]:
    """Y candidates (in slices) for a fixed X under the configured C4 reading."""
    n_f = cfg.n_freq_slices
    up = [i for i, v in enumerate(x) if v == 0]
    if cfg.strict_c4:
        # every user may hold slices, offloaders need at least one
        for s in compositions(n_f, len(x), positive=False):
            if all(s[i] > 0 for i in up):
                yield s
        return
    if not up:
        yield (0,) * len(x)
        return
    for part in compositions(n_f, len(up)):
        s = [0] * len(x)
        for i, k in zip(up, part):
            s[i] = k
        yield tuple(s)


def count_decisions(cfg: SystemConfig) -> int:
    n_z = sum(comb(cfg.n_tasks, k) for k in range(cfg.c_cache_slots + 1))
    n_y = 0
    for x in product((0, 1), repeat=cfg.n_users):
        n_up = x.count(0)
        if cfg.strict_c4:
            # reserve one slice per offloader, spread the rest freely
            spare = cfg.n_freq_slices - n_up
            n_y += _n_compositions(spare, cfg.n_users, False) if spare >= 0 else 0
        else:
            n_y += _n_compositions(cfg.n_freq_slices, n_up, True) if n_up else 1
    return n_y * n_z


def enumerate_decisions(cfg: SystemConfig) -> Iterator[DecisionVector]:
    """Every C1-C5 candidate on the 1/N_f grid, in lexicographic (x, slices, z) order."""
    z_sets = sorted(cache_sets(cfg))
    for x in product((0, 1), repeat=cfg.n_users):
        for s in sorted(allocation_slices(x, cfg)):
            for z in z_sets:
                yield DecisionVector.from_slices(x, s, z, cfg.n_freq_slices)


def brute_force_optimum(
    pop: PopularityMatrix,
    chan: ChannelState,
    tasks: Sequence[TaskSpec],
    cfg: SystemConfig,
    max_combinations: int = MAX_COMBINATIONS,
) -> Tuple[DecisionVector, float]:
    """Minimum-energy feasible decision for one slot.

    When no candidate satisfies C1-C6 the lowest penalised objective is
    returned instead. Ties go to the lexicographically smallest (x, slices, z).
    """
    best, energy, _ = brute_force_search(pop, chan, tasks, cfg, max_combinations)
    return best, energy


def brute_force_search(
    pop: PopularityMatrix,
    chan: ChannelState,
    tasks: Sequence[TaskSpec],
    cfg: SystemConfig,
    max_combinations: int = MAX_COMBINATIONS,
) -> Tuple[DecisionVector, float, EnergyBreakdown]:
    n = count_decisions(cfg)
    if n > max_combinations:
        raise SizeLimitError("brute-force search space too large", combinations=n, limit=max_combinations)
    ev = EnergyEvaluator(pop, chan, tasks, cfg)
    best_key = None
    best: Tuple[DecisionVector, EnergyBreakdown] | None = None
    for d in enumerate_decisions(cfg):
        b = ev.breakdown(d)
        key = (0, b.total) if b.feasible else (1, b.objective)
        # strict < keeps the first (lexicographically smallest) of equal keys
        if best_key is None or key < best_key:
            best_key, best = key, (d, b)
    assert best is not None
    d, b = best
    if not b.feasible:
        log.debug("slot %d: no feasible decision among %d candidates", chan.slot, n)
    return d, b.objective, b
