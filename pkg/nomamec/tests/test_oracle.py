# tests/test_oracle.py
import pytest

from nomamec.config import SystemConfig
from nomamec.energy import EnergyEvaluator, brute_force_optimum, enumerate_decisions
from nomamec.energy.oracle import brute_force_search, cache_sets, compositions, count_decisions
from nomamec.errors import SizeLimitError


def test_compositions():
    assert sorted(compositions(4, 2)) == [(1, 3), (2, 2), (3, 1)]
    assert sorted(compositions(2, 2, positive=False)) == [(0, 2), (1, 1), (2, 0)]
    assert list(compositions(1, 2)) == []
    assert list(compositions(0, 0)) == [()]


def test_cache_sets_respect_capacity():
    cfg = SystemConfig(n_tasks=4, c_cache_slots=2)
    sets = cache_sets(cfg)
    assert len(sets) == 1 + 4 + 6
    assert all(sum(z) <= 2 for z in sets)


@pytest.mark.parametrize("strict", [False, True])
def test_count_matches_enumeration(strict):
    cfg = SystemConfig(n_users=3, n_tasks=3, n_freq_slices=4, c_cache_slots=1, strict_c4=strict)
    decisions = list(enumerate_decisions(cfg))
    assert len(decisions) == count_decisions(cfg)
    assert len(set(decisions)) == len(decisions)


def test_enumeration_is_c1_to_c5_clean(small_cfg, make_env):
    env = make_env(small_cfg)
    ev = env.evaluator(0)
    for d in enumerate_decisions(small_cfg):
        assert not [v for v in ev.violations(d) if not v.startswith("C6")]


def test_optimum_beats_every_candidate(small_cfg, make_env):
    cfg = small_cfg.replace(latency_limit_s=100.0)
    env = make_env(cfg)
    for t in range(3):
        ev = env.evaluator(t)
        d, energy = brute_force_optimum(env.popularity[t], env.channels[t], env.tasks, cfg)
        feasible = [ev.breakdown(c).total for c in enumerate_decisions(cfg) if ev.breakdown(c).feasible]
        assert energy == pytest.approx(min(feasible))
        assert ev.breakdown(d).feasible


def test_infeasible_slot_returns_lowest_penalty(small_cfg, make_env):
    cfg = small_cfg.replace(latency_limit_s=1e-6)
    env = make_env(cfg)
    d, energy, b = brute_force_search(env.popularity[0], env.channels[0], env.tasks, cfg)
    assert not b.feasible
    assert energy == pytest.approx(EnergyEvaluator(env.popularity[0], env.channels[0], env.tasks, cfg)
                                   .penalty_per_user().sum())
    # every candidate carries the same penalty, so the first one wins
    assert d == next(iter(enumerate_decisions(cfg)))


def test_size_guard(small_cfg, make_env):
    env = make_env(small_cfg)
    with pytest.raises(SizeLimitError) as info:
        brute_force_optimum(env.popularity[0], env.channels[0], env.tasks, small_cfg, max_combinations=3)
    assert info.value.sizes["limit"] == 3
