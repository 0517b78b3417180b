# tests/test_maq.py
import numpy as np
import pytest

from nomamec.config import MaqHyper, SystemConfig
from nomamec.harness.baselines import baseline_full_offload
from nomamec.learning.bla import Arm, p_local
from nomamec.learning.io import write_arm_table
from nomamec.learning.maq import AgentState, energy_bin, joint_decision, run_bla_maq


def test_energy_bins():
    hyper = MaqHyper()
    assert energy_bin(None, hyper) == 0
    assert energy_bin(0.0, hyper) == 0
    assert energy_bin(1e-5, hyper) == 0
    assert energy_bin(1.0, hyper) == 4
    assert energy_bin(1e3, hyper) == hyper.n_energy_bins - 1
    assert energy_bin(1e9, hyper) == hyper.n_energy_bins - 1


def test_untouched_agent_stays_local():
    assert AgentState(user=0).greedy() == Arm.LOCAL


def test_joint_decision_splits_and_caches(small_cfg, make_env):
    env = make_env(small_cfg)
    d = joint_decision(env, [Arm.OFFLOAD, Arm.OFFLOAD], 0)
    assert d.x == (0, 0) and sum(d.y) == pytest.approx(1.0)
    assert sum(d.z) == small_cfg.c_cache_slots
    assert joint_decision(env, [Arm.LOCAL, Arm.LOCAL], 0).y == (0.0, 0.0)


def _pulls(agent):
    return sum(arm.total - 4 for arm in agent.arms.values())


def test_every_slot_but_the_first_updates_an_arm(small_cfg, make_env):
    env = make_env(small_cfg)
    result = run_bla_maq(env, MaqHyper(episodes=2), np.random.default_rng(0))
    assert len(result.trace) == 2
    for agent in result.agents:
        assert _pulls(agent) == 2 * env.horizon - 1


def test_expensive_server_keeps_agent_local(make_env):
    cfg = SystemConfig(n_users=1, n_tasks=3, n_freq_slices=1, c_cache_slots=1, p_mec_w=50.0,
                       latency_limit_s=100.0, horizon_slots=30, rng_seed=2)
    env = make_env(cfg)
    result = run_bla_maq(env, MaqHyper(episodes=30), np.random.default_rng(2))
    local = np.mean([b.components[0][0] > 0 for b in result.greedy])
    assert local >= 0.9
    learned = np.mean([b.objective for b in result.greedy])
    assert learned <= np.mean([b.objective for b in baseline_full_offload(env)])


@pytest.mark.slow
def test_expensive_server_drives_local_probability_up(make_env):
    cfg = SystemConfig(n_users=1, n_tasks=3, n_freq_slices=1, c_cache_slots=1, p_mec_w=50.0,
                       latency_limit_s=100.0, horizon_slots=50, rng_seed=5)
    result = run_bla_maq(make_env(cfg), MaqHyper(episodes=100, n_energy_bins=1), np.random.default_rng(5))
    assert p_local(result.agents[0].arm()) >= 0.99


def test_fully_cached_tasks_cost_nothing(make_env):
    cfg = SystemConfig(n_users=2, n_tasks=3, n_freq_slices=2, c_cache_slots=3, horizon_slots=10)
    result = run_bla_maq(make_env(cfg), MaqHyper(episodes=3), np.random.default_rng(0))
    assert result.trace == [0.0, 0.0, 0.0]
    assert all(b.objective == 0.0 for b in result.greedy)
    # zero energy never counts as a drop
    for agent in result.agents:
        assert all(arm.a1 == 1 and arm.a2 == 1 for arm in agent.arms.values())


@pytest.mark.parametrize("team_reward", [False, True])
def test_training_is_deterministic(small_cfg, make_env, team_reward):
    env = make_env(small_cfg)
    hyper = MaqHyper(episodes=5, team_reward=team_reward)
    a = run_bla_maq(env, hyper, np.random.default_rng(3))
    b = run_bla_maq(env, hyper, np.random.default_rng(3))
    assert a.trace == b.trace
    assert a.arm_table().equals(b.arm_table())
    assert [g.objective for g in a.greedy] == [g.objective for g in b.greedy]


def test_arm_table_file(small_cfg, make_env, tmp_path):
    result = run_bla_maq(make_env(small_cfg), MaqHyper(episodes=2), np.random.default_rng(0))
    path = tmp_path / "arms.csv"
    write_arm_table(result, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "agent,state_bin,a1,b1,a2,b2"
    assert len(lines) == 1 + len(result.arm_table())
