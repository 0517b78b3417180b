# tests/test_saq.py
import numpy as np
import pytest

from nomamec.config import SaqHyper, SystemConfig
from nomamec.energy import brute_force_optimum, enumerate_decisions
from nomamec.errors import EncodingError, PersistenceError, PreconditionError, SizeLimitError
from nomamec.harness.baselines import baseline_conventional_mec, baseline_full_local, baseline_full_offload
from nomamec.harness.presets import get_preset
from nomamec.learning import saq
from nomamec.learning.io import load_qtable, save_qtable, write_trace_csv
from nomamec.learning.saq import (
    QTable, StateSpace, decode_state, encode_state, epsilon_schedule, extract_policy, q_update,
    select_action_eps_greedy, table_sizes,
)
from nomamec.system import DecisionVector


@pytest.mark.parametrize("n_users,n_slices", [(2, 2), (3, 2), (3, 4)])
def test_table_dimensions(n_users, n_slices):
    cfg = SystemConfig(n_users=n_users, n_freq_slices=n_slices)
    assert table_sizes(cfg) == (2 ** n_users * n_users ** n_slices, 2 * n_users * n_slices)


def test_folded_cache_multiplies_states():
    cfg = SystemConfig(n_users=2, n_tasks=3, n_freq_slices=2, c_cache_slots=1)
    n_states, n_actions = table_sizes(cfg, cache_outside_state=False)
    assert n_states == 4 * 4 * 4  # four cache sets: empty plus three singletons
    assert n_actions == 2 * 2 + 2 + 3


def test_state_zero_is_all_local():
    cfg = SystemConfig()
    d = decode_state(0, cfg)
    assert d.x == (1, 1, 1) and d.y == (0.0, 0.0, 0.0) and d.z == (0,) * 5


@pytest.mark.parametrize("strict_c4", [False, True])
@pytest.mark.parametrize("cache_outside_state", [True, False])
def test_every_candidate_encodes_and_decodes(strict_c4, cache_outside_state):
    cfg = SystemConfig(n_users=3, n_tasks=3, n_freq_slices=3, c_cache_slots=1, strict_c4=strict_c4)
    for d in enumerate_decisions(cfg):
        if cache_outside_state and any(d.z):
            continue
        s = encode_state(d, cfg, cache_outside_state)
        assert decode_state(s, cfg, cache_outside_state) == d


@pytest.mark.parametrize("strict_c4", [False, True])
@pytest.mark.parametrize("cache_outside_state", [True, False])
def test_sorted_owner_states_round_trip(strict_c4, cache_outside_state):
    cfg = SystemConfig(n_users=3, n_tasks=3, n_freq_slices=3, c_cache_slots=1, strict_c4=strict_c4)
    space = StateSpace.for_config(cfg, cache_outside_state)
    for s in range(space.n_states):
        c = space.canonical(s)
        assert space.canonical(c) == c
        assert space.decode(c) == space.decode(s)
        try:
            encoded = space.encode(space.decode(s))
        except EncodingError:
            continue
        assert encoded == c
        assert space.encode(space.decode(encoded)) == encoded
    for s in filter(space.is_canonical, range(space.n_states)):
        for a in range(space.n_actions):
            nxt = space.apply(s, a)
            assert nxt is None or space.is_canonical(nxt)


def test_unsorted_owners_alias_a_sorted_state():
    cfg = SystemConfig(n_users=2, n_tasks=3, n_freq_slices=2, c_cache_slots=1)
    space = StateSpace.for_config(cfg)
    both_offload = 3
    s01 = space.join(both_offload, space.owners_index([0, 1]), 0)
    s10 = space.join(both_offload, space.owners_index([1, 0]), 0)
    assert space.decode(s01) == space.decode(s10) == DecisionVector((0, 0), (0.5, 0.5), (0, 0, 0))
    assert space.is_canonical(s01) and not space.is_canonical(s10)
    assert space.canonical(s10) == s01


def test_encoding_errors():
    cfg = SystemConfig(n_users=2, n_tasks=3, n_freq_slices=2, c_cache_slots=1)
    with pytest.raises(EncodingError):
        encode_state(DecisionVector((0, 1), (0.5, 0.0), (0, 0, 0)), cfg)
    with pytest.raises(EncodingError):
        encode_state(DecisionVector((1, 1), (0.0, 0.0), (1, 1, 0)), cfg, cache_outside_state=False)
    with pytest.raises(EncodingError):
        decode_state(10 ** 6, cfg)


def test_actions_move_one_component():
    cfg = SystemConfig(n_users=2, n_tasks=3, n_freq_slices=2, c_cache_slots=1)
    space = StateSpace.for_config(cfg, cache_outside_state=False)
    flip_user0 = 2 * 2
    s = space.apply(0, flip_user0)
    assert space.decode(s) == DecisionVector((0, 1), (1.0, 0.0), (0, 0, 0))
    flip_user1 = flip_user0 + 1
    s = space.apply(s, flip_user1)
    give_slice1_to_user1 = 1 * 2 + 1
    s = space.apply(s, give_slice1_to_user1)
    assert space.decode(s) == DecisionVector((0, 0), (0.5, 0.5), (0, 0, 0))
    toggle_task2 = 2 * 2 + 2 + 1
    s = space.apply(s, toggle_task2)
    assert space.decode(s).z == (0, 1, 0)
    # a second cached task does not fit
    assert space.apply(s, toggle_task2 + 1) is None
    assert not space.action_mask(s)[toggle_task2 + 1]
    assert space.describe_action(space.n_actions - 1)[0] in ("toggle", "noop")


def test_q_update_rule():
    q = QTable.zeros(2, 2, gamma=0.1, beta=0.9)
    q_update(q, 0, 1, 2.0, 1)
    assert q.values[0, 1] == pytest.approx(0.2)
    q.values[1] = [0.0, 5.0]
    q_update(q, 0, 1, 1.0, 1)
    assert q.values[0, 1] == pytest.approx(0.9 * 0.2 + 0.1 * (1.0 + 0.9 * 5.0))
    assert q.visits[0, 1] == 2


def test_epsilon_greedy_selection():
    q = QTable.zeros(1, 4)
    q.values[0] = [0.0, 3.0, 3.0, 1.0]
    rng = np.random.default_rng(0)
    assert select_action_eps_greedy(q, 0, 0.0, rng) == 1
    mask = np.array([True, False, False, True])
    assert select_action_eps_greedy(q, 0, 0.0, rng, mask) == 3
    picks = {select_action_eps_greedy(q, 0, 1.0, rng, mask) for _ in range(200)}
    assert picks == {0, 3}
    with pytest.raises(PreconditionError):
        select_action_eps_greedy(q, 0, 1.5, rng)
    with pytest.raises(PreconditionError):
        select_action_eps_greedy(q, 0, 0.0, rng, np.zeros(4, dtype=bool))
    assert extract_policy(q).tolist() == [1]


def test_epsilon_decays_linearly():
    hyper = SaqHyper(eps_start=0.5, eps_end=0.1, episodes=5)
    assert [epsilon_schedule(hyper, e) for e in range(5)] == pytest.approx([0.5, 0.4, 0.3, 0.2, 0.1])


def test_cache_follows_predicted_popularity_by_default(small_cfg, make_env):
    env = make_env(small_cfg)
    agent = saq.SaqAgent(env, SaqHyper())
    one_offloader = agent.space.apply(0, 2 * 2)
    for s in (0, one_offloader):
        for t in range(3):
            assert agent.decision(s, t).z == env.popularity_cache(t)
    best = saq.SaqAgent(env, SaqHyper(best_response_cache=True))
    d = best.decision(one_offloader, 0)
    assert d.z == env.best_response_cache(d.x, d.y, 0)


@pytest.mark.parametrize("reward_mode", ["previous-slot", "same-slot"])
def test_reward_compares_against_the_configured_slot(small_cfg, make_env, reward_mode):
    env = make_env(small_cfg.replace(horizon_slots=12))
    # learning rate 1 and no discount: each entry holds the last reward it saw
    agent = saq.SaqAgent(env, SaqHyper(episodes=1, gamma=1.0, beta=0.0, reward_mode=reward_mode))
    agent.run_episode(1.0, np.random.default_rng(5))

    rng = np.random.default_rng(5)
    blank = QTable.zeros(*agent.q.shape)
    expected = {}
    s, prev = 0, agent.energy(0, 0)
    for t in range(env.horizon):
        a = select_action_eps_greedy(blank, s, 1.0, rng)
        s_next = agent.space.apply(s, a)
        cur = agent.energy(s_next, t)
        before = prev if reward_mode == "previous-slot" else agent.energy(s, t)
        expected[(s, a)] = before - cur
        s, prev = s_next, cur
    for (s, a), r in expected.items():
        assert agent.q.values[s, a] == pytest.approx(r, abs=1e-12)


def test_q_table_guard():
    with pytest.raises(SizeLimitError):
        QTable.zeros(1000, 1000, max_cells=10)


def test_q_table_file(tmp_path):
    q = QTable.zeros(3, 2)
    q.values[:] = np.arange(6).reshape(3, 2) / 7
    path = tmp_path / "q.qtbl"
    save_qtable(q, path)
    assert np.array_equal(load_qtable(path).values, q.values)
    path.write_bytes(b"QTBL1" + path.read_bytes()[5:-8])
    with pytest.raises(PersistenceError):
        load_qtable(path)


def test_training_is_deterministic(small_cfg, make_env):
    env = make_env(small_cfg)
    hyper = SaqHyper(episodes=20)
    a = saq.train(env, hyper, np.random.default_rng(1))
    b = saq.train(env, hyper, np.random.default_rng(1))
    assert a.trace == b.trace
    assert np.array_equal(a.q.values, b.q.values)
    assert len(a.greedy) == env.horizon


def test_evaluation_episode_leaves_table_alone(small_cfg, make_env):
    agent = saq.SaqAgent(make_env(small_cfg), SaqHyper(episodes=5))
    agent.run_episode(1.0, np.random.default_rng(0), learn=False)
    assert not agent.q.values.any()


def test_folded_cache_training_runs(small_cfg, make_env):
    env = make_env(small_cfg)
    result = saq.train(env, SaqHyper(episodes=10, cache_outside_state=False), np.random.default_rng(0))
    assert result.agent.space.fold_cache
    assert len(result.greedy) == env.horizon
    assert all(np.isfinite(b.objective) for b in result.greedy)
    assert result.agent.policy().shape == (result.q.shape[0],)


def _mean_objective(breakdowns):
    return float(np.mean([b.objective for b in breakdowns]))


def _saq_gap(cfg, make_env, seed, episodes=300):
    # the exhaustive search picks the cache jointly, so the learner gets the best-response cache too
    env = make_env(cfg.replace(rng_seed=seed))
    result = saq.train(env, SaqHyper(episodes=episodes, best_response_cache=True), np.random.default_rng(seed))
    learned = _mean_objective(result.greedy)
    best = np.mean([brute_force_optimum(env.popularity[t], env.channels[t], env.tasks, env.cfg)[1]
                    for t in range(env.horizon)])
    return learned, best, env, result


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_greedy_policy_close_to_exhaustive_optimum(relaxed_cfg, make_env, seed):
    learned, best, _, _ = _saq_gap(relaxed_cfg.replace(horizon_slots=50), make_env, seed)
    assert best <= learned * (1 + 1e-12)
    assert learned <= 1.05 * best


@pytest.mark.slow
def test_greedy_policy_close_to_exhaustive_optimum_over_twenty_seeds(relaxed_cfg, make_env):
    ratios = []
    for seed in range(20):
        learned, best, _, _ = _saq_gap(relaxed_cfg.replace(horizon_slots=50), make_env, seed)
        ratios.append(learned / best)
    assert np.mean(ratios) <= 1.05


def _against_baselines(env, hyper, seed):
    learned = _mean_objective(saq.train(env, hyper, np.random.default_rng(seed)).greedy)
    conventional = baseline_conventional_mec(env, hyper, np.random.default_rng(seed))
    return learned, {
        "full-local": _mean_objective(baseline_full_local(env)),
        "full-offload": _mean_objective(baseline_full_offload(env)),
        "conventional-mec": _mean_objective(conventional.greedy),
    }


def test_cache_aided_learner_beats_baselines(relaxed_cfg, make_env):
    for seed in range(3):
        env = make_env(relaxed_cfg.replace(horizon_slots=50, rng_seed=seed))
        learned, references = _against_baselines(env, SaqHyper(episodes=300), seed)
        for name, energy in references.items():
            assert learned <= energy, name


@pytest.mark.slow
def test_cache_aided_learner_beats_baselines_on_the_canonical_instance(make_env):
    preset = get_preset("canonical")
    learned, references = [], {}
    for seed in range(20):
        env = make_env(preset.config().replace(rng_seed=seed))
        energy, refs = _against_baselines(env, preset.saq, seed)
        learned.append(energy)
        for name, value in refs.items():
            references.setdefault(name, []).append(value)
    for name, values in references.items():
        assert np.mean(learned) <= np.mean(values), name


def test_trace_csv(tmp_path):
    path = tmp_path / "trace.csv"
    write_trace_csv([3.0, 2.5, 2.0], path)
    lines = path.read_text().splitlines()
    assert lines[0] == "episode,mean_energy_J"
    assert lines[-1] == "3,2"
