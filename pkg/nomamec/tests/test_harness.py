# tests/test_harness.py
import math

import numpy as np
import orjson
import pandas as pd
import pytest
from pydantic import ValidationError

from nomamec.config import LstmHyper, MaqHyper, SaqHyper, SystemConfig
from nomamec.db import dispose, init_db, session_scope
from nomamec.energy import brute_force_optimum
from nomamec.errors import ConfigError, PreconditionError
from nomamec.harness import ExperimentPlan, ResultRow, apply_sweep, load_plan, run_plan
from nomamec.harness.analysis import (
    dominates, episodes_to_converge, paired_differences, read_results, sweep_trend, trend_spearman,
)
from nomamec.harness.baselines import baseline_conventional_mec, baseline_full_local, baseline_full_offload
from nomamec.harness.presets import get_preset
from nomamec.harness.scenario import build_scenario
from nomamec.learning import saq
from nomamec.models import ExperimentRun, ResultRecord


# ---------------------------------------------------------------- plans

def test_plan_validation():
    assert ExperimentPlan(algorithms="saq").algorithms == ["saq"]
    assert ExperimentPlan().cells == [None]
    with pytest.raises(ValidationError):
        ExperimentPlan(sweep_variable="c_mec_hz")
    with pytest.raises(ValidationError):
        ExperimentPlan(sweep_variable="c_mec_hz", sweep_values=[20e9, 10e9])
    with pytest.raises(ValidationError):
        ExperimentPlan(sweep_variable="c_cache_slots", sweep_values=[0.5, 1])
    with pytest.raises(ValidationError):
        ExperimentPlan(algorithms=["saq", "saq"])
    with pytest.raises(ValidationError):
        ExperimentPlan(sweep_values=[1.0])
    with pytest.raises(ValidationError):
        ExperimentPlan(algorithms=["dqn"])


def test_load_plan(tmp_path):
    path = tmp_path / "plan.yaml"
    path.write_text("scenario: oracle-small\nalgorithms: [saq, full-local]\nsweep_variable: c_cache_slots\n"
                    "sweep_values: [0, 1]\nseeds: [0, 1, 2]\n")
    plan = load_plan(path)
    assert plan.cells == [0.0, 1.0] and plan.seeds == [0, 1, 2]
    path.write_text("- just a list\n")
    with pytest.raises(ConfigError):
        load_plan(path)
    path.write_text("sweep_variable: nothing\n")
    with pytest.raises(ConfigError):
        load_plan(path)
    with pytest.raises(ConfigError):
        load_plan(tmp_path / "missing.yaml")


def test_apply_sweep():
    cfg, hyper, lstm = SystemConfig(), SaqHyper(), LstmHyper()
    swept, _, _ = apply_sweep(cfg, hyper, lstm, "task_input_bits", 4e6)
    assert swept.task_input_min_bits == swept.task_input_max_bits == 4e6
    assert apply_sweep(cfg, hyper, lstm, "c_cache_slots", 3.0)[0].c_cache_slots == 3
    _, h, l = apply_sweep(cfg, hyper, lstm, "learning_rate", 0.05)
    assert h.gamma == 0.05 and l.lr == 0.05
    assert apply_sweep(cfg, hyper, lstm, "none", None) == (cfg, hyper, lstm)
    with pytest.raises(ValueError):
        apply_sweep(cfg, hyper, lstm, "bandwidth_hz", 1.0)


def test_unknown_preset():
    with pytest.raises(ConfigError):
        get_preset("nope")
    assert get_preset("oracle-small").config().n_users == 2


# ---------------------------------------------------------------- scenarios

def test_oracle_scenario_predicts_the_truth(small_cfg):
    env = build_scenario(small_cfg, "oracle", warmup_slots=5).env
    assert env.horizon == small_cfg.horizon_slots
    assert all(np.array_equal(p.probs, q.probs) for p, q in zip(env.popularity, env.predicted))
    assert np.array_equal(env.popularity[0].probs[0], env.popularity[0].probs[1])


def test_lstm_scenario_per_user(small_cfg):
    scenario = build_scenario(small_cfg, "lstm", LstmHyper(hidden_size=4, epochs=3), warmup_slots=20, per_user=True)
    env = scenario.env
    assert len(scenario.loss_curves) == small_cfg.n_users
    assert not np.array_equal(env.popularity[0].probs[0], env.popularity[0].probs[1])
    assert not np.allclose(env.predicted[3].probs, env.popularity[3].probs)
    assert np.allclose(env.predicted[3].probs.sum(axis=1), 1.0)


def test_lstm_source_needs_warm_up_slots(small_cfg):
    with pytest.raises(PreconditionError):
        build_scenario(small_cfg, "lstm", LstmHyper(hidden_size=4, epochs=3), warmup_slots=2)


# ---------------------------------------------------------------- baselines

def test_baselines(small_cfg, make_env):
    env = make_env(small_cfg.replace(latency_limit_s=100.0))
    local = baseline_full_local(env)
    assert len(local) == env.horizon
    assert all(b.components[i][1] == 0.0 for b in local for i in range(2))
    offload = baseline_full_offload(env)
    assert all(b.components[i][0] == 0.0 for b in offload for i in range(2))
    assert all(b.feasible for b in offload)


def test_conventional_mec_is_saq_without_cache(small_cfg, make_env):
    env = make_env(small_cfg)
    hyper = SaqHyper(episodes=15)
    conventional = baseline_conventional_mec(env, hyper, np.random.default_rng(4))
    plain = saq.train(env.with_config(small_cfg.replace(c_cache_slots=0)), hyper, np.random.default_rng(4))
    assert conventional.trace == plain.trace
    assert not any(any(conventional.agent.decision(0, t).z) for t in range(env.horizon))


# ---------------------------------------------------------------- trends

def _optimum_mean(cfg, make_env, slots=8):
    env = make_env(cfg.replace(horizon_slots=slots))
    return float(np.mean([brute_force_optimum(env.popularity[t], env.channels[t], env.tasks, env.cfg)[1]
                          for t in range(slots)]))


def _sweep(base, make_env, variable, values):
    energies = []
    for v in values:
        cfg, _, _ = apply_sweep(base, SaqHyper(), LstmHyper(), variable, v)
        energies.append(_optimum_mean(cfg, make_env))
    return energies


def test_energy_grows_with_task_size(small_cfg, make_env):
    values = [200 * 8192, 400 * 8192, 600 * 8192, 800 * 8192]
    energies = _sweep(small_cfg.replace(latency_limit_s=100.0), make_env, "task_input_bits", values)
    assert trend_spearman(values, energies) >= 0.9


def test_energy_falls_with_server_capacity(small_cfg, make_env):
    values = [12e9, 20e9, 40e9, 60e9, 80e9]
    energies = _sweep(small_cfg.replace(latency_limit_s=100.0), make_env, "c_mec_hz", values)
    assert trend_spearman(values, energies) <= -0.9


def test_energy_falls_with_cache_size(small_cfg, make_env):
    values = [0, 1, 2, 3, 4]
    base = small_cfg.replace(n_tasks=4, latency_limit_s=100.0)
    energies = _sweep(base, make_env, "c_cache_slots", values)
    assert trend_spearman(values, energies) <= -0.9
    assert energies[-1] == 0.0


# ---------------------------------------------------------------- analysis

def _row(algorithm, seed, energy, value=None):
    return ResultRow(scenario="t", algorithm=algorithm, seed=seed, mean_energy_j=energy,
                     sweep_variable="none" if value is None else "c_mec_hz", sweep_value=value)


def test_paired_comparison():
    rows = [_row("saq", 0, 1.0), _row("saq", 1, 2.0), _row("full-local", 0, 3.0), _row("full-local", 1, 3.0)]
    diff = paired_differences(rows, "saq", "full-local")
    assert diff["saving_j"].tolist() == [2.0, 1.0]
    assert diff["sweep_value"].isna().all()
    assert dominates(rows, "saq", "full-local")
    assert not dominates(rows, "full-local", "saq")
    with pytest.raises(PreconditionError):
        paired_differences(rows, "saq", "bla-maq")


def test_sweep_trend_and_helpers():
    rows = [_row("saq", s, e, v) for s in (0, 1) for v, e in ((1e10, 3.0 + s), (2e10, 2.0 + s), (4e10, 1.0 + s))]
    assert sweep_trend(rows, "saq") == pytest.approx(-1.0)
    assert math.isnan(trend_spearman([1, 2, 3], [5.0, 5.0, 5.0]))
    with pytest.raises(PreconditionError):
        trend_spearman([1, 2], [1.0])
    assert episodes_to_converge([]) == 0
    assert episodes_to_converge([4.0] * 10) == 1
    assert episodes_to_converge([10.0] * 5 + [1.0] * 20, window=1) == 6


def test_result_row_rejects_bad_values():
    with pytest.raises(ValidationError):
        _row("saq", 0, float("inf"))
    with pytest.raises(ValidationError):
        _row("saq", 0, -1.0)
    assert _row("saq", 0, 1.0).model_copy(update={"sweep_value": None}).sweep_value is None


# ---------------------------------------------------------------- runs

def _plan(out_dir):
    return ExperimentPlan(
        scenario="oracle-small", algorithms=["saq", "bla-maq", "full-local", "full-offload", "conventional-mec"],
        sweep_variable="c_cache_slots", sweep_values=[0, 1], seeds=[0, 1], out_dir=out_dir,
        overrides={"horizon_slots": 10, "latency_limit_s": 100.0}, popularity_source="oracle", warmup_slots=0,
        saq=SaqHyper(episodes=20), maq=MaqHyper(episodes=3),
    )


def test_run_plan_writes_everything(tmp_path):
    summary = run_plan(_plan(tmp_path / "run"))
    assert len(summary.rows) == 2 * 2 * 5
    for key in ("results", "timing", "fig_energy_vs_cache.csv", "fig_convergence.csv", "ledger", "manifest"):
        assert summary.files[key].exists(), key
    assert "fig_lstm_loss.csv" not in summary.files

    fig = pd.read_csv(summary.files["fig_energy_vs_cache.csv"])
    assert list(fig.columns) == ["algorithm", "sweep_value", "mean_energy_J", "std_energy_J", "feasible_fraction",
                                 "n_seeds"]
    assert len(fig) == 5 * 2 and (fig["n_seeds"] == 2).all()

    conv = pd.read_csv(summary.files["fig_convergence.csv"])
    assert set(conv["algorithm"]) == {"saq", "bla-maq", "conventional-mec"}
    assert conv[conv["algorithm"] == "saq"]["episode"].max() == 20

    manifest = orjson.loads(summary.files["manifest"].read_bytes())
    assert manifest["run_id"] == summary.run_id
    assert manifest["plan"]["scenario"] == "oracle-small"
    assert manifest["config"]["horizon_slots"] == 10

    with session_scope(summary.files["ledger"]) as s:
        run = s.get(ExperimentRun, summary.run_id)
        assert run.status == "done" and len(run.results) == 20
    dispose(summary.files["ledger"])

    back = read_results(summary.files["results"])
    assert [(r.algorithm, r.sweep_value, r.seed) for r in back] == \
        [(r.algorithm, r.sweep_value, r.seed) for r in summary.rows]
    for a, b in zip(back, summary.rows):
        assert a.mean_energy_j == pytest.approx(b.mean_energy_j, rel=1e-11)
        assert a.episodes_to_converge == b.episodes_to_converge


def test_reruns_are_reproducible(tmp_path):
    first = run_plan(_plan(tmp_path / "a"))
    second = run_plan(_plan(tmp_path / "b"), workers=2)
    for name in ("results", "fig_energy_vs_cache.csv", "fig_convergence.csv"):
        assert first.files[name].read_bytes() == second.files[name].read_bytes(), name
    assert "wall_time_s" not in first.files["results"].read_text().splitlines()[0]
    timing = pd.read_csv(first.files["timing"])
    assert list(timing.columns) == ["algorithm", "sweep_value", "seed", "wall_time_s"]
    assert len(timing) == 20 and (timing["wall_time_s"] >= 0).all()


def test_learners_beat_local_when_the_server_is_fast(tmp_path):
    plan = ExperimentPlan(
        scenario="oracle-small", algorithms=["saq", "full-local", "full-offload"], seeds=[0, 1],
        out_dir=tmp_path, overrides={"horizon_slots": 30, "latency_limit_s": 100.0, "c_mec_hz": 20e9},
        popularity_source="oracle", warmup_slots=0, saq=SaqHyper(episodes=200),
    )
    rows = run_plan(plan).rows
    assert dominates(rows, "saq", "full-local")
    assert dominates(rows, "saq", "full-offload")


@pytest.mark.slow
def test_learned_energy_falls_as_the_cache_grows(tmp_path):
    plan = ExperimentPlan(
        scenario="oracle-small", algorithms=["saq"], sweep_variable="c_cache_slots", sweep_values=[0, 1, 2, 3],
        seeds=[0, 1, 2], out_dir=tmp_path,
        overrides={"horizon_slots": 30, "latency_limit_s": 100.0, "c_mec_hz": 20e9},
        popularity_source="oracle", warmup_slots=0, saq=SaqHyper(episodes=200),
    )
    assert sweep_trend(run_plan(plan).rows, "saq") <= -0.8


# ---------------------------------------------------------------- ledger

def test_session_scope_commits_and_rolls_back(tmp_path):
    path = tmp_path / "ledger.db"
    init_db(path)
    with session_scope(path) as s:
        run = ExperimentRun(scenario="canonical", plan_json="{}")
        run.results.append(ResultRecord(algorithm="saq", seed=0, mean_energy_j=1.5))
        s.add(run)
        s.flush()
        run_id = run.id
    assert run_id.startswith("E-")
    with pytest.raises(RuntimeError):
        with session_scope(path) as s:
            s.add(ExperimentRun(scenario="broken", plan_json="{}"))
            s.flush()
            raise RuntimeError("boom")
    with session_scope(path) as s:
        assert s.query(ExperimentRun).count() == 1
        assert s.get(ExperimentRun, run_id).results[0].mean_energy_j == 1.5
    dispose(path)
