"""Plan execution.

A plan expands to cells, one per (sweep value, seed). Each cell builds one
scenario and runs every requested algorithm on it, so algorithms are always
compared on the same slots. Cells are independent and may run in worker
processes; the parent collects them in plan order and does all the writing.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import orjson
import pandas as pd

from .. import __version__
from ..config import LstmHyper, MaqHyper, SaqHyper, SystemConfig, load_config
from ..db import dispose, init_db, session_scope
from ..energy.objective import EnergyBreakdown
from ..errors import PersistenceError
from ..learning import saq
from ..learning.maq import run_bla_maq
from ..log import get_logger
from ..models import ExperimentRun, ResultRecord, utcnow
from ..popularity.trainer import LossCurve
from ..system.generators import stream_rng
from .analysis import episodes_to_converge, rows_frame
from .baselines import baseline_conventional_mec, baseline_full_local, baseline_full_offload
from .plan import ExperimentPlan, ResultRow
from .presets import get_preset
from .scenario import build_scenario

log = get_logger(__name__)

ENERGY_FIGURES = {
    "task_input_bits": "fig_energy_vs_tasksize.csv",
    "c_mec_hz": "fig_energy_vs_cmec.csv",
    "c_cache_slots": "fig_energy_vs_cache.csv",
}
FLOAT_FORMAT = "%.12g"


@dataclass
class CellSpec:
    scenario: str
    algorithms: List[str]
    sweep_variable: str
    sweep_value: Optional[float]
    seed: int
    config: SystemConfig
    saq: SaqHyper
    maq: MaqHyper
    lstm: LstmHyper
    popularity_source: str
    per_user: bool
    warmup_slots: int
    step_scale: float


@dataclass
class CellResult:
    rows: List[ResultRow]
    traces: Dict[str, List[float]] = field(default_factory=dict)
    loss_curves: List[LossCurve] = field(default_factory=list)


@dataclass
class RunSummary:
    run_id: str
    rows: List[ResultRow]
    files: Dict[str, Path]


def apply_sweep(
    cfg: SystemConfig, saq_hyper: SaqHyper, lstm: LstmHyper, variable: str, value: Optional[float]
) -> Tuple[SystemConfig, SaqHyper, LstmHyper]:
    if value is None or variable == "none":
        return cfg, saq_hyper, lstm
    if variable == "task_input_bits":
        return cfg.replace(task_input_min_bits=value, task_input_max_bits=value), saq_hyper, lstm
    if variable == "c_mec_hz":
        return cfg.replace(c_mec_hz=value), saq_hyper, lstm
    if variable == "c_cache_slots":
        return cfg.replace(c_cache_slots=int(value)), saq_hyper, lstm
    if variable == "learning_rate":
        # both learners' step sizes follow the sweep
        return cfg, saq_hyper.model_copy(update={"gamma": value}), lstm.model_copy(update={"lr": value})
    raise ValueError(f"unknown sweep variable {variable!r}")


def _summarise(greedy: List[EnergyBreakdown]) -> Tuple[float, float]:
    energy = float(np.mean([b.objective for b in greedy]))
    feasible = float(np.mean([b.feasible for b in greedy]))
    return energy, feasible


def run_cell(spec: CellSpec) -> CellResult:
    cfg, saq_hyper, lstm = apply_sweep(spec.config, spec.saq, spec.lstm, spec.sweep_variable, spec.sweep_value)
    cfg = cfg.replace(rng_seed=spec.seed)
    scenario = build_scenario(cfg, spec.popularity_source, lstm, spec.warmup_slots, spec.step_scale, spec.per_user)
    env = scenario.env
    result = CellResult(rows=[], loss_curves=scenario.loss_curves)
    for k, algorithm in enumerate(spec.algorithms):
        started = time.perf_counter()
        rng = stream_rng(spec.seed, "agent", k)
        converge = None
        if algorithm == "saq":
            out = saq.train(env, saq_hyper, rng)
            greedy, result.traces[algorithm] = out.greedy, out.trace
        elif algorithm == "conventional-mec":
            out = baseline_conventional_mec(env, saq_hyper, rng)
            greedy, result.traces[algorithm] = out.greedy, out.trace
        elif algorithm == "bla-maq":
            maq = run_bla_maq(env, spec.maq, rng)
            greedy, result.traces[algorithm] = maq.greedy, maq.trace
        elif algorithm == "full-local":
            greedy = baseline_full_local(env)
        else:
            greedy = baseline_full_offload(env)
        if algorithm in result.traces:
            converge = episodes_to_converge(result.traces[algorithm])
        energy, feasible = _summarise(greedy)
        result.rows.append(ResultRow(
            scenario=spec.scenario, algorithm=algorithm, sweep_variable=spec.sweep_variable,
            sweep_value=spec.sweep_value, seed=spec.seed, mean_energy_j=energy, feasible_fraction=feasible,
            episodes_to_converge=converge, wall_time_s=time.perf_counter() - started,
        ))
        log.info("%s value=%s seed=%d: %.6g J", algorithm, spec.sweep_value, spec.seed, energy)
    return result


def resolve(plan: ExperimentPlan) -> Tuple[SystemConfig, SaqHyper, MaqHyper, LstmHyper, int, float]:
    preset = get_preset(plan.scenario)
    cfg = load_config(plan.config_path, defaults=preset.system, **plan.overrides)
    return (cfg, plan.saq or preset.saq, plan.maq or preset.maq, plan.lstm or preset.lstm,
            plan.warmup_slots if plan.warmup_slots is not None else preset.warmup_slots,
            plan.step_scale if plan.step_scale is not None else preset.step_scale)


def cell_specs(plan: ExperimentPlan) -> List[CellSpec]:
    cfg, saq_hyper, maq, lstm, warmup, step = resolve(plan)
    return [
        CellSpec(plan.scenario, list(plan.algorithms), plan.sweep_variable, value, seed, cfg, saq_hyper, maq,
                 lstm, plan.popularity_source, plan.per_user_popularity, warmup, step)
        for value in plan.cells for seed in plan.seeds
    ]


def execute(specs: List[CellSpec], workers: int = 1) -> List[CellResult]:
    if workers <= 1 or len(specs) <= 1:
        return [run_cell(s) for s in specs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map keeps submission order
        return list(pool.map(run_cell, specs))


def _energy_figure(rows: List[ResultRow]) -> pd.DataFrame:
    df = rows_frame(rows)
    agg = df.groupby(["algorithm", "sweep_value"], dropna=False).agg(
        mean_energy_J=("mean_energy_j", "mean"),
        std_energy_J=("mean_energy_j", lambda s: float(np.std(s))),
        feasible_fraction=("feasible_fraction", "mean"),
        n_seeds=("seed", "count"),
    )
    return agg.reset_index()


def _convergence_figure(specs: List[CellSpec], results: List[CellResult]) -> pd.DataFrame:
    frames = []
    for spec, res in zip(specs, results):
        for algorithm, trace in res.traces.items():
            frames.append(pd.DataFrame({
                "algorithm": algorithm, "sweep_value": spec.sweep_value, "seed": spec.seed,
                "episode": np.arange(1, len(trace) + 1), "energy": trace,
            }))
    if not frames:
        return pd.DataFrame(columns=["algorithm", "sweep_value", "episode", "mean_energy_J", "std_energy_J"])
    df = pd.concat(frames, ignore_index=True)
    agg = df.groupby(["algorithm", "sweep_value", "episode"], dropna=False)["energy"].agg(
        mean_energy_J="mean", std_energy_J=lambda s: float(np.std(s)))
    return agg.reset_index()


def _loss_figure(specs: List[CellSpec], results: List[CellResult]) -> pd.DataFrame:
    frames = []
    for spec, res in zip(specs, results):
        for curve in res.loss_curves:
            f = curve.frame()
            f["sweep_value"] = spec.sweep_value
            frames.append(f)
    if not frames:
        return pd.DataFrame(columns=["sweep_value", "epoch", "train_loss_mean", "train_loss_std",
                                     "test_loss_mean", "test_loss_std"])
    df = pd.concat(frames, ignore_index=True)
    agg = df.groupby(["sweep_value", "epoch"], dropna=False).agg(
        train_loss_mean=("train_loss", "mean"), train_loss_std=("train_loss", lambda s: float(np.std(s))),
        test_loss_mean=("test_loss", "mean"), test_loss_std=("test_loss", lambda s: float(np.std(s))),
    )
    return agg.reset_index()


def _write_csv(df: pd.DataFrame, path: Path) -> Path:
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def _record(db_path: Path, plan: ExperimentPlan, cfg: SystemConfig, rows: List[ResultRow]) -> str:
    init_db(db_path)
    with session_scope(db_path) as s:
        run = ExperimentRun(
            scenario=plan.scenario, sweep_variable=plan.sweep_variable,
            plan_json=orjson.dumps(plan.model_dump(mode="json")).decode(),
            config_json=orjson.dumps(cfg.model_dump(mode="json")).decode(),
        )
        s.add(run)
        for r in rows:
            run.results.append(ResultRecord(
                algorithm=r.algorithm, sweep_value=r.sweep_value, seed=r.seed, mean_energy_j=r.mean_energy_j,
                feasible_fraction=r.feasible_fraction, episodes_to_converge=r.episodes_to_converge,
                wall_time_s=r.wall_time_s,
            ))
        s.flush()
        run.ended_at = utcnow()
        run.status = "done"
        run_id = run.id
    dispose(db_path)
    return run_id


def run_plan(plan: ExperimentPlan, workers: Optional[int] = None) -> RunSummary:
    out = Path(plan.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        marker = out / ".write-test"
        marker.write_bytes(b"")
        marker.unlink()
    except OSError as e:
        raise PersistenceError(f"output directory {out} is not writable: {e}") from e

    specs = cell_specs(plan)
    log.info("plan %s: %d cells x %d algorithms", plan.scenario, len(specs), len(plan.algorithms))
    results = execute(specs, workers if workers is not None else plan.workers)

    rows = [r for res in results for r in res.rows]
    frame = rows_frame(rows)
    # results.csv is byte-stable across reruns; wall time goes to timing.csv
    files: Dict[str, Path] = {
        "results": _write_csv(frame.drop(columns=["wall_time_s"]), out / "results.csv"),
        "timing": _write_csv(frame[["algorithm", "sweep_value", "seed", "wall_time_s"]], out / "timing.csv"),
    }
    if plan.sweep_variable in ENERGY_FIGURES:
        name = ENERGY_FIGURES[plan.sweep_variable]
        files[name] = _write_csv(_energy_figure(rows), out / name)
    if any(a in ("saq", "bla-maq", "conventional-mec") for a in plan.algorithms):
        files["fig_convergence.csv"] = _write_csv(_convergence_figure(specs, results), out / "fig_convergence.csv")
    if any(res.loss_curves for res in results):
        files["fig_lstm_loss.csv"] = _write_csv(_loss_figure(specs, results), out / "fig_lstm_loss.csv")

    cfg = specs[0].config
    run_id = _record(out / "ledger.db", plan, cfg, rows)
    files["ledger"] = out / "ledger.db"
    manifest: Dict[str, Any] = {
        "run_id": run_id,
        "version": __version__,
        "plan": plan.model_dump(mode="json"),
        "config": cfg.model_dump(mode="json"),
        "files": {k: str(v) for k, v in files.items()},
    }
    files["manifest"] = out / "run_manifest.json"
    files["manifest"].write_bytes(orjson.dumps(manifest, option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS))
    return RunSummary(run_id, rows, files)
