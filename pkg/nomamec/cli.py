# nomamec/cli.py
from __future__ import annotations

from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, List, Optional

import typer
from pydantic import ValidationError
from rich import print as rprint
from rich.table import Table

from nomamec import log
from nomamec.config import LstmHyper, load_config
from nomamec.energy.oracle import brute_force_search
from nomamec.errors import ConfigError, NomaMecError
from nomamec.harness.analysis import dominates, paired_differences, read_results
from nomamec.harness.plan import ALGORITHMS, ExperimentPlan, load_plan
from nomamec.harness.presets import PRESETS, get_preset
from nomamec.harness.runner import run_plan
from nomamec.harness.scenario import build_scenario
from nomamec.learning.bla import convergence_batch, convergence_check
from nomamec.learning.io import write_trajectory_csv
from nomamec.popularity.io import save_weights, write_loss_csv
from nomamec.popularity.series import random_walk_series
from nomamec.popularity.trainer import train
from nomamec.system.generators import stream_rng

app = typer.Typer(add_completion=False, help="Cache-aided NOMA-MEC simulator")

FORMULA_MODES = {"printed": "as-printed", "as-printed": "as-printed", "consistent": "consistent"}


@contextmanager
def _exit_codes() -> Iterator[None]:
    """Report library errors and leave with their exit code."""
    try:
        yield
    except NomaMecError as e:
        rprint(f"[red]{type(e).__name__}[/red]: {e}")
        raise typer.Exit(e.exit_code)


def _floats(text: str, what: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{what}: expected comma-separated numbers, got {text!r}") from None


def _ints(text: str, what: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{what}: expected comma-separated integers, got {text!r}") from None


def _parse_sweep(text: Optional[str]) -> tuple[str, List[float]]:
    if not text:
        return "none", []
    if "=" not in text:
        raise ConfigError(f"--sweep expects VAR=v1,v2,..., got {text!r}")
    var, values = text.split("=", 1)
    return var.strip(), _floats(values, "--sweep")


# --------------------------- simulate ---------------------------

@app.command()
def simulate(
    config: Optional[Path] = typer.Option(None, "--config", help="System config file (key = value or YAML)"),
    algorithm: List[str] = typer.Option(["saq"], "--algorithm", help=f"One of {', '.join(ALGORITHMS)}; repeatable"),
    sweep: Optional[str] = typer.Option(None, help="VAR=v1,v2,..."),
    seeds: str = typer.Option("0", help="Comma-separated seeds"),
    out: Path = typer.Option(Path("results"), help="Output directory"),
    scenario: str = typer.Option("canonical", help=f"Preset: {', '.join(PRESETS)}"),
    formula_mode: Optional[str] = typer.Option(None, help="printed | consistent"),
    strict_c4: bool = typer.Option(False, "--strict-c4", help="Require sum(y) = 1 exactly"),
    cache_outside_state: bool = typer.Option(True, "--cache-outside-state/--fold-cache", "--table2-strict",
                                             help="Cache outside the Q-state (default) or folded into it"),
    workers: int = typer.Option(1, min=1, help="Worker processes for independent cells"),
    popularity: str = typer.Option("lstm", help="lstm | oracle"),
    plan_file: Optional[Path] = typer.Option(None, "--plan", help="YAML experiment plan; other options are ignored"),
):
    """Run algorithms over a sweep and write results.csv plus the figure CSVs."""
    log.configure("INFO")
    with _exit_codes():
        if plan_file is not None:
            plan = load_plan(plan_file)
        else:
            var, values = _parse_sweep(sweep)
            overrides = {}
            if formula_mode is not None:
                if formula_mode not in FORMULA_MODES:
                    raise ConfigError(f"--formula-mode must be printed or consistent, got {formula_mode!r}")
                overrides["formula_mode"] = FORMULA_MODES[formula_mode]
            if strict_c4:
                overrides["strict_c4"] = True
            saq_hyper = get_preset(scenario).saq.model_copy(update={"cache_outside_state": cache_outside_state})
            try:
                plan = ExperimentPlan(
                    scenario=scenario, algorithms=algorithm, sweep_variable=var, sweep_values=values,
                    seeds=_ints(seeds, "--seeds"), out_dir=out, config_path=config,
                    overrides=overrides, popularity_source=popularity, saq=saq_hyper, workers=workers,
                )
            except ValidationError as e:
                raise ConfigError(str(e)) from e
        summary = run_plan(plan)

    table = Table(title=f"run {summary.run_id}")
    for col in ("algorithm", "sweep value", "seed", "mean energy (J)", "feasible", "converged at"):
        table.add_column(col)
    for r in summary.rows:
        table.add_row(r.algorithm, "-" if r.sweep_value is None else f"{r.sweep_value:g}", str(r.seed),
                      f"{r.mean_energy_j:.6g}", f"{r.feasible_fraction:.2f}",
                      "-" if r.episodes_to_converge is None else str(r.episodes_to_converge))
    rprint(table)
    rprint({k: str(v) for k, v in summary.files.items()})


# --------------------------- lstm ---------------------------

@app.command()
def lstm(
    out: Path = typer.Option(Path("results/lstm"), help="Directory for weights.lstm and loss.csv"),
    slots: int = typer.Option(500, min=2, help="Length of the random-walk series"),
    tasks: int = typer.Option(5, min=1),
    hidden: int = typer.Option(32, min=1),
    epochs: int = typer.Option(200, min=1),
    lr: float = typer.Option(0.01),
    mode: str = typer.Option("hybrid", help="bptt | rtrl | hybrid"),
    goal: Optional[float] = typer.Option(None, help="Stop once the training loss reaches this"),
    step_scale: float = typer.Option(0.05),
    seed: int = typer.Option(0),
):
    """Train the popularity predictor on a random-walk series."""
    log.configure("INFO")
    with _exit_codes():
        try:
            hyper = LstmHyper(hidden_size=hidden, epochs=epochs, lr=lr, mode=mode, goal=goal)
        except ValidationError as e:
            raise ConfigError(str(e)) from e
        cfg = load_config(n_tasks=tasks, c_cache_slots=min(tasks, 2), rng_seed=seed)
        dataset = random_walk_series(cfg, slots, step_scale, train_fraction=hyper.train_fraction)
        params, curve = train(dataset, hyper, stream_rng(seed, "lstm"))
        save_weights(params, out / "weights.lstm")
        write_loss_csv(curve, out / "loss.csv")
    rprint({"epochs": curve.epochs, "train_loss": curve.train[-1], "test_loss": curve.test[-1],
            "stopped_early": curve.stopped_early, "out": str(out)})


# --------------------------- bandit ---------------------------

@app.command()
def bandit(
    r1: float = typer.Option(0.9, help="Reward probability of the local arm"),
    r2: float = typer.Option(0.6, help="Reward probability of the offload arm"),
    steps: int = typer.Option(10_000, min=0),
    runs: int = typer.Option(1, min=1, help="Independent automata; >1 prints the mean final P(local)"),
    seed: int = typer.Option(0),
    out: Optional[Path] = typer.Option(None, help="Trajectory CSV (single run only)"),
):
    """Two-armed Bernoulli bandit played by one Bayesian learning automaton."""
    with _exit_codes():
        rng = stream_rng(seed, "agent")
        if runs > 1:
            finals = convergence_batch(r1, r2, steps, runs, rng)
            rprint({"runs": runs, "steps": steps, "mean_final_p_local": float(finals.mean())})
            return
        trace = convergence_check(r1, r2, steps, rng)
        if out is not None:
            write_trajectory_csv(trace, out)
    rprint({"steps": steps, "final_p_local": trace.final, "out": str(out) if out else None})


# --------------------------- oracle ---------------------------

@app.command()
def oracle(
    config: Optional[Path] = typer.Option(None, "--config"),
    scenario: str = typer.Option("oracle-small"),
    slot: int = typer.Option(0, min=0),
    seed: int = typer.Option(0),
):
    """Exhaustive minimum-energy decision for one slot."""
    with _exit_codes():
        cfg = load_config(config, defaults=get_preset(scenario).system, rng_seed=seed)
        if slot >= cfg.horizon_slots:
            raise ConfigError(f"slot {slot} is outside the horizon ({cfg.horizon_slots})")
        env = build_scenario(cfg, "oracle", warmup_slots=0).env
        d, energy, b = brute_force_search(env.popularity[slot], env.channels[slot], env.tasks, cfg)

    table = Table(title=f"slot {slot}: {'feasible' if b.feasible else 'infeasible'}, {energy:.6g} J")
    for col in ("user", "x", "y", "local (J)", "offload (J)", "mec (J)"):
        table.add_column(col)
    for i in range(cfg.n_users):
        loc, off, mec = b.components[i]
        table.add_row(str(i), str(d.x[i]), f"{d.y[i]:.3g}", f"{loc:.6g}", f"{off:.6g}", f"{mec:.6g}")
    rprint(table)
    rprint({"z": list(d.z), "violations": b.violations})


# --------------------------- compare ---------------------------

@app.command()
def compare(
    results: Path = typer.Argument(..., help="results.csv written by simulate"),
    candidate: str = typer.Option("saq"),
    reference: List[str] = typer.Option(["full-local", "full-offload", "conventional-mec"], "--reference"),
):
    """Paired-seed energy savings of one algorithm against the others."""
    with _exit_codes():
        rows = read_results(results)
        present = {r.algorithm for r in rows}
        table = Table(title=f"{candidate} vs references")
        for col in ("reference", "pairs", "mean saving (J)", "no worse"):
            table.add_column(col)
        for ref in reference:
            if ref not in present:
                continue
            diff = paired_differences(rows, candidate, ref)
            table.add_row(ref, str(len(diff)), f"{diff['saving_j'].mean():.6g}",
                          "[green]yes[/green]" if dominates(rows, candidate, ref) else "[red]no[/red]")
    rprint(table)


# --------------------------- show-config ---------------------------

@app.command("show-config")
def show_config(
    config: Optional[Path] = typer.Option(None, "--config"),
    scenario: str = typer.Option("canonical"),
):
    """Resolved system configuration (preset, file, NOMAMEC_* variables)."""
    with _exit_codes():
        cfg = load_config(config, defaults=get_preset(scenario).system)
    table = Table(title=f"{scenario} configuration")
    table.add_column("key")
    table.add_column("value")
    for key, value in cfg.model_dump().items():
        table.add_row(key, str(value))
    rprint(table)


if __name__ == "__main__":
    app()
