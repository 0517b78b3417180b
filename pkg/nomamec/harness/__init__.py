from .analysis import dominates, episodes_to_converge, paired_differences, read_results, sweep_trend, trend_spearman
from .baselines import baseline_conventional_mec, baseline_full_local, baseline_full_offload
from .plan import ALGORITHMS, ExperimentPlan, ResultRow, load_plan
from .presets import PRESETS, ScenarioPreset, get_preset
from .runner import RunSummary, apply_sweep, run_cell, run_plan
from .scenario import Scenario, build_scenario

__all__ = [
    "dominates", "episodes_to_converge", "paired_differences", "read_results", "sweep_trend", "trend_spearman",
    "baseline_conventional_mec", "baseline_full_local", "baseline_full_offload",
    "ALGORITHMS", "ExperimentPlan", "ResultRow", "load_plan",
    "PRESETS", "ScenarioPreset", "get_preset",
    "RunSummary", "apply_sweep", "run_cell", "run_plan",
    "Scenario", "build_scenario",
]
