from .compute import check_latency, check_local_latency, local_energy, local_time, mec_energy, mec_time
from .objective import EnergyBreakdown, EnergyEvaluator, breakdown_frame, expected_user_energy, total_energy
from .oracle import brute_force_optimum, enumerate_decisions

__all__ = [
    "check_latency", "check_local_latency", "local_energy", "local_time", "mec_energy", "mec_time",
    "EnergyBreakdown", "EnergyEvaluator", "breakdown_frame", "expected_user_energy", "total_energy",
    "brute_force_optimum", "enumerate_decisions",
]
