from .bla import (
    Arm, BetaArmState, beta_cdf, beta_pdf, convergence_batch, convergence_check, exact_superiority_prob,
    p_arm1_closed_form, sample_and_select, self_correction_check, update_arm,
)
from .env import SlotEnvironment
from .maq import AgentState, MaqResult, run_bla_maq
from .saq import QTable, SaqAgent, decode_state, encode_state, extract_policy, q_update, reward, \
    select_action_eps_greedy, table_sizes, train

__all__ = [
    "Arm", "BetaArmState", "beta_cdf", "beta_pdf", "convergence_batch", "convergence_check",
    "exact_superiority_prob", "p_arm1_closed_form", "sample_and_select", "self_correction_check", "update_arm",
    "SlotEnvironment", "AgentState", "MaqResult", "run_bla_maq",
    "QTable", "SaqAgent", "decode_state", "encode_state", "extract_policy", "q_update", "reward",
    "select_action_eps_greedy", "table_sizes", "train",
]
