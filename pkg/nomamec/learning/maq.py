"""Multi-agent offloading: one Bayesian learning automaton per user.

Every slot each agent plays local or offload from the arm of its current
state (its own last energy, log-binned). The joint choice forms X; Y is an
equal split among offloaders and Z the top cached tasks by predicted
popularity. An agent is rewarded when its energy fell since the previous
slot (or the team's, with `team_reward`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from ..config import MaqHyper
from ..energy.objective import EnergyBreakdown
from ..log import get_logger
from ..system.types import DecisionVector
from .bla import Arm, BetaArmState, p_local, sample_and_select, update_arm
from .env import SlotEnvironment

log = get_logger(__name__)


def energy_bin(energy: Optional[float], hyper: MaqHyper) -> int:
    """Log-spaced bin of an energy in joules; no energy yet maps to bin 0."""
    if energy is None:
        return 0
    lo, hi = np.log10(hyper.energy_bin_low), np.log10(hyper.energy_bin_high)
    e = np.log10(max(energy, hyper.energy_bin_low))
    k = int((e - lo) / (hi - lo) * hyper.n_energy_bins)
    return min(max(k, 0), hyper.n_energy_bins - 1)


@dataclass
class AgentState:
    user: int
    arms: Dict[int, BetaArmState] = field(default_factory=dict)
    state_bin: int = 0
    last_action: Optional[Arm] = None
    last_energy: Optional[float] = None

    def arm(self, state_bin: Optional[int] = None) -> BetaArmState:
        k = self.state_bin if state_bin is None else state_bin
        if k not in self.arms:
            self.arms[k] = BetaArmState()
        return self.arms[k]

    def act(self, rng: np.random.Generator) -> Arm:
        self.last_action = sample_and_select(self.arm(), rng)
        return self.last_action

    def greedy(self) -> Arm:
        # an untouched arm (p = 0.5) stays local
        return Arm.LOCAL if p_local(self.arm()) >= 0.5 else Arm.OFFLOAD

    def learn(self, rewarded: bool) -> None:
        assert self.last_action is not None
        self.arms[self.state_bin] = update_arm(self.arm(), self.last_action, rewarded)

    def observe(self, energy: float, hyper: MaqHyper) -> None:
        self.last_energy = energy
        self.state_bin = energy_bin(energy, hyper)


@dataclass
class MaqResult:
    agents: List[AgentState]
    trace: List[float]  # mean objective per episode
    greedy: List[EnergyBreakdown] = field(default_factory=list)

    def arm_table(self) -> pd.DataFrame:
        rows = [
            {"agent": ag.user + 1, "state_bin": k, "a1": arm.a1, "b1": arm.b1, "a2": arm.a2, "b2": arm.b2}
            for ag in self.agents for k, arm in sorted(ag.arms.items())
        ]
        return pd.DataFrame(rows, columns=["agent", "state_bin", "a1", "b1", "a2", "b2"])


def joint_decision(env: SlotEnvironment, actions: List[Arm], slot: int) -> DecisionVector:
    x = tuple(int(a) for a in actions)
    return DecisionVector(x, env.equal_split(x, slot), env.popularity_cache(slot))


def _episode(env: SlotEnvironment, agents: List[AgentState], hyper: MaqHyper, rng: np.random.Generator) -> float:
    """One pass over the horizon. Agents keep their last energy across episodes."""
    total = 0.0
    for t in range(env.horizon):
        prev_team = None if any(ag.last_energy is None for ag in agents) else sum(ag.last_energy for ag in agents)
        actions = [ag.act(rng) for ag in agents]
        b = env.breakdown(joint_decision(env, actions, t), t)
        team = b.objective
        for ag, e in zip(agents, b.objective_per_user):
            if ag.last_energy is not None:
                r = (prev_team - team) if hyper.team_reward else (ag.last_energy - e)
                ag.learn(r > hyper.reward_threshold)
            ag.observe(e, hyper)
        total += team
    return total / env.horizon


def greedy_rollout(env: SlotEnvironment, agents: List[AgentState], hyper: MaqHyper) -> List[EnergyBreakdown]:
    """Each agent plays its more likely arm from where training left it; arms are not updated."""
    out = []
    for t in range(env.horizon):
        b = env.breakdown(joint_decision(env, [ag.greedy() for ag in agents], t), t)
        for ag, e in zip(agents, b.objective_per_user):
            ag.state_bin = energy_bin(e, hyper)
        out.append(b)
    return out


def run_bla_maq(env: SlotEnvironment, hyper: MaqHyper, rng: np.random.Generator) -> MaqResult:
    agents = [AgentState(user=i) for i in range(env.cfg.n_users)]
    trace = []
    for e in range(hyper.episodes):
        trace.append(_episode(env, agents, hyper, rng))
        log.debug("MAQ episode %d: mean energy %.6g J", e + 1, trace[-1])
    greedy = greedy_rollout(env, agents, hyper)
    log.info("BLA-MAQ: %d episodes, final %.6g J", len(trace), trace[-1])
    return MaqResult(agents, trace, greedy)
