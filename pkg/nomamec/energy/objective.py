"""Expected per-user energy, the P1 objective and constraint checks C1-C6.

    E_i = sum_j Pr_i^j (1 - z_j) [ x_i E_loc + (1 - x_i) E_off + c_i E_mec ]

with c_i = (1 - x_i) in "consistent" mode and c_i = (1 - y_i) in "as-printed" mode.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

from ..comms.noma import uplink_rates
from ..config import SystemConfig
from ..errors import DimensionError, InfeasibleDecisionError
from ..system.types import GRID_TOL, ChannelState, DecisionVector, PopularityMatrix, TaskSpec

SUM_TOL = 1e-9


@dataclass(frozen=True)
class EnergyBreakdown:
    per_user: Tuple[float, ...]
    total: float
    components: Tuple[Tuple[float, float, float], ...]  # (local, offload, mec) per user
    feasible: bool
    violations: Tuple[str, ...]
    # what learners and baselines optimise: total when feasible, penalty otherwise
    objective: float
    objective_per_user: Tuple[float, ...]

    def rows(self, slot: int) -> List[Dict[str, object]]:
        return [
            {"slot": slot, "user": i + 1, "local_J": c[0], "offload_J": c[1], "mec_J": c[2],
             "total_J": self.per_user[i], "feasible": self.feasible}
            for i, c in enumerate(self.components)
        ]


def breakdown_frame(breakdowns: Sequence[Tuple[int, EnergyBreakdown]]) -> pd.DataFrame:
    rows: List[Dict[str, object]] = []
    for slot, b in breakdowns:
        rows.extend(b.rows(slot))
    return pd.DataFrame(rows, columns=["slot", "user", "local_J", "offload_J", "mec_J", "total_J", "feasible"])


class EnergyEvaluator:
    """Slot-level evaluator. Everything that does not depend on the decision is precomputed."""

    def __init__(self, pop: PopularityMatrix, chan: ChannelState, tasks: Sequence[TaskSpec], cfg: SystemConfig):
        if pop.probs.shape != (cfg.n_users, cfg.n_tasks):
            raise DimensionError(f"popularity shape {pop.probs.shape} != ({cfg.n_users}, {cfg.n_tasks})")
        if chan.gains.shape[0] != cfg.n_users or len(tasks) != cfg.n_tasks:
            raise DimensionError("channel / task count does not match config")
        self.cfg = cfg
        self.pop = pop
        self.chan = chan
        self.tasks = list(tasks)
        self.bits = np.array([t.input_bits for t in tasks])
        self.cycles = np.array([t.cycles for t in tasks])
        self.result_bits = np.array([t.result_bits for t in tasks])
        self.t_loc = self.cycles[None, :] / cfg.local_cpu[:, None]
        self.e_loc = cfg.p_local[:, None] * self.t_loc
        # penalty reference: everybody local, nothing cached
        self.all_local_per_user = (pop.probs * self.e_loc).sum(axis=1)
        self._rates: Dict[Tuple[int, ...], np.ndarray] = {}

    def rates(self, x: Tuple[int, ...]) -> np.ndarray:
        r = self._rates.get(x)
        if r is None:
            r = uplink_rates(x, self.chan.gains, self.cfg)
            self._rates[x] = r
        return r

    def penalty_per_user(self) -> np.ndarray:
        return self.cfg.penalty_factor * self.all_local_per_user

    def terms(self, d: DecisionVector):
        """Per (user, task) times and energies before popularity weighting."""
        cfg = self.cfg
        x = np.asarray(d.x, dtype=float)
        y = np.asarray(d.y, dtype=float)
        rates = self.rates(d.x)
        off = x == 0
        with np.errstate(divide="ignore"):
            # an offloader without a usable rate never finishes its upload
            inv_rate = np.where(rates > 0, 1.0 / np.where(rates > 0, rates, 1.0), np.inf)
            inv_share = np.where(y > 0, 1.0 / np.where(y > 0, y, 1.0), 0.0)
        t_off = np.where(off[:, None], self.bits[None, :] * inv_rate[:, None], 0.0)
        e_off = cfg.tx_power[:, None] * t_off
        t_mec = self.cycles[None, :] * inv_share[:, None] / cfg.c_mec_hz
        e_mec = cfg.p_mec_w * t_mec
        if cfg.formula_mode == "consistent":
            mec_coeff = 1.0 - x
        else:
            mec_coeff = 1.0 - y
        local_term = x[:, None] * self.e_loc
        off_term = (1.0 - x)[:, None] * e_off
        mec_term = mec_coeff[:, None] * e_mec
        return t_off, t_mec, local_term, off_term, mec_term

    def weights(self, d: DecisionVector) -> np.ndarray:
        z = np.asarray(d.z, dtype=float)
        return self.pop.probs * (1.0 - z)[None, :]

    def violations(self, d: DecisionVector) -> List[str]:
        d.check_dims(self.cfg.n_users, self.cfg.n_tasks)
        cfg = self.cfg
        out: List[str] = []
        if any(v not in (0, 1) for v in d.x):
            out.append("C1: offloading flags must be binary")
        if any(v < -GRID_TOL or v > 1 + GRID_TOL for v in d.y):
            out.append("C2: MEC shares must lie in [0, 1]")
        elif not d.on_grid(cfg.n_freq_slices):
            out.append(f"C2: MEC shares must be multiples of 1/{cfg.n_freq_slices}")
        if any(v not in (0, 1) for v in d.z):
            out.append("C3: cache flags must be binary")
        out.extend(self._c4(d))
        if sum(d.z) > cfg.c_cache_slots:
            out.append(f"C5: {sum(d.z)} cached tasks exceed capacity {cfg.c_cache_slots}")
        if cfg.cache_capacity_bits is not None:
            used = float(np.dot(d.z, self.result_bits))
            if used > cfg.cache_capacity_bits:
                out.append(f"C5: cached results use {used:.0f} bits > {cfg.cache_capacity_bits:.0f}")
        out.extend(self._c6(d))
        return out

    def _c4(self, d: DecisionVector) -> List[str]:
        up = d.offloaders
        y = np.asarray(d.y)
        out = []
        if self.cfg.strict_c4:
            if abs(y.sum() - 1.0) > SUM_TOL:
                out.append(f"C4: shares sum to {y.sum():.6g}, must be exactly 1")
        elif up:
            if abs(y[list(up)].sum() - 1.0) > SUM_TOL:
                out.append(f"C4: offloading users' shares sum to {y[list(up)].sum():.6g}, must be 1")
            local = [i for i in range(d.n_users) if d.x[i] == 1]
            if local and y[local].sum() > SUM_TOL:
                out.append("C4: local users must not hold MEC shares")
        elif y.sum() > SUM_TOL:
            out.append("C4: no user offloads but MEC shares are allocated")
        for i in up:
            if y[i] <= 0:
                out.append(f"C4: offloading user {i + 1} has no MEC share")
        return out

    def _c6(self, d: DecisionVector) -> List[str]:
        cfg = self.cfg
        t_off, t_mec, *_ = self.terms(d)
        requested = self.weights(d) > 0
        limit = cfg.latency_limit_s
        out = []
        for i in range(d.n_users):
            mask = requested[i]
            if not mask.any():
                continue
            if d.x[i] == 0:
                if d.y[i] <= 0:
                    continue  # already reported under C4
                worst = (t_off[i] + t_mec[i])[mask].max()
                if worst > limit:
                    out.append(f"C6: user {i + 1} offload+MEC time {worst:.4g}s > {limit:.4g}s")
            elif cfg.strict_local_latency:
                worst = self.t_loc[i][mask].max()
                if worst > limit:
                    out.append(f"C6: user {i + 1} local time {worst:.4g}s > {limit:.4g}s")
        return out

    def components(self, d: DecisionVector) -> np.ndarray:
        """(N_u, 3) array of expected (local, offload, mec) joules."""
        _, _, local_term, off_term, mec_term = self.terms(d)
        w = self.weights(d)

        def weighted(term: np.ndarray) -> np.ndarray:
            # cached or unrequested tasks cost nothing, even over a dead link
            with np.errstate(invalid="ignore"):
                return np.where(w > 0, w * term, 0.0).sum(axis=1)

        return np.stack([weighted(local_term), weighted(off_term), weighted(mec_term)], axis=1)

    def breakdown(self, d: DecisionVector) -> EnergyBreakdown:
        viol = self.violations(d)
        comp = self.components(d)
        per_user = comp.sum(axis=1)
        feasible = not viol
        obj_user = per_user if feasible else self.penalty_per_user()
        return EnergyBreakdown(
            per_user=tuple(float(v) for v in per_user),
            total=float(per_user.sum()),
            components=tuple((float(a), float(b), float(c)) for a, b, c in comp),
            feasible=feasible,
            violations=tuple(viol),
            objective=float(obj_user.sum()),
            objective_per_user=tuple(float(v) for v in obj_user),
        )

    def objective(self, d: DecisionVector) -> float:
        return self.breakdown(d).objective

    def task_costs(self, d: DecisionVector) -> np.ndarray:
        """Expected joules each task contributes when not cached (summed over users)."""
        _, _, local_term, off_term, mec_term = self.terms(d)
        probs = self.pop.probs
        with np.errstate(invalid="ignore"):
            return np.where(probs > 0, probs * (local_term + off_term + mec_term), 0.0).sum(axis=0)


def expected_user_energy(
    user: int,
    decision: DecisionVector,
    pop: PopularityMatrix,
    chan: ChannelState,
    tasks: Sequence[TaskSpec],
    cfg: SystemConfig,
) -> float:
    ev = EnergyEvaluator(pop, chan, tasks, cfg)
    viol = ev.violations(decision)
    if viol:
        raise InfeasibleDecisionError(viol)
    if not 0 <= user < cfg.n_users:
        raise DimensionError(f"user index {user} outside 0..{cfg.n_users - 1}")
    return float(ev.components(decision)[user].sum())


def total_energy(
    decision: DecisionVector,
    pop: PopularityMatrix,
    chan: ChannelState,
    tasks: Sequence[TaskSpec],
    cfg: SystemConfig,
) -> EnergyBreakdown:
    return EnergyEvaluator(pop, chan, tasks, cfg).breakdown(decision)
