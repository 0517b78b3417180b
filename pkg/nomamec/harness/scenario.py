"""Turn a config plus popularity settings into a ready slot environment."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Literal

import numpy as np

from ..config import LstmHyper, SystemConfig
from ..errors import PreconditionError
from ..learning.env import SlotEnvironment
from ..log import get_logger
from ..popularity.series import SeriesDataset, per_user_series, random_walk_series, stack_users
from ..popularity.trainer import LossCurve, rolling_forecast, train
from ..system.generators import stream_rng
from ..system.types import PopularityMatrix

log = get_logger(__name__)

PopularitySource = Literal["lstm", "oracle"]


@dataclass
class Scenario:
    env: SlotEnvironment
    loss_curves: List[LossCurve] = field(default_factory=list)


def _forecast(series: np.ndarray, warmup: int, lstm: LstmHyper, seed: int, stream_key: int) -> tuple[np.ndarray, LossCurve]:
    dataset = SeriesDataset.from_array(series[:warmup], lstm.train_fraction)
    params, curve = train(dataset, lstm, stream_rng(seed, "lstm", stream_key))
    return rolling_forecast(params, series), curve


def build_scenario(
    cfg: SystemConfig,
    popularity_source: PopularitySource = "lstm",
    lstm: LstmHyper | None = None,
    warmup_slots: int = 200,
    step_scale: float = 0.05,
    per_user: bool = False,
) -> Scenario:
    """True popularity walks over warm-up + horizon slots; the learners see the last `horizon_slots`.

    With the "lstm" source a predictor is fitted on the warm-up prefix and
    its one-step-ahead forecasts stand in for the predicted popularity.
    """
    lstm = lstm or LstmHyper()
    length = warmup_slots + cfg.horizon_slots
    if per_user:
        walks = [d.series for d in per_user_series(cfg, length, step_scale)]
    else:
        walks = [random_walk_series(cfg, length, step_scale).series]
    curves: List[LossCurve] = []
    if popularity_source == "lstm":
        if warmup_slots < 3:
            raise PreconditionError(f"the LSTM source needs at least 3 warm-up slots to fit on, got {warmup_slots}")
        preds = []
        for k, walk in enumerate(walks):
            forecast, curve = _forecast(walk, warmup_slots, lstm, cfg.rng_seed, k)
            preds.append(forecast)
            curves.append(curve)
    else:
        preds = walks

    def matrices(per_walk: List[np.ndarray]) -> List[PopularityMatrix]:
        out = []
        for t in range(cfg.horizon_slots):
            rows = [w[warmup_slots + t] for w in per_walk]
            out.append(stack_users(rows, t) if per_user else PopularityMatrix.shared(rows[0], cfg.n_users, t))
        return out

    env = SlotEnvironment(cfg, matrices(walks), matrices(preds))
    log.debug("scenario: %d slots, popularity=%s, per_user=%s", env.horizon, popularity_source, per_user)
    return Scenario(env, curves)
