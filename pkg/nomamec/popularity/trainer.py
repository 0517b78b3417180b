"""Training and forecasting for the popularity predictor.

Stage one walks the training slots once per epoch. In `bptt` mode every
parameter follows truncated BPTT over windows of `bptt_window` slots. In
`rtrl` mode only w_out and [W_C | b_C] learn, online, with mu_t =
rtrl_scale / t. `hybrid` does both: the online rules for those two and BPTT
for the f, i, o gates. Stage two scores the held-out slots after each epoch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from ..config import LstmHyper
from ..errors import TrainingDivergedError
from ..log import get_logger
from ..system.types import PopularityMatrix
from .lstm import LstmParams, LstmState, bptt_gradients, clip_gradients, forward_step, loss, predict, run_sequence
from .rtrl import CandidateSensitivity, advance_sensitivity, candidate_gradient
from .series import SeriesDataset

log = get_logger(__name__)

GATE_ARRAYS = ("w_f", "b_f", "w_i", "b_i", "w_o", "b_o")
ONLINE_ARRAYS = ("w_c", "b_c", "w_out")
ALL_ARRAYS = GATE_ARRAYS + ONLINE_ARRAYS


@dataclass
class LossCurve:
    train: List[float] = field(default_factory=list)
    test: List[float] = field(default_factory=list)
    stopped_early: bool = False

    @property
    def epochs(self) -> int:
        return len(self.train)

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "epoch": np.arange(1, self.epochs + 1),
            "train_loss": self.train,
            "test_loss": self.test,
        })


def _apply(params: LstmParams, grads: LstmParams, lr: float, names) -> None:
    for name in names:
        getattr(params, name)[...] -= lr * getattr(grads, name)


def _online_window(
    params: LstmParams,
    state: LstmState,
    sens: CandidateSensitivity,
    xs: np.ndarray,
    ys: np.ndarray,
    t0: int,
    hyper: LstmHyper,
) -> Tuple[LstmParams, LstmState, CandidateSensitivity, float]:
    total = 0.0
    n = params.w_c.shape[1]
    for k, (x, y) in enumerate(zip(xs, ys)):
        state = forward_step(params, state, x)
        raw = params.w_out @ state.h
        total += loss(raw, y)
        mu = hyper.rtrl_scale / (t0 + k + 1)
        sens = advance_sensitivity(params, sens, state)
        g = candidate_gradient(params, sens, state, y)
        params.w_out[...] += 2.0 * mu * np.outer(y - raw, state.h)
        params.w_c[...] -= mu * g[:, :n]
        params.b_c[...] -= mu * g[:, n]
    return params, state, sens, total


def _epoch(params: LstmParams, train: np.ndarray, hyper: LstmHyper) -> float:
    xs, ys = train[:-1], train[1:]
    state = LstmState.zeros(params.hidden_size)
    sens = CandidateSensitivity.zeros(params) if hyper.mode != "bptt" else None
    total = 0.0
    w = hyper.bptt_window
    for start in range(0, len(xs), w):
        xw, yw = xs[start:start + w], ys[start:start + w]
        if hyper.mode == "bptt":
            window_loss, grads, state = bptt_gradients(params, xw, yw, state)
            clip_gradients(grads, hyper.clip_norm)
            _apply(params, grads, hyper.lr, ALL_ARRAYS)
            total += window_loss
            continue
        incoming = LstmState(c=state.c, h=state.h)
        params, state, sens, window_loss = _online_window(params, state, sens, xw, yw, start, hyper)
        total += window_loss
        if hyper.mode == "hybrid":
            _, grads, _ = bptt_gradients(params, xw, yw, incoming)
            clip_gradients(grads, hyper.clip_norm, GATE_ARRAYS)
            _apply(params, grads, hyper.lr, GATE_ARRAYS)
    return total


def evaluate(params: LstmParams, dataset: SeriesDataset) -> Tuple[float, float]:
    """One-step (train, test) loss of fixed weights over the whole series."""
    states = run_sequence(params, dataset.series[:-1])
    per_slot = np.array([loss(params.w_out @ s.h, y) for s, y in zip(states, dataset.series[1:])])
    split = dataset.split - 1
    test = float(per_slot[split:].sum()) if split < len(per_slot) else float("nan")
    return float(per_slot[:split].sum()), test


def train(
    dataset: SeriesDataset,
    hyper: LstmHyper,
    rng: np.random.Generator,
    params: Optional[LstmParams] = None,
) -> Tuple[LstmParams, LossCurve]:
    if params is None:
        n = dataset.n_tasks
        params = LstmParams.init(hyper.hidden_size, n, n, rng, hyper.init_scale)
    else:
        params = params.copy()
    curve = LossCurve()
    for epoch in range(1, hyper.epochs + 1):
        train_loss = _epoch(params, dataset.train, hyper)
        if not np.isfinite(train_loss) or not params.is_finite():
            raise TrainingDivergedError(epoch, train_loss)
        _, test_loss = evaluate(params, dataset)
        curve.train.append(train_loss)
        curve.test.append(test_loss)
        log.debug("epoch %d: train=%.6g test=%.6g", epoch, train_loss, test_loss)
        if hyper.goal is not None and train_loss <= hyper.goal:
            curve.stopped_early = True
            log.info("goal %.3g reached at epoch %d", hyper.goal, epoch)
            break
    log.info("trained %s LSTM (hidden=%d) for %d epochs, final train loss %.6g",
             hyper.mode, params.hidden_size, curve.epochs, curve.train[-1])
    return params, curve


def predict_horizon(
    params: LstmParams,
    dataset: SeriesDataset,
    horizon: int,
    n_users: int = 1,
) -> List[PopularityMatrix]:
    """Closed-loop forecast of the `horizon` slots after the series ends."""
    if horizon <= 0:
        return []
    state = run_sequence(params, dataset.series)[-1]
    out = []
    for k in range(horizon):
        p, _ = predict(params, state)
        out.append(PopularityMatrix.shared(p, n_users, dataset.n_slots + k))
        if k + 1 < horizon:
            state = forward_step(params, state, p)
    return out


def rolling_forecast(params: LstmParams, series: np.ndarray) -> np.ndarray:
    """One-step-ahead predictions: row t is the forecast for slot t from slots < t; row 0 is uniform."""
    series = np.asarray(series, dtype=float)
    out = np.empty_like(series)
    out[0] = 1.0 / series.shape[1]
    state = LstmState.zeros(params.hidden_size)
    for t in range(1, series.shape[0]):
        state = forward_step(params, state, series[t - 1])
        out[t], _ = predict(params, state)
    return out
