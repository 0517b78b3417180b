"""Forward-mode (real-time recurrent) updates for the regression head and the candidate gate.

The candidate parameters are handled as one augmented matrix [W_C | b_C] of
shape (H, H + I + 1) acting on a_hat = [h_{t-1}, x_t, 1]. Two influence
tensors of shape (H, H, H + I + 1) are carried from slot to slot:

    S_c[k, m, n] = dC_t[k] / dW[m, n]     S_h[k, m, n] = dh_t[k] / dW[m, n]
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .lstm import LstmParams, LstmState, forward_step


@dataclass(frozen=True)
class CandidateSensitivity:
    s_c: np.ndarray
    s_h: np.ndarray

    @classmethod
    def zeros(cls, params: LstmParams) -> "CandidateSensitivity":
        h = params.hidden_size
        shape = (h, h, h + params.input_size + 1)
        return cls(np.zeros(shape), np.zeros(shape))

    __hash__ = None  # type: ignore[assignment]


def advance_sensitivity(params: LstmParams, sens: CandidateSensitivity, state: LstmState) -> CandidateSensitivity:
    """Carry the influence tensors through the step that produced `state`."""
    h = params.hidden_size
    a_hat = np.append(state.z, 1.0)

    def through_h(w: np.ndarray) -> np.ndarray:
        # d(W z)/dtheta through the recurrent half of z
        return np.tensordot(w[:, :h], sens.s_h, axes=(1, 0))

    da_f = through_h(params.w_f)
    da_i = through_h(params.w_i)
    da_o = through_h(params.w_o)
    da_d = through_h(params.w_c)
    idx = np.arange(h)
    da_d[idx, idx, :] += a_hat  # local term: only row m = k of W_C touches unit k directly

    def col(v: np.ndarray) -> np.ndarray:
        return v[:, None, None]

    df = col(state.f * (1.0 - state.f)) * da_f
    di = col(state.i * (1.0 - state.i)) * da_i
    do = col(state.o * (1.0 - state.o)) * da_o
    dd = col(1.0 - state.d * state.d) * da_d

    s_c = df * col(state.c_prev) + col(state.f) * sens.s_c + di * col(state.d) + col(state.i) * dd
    tc = np.tanh(state.c)
    s_h = do * col(tc) + col(state.o * (1.0 - tc * tc)) * s_c
    return CandidateSensitivity(s_c, s_h)


def candidate_gradient(params: LstmParams, sens: CandidateSensitivity, state: LstmState, target: np.ndarray) -> np.ndarray:
    """d loss_t / d[W_C | b_C] given influence tensors already advanced to this slot."""
    err = params.w_out @ state.h - np.asarray(target, dtype=float)
    q = params.w_out.T @ (2.0 * err)
    return np.tensordot(q, sens.s_h, axes=(0, 0))


def rtrl_update_output(params: LstmParams, state: LstmState, target: np.ndarray, lr: float) -> LstmParams:
    """w_out <- w_out + 2 mu (x - x_hat) (o * tanh C)^T"""
    err = np.asarray(target, dtype=float) - params.w_out @ state.h
    return params.with_(w_out=params.w_out + 2.0 * lr * np.outer(err, state.h))


def rtrl_update_candidate(
    params: LstmParams,
    sens: CandidateSensitivity,
    state: LstmState,
    target: np.ndarray,
    lr: float,
) -> Tuple[LstmParams, CandidateSensitivity]:
    """Advance the influence tensors over `state`'s step, then take one step on W_C and b_C."""
    sens = advance_sensitivity(params, sens, state)
    g = candidate_gradient(params, sens, state, target)
    n = params.w_c.shape[1]
    updated = params.with_(w_c=params.w_c - lr * g[:, :n], b_c=params.b_c - lr * g[:, n])
    return updated, sens


def rtrl_gradient_candidate(params: LstmParams, xs: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Total-loss gradient for [W_C | b_C] accumulated online with the weights held fixed."""
    state = LstmState.zeros(params.hidden_size)
    sens = CandidateSensitivity.zeros(params)
    total = np.zeros(sens.s_h.shape[1:])
    for x, y in zip(xs, targets):
        state = forward_step(params, state, x)
        sens = advance_sensitivity(params, sens, state)
        total += candidate_gradient(params, sens, state, y)
    return total
