"""A single-layer LSTM with a linear regression head, written against numpy.

Gate pre-activations act on the concatenation z_t = [h_{t-1}, x_t]:

    f = sigma(W_f z + b_f)     i = sigma(W_i z + b_i)
    d = tanh(W_C z + b_C)      o = sigma(W_o z + b_o)
    C_t = f * C_{t-1} + i * d  h_t = o * tanh(C_t)
    x_hat = w_out h_t
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from ..errors import DimensionError
from .series import project_simplex

CLAMP = 30.0

GATES = ("f", "i", "c", "o")


def sigmoid(a: np.ndarray) -> np.ndarray:
    return expit(np.clip(a, -CLAMP, CLAMP))


def tanh(a: np.ndarray) -> np.ndarray:
    return np.tanh(np.clip(a, -CLAMP, CLAMP))


@dataclass
class LstmParams:
    w_f: np.ndarray
    w_i: np.ndarray
    w_c: np.ndarray
    w_o: np.ndarray
    b_f: np.ndarray
    b_i: np.ndarray
    b_c: np.ndarray
    b_o: np.ndarray
    w_out: np.ndarray  # (output, hidden)

    def __post_init__(self):
        h = self.b_f.shape[0]
        for g in GATES:
            w, b = getattr(self, f"w_{g}"), getattr(self, f"b_{g}")
            if w.ndim != 2 or w.shape[0] != h or w.shape[1] <= h or b.shape != (h,):
                raise DimensionError(f"gate {g}: inconsistent shapes {w.shape} / {b.shape}")
        if self.w_f.shape != self.w_i.shape or self.w_f.shape != self.w_c.shape or self.w_f.shape != self.w_o.shape:
            raise DimensionError("gate weight shapes differ")
        if self.w_out.ndim != 2 or self.w_out.shape[1] != h:
            raise DimensionError(f"w_out shape {self.w_out.shape} incompatible with hidden size {h}")

    @property
    def hidden_size(self) -> int:
        return self.b_f.shape[0]

    @property
    def input_size(self) -> int:
        return self.w_f.shape[1] - self.hidden_size

    @property
    def output_size(self) -> int:
        return self.w_out.shape[0]

    @classmethod
    def init(cls, hidden: int, n_in: int, n_out: int, rng: np.random.Generator, scale: float = 0.1) -> "LstmParams":
        """Uniform(-scale, scale) weights and biases."""
        def u(*shape):
            return rng.uniform(-scale, scale, size=shape)
        return cls(
            w_f=u(hidden, hidden + n_in), w_i=u(hidden, hidden + n_in),
            w_c=u(hidden, hidden + n_in), w_o=u(hidden, hidden + n_in),
            b_f=u(hidden), b_i=u(hidden), b_c=u(hidden), b_o=u(hidden),
            w_out=u(n_out, hidden),
        )

    @classmethod
    def zeros(cls, hidden: int, n_in: int, n_out: int) -> "LstmParams":
        z = np.zeros
        return cls(z((hidden, hidden + n_in)), z((hidden, hidden + n_in)), z((hidden, hidden + n_in)),
                   z((hidden, hidden + n_in)), z(hidden), z(hidden), z(hidden), z(hidden), z((n_out, hidden)))

    def arrays(self) -> Iterator[Tuple[str, np.ndarray]]:
        for f in fields(self):
            yield f.name, getattr(self, f.name)

    def copy(self) -> "LstmParams":
        return LstmParams(**{k: v.copy() for k, v in self.arrays()})

    def zeros_like(self) -> "LstmParams":
        return LstmParams(**{k: np.zeros_like(v) for k, v in self.arrays()})

    def with_(self, **arrays: np.ndarray) -> "LstmParams":
        return replace(self, **arrays)

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for _, v in self.arrays())

    def norm(self, names: Optional[Sequence[str]] = None) -> float:
        names = set(names) if names is not None else None
        return float(np.sqrt(sum(np.sum(v * v) for k, v in self.arrays() if names is None or k in names)))


@dataclass(frozen=True)
class LstmState:
    """Cell and hidden vectors after one step, plus what that step saw."""
    c: np.ndarray
    h: np.ndarray
    f: Optional[np.ndarray] = None
    i: Optional[np.ndarray] = None
    d: Optional[np.ndarray] = None
    o: Optional[np.ndarray] = None
    z: Optional[np.ndarray] = None  # [h_{t-1}, x_t]
    c_prev: Optional[np.ndarray] = None

    @classmethod
    def zeros(cls, hidden: int) -> "LstmState":
        return cls(c=np.zeros(hidden), h=np.zeros(hidden))

    @property
    def tanh_c(self) -> np.ndarray:
        return np.tanh(self.c)

    __hash__ = None  # type: ignore[assignment]


def forward_step(params: LstmParams, state: LstmState, x: np.ndarray) -> LstmState:
    x = np.asarray(x, dtype=float)
    if x.shape != (params.input_size,):
        raise DimensionError(f"input has shape {x.shape}, expected ({params.input_size},)")
    if state.h.shape != (params.hidden_size,) or state.c.shape != (params.hidden_size,):
        raise DimensionError("state does not match hidden size")
    z = np.concatenate([state.h, x])
    f = sigmoid(params.w_f @ z + params.b_f)
    i = sigmoid(params.w_i @ z + params.b_i)
    d = tanh(params.w_c @ z + params.b_c)
    o = sigmoid(params.w_o @ z + params.b_o)
    c = f * state.c + i * d
    h = o * np.tanh(c)
    return LstmState(c=c, h=h, f=f, i=i, d=d, o=o, z=z, c_prev=state.c)


def predict(params: LstmParams, state: LstmState) -> Tuple[np.ndarray, np.ndarray]:
    """(projected, raw) prediction of the next popularity vector."""
    raw = params.w_out @ state.h
    return project_simplex(raw), raw


def loss(pred: np.ndarray, target: np.ndarray) -> float:
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise DimensionError(f"prediction {pred.shape} and target {target.shape} differ")
    diff = pred - target
    return float(diff @ diff)


def run_sequence(params: LstmParams, xs: np.ndarray, state: Optional[LstmState] = None) -> List[LstmState]:
    state = state if state is not None else LstmState.zeros(params.hidden_size)
    out = []
    for x in xs:
        state = forward_step(params, state, x)
        out.append(state)
    return out


def sequence_loss(params: LstmParams, xs: np.ndarray, targets: np.ndarray, state: Optional[LstmState] = None) -> float:
    return sum(loss(params.w_out @ s.h, y) for s, y in zip(run_sequence(params, xs, state), targets))


def bptt_gradients(
    params: LstmParams,
    xs: np.ndarray,
    targets: np.ndarray,
    state: Optional[LstmState] = None,
) -> Tuple[float, LstmParams, LstmState]:
    """Loss, gradient and final state over one window, with the incoming state held constant."""
    states = run_sequence(params, xs, state)
    grads = params.zeros_like()
    h = params.hidden_size
    total = 0.0
    dh_next = np.zeros(h)
    dc_next = np.zeros(h)
    w_h = {g: getattr(params, f"w_{g}") for g in GATES}
    for s, y in zip(reversed(states), reversed(targets)):
        raw = params.w_out @ s.h
        err = raw - y
        total += float(err @ err)
        dy = 2.0 * err
        grads.w_out += np.outer(dy, s.h)
        dh = params.w_out.T @ dy + dh_next
        tc = np.tanh(s.c)
        do = dh * tc
        dc = dh * s.o * (1.0 - tc * tc) + dc_next
        da = {
            "f": dc * s.c_prev * s.f * (1.0 - s.f),
            "i": dc * s.d * s.i * (1.0 - s.i),
            "c": dc * s.i * (1.0 - s.d * s.d),
            "o": do * s.o * (1.0 - s.o),
        }
        dz = np.zeros_like(s.z)
        for g in GATES:
            getattr(grads, f"w_{g}")[...] += np.outer(da[g], s.z)
            getattr(grads, f"b_{g}")[...] += da[g]
            dz += w_h[g].T @ da[g]
        dh_next = dz[:h]
        dc_next = dc * s.f
    final = states[-1] if states else (state if state is not None else LstmState.zeros(h))
    return total, grads, final


def clip_gradients(grads: LstmParams, max_norm: float, names: Optional[Sequence[str]] = None) -> float:
    """Scale the selected arrays in place so their joint norm is at most `max_norm`."""
    norm = grads.norm(names)
    if norm > max_norm > 0:
        scale = max_norm / norm
        for k, v in grads.arrays():
            if names is None or k in names:
                v *= scale
    return norm
