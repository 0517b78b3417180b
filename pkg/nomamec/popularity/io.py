"""LSTM weight files and loss-curve CSVs.

Weight file layout: b"LSTM1", then uint32 version, hidden, input and output
sizes, then the nine arrays as little-endian float64 in WEIGHT_ORDER.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import PersistenceError
from .lstm import LstmParams
from .trainer import LossCurve

MAGIC = b"LSTM1"
VERSION = 1
HEADER = np.dtype("<u4")
VALUES = np.dtype("<f8")
WEIGHT_ORDER = ("w_f", "b_f", "w_i", "b_i", "w_c", "b_c", "w_o", "b_o", "w_out")


def _shapes(hidden: int, n_in: int, n_out: int) -> dict[str, tuple[int, ...]]:
    gate = (hidden, hidden + n_in)
    return {"w_f": gate, "w_i": gate, "w_c": gate, "w_o": gate,
            "b_f": (hidden,), "b_i": (hidden,), "b_c": (hidden,), "b_o": (hidden,),
            "w_out": (n_out, hidden)}


def save_weights(params: LstmParams, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = np.array([VERSION, params.hidden_size, params.input_size, params.output_size], dtype=HEADER)
    body = b"".join(np.ascontiguousarray(getattr(params, name), dtype=VALUES).tobytes() for name in WEIGHT_ORDER)
    path.write_bytes(MAGIC + header.tobytes() + body)


def load_weights(path: Path) -> LstmParams:
    path = Path(path)
    if not path.exists():
        raise PersistenceError(f"weight file not found: {path}")
    raw = path.read_bytes()
    if raw[: len(MAGIC)] != MAGIC:
        raise PersistenceError(f"{path}: not an LSTM1 weight file")
    offset = len(MAGIC)
    if len(raw) < offset + 4 * HEADER.itemsize:
        raise PersistenceError(f"{path}: truncated header")
    version, hidden, n_in, n_out = (int(v) for v in np.frombuffer(raw, HEADER, 4, offset))
    if version != VERSION:
        raise PersistenceError(f"{path}: unsupported version {version}")
    offset += 4 * HEADER.itemsize
    shapes = _shapes(hidden, n_in, n_out)
    expected = offset + sum(int(np.prod(s)) for s in shapes.values()) * VALUES.itemsize
    if len(raw) != expected:
        raise PersistenceError(f"{path}: size {len(raw)} bytes, expected {expected}")
    arrays = {}
    for name in WEIGHT_ORDER:
        count = int(np.prod(shapes[name]))
        arrays[name] = np.frombuffer(raw, VALUES, count, offset).reshape(shapes[name]).astype(float)
        offset += count * VALUES.itemsize
    return LstmParams(**arrays)


def write_loss_csv(curve: LossCurve, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    curve.frame().to_csv(path, index=False, float_format="%.12g")
