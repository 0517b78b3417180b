# tests/test_noma.py
import math

import numpy as np
import pytest

from nomamec.comms import build_uplink_set, noma_rate, offload_energy, offload_time, uplink_rates
from nomamec.comms.noma import decoding_order
from nomamec.config import SystemConfig
from nomamec.errors import DomainError, PreconditionError
from nomamec.system import ChannelState, DecisionVector, TaskSpec


def _cfg(n: int) -> SystemConfig:
    return SystemConfig(n_users=n, c_cache_slots=0)


def test_single_user_is_shannon_rate():
    cfg = _cfg(1)
    g = 2e-7
    rate = uplink_rates((0,), np.array([g]), cfg)[0]
    assert rate == pytest.approx(cfg.bandwidth_hz * math.log2(1 + 0.1 * g / cfg.noise_power_w), rel=1e-12)


def test_weak_channel_keeps_a_positive_rate():
    cfg = _cfg(1)
    g = 1e-30
    rate = uplink_rates((0,), np.array([g]), cfg)[0]
    assert rate > 0
    assert rate == pytest.approx(cfg.bandwidth_hz * (0.1 * g / cfg.noise_power_w) / math.log(2), rel=1e-9)
    up = build_uplink_set(DecisionVector((0,), (1.0,), (0,) * 5), ChannelState(np.array([g]), 0), cfg)
    assert noma_rate(up, 0, cfg) == pytest.approx(rate, rel=1e-12)


def test_decoding_order_strongest_first_ties_by_index():
    gains = np.array([1e-8, 5e-8, 5e-8, 2e-8])
    assert decoding_order((0, 0, 0, 1), gains) == (1, 2, 0)
    assert decoding_order((1, 1, 1, 1), gains) == ()


def test_sic_interference_from_later_users():
    cfg = _cfg(3)
    gains = np.array([1e-8, 4e-8, 2e-8])
    d = DecisionVector((0, 0, 0), (0.5, 0.25, 0.25), (0,) * 5)
    up = build_uplink_set(d, ChannelState(gains, 0), cfg)
    assert up.members == (1, 2, 0)
    rx = gains * 0.1
    sigma = cfg.noise_power_w
    expected = {
        1: cfg.bandwidth_hz * math.log2(1 + rx[1] / (rx[2] + rx[0] + sigma)),
        2: cfg.bandwidth_hz * math.log2(1 + rx[2] / (rx[0] + sigma)),
        0: cfg.bandwidth_hz * math.log2(1 + rx[0] / sigma),
    }
    for pos, user in enumerate(up.members):
        assert noma_rate(up, pos, cfg) == pytest.approx(expected[user], rel=1e-12)
    vec = uplink_rates(d.x, gains, cfg)
    for user, r in expected.items():
        assert vec[user] == pytest.approx(r, rel=1e-12)


def test_interference_never_raises_a_rate():
    cfg = _cfg(3)
    rng = np.random.default_rng(5)
    for _ in range(50):
        gains = rng.uniform(1e-9, 1e-6, size=3)
        joint = uplink_rates((0, 0, 0), gains, cfg)
        for i in range(3):
            alone = uplink_rates(tuple(0 if k == i else 1 for k in range(3)), gains, cfg)[i]
            assert joint[i] <= alone * (1 + 1e-12)


def test_local_users_get_zero_rate():
    cfg = _cfg(2)
    rates = uplink_rates((1, 0), np.array([1e-7, 1e-7]), cfg)
    assert rates[0] == 0.0 and rates[1] > 0


def test_offload_time_and_energy():
    task = TaskSpec(id=1, input_bits=8e6, cycles=1e10, result_bits=8e5)
    assert offload_time(task, 4e6) == pytest.approx(2.0)
    assert offload_energy(task, 4e6, 0.1) == pytest.approx(0.2)
    with pytest.raises(DomainError):
        offload_time(task, 0.0)
    with pytest.raises(DomainError):
        offload_energy(task, 1e6, 0.0)


def test_empty_uplink_set_has_no_rate():
    cfg = _cfg(2)
    d = DecisionVector((1, 1), (0.0, 0.0), (0,) * 5)
    up = build_uplink_set(d, ChannelState(np.array([1e-7, 2e-7]), 0), cfg)
    assert len(up) == 0
    with pytest.raises(PreconditionError):
        noma_rate(up, 0, cfg)
