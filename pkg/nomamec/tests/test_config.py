# tests/test_config.py
import pytest

from nomamec.config import KB_BITS, SystemConfig, dbm_to_w, load_config, save_config
from nomamec.errors import ConfigError


def test_defaults_follow_reference_constants():
    cfg = SystemConfig()
    assert cfg.bandwidth_hz == 20e6
    assert cfg.noise_power_w == pytest.approx(10 ** (-9.5) / 1000)
    assert cfg.user_tx_power_w == pytest.approx(0.1)
    assert (cfg.n_users, cfg.n_tasks, cfg.n_freq_slices, cfg.c_cache_slots) == (3, 5, 4, 2)
    assert cfg.task_input_min_bits == 300 * KB_BITS
    assert cfg.local_cpu.shape == (3,)


def test_dbm_conversion():
    assert dbm_to_w(30.0) == pytest.approx(1.0)
    assert dbm_to_w(0.0) == pytest.approx(1e-3)


@pytest.mark.parametrize("changes", [
    {"n_users": 0},
    {"c_cache_slots": 6},
    {"c_mec_hz": 0.0},
    {"p_local_w": (0.5, 0.5)},  # wrong length for 3 users
    {"task_input_max_bits": 1.0},
])
def test_invalid_values_raise_config_error(changes):
    with pytest.raises(ConfigError):
        SystemConfig().replace(**changes)


def test_flat_file_and_env_overrides(tmp_path, monkeypatch):
    path = tmp_path / "cell.conf"
    path.write_text(
        "# a comment\n"
        "n_users = 2\n"
        "c_cache_slots = 1   # inline comment\n"
        "p_local_w = 0.4, 0.6\n"
        "formula_mode = as-printed\n"
    )
    monkeypatch.setenv("NOMAMEC_C_MEC_HZ", "2e10")
    cfg = load_config(path)
    assert cfg.n_users == 2
    assert cfg.c_cache_slots == 1
    assert cfg.p_local_w == (0.4, 0.6)
    assert cfg.formula_mode == "as-printed"
    assert cfg.c_mec_hz == 2e10


def test_precedence_defaults_file_env_overrides(tmp_path, monkeypatch):
    path = tmp_path / "cell.yaml"
    path.write_text("n_tasks: 4\nhorizon_slots: 30\n")
    monkeypatch.setenv("NOMAMEC_HORIZON_SLOTS", "40")
    cfg = load_config(path, defaults={"n_tasks": 3, "n_users": 2}, rng_seed=7)
    assert cfg.n_users == 2  # from defaults
    assert cfg.n_tasks == 4  # file beats defaults
    assert cfg.horizon_slots == 40  # env beats file
    assert cfg.rng_seed == 7
    assert load_config(path, use_env=False).horizon_slots == 30


def test_unknown_key_and_bad_line(tmp_path):
    bad = tmp_path / "bad.conf"
    bad.write_text("n_userz = 3\n")
    with pytest.raises(ConfigError, match="unknown key"):
        load_config(bad)
    bad.write_text("n_users 3\n")
    with pytest.raises(ConfigError, match="key = value"):
        load_config(bad)
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.conf")


def test_save_then_load(tmp_path):
    cfg = SystemConfig(n_users=2, p_local_w=(0.3, 0.7), strict_c4=True, cache_capacity_bits=1e6)
    path = tmp_path / "out" / "saved.conf"
    save_config(cfg, path)
    assert load_config(path, use_env=False) == cfg
