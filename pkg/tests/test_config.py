"""Config parsing and whole-config validation."""

import pytest
import yaml

from revanneal.config import ConfigError, load_config

BASE = {
    "mode": "mcwf",
    "problem": {"n": 4, "p": 3, "space": "dicke"},
    "schedule": "linear",
    "path": {"tau_ns": 20.0, "s_inv": [0.2, 0.3]},
    "m0": [0.5],
    "bath": {"model": "collective"},
    "solver": {"n_traj": 50, "seed": 1, "ds": 0.01},
    "output": "out",
}


def write(tmp_path, overrides=None, remove=()):
    cfg = yaml.safe_load(yaml.safe_dump(BASE))
    for key in remove:
        cfg.pop(key, None)
    for key, value in (overrides or {}).items():
        if isinstance(value, dict) and isinstance(cfg.get(key), dict):
            cfg[key].update(value)
        else:
            cfg[key] = value
    f = tmp_path / "config.yaml"
    f.write_text(yaml.safe_dump(cfg))
    return f


def test_valid_config(tmp_path):
    cfg = load_config(write(tmp_path))
    assert cfg.mode == "mcwf"
    assert cfg.spec.n == 4
    assert cfg.s_inv_grid == [0.2, 0.3]
    assert cfg.bath.model == "collective"
    assert len(cfg.schedule_hash) == 64


def test_s_inv_range_expansion(tmp_path):
    f = write(tmp_path, {"path": {"s_inv": {"start": 0.1, "stop": 0.3,
                                            "step": 0.1}}})
    cfg = load_config(f)
    assert cfg.s_inv_grid == pytest.approx([0.1, 0.2, 0.3])


def test_empty_grid_rejected(tmp_path):
    f = write(tmp_path, {"path": {"s_inv": []}})
    with pytest.raises(ConfigError, match="s_inv grid is empty"):
        load_config(f)


def test_bath_with_unitary_rejected(tmp_path):
    f = write(tmp_path, {"mode": "unitary"})
    with pytest.raises(ConfigError, match="conflicts with mode=unitary"):
        load_config(f)


def test_mcwf_without_bath_rejected(tmp_path):
    f = write(tmp_path, remove=("bath",))
    with pytest.raises(ConfigError, match="requires a bath"):
        load_config(f)


def test_independent_model_needs_full_space(tmp_path):
    f = write(tmp_path, {"bath": {"model": "independent"}})
    with pytest.raises(ConfigError, match="space=full"):
        load_config(f)
    f = write(tmp_path, {"bath": {"model": "independent"},
                         "problem": {"space": "full"}})
    cfg = load_config(f)
    assert cfg.spec.space == "full"


def test_all_errors_reported(tmp_path):
    f = write(tmp_path, {"mode": "bad", "problem": {"n": 1, "p": 0},
                         "m0": [], "path": {"tau_ns": -1, "s_inv": []}})
    with pytest.raises(ConfigError) as exc:
        load_config(f)
    messages = "\n".join(exc.value.errors)
    for fragment in ("mode", "problem.n", "problem.p", "tau_ns", "s_inv", "m0"):
        assert fragment in messages
    assert len(exc.value.errors) >= 5


def test_bad_m0_rejected(tmp_path):
    f = write(tmp_path, {"m0": [0.37]})
    with pytest.raises(ConfigError, match="m0=0.37"):
        load_config(f)


def test_off_grid_s_inv_rejected(tmp_path):
    f = write(tmp_path, {"path": {"s_inv": [0.205]}})
    with pytest.raises(ConfigError, match="does not sit"):
        load_config(f)


def test_unknown_solver_key_rejected(tmp_path):
    f = write(tmp_path, {"solver": {"bogus": 1}})
    with pytest.raises(ConfigError, match="unknown solver keys"):
        load_config(f)


def test_manifest_payload_covers_all_knobs(tmp_path):
    cfg = load_config(write(tmp_path))
    payload = cfg.manifest_payload()
    assert payload["solver"]["seed"] == 1
    assert payload["bath"]["eta"] == pytest.approx(1e-3)
    assert payload["schedule"]["table_sha256"] == cfg.schedule_hash
    assert payload["path"]["tau_ns"] == 20.0
