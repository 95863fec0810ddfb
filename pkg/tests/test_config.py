"""Flat JSON config: defaults, validation messages, strict key checking."""
import json

import numpy as np
import pytest

from omqsd.config import RunConfig, from_dict, load_config, validate
from omqsd.errors import ConfigError


def test_empty_document_is_complete():
    cfg = from_dict({})
    assert cfg.method == "stochastic"
    assert cfg.coeff_variant == "rederived"
    assert cfg.gamma == 0.2
    assert cfg.n_steps == 20000
    assert cfg.params().dims == (6, 6)


def test_unknown_key_rejected_by_name():
    with pytest.raises(ConfigError) as err:
        from_dict({"gamma": 0.5, "gama": 1.0})
    assert "gama" in str(err.value)
    assert err.value.key == "gama"


def test_violations_name_the_key():
    for doc, key in [({"gamma": -1.0}, "gamma"),
                     ({"gamma": 0.0}, "gamma"),
                     ({"dt": 0.0}, "dt"),
                     ({"dim_c": 1}, "dim_c"),
                     ({"n_traj": 0}, "n_traj"),
                     ({"method": "exact"}, "method"),
                     ({"window": "hamming"}, "window"),
                     ({"mech_n": 6}, "mech_n"),
                     ({"pad_factor": 0}, "pad_factor"),
                     ({"batch_size": 0}, "batch_size"),
                     ({"workers": -1}, "workers"),
                     ({"lam": float("nan")}, "lam"),
                     ({"T": 1.0005, "dt": 1e-2}, "T")]:
        with pytest.raises(ConfigError) as err:
            from_dict(doc)
        assert err.value.key == key, doc


def test_integer_keys_reject_fractions_and_bools():
    cfg = from_dict({"dim_c": 8.0})  # JSON whole numbers may arrive as floats
    assert cfg.dim_c == 8 and isinstance(cfg.dim_c, int)
    with pytest.raises(ConfigError):
        from_dict({"dim_c": 8.5})
    with pytest.raises(ConfigError):
        from_dict({"n_traj": True})


def test_t_over_dt_integrality():
    cfg = from_dict({"T": 2.0, "dt": 1e-3})
    assert cfg.n_steps == 2000
    with pytest.raises(ConfigError):
        validate(RunConfig(T=1.0, dt=3e-4))


def test_initial_state_assembly():
    cfg = from_dict({"dim_c": 8, "dim_m": 8, "mech_kind": "coherent",
                     "mech_beta": 0.5, "leak_tol": 1e-4})
    psi = cfg.initial_state()
    assert psi.shape == (64,)
    assert abs(np.linalg.norm(psi) - 1.0) < 1e-12
    cfg2 = from_dict({"mech_kind": "squeezed", "mech_r": 0.3, "leak_tol": 1e-2})
    assert abs(np.linalg.norm(cfg2.initial_state()) - 1.0) < 1e-12


def test_leak_guard_is_config_driven():
    from omqsd.errors import TruncationError
    cfg = from_dict({"dim_c": 4, "alpha0": 1.0, "leak_tol": 1e-6})
    with pytest.raises(TruncationError):
        cfg.initial_state()


def test_round_trip_through_dict():
    cfg = from_dict({"gamma": 2.0, "n_traj": 16})
    doc = cfg.to_dict()
    cfg2 = from_dict(doc)
    assert cfg2 == cfg or cfg2.to_dict() == doc


def test_explicit_keys_recorded():
    cfg = from_dict({"gamma": 2.0, "window": "none"})
    assert cfg.explicit_keys == {"gamma", "window"}


def test_load_config_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"gamma": 5.0, "T": 1.0, "dt": 1e-3}))
    cfg = load_config(path)
    assert cfg.gamma == 5.0
    empty = tmp_path / "empty.json"
    empty.write_text("")
    assert load_config(empty).gamma == 0.2


def test_parse_error_reports_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "gamma": 0.2,\n  oops\n}\n')
    with pytest.raises(ConfigError) as err:
        load_config(path)
    msg = str(err.value)
    assert "line 3" in msg and str(path) in msg


def test_top_level_must_be_object(tmp_path):
    path = tmp_path / "list.json"
    path.write_text("[1, 2, 3]")
    with pytest.raises(ConfigError):
        load_config(path)
