import math

import pytest

from levyfp import ConfigError
from levyfp.config import RunConfig, parse_config


def test_defaults_resolve():
    cfg = parse_config("h = 0.25\nJ = 64")
    assert isinstance(cfg, RunConfig)
    assert cfg.L == 16.0 and cfg.K == 641
    assert cfg.gamma_decay == 2.0
    assert cfg.model == "homogeneous" and cfg.init == "tc1"
    assert cfg.n_steps == 100


def test_grid_from_any_two():
    a = parse_config("h = 0.5\nL = 8")
    b = parse_config("J = 16\nL = 8")
    assert (a.h, a.J, a.L) == (b.h, b.J, b.L) == (0.5, 16, 8.0)
    with pytest.raises(ConfigError, match="not an integer"):
        parse_config("h = 0.3\nL = 1")
    with pytest.raises(ConfigError, match="inconsistent"):
        parse_config("h = 0.5\nJ = 4\nL = 3")


def test_pi_forms_and_comments():
    cfg = parse_config("""
        # kinetic Cauchy run
        model = kinetic   # trailing comment
        h = 0.5
        J = 8
        Nx = 9
        period = 2*pi
    """)
    assert cfg.period == pytest.approx(2 * math.pi)
    assert cfg.init == "tc3"
    assert parse_config("model=kinetic\nh=0.5\nJ=8\nNx=9\nperiod=2pi").period == cfg.period


def test_even_nx_rejected_for_euler_only():
    with pytest.raises(ConfigError, match="odd number of space points"):
        parse_config("model = kinetic\nh = 0.5\nJ = 8\nNx = 8")
    cfg = parse_config("model = kinetic\nscheme = sl\nh = 0.5\nJ = 8\nNx = 8")
    assert cfg.Nx == 8


def test_alpha_out_of_range():
    with pytest.raises(ConfigError, match="alpha"):
        parse_config("alpha = 2.5\nh = 0.5\nJ = 8")


def test_problems_are_aggregated():
    with pytest.raises(ConfigError) as info:
        parse_config("colour = blue\nalpha = 3\nh = 0.5\nJ = 8\nJ = 9\ndt = -1\nscheme = rk4\nspeed = 2")
    probs = info.value.problems
    assert probs[0] == "unknown keys: colour, speed"
    text = "\n".join(probs)
    for needle in ("duplicate key 'J'", "alpha must lie", "dt must be positive", "scheme must be one of"):
        assert needle in text


def test_preset_model_mismatch():
    with pytest.raises(ConfigError, match="homogeneous initial datum"):
        parse_config("model = kinetic\nh = 0.5\nJ = 8\nNx = 9\ninit = tc1")
    with pytest.raises(ConfigError, match="alpha = 1"):
        parse_config("model = kinetic\nalpha = 1.5\nh = 0.5\nJ = 8\nNx = 9")
    with pytest.raises(ConfigError, match="preset"):
        parse_config("h = 0.5\nJ = 8\ninit = wavy")


def test_bad_values_reported():
    with pytest.raises(ConfigError, match="cannot parse"):
        parse_config("h = fast\nJ = 8")
    with pytest.raises(ConfigError, match="cannot parse"):
        parse_config("h = 0.5\nJ = 8.5")
    with pytest.raises(ConfigError, match="expected 'key = value'"):
        parse_config("h 0.5")


def test_replace_re_resolves():
    cfg = parse_config("alpha = 1\nh = 0.5\nJ = 8")
    fine = cfg.replace(h=0.25, J=16)
    assert fine.L == 4.0 and fine.K == 161
    other = cfg.replace(alpha=1.5)
    assert other.gamma_decay == 2.5
    assert cfg.replace(h=0.25).J == 16


def test_as_dict_round_trip():
    cfg = parse_config("h = 0.5\nJ = 8\ntail_times = 0, 2, 4")
    d = cfg.as_dict()
    assert d["tail_times"] == "0.0,2.0,4.0"
    text = "\n".join(f"{k} = {v}" for k, v in d.items() if k != "K")
    assert parse_config(text) == cfg
