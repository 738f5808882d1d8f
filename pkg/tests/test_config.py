import pytest
from hypothesis import given
from hypothesis import strategies as st

from muskat_lab.config import ConfigError, ScenarioConfig, parse_config
from muskat_lab.errors import ValidationError


def test_empty_document_gives_defaults():
    cfg = parse_config("")
    assert cfg == ScenarioConfig()
    assert (cfg.delta, cfg.delta_c, cfg.rho_bar, cfg.eps, cfg.m, cfg.n, cfg.gamma_nodes) == \
        (0.5, 0.05, 1.0, 1e-2, 2, 512, 9)


def test_non_power_of_two_rejected():
    with pytest.raises(ConfigError) as exc:
        parse_config("n = 100")
    assert exc.value.field == "n"
    assert isinstance(exc.value, ValidationError)


@pytest.mark.parametrize("text, name", [
    ("t_end = -1", "t_end"), ("eps = 0", "eps"), ("preset = wavy", "preset"), ("gamma_nodes = 8", "gamma_nodes"),
    ("m = 0", "m"), ("bogus = 1", "bogus"), ("n = abc", "n"), ("dealias = maybe", "dealias"),
    ("preset = custom", "curve_path"), ("[other]\nn = 64", "other"), ("eps_sweep = 0, 0.1", "eps_sweep"),
])
def test_named_field_errors(text, name):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.field == name


def test_header_optional_and_overrides():
    a = parse_config("[scenario]\npreset = turnover\nt_end = 0.05\n")
    b = parse_config("preset = turnover\nt_end = 0.05", n=None)
    assert a == b and a.preset == "turnover" and a.t_end == 0.05
    assert parse_config("n = 256", n=1024).n == 1024
    with pytest.raises(ConfigError):
        parse_config("", nonsense=3)


def test_turnover_roundtrip_text():
    cfg = parse_config("preset = turnover\nt_end = 0.05\ndealias = on\neps_sweep = 0.1; 0.01")
    again = parse_config(cfg.to_text())
    assert again == cfg and again.content_hash() == cfg.content_hash()
    assert cfg.dealias is True and cfg.eps_sweep == (0.1, 0.01)


@given(st.sampled_from([64, 128, 256, 512, 1024, 2048, 4096]), st.floats(1e-3, 10.0), st.floats(1e-4, 1.0),
       st.integers(1, 12), st.sampled_from([5, 7, 9, 11]), st.booleans(),
       st.one_of(st.none(), st.floats(1e-6, 1e-2)))
def test_roundtrip_property(n, t_end, eps, m, ng, dealias, dt):
    cfg = ScenarioConfig(n=n, t_end=t_end, eps=eps, m=m, gamma_nodes=ng, dealias=dealias, dt_override=dt)
    assert parse_config(cfg.to_text()) == cfg
