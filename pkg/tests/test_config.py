import pytest

from ppthin import (
    ConfigError,
    RngStream,
    build_hawkes,
    build_meanfield,
    build_volterra,
    load_kv,
    parse_kv_text,
)
from ppthin.config import (
    get_bool,
    get_choice,
    get_float,
    get_float_list,
    get_int,
    get_int_list,
)


def test_parse_kv_text_basics():
    text = """
# run setup
model = hawkes
N = 16        # particle count
t=5.0

kernel = exp:1.0
"""
    d = parse_kv_text(text)
    assert d == {"model": "hawkes", "n": "16", "t": "5.0", "kernel": "exp:1.0"}


def test_parse_kv_text_errors_carry_line_numbers():
    with pytest.raises(ConfigError, match="run.cfg:2"):
        parse_kv_text("a = 1\nnot a pair\n", origin="run.cfg")
    with pytest.raises(ConfigError, match=":1"):
        parse_kv_text("= 1\n")
    with pytest.raises(ConfigError, match=":1"):
        parse_kv_text("a =   # only a comment\n")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_kv_text("a = 1\nA = 2\n")


def test_load_kv(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("model = volterra\nmu = 0.5\n")
    assert load_kv(str(p)) == {"model": "volterra", "mu": "0.5"}
    with pytest.raises(ConfigError, match="cannot read"):
        load_kv(str(tmp_path / "missing.cfg"))


def test_typed_getters():
    d = {"a": "1.5", "b": "7", "c": "yes", "d": "exp", "e": "1, 2,3", "f": "0.5,1.5"}
    assert get_float(d, "a") == 1.5
    assert get_float(d, "zz", 2.0) == 2.0
    assert get_int(d, "b") == 7
    assert get_bool(d, "c") is True
    assert get_bool(d, "zz") is False
    assert get_choice(d, "d", ["exp", "pow"]) == "exp"
    assert get_choice(d, "zz", ["x", "y"], default="y") == "y"
    assert get_int_list(d, "e") == [1, 2, 3]
    assert get_int_list(d, "zz", [4]) == [4]
    assert get_float_list(d, "f") == [0.5, 1.5]


def test_typed_getter_errors():
    d = {"a": "oops", "b": "1.5", "c": "maybe", "e": "1,x"}
    with pytest.raises(ConfigError, match="'a'"):
        get_float(d, "a")
    with pytest.raises(ConfigError, match="not an integer"):
        get_int(d, "b")
    with pytest.raises(ConfigError, match="not a boolean"):
        get_bool(d, "c")
    with pytest.raises(ConfigError, match="integer list"):
        get_int_list(d, "e")
    with pytest.raises(ConfigError, match="missing required"):
        get_float(d, "zz")
    with pytest.raises(ConfigError, match="missing required"):
        get_int(d, "zz")
    with pytest.raises(ConfigError, match="missing required"):
        get_int_list(d, "zz")
    with pytest.raises(ConfigError, match="expected one of"):
        get_choice(d, "a", ["x", "y"])
    with pytest.raises(ConfigError, match="missing required"):
        get_choice(d, "zz", ["x", "y"])


def test_build_hawkes_defaults_and_overrides():
    seed = RngStream(3)
    c = build_hawkes({}, seed)
    assert (c.N, c.T, c.h, c.n_obs) == (8, 5.0, 0.05, 1)
    assert c.kernel(__import__("numpy").array([0.0]))[0] == 1.0
    assert c.rate_fn(2.0) == 2.0
    assert c.seed is seed
    c2 = build_hawkes({"n": "32", "t": "2.0", "kernel": "pow:1.0", "f": "const:1.0"}, seed)
    assert (c2.N, c2.T) == (32, 2.0)
    assert c2.rate_fn(9.0) == 1.0
    with pytest.raises(ConfigError):
        build_hawkes({"n": "abc"}, seed)


def test_build_meanfield_and_volterra():
    seed = RngStream(4)
    m = build_meanfield({"alpha": "2.0", "n": "50", "n_obs": "2"}, seed)
    assert (m.alpha, m.N, m.T, m.n_obs) == (2.0, 50, 1.0, 2)
    v = build_volterra({"mu": "0.25", "freeze_feedback": "on"}, seed)
    assert (v.gamma, v.N, v.T, v.h, v.mu) == (1.0, 8, 1.0, 0.02, 0.25)
    assert v.freeze_feedback is True
    assert v.bound_ceiling == 1e6
