import pytest

from fpmatch.config import ENV_VAR, Config, load_config, parse_sweep
from fpmatch.errors import ConfigError


def test_defaults():
    c = Config()
    assert (c.block_size, c.var_threshold, c.target_mean, c.target_var) == (16, 100, 128, 2000)
    assert (c.edge_dist, c.break_dist, c.break_angle, c.spur_len, c.bridge_len, c.bridge_angle, c.hole_len) == \
        (8, 6, 30, 9, 9, 70, 16)
    assert c.crop_spec().as_dict() == {"rows": 4, "cols": 5, "cropW": 150, "cropH": 150}
    assert c.sweep == "0.0:0.2:0.001"


def test_parse_sweep():
    th = parse_sweep("0.0:0.2:0.001")
    assert len(th) == 201 and th[0] == 0.0 and th[-1] == 0.2 and th[44] == 0.044
    assert parse_sweep("0.1:0.1:0.5") == [0.1]
    for bad in ["0:1", "a:b:c", "0.2:0.1:0.01", "0:1:0"]:
        with pytest.raises(ConfigError):
            parse_sweep(bad)


def test_load_file(tmp_path):
    p = tmp_path / "fp.conf"
    p.write_text("# tuned\nblock_size = 12\nhole_len=10  # smaller holes\nsweep = \"0:0.1:0.01\"\n")
    c = load_config(p)
    assert c.block_size == 12 and c.hole_len == 10 and c.sweep == "0:0.1:0.01"
    assert c.false_minutiae().hole_len == 10


def test_unknown_key_rejected(tmp_path):
    p = tmp_path / "fp.conf"
    p.write_text("blocksize = 12\n")
    with pytest.raises(ConfigError, match="blocksize"):
        load_config(p)


@pytest.mark.parametrize("line", ["block_size = 2", "break_angle = 200", "masterprint_fraction = 0",
                                  "trace_len = x", "sweep = 1:0:1"])
def test_invalid_values(tmp_path, line):
    p = tmp_path / "fp.conf"
    p.write_text(line + "\n")
    with pytest.raises(ConfigError):
        load_config(p)


def test_env_fallback(tmp_path, monkeypatch):
    p = tmp_path / "env.conf"
    p.write_text("max_rank = 7\n")
    monkeypatch.setenv(ENV_VAR, str(p))
    assert load_config().max_rank == 7
    assert load_config(max_rank=3).max_rank == 3


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/fp.conf")
