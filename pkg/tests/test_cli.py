import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qradar import cli
from qradar.cli import (CSV_MAGIC, EXIT_CONFIG, EXIT_NUMERICAL, ConfigError, RunConfig,
                        format_value, load_preset, main, parse_config_text, parse_number,
                        read_csv, write_csv)


def run_cli(tmp_path, *argv, name="out.csv"):
    out = tmp_path / name
    code = main(list(argv) + ["--out", str(out)])
    return code, out


def test_parse_number_expressions():
    assert parse_number("pi/2.15 + pi/50") == pytest.approx(math.pi / 2.15 + math.pi / 50)
    assert parse_number("3*pi/4") == pytest.approx(3 * math.pi / 4)
    assert parse_number("-1e-4") == -1e-4
    assert parse_number("inf") == math.inf
    for bad in ("__import__('os')", "pi()", "x", "1/0", "'a'"):
        with pytest.raises(ValueError):
            parse_number(bad)


def test_config_text_parsing():
    cfg = parse_config_text("# comment\nzeta12 = 1  # trailing\n\ntau0=0.5, 0.75\n")
    assert cfg == {"zeta12": "1", "tau0": "0.5, 0.75"}
    with pytest.raises(ConfigError):
        parse_config_text("zeta12 1")
    with pytest.raises(ConfigError):
        parse_config_text("a = 1\na = 2")


@pytest.mark.parametrize("name", cli.PRESETS)
def test_presets_validate(name):
    cfg = RunConfig.from_mapping(load_preset(name))
    assert cfg.command in cli.COMMANDS


@pytest.mark.parametrize("mapping,key", [
    ({"zeta12": "0", "grid": "1"}, "zeta12"),
    ({"bogus": "1"}, "bogus"),
    ({"command": "fisher", "scheme": "warp"}, "scheme"),
    ({"command": "fisher", "grid": "0.1", "tau0": "0.1", "delta_tau": "0.2"}, "delta_tau"),
    ({"command": "fisher", "grid": "0.1", "sweep": "kr"}, "sweep"),
    ({"command": "estimate", "scheme": "far_two", "param": "kr", "grid": "0.1"}, "bounds"),
    ({"command": "estimate", "scheme": "far_two", "param": "kr", "grid": "0.1",
      "bounds": "0.2, 0.3"}, "grid"),
    ({"command": "fisher", "grid": "0.1", "N": "0"}, "N"),
    ({"command": "fisher", "grid": "0.1", "seeds": "2.5"}, "seeds"),
    ({"command": "fisher", "scheme": "far_two", "param": "kr", "sweep": "zeta12",
      "grid": "1", "kr": "-1"}, "kr"),
    ({"command": "crb-sweep", "scheme": "far_two", "grid": "1"}, "scheme"),
    ({"command": "fisher"}, "grid"),
])
def test_validation_names_offending_key(mapping, key):
    with pytest.raises(ConfigError) as err:
        RunConfig.from_mapping(mapping)
    assert err.value.key == key


def test_coupling_table(tmp_path):
    code, out = run_cli(tmp_path, "coupling", "--set", "grid=pi, 1e6, 0.5")
    assert code == 0
    header, rows = read_csv(out)
    assert header == ["zeta12", "f12", "gamma12"]
    assert [r[0] for r in rows] == [math.pi, 1e6, 0.5]  # order kept, not sorted
    assert rows[0][2] == pytest.approx(-3 / (2 * math.pi**2), rel=1e-14)
    assert abs(rows[1][1]) < 1e-5 and abs(rows[1][2]) < 1e-5


def test_csv_header_line(tmp_path):
    _, out = run_cli(tmp_path, "coupling", "--set", "grid=1")
    assert out.read_text().splitlines()[0] == CSV_MAGIC


def test_single_point_fisher(tmp_path):
    code, out = run_cli(tmp_path, "fisher", "--preset", "fig1b", "--set", "grid=0.7",
                        "--set", "grid_count=0")
    assert code == 0
    header, rows = read_csv(out)
    assert len(rows) == 1 and len(header) == 5


def test_crb_sweep_infinity_marker(tmp_path):
    code, out = run_cli(tmp_path, "crb-sweep", "--preset", "fig5", "--set", "grid=0, 2")
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[2] == "0,inf,inf"
    _, rows = read_csv(out)
    assert all(np.isfinite(rows[1][1:]))


def test_estimate_is_byte_identical(tmp_path):
    args = ["estimate", "--preset", "fig4b", "--set", "grid=0.1, 0.2", "--seeds", "3"]
    _, a = run_cli(tmp_path, *args, name="a.csv")
    _, b = run_cli(tmp_path, *args, name="b.csv")
    assert a.read_bytes() == b.read_bytes()
    header, rows = read_csv(a)
    assert header[:3] == ["truth", "estimate", "crb"]
    assert {r[header.index("rng")] for r in rows} == {"PCG64"}
    assert len(rows) == 6


def test_svg_rendered_from_csv(tmp_path):
    svg = tmp_path / "fig.svg"
    code, out = run_cli(tmp_path, "coupling", "--set", "grid=0.5, 1, 2", "--svg", str(svg))
    assert code == 0 and svg.read_text().lstrip().startswith("<?xml")


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("grid = 1, 2\ngamma = 2\n")
    code, out = run_cli(tmp_path, "coupling", "--config", str(cfg), "--set", "gamma=1")
    _, rows = read_csv(out)
    assert code == 0 and rows[0][2] == pytest.approx(1.5 * (math.sin(1) - math.sin(1) + math.cos(1)))


def test_exit_codes(tmp_path, monkeypatch):
    code, _ = run_cli(tmp_path, "coupling", "--set", "grid=-1")
    assert code == EXIT_CONFIG
    code, _ = run_cli(tmp_path, "fisher", "--preset", "fig5")
    assert code == EXIT_CONFIG

    def boom(cfg):
        from qradar.inference import SmoothnessError
        raise SmoothnessError("forced")

    monkeypatch.setitem(cli.HANDLERS, "coupling", boom)
    code, _ = run_cli(tmp_path, "coupling", "--set", "grid=1")
    assert code == EXIT_NUMERICAL


finite = st.floats(allow_nan=False, allow_infinity=True, width=64)


@given(st.lists(st.tuples(finite, finite, st.integers(-2**62, 2**62)), min_size=1, max_size=8))
def test_csv_round_trip(tmp_path_factory, rows):
    path = tmp_path_factory.mktemp("rt") / "t.csv"
    write_csv(str(path), ["a", "b", "c"], [list(r) for r in rows])
    header, back = read_csv(path)
    assert header == ["a", "b", "c"]
    for r, s in zip(rows, back):
        assert float(s[0]) == r[0] and float(s[1]) == r[1] and s[2] == r[2]


def test_format_value():
    assert format_value(0.1) == "0.10000000000000001"
    assert format_value(float("inf")) == "inf"
    assert format_value(True) == "1"
    assert format_value(np.int64(7)) == "7"
