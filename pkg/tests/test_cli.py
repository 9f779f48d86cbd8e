import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from srlab.cli import format_table, main, parse_grid, parse_sweep, read_table, resolve, write_table
from srlab.errors import ConfigError
from srlab.models import ModelSpec
from srlab.parallel import ordered_map, worker_count
from srlab.sphere import Sweep, sphere_trace_numeric


def test_grids():
    assert parse_grid("1,2.5,3") == [1.0, 2.5, 3.0]
    assert parse_grid([1, 2]) == [1.0, 2.0]
    assert parse_grid("[0.5, 1]") == [0.5, 1.0]
    assert parse_grid("linspace:0:1:3") == [0.0, 0.5, 1.0]
    lg = parse_grid("logspace:1e-4:1:5")
    assert lg[0] == pytest.approx(1e-4) and lg[-1] == pytest.approx(1.0) and len(lg) == 5
    for bad in ("logspace:0:1:3", "linspace:0:1", "linspace:a:b:3", "x,y", {"a": 1}):
        with pytest.raises(ConfigError):
            parse_grid(bad)


def test_sweeps():
    var, grid = parse_sweep("lambda:logspace:1e2:1e5:4")
    assert var == "lambda" and grid[-1] == pytest.approx(1e5)
    assert parse_sweep({"variable": "theta0", "grid": [1, 2]}) == ("theta0", [1.0, 2.0])
    with pytest.raises(ConfigError):
        parse_sweep("mu:1,2")


def test_csv_format_details():
    text = format_table([{"a": 0.1, "b": math.nan, "c": True, "d": 3}], ["a", "b", "c", "d"])
    assert text == "a,b,c,d\n0.10000000000000001,,true,3\n"
    assert format_table([], ["x", "y"]) == "x,y\n"


def test_json_format_details():
    text = format_table([{"b": math.nan, "a": 1.5}], ["a", "b"], "json")
    data = json.loads(text)
    assert list(data[0]) == ["a", "b"] and data[0]["b"] is None


finite = st.floats(allow_nan=False, allow_infinity=False)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(finite, finite), max_size=8))
def test_csv_roundtrip_is_bit_exact(tmp_path_factory, pairs):
    path = tmp_path_factory.mktemp("rt") / "t.csv"
    rows = [{"u": a, "v": b} for a, b in pairs]
    write_table(rows, ["u", "v"], str(path))
    cols, back = read_table(str(path))
    assert cols == ["u", "v"]
    assert [(r["u"], r["v"]) for r in back] == [(a, b) for a, b in pairs]
    assert b"\r" not in path.read_bytes()


def test_json_roundtrip(tmp_path):
    path = tmp_path / "t.json"
    rows = [{"u": 1e-300, "v": math.nan}, {"u": -2.5, "v": 7.0}]
    write_table(rows, ["u", "v"], str(path), "json")
    _, back = read_table(str(path))
    assert back[0]["u"] == 1e-300 and math.isnan(back[0]["v"]) and back[1]["v"] == 7.0


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"command": "elliptic", "k": [0.1, 0.2], "out": "a.csv"}))
    rc = resolve(["elliptic", "--config", str(cfg), "--k", "0.3"])
    assert rc.params["k"] == "0.3" and rc.out == "a.csv" and rc.fmt == "csv"
    rc = resolve(["--config", str(cfg)])
    assert rc.command == "elliptic" and rc.params["k"] == [0.1, 0.2]


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"command": "elliptic", "kk": 1}))
    assert main(["--config", str(cfg)]) == 2


def test_exit_codes(tmp_path, capsys):
    assert main(["elliptic", "--k", "0.5", "--out", str(tmp_path / "k.csv")]) == 0
    assert "K and E" in capsys.readouterr().out
    assert main(["nope"]) == 2
    assert main(["elliptic", "--k", "linspace:0:1"]) == 2
    assert main(["flat-term", "--kprime", "0.5"]) == 3
    assert main(["elliptic", "--k", "0.5", "--out", str(tmp_path / "missing" / "k.csv")]) == 4
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["elliptic", "--config", str(bad)]) == 2


def test_bad_thread_count(monkeypatch):
    monkeypatch.setenv("SR_THREADS", "many")
    assert main(["elliptic", "--k", "0.5"]) == 2


def test_sphere_trace_example(tmp_path):
    out = tmp_path / "c1.csv"
    assert main(["sphere-trace", "--model", "flat", "--radius", "1", "--i", "1", "--k", "logspace:1e-4:0.99:200", "--out", str(out)]) == 0
    cols, rows = read_table(str(out))
    assert cols == ["k", "x", "z", "X", "Z"] and len(rows) == 200


def test_flat_term_example(tmp_path):
    out = tmp_path / "ratio.csv"
    assert main(["flat-term", "--radius", "1", "--kprime", "logspace:1e-8:1e-4:40", "--out", str(out)]) == 0
    _, rows = read_table(str(out))
    assert len(rows) == 40 and all(r["flagged"] is False for r in rows)


@pytest.mark.parametrize("argv", [
    ["geodesic", "--model", "graded0", "--alpha", "1", "--theta0", "1", "--lambda", "2", "--samples", "5"],
    ["geodesic", "--model", "engel", "--theta0", "1", "--lambda", "2", "--p3", "0.2", "--samples", "5"],
    ["pendulum", "--theta0", "1", "--lambda", "2", "--samples", "5"],
    ["cut-locus", "--k", "0.2,0.6"],
    ["wavefront", "--theta", "1.0", "--n-max", "1"],
    ["conjugate", "--model", "heisenberg", "--theta0", "0.3", "--lambda", "2", "--t-max", "4"],
    ["engel-check", "--theta0", "0.5", "--lambda", "2"],
    ["elliptic", "--k", "0.7", "--u", "0,0.5"],
    ["branch", "--which", "C1bar", "--radius", "1", "--fit", "1"],
])
def test_commands_run(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path / "o.json")]) == 0
    data = json.loads((tmp_path / "o.json").read_text())
    assert data


def test_identical_config_gives_identical_bytes(tmp_path, monkeypatch):
    argv = ["sphere-trace", "--model", "graded0", "--alpha", "0.5", "--sweep", "theta0:linspace:0.5:2.5:3"]
    monkeypatch.setenv("SR_THREADS", "1")
    assert main(argv + ["--out", str(tmp_path / "a.csv")]) == 0
    monkeypatch.setenv("SR_THREADS", "4")
    assert main(argv + ["--out", str(tmp_path / "b.csv")]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_worker_pool_preserves_order():
    spec = ModelSpec.martinet_graded0(0.5, 0.1, 0.0)
    sweep = Sweep("theta0", [0.6, 1.4, 2.2], 1)
    a = sphere_trace_numeric(spec, 1.0, 1, sweep, workers=1)
    b = sphere_trace_numeric(spec, 1.0, 1, sweep, workers=3)
    assert [(p.x, p.z) for p in a.points] == [(p.x, p.z) for p in b.points]


def test_worker_count(monkeypatch):
    monkeypatch.setenv("SR_THREADS", "2")
    assert worker_count(8) == 2
    monkeypatch.delenv("SR_THREADS")
    assert worker_count(3) == 3
    assert ordered_map(abs, [-1, 2, -3], 2) == [1, 2, 3]
