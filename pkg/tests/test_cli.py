import argparse
import csv
import subprocess
import sys
from collections import defaultdict

import pytest

from pscsim.cli import main, parse_bounds, parse_rate, parse_seeds, validate_csv
from pscsim.geometry import Box, is_outdoor
from pscsim.scenario import create_random_buildings, loads
from pscsim.traces import load_ns2_trace, read_trace_csv

TABLES = {"trace.csv": "trace", "flows.csv": "flows", "timeseries.csv": "timeseries",
          "summary.csv": "summary"}


def files_under(root):
    return {p.relative_to(root).as_posix(): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


def validate_tree(root):
    for p in root.rglob("*.csv"):
        validate_csv(p, TABLES[p.name])


@pytest.mark.parametrize("text, value", [("100M", 100e6), ("1M", 1e6), ("500k", 5e5),
                                         ("2G", 2e9), ("1500", 1500.0), ("10Mbps", 1e7),
                                         ("2.5 M", 2.5e6)])
def test_parse_rate(text, value):
    assert parse_rate(text) == value


@pytest.mark.parametrize("text", ["", "fast", "-1M", "0", "1X", "nan"])
def test_parse_rate_rejects(text):
    with pytest.raises(argparse.ArgumentTypeError):
        parse_rate(text)


def test_parse_seeds():
    assert parse_seeds("1..10") == list(range(1, 11))
    assert parse_seeds("3") == [3]
    assert parse_seeds("1,4,7") == [1, 4, 7]
    for bad in ("", "5..1", "a..b", "1,1", "-1", "1..x"):
        with pytest.raises(argparse.ArgumentTypeError):
            parse_seeds(bad)


def test_parse_bounds():
    assert parse_bounds("-10,-10,100,90") == Box(-10, 100, -10, 90)
    for bad in ("1,2,3", "0,0,0,5", "a,b,c,d"):
        with pytest.raises(argparse.ArgumentTypeError):
            parse_bounds(bad)


def test_mva_sweep_file_contract(tmp_path):
    out = tmp_path / "mva"
    rc = main(["mva", "--responders", "10", "--video-rate", "100M", "--seeds", "1..3",
               "--horizon", "1", "--out", str(out)])
    assert rc == 0
    seeds = sorted(p.name for p in out.iterdir() if p.is_dir())
    assert seeds == ["seed-1", "seed-2", "seed-3"]
    for d in seeds:
        names = sorted(p.name for p in (out / d).iterdir())
        assert names == ["flows.csv", "scenario.json", "timeseries.csv", "trace.csv"]
        spec = loads((out / d / "scenario.json").read_text())
        assert sum(n.role == "responder" for n in spec.nodes) == 10
    validate_tree(out)
    with open(out / "summary.csv") as fh:
        rows = {r["metric"]: r for r in csv.DictReader(fh)}
    assert set(rows) == {"aggregate_uplink_bps", "aggregate_downlink_bps"}
    assert all(r["n_seeds"] == "3" and r["std"] != "" for r in rows.values())


def test_summary_matches_per_seed_flows(tmp_path):
    import statistics
    main(["chemical", "--seeds", "0,5", "--horizon", "1", "--out", str(tmp_path)])
    vals = []
    for s in (0, 5):
        with open(tmp_path / f"seed-{s}" / "flows.csv") as fh:
            agg = [r for r in csv.DictReader(fh) if r["row"] == "aggregate"][0]
        vals.append(float(agg["p_rx_ctrl"]))
    with open(tmp_path / "summary.csv") as fh:
        row = [r for r in csv.DictReader(fh) if r["metric"] == "p_rx_ctrl"][0]
    assert float(row["mean"]) == pytest.approx(statistics.fmean(vals))
    assert float(row["std"]) == pytest.approx(statistics.stdev(vals))


def test_walk_demo_points_are_outdoors(tmp_path):
    rc = main(["walk-demo", "--boxes", "5", "--bounds", "-10,-10,100,90", "--seeds", "7",
               "--out", str(tmp_path), "--ns2"])
    assert rc == 0
    assert sorted(p.name for p in (tmp_path / "seed-7").iterdir()) == ["trace.csv", "trace.ns2"]
    assert not (tmp_path / "summary.csv").exists()
    bounds = Box(-10, 100, -10, 90)
    # the demo draws its layout first from the seed's generator
    import numpy as np
    boxes = create_random_buildings(bounds, 5, (5.0, 20.0), np.random.default_rng(7))
    rows = read_trace_csv(tmp_path / "seed-7" / "trace.csv")
    assert len(rows) > 100
    assert all(is_outdoor((x, y), bounds, boxes) for _, _, x, y in rows)
    initial, cmds = load_ns2_trace(tmp_path / "seed-7" / "trace.ns2")
    assert len(initial) == 1 and cmds
    validate_tree(tmp_path)


def test_group_demo_two_masters_two_slaves(tmp_path):
    rc = main(["group-demo", "--masters", "2", "--slaves", "2", "--seeds", "0",
               "--horizon", "50", "--out", str(tmp_path)])
    assert rc == 0
    rows = read_trace_csv(tmp_path / "seed-0" / "trace.csv")
    by_time = defaultdict(dict)
    for t, n, x, y in rows:
        by_time[t][n] = (x, y)
    assert all(set(v) == set(range(6)) for v in by_time.values())
    worst = 0.0
    for pos in by_time.values():
        for master in (0, 3):
            mx, my = pos[master]
            for s in (master + 1, master + 2):
                worst = max(worst, abs(pos[s][0] - mx), abs(pos[s][1] - my))
    assert 0 < worst <= 20.0


@pytest.mark.parametrize("argv", [
    ["mva", "--seeds", "0..1", "--horizon", "1", "--ns2"],
    ["chemical", "--seeds", "2", "--horizon", "1", "--with-lte"],
    ["school", "--seeds", "1", "--horizon", "2", "--with-iab"],
    ["walk-demo", "--seeds", "3", "--horizon", "20"],
    ["group-demo", "--seeds", "4", "--horizon", "20", "--boxes", "3"],
])
def test_reruns_are_byte_identical(argv, tmp_path):
    main(argv + ["--out", str(tmp_path / "a")])
    main(argv + ["--out", str(tmp_path / "b")])
    main(argv + ["--out", str(tmp_path / "a")])  # overwrite in place
    a, b = files_under(tmp_path / "a"), files_under(tmp_path / "b")
    assert a and a == b
    validate_tree(tmp_path / "a")


def test_parallel_jobs_match_serial(tmp_path):
    argv = ["mva", "--seeds", "0..2", "--horizon", "1"]
    main(argv + ["--out", str(tmp_path / "s")])
    main(argv + ["--jobs", "3", "--out", str(tmp_path / "p")])
    assert files_under(tmp_path / "s") == files_under(tmp_path / "p")


def test_output_root_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("PSCSIM_OUT", str(tmp_path / "env"))
    assert main(["walk-demo", "--horizon", "5"]) == 0
    assert (tmp_path / "env" / "seed-0" / "trace.csv").exists()
    assert main(["walk-demo", "--horizon", "5", "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "seed-0" / "trace.csv").exists()


@pytest.mark.parametrize("argv, fragment", [
    (["mva", "--seeds", "3..1"], "seed"),
    (["mva", "--video-rate", "fast"], "rate"),
    (["mva", "--antenna-bs", "32"], "antenna-bs"),
    (["mva", "--ar-fraction", "1.5"], "fraction"),
    (["school", "--horizon", "-1"], "positive"),
    (["walk-demo", "--bounds", "1,2,3"], "bounds"),
    (["teleport"], "invalid choice"),
])
def test_usage_errors(argv, fragment, tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv + ["--out", str(tmp_path)] if argv[0] != "teleport" else argv)
    assert exc.value.code == 2
    assert fragment in capsys.readouterr().err


def test_run_errors_exit_nonzero(tmp_path, capsys):
    # five boxes of up to 20 m cannot be placed in a 10 m square
    rc = main(["walk-demo", "--boxes", "50", "--bounds", "0,0,10,10", "--out", str(tmp_path)])
    assert rc == 1
    assert "PlacementError" in capsys.readouterr().err


def test_validate_csv_rejects_bad_rows(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("time_s,node,x_m,y_m\n0.0,0,1.0,nan\n")
    with pytest.raises(ValueError, match="non-finite"):
        validate_csv(p, "trace")
    p.write_text("time,node,x,y\n")
    with pytest.raises(ValueError, match="header"):
        validate_csv(p, "trace")


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "pscsim", "walk-demo", "--horizon", "2",
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert "wrote 1 seed" in out.stdout
