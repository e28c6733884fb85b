"""Command-line entry point: scenario sweeps and mobility demos.

Every scenario subcommand writes, per seed, a directory ``seed-<n>/`` with
``trace.csv``, ``flows.csv``, ``timeseries.csv`` and ``scenario.json``,
plus ``summary.csv`` at the output root.  The demo subcommands only write
traces.  All files are byte-identical across reruns of the same command.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .errors import PscSimError
from .geometry import Box, sample_outdoor_position
from .mobility import (DeviationDist, RandomWalk, WalkParams, build_group,
                       outdoor_constraint)
from .scenario import (CONTROL, DOWNLINK, UPLINK, ChemConfig, MvaConfig, SchoolConfig,
                       create_random_buildings, dumps, gen_chemical_plant, gen_mva,
                       gen_school_shooting)
from .simcore import MetricsReport, Simulation
from .traces import export_ns2_trace, write_trace_csv

OUT_ENV = "PSCSIM_OUT"
SCENARIOS = ("mva", "chemical", "school")
DEMOS = ("walk-demo", "group-demo")

_SUFFIX = {"": 1.0, "k": 1e3, "K": 1e3, "M": 1e6, "G": 1e9}


# -- argument types -------------------------------------------------------


def parse_rate(text: str) -> float:
    """``"100M"`` -> 1e8 bit/s.  Accepts k, M and G suffixes."""
    s = text.strip()
    if s.endswith(("bps", "b/s")):
        s = s[:-3]
    suffix = s[-1] if s and s[-1] in "kKMG" else ""
    try:
        value = float(s[:-1] if suffix else s) * _SUFFIX[suffix]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid rate {text!r}") from None
    if not (math.isfinite(value) and value > 0):
        raise argparse.ArgumentTypeError(f"rate must be positive, got {text!r}")
    return value


def parse_seeds(text: str) -> List[int]:
    """``"1..10"`` (inclusive) or a comma list such as ``"1,4,7"``."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            a, b = int(lo), int(hi)
            if b < a:
                raise ValueError
            seeds = list(range(a, b + 1))
        else:
            seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed list {text!r}") from None
    if not seeds or any(s < 0 for s in seeds):
        raise argparse.ArgumentTypeError(f"seed list must be non-empty and >= 0: {text!r}")
    if len(set(seeds)) != len(seeds):
        raise argparse.ArgumentTypeError(f"duplicate seeds in {text!r}")
    return seeds


def parse_bounds(text: str) -> Box:
    try:
        x0, y0, x1, y1 = (float(v) for v in text.split(","))
        return Box(x0, x1, y0, y1)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"bounds must be xmin,ymin,xmax,ymax with xmin<xmax, ymin<ymax: {text!r}") from None


def _positive(kind):
    def conv(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid value {text!r}") from None
        if not v > 0:
            raise argparse.ArgumentTypeError(f"value must be positive, got {text!r}")
        return v
    return conv


def _non_negative_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"value must be >= 0, got {text!r}")
    return v


def _fraction(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid fraction {text!r}") from None
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"fraction must be in [0, 1], got {text!r}")
    return v


# -- CSV output -------------------------------------------------------------


def _num(v: Optional[float]) -> str:
    return "" if v is None else repr(float(v))


def _write_rows(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_flows_csv(report: MetricsReport, path: Path) -> None:
    rows = []
    for r in report.records:
        p = r.rx_packets / r.tx_packets if r.kind == CONTROL and r.tx_packets else None
        rows.append(("flow", r.flow_id, r.node, r.direction, r.kind, _num(r.offered_rate),
                     _num(report.per_flow_throughput[r.flow_id]), r.tx_packets,
                     r.rx_packets, _num(p)))
    offered = sum(r.offered_rate for r in report.records if r.direction == UPLINK)
    tx = sum(r.tx_packets for r in report.records)
    rx = sum(r.rx_packets for r in report.records)
    rows.append(("aggregate", "", "", UPLINK, "", _num(offered),
                 _num(report.aggregate_uplink_throughput), tx, rx, _num(report.p_rx_ctrl)))
    _write_rows(path, [c["name"] for c in csv_schema()["flows"]["columns"]], rows)


def write_timeseries_csv(report: MetricsReport, path: Path) -> None:
    rows = [(_num(t0), _num(t1), _num(up), _num(down), tx, rx)
            for t0, t1, up, down, tx, rx in report.timeseries]
    _write_rows(path, [c["name"] for c in csv_schema()["timeseries"]["columns"]], rows)


def downlink_throughput(report: MetricsReport) -> float:
    return sum(report.per_flow_throughput[r.flow_id] for r in report.records
               if r.direction == DOWNLINK)


def write_summary_csv(results: Dict[int, Dict[str, Optional[float]]], path: Path) -> None:
    metrics = [c for c in csv_schema()["summary"]["columns"][0]["values"]]
    rows = []
    for name in metrics:
        vals = [results[s][name] for s in sorted(results) if results[s].get(name) is not None]
        if not vals:
            continue
        std = statistics.stdev(vals) if len(vals) > 1 else None
        rows.append((name, len(vals), _num(statistics.fmean(vals)), _num(std)))
    _write_rows(path, [c["name"] for c in csv_schema()["summary"]["columns"]], rows)


def csv_schema() -> dict:
    text = resources.files("pscsim").joinpath("schemas/csv.schema.json").read_text()
    return json.loads(text)


def validate_csv(path, table: str) -> int:
    """Check a CSV file against its declared column schema; returns row count."""
    cols = csv_schema()[table]["columns"]
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != [c["name"] for c in cols]:
            raise ValueError(f"{path}: header {header} does not match schema for {table}")
        n = 0
        for lineno, row in enumerate(reader, 2):
            if len(row) != len(cols):
                raise ValueError(f"{path}:{lineno}: expected {len(cols)} fields")
            for col, cell in zip(cols, row):
                _check_cell(col, cell, f"{path}:{lineno}:{col['name']}")
            n += 1
    return n


def _check_cell(col: dict, cell: str, where: str) -> None:
    if cell == "":
        if not col.get("nullable"):
            raise ValueError(f"{where}: empty value")
        return
    kind = col["type"]
    if kind == "enum":
        if cell not in col["values"]:
            raise ValueError(f"{where}: {cell!r} not in {col['values']}")
        return
    try:
        v = int(cell) if kind == "int" else float(cell)
    except ValueError:
        raise ValueError(f"{where}: {cell!r} is not {kind}") from None
    if kind == "float" and not math.isfinite(v):
        raise ValueError(f"{where}: non-finite value")
    if "min" in col and v < col["min"]:
        raise ValueError(f"{where}: {v} < {col['min']}")
    if "max" in col and v > col["max"]:
        raise ValueError(f"{where}: {v} > {col['max']}")


# -- per-seed jobs ------------------------------------------------------------


def _scenario_spec(args, seed: int):
    horizon = {} if args.horizon is None else {"horizon": args.horizon}
    common = dict(antenna_bs=args.antenna_bs, antenna_ue=args.antenna_ue, **horizon)
    if args.video_rate is not None:
        common["video_rate"] = args.video_rate
    if args.command == "mva":
        cfg = MvaConfig(n_responders=args.responders, ar_fraction=args.ar_fraction,
                        with_mmwave=not args.no_mmwave, **common)
        return gen_mva(cfg, seed)
    if args.command == "chemical":
        extra = {} if args.control_rate is None else {"control_rate": args.control_rate}
        cfg = ChemConfig(n_responders=args.responders, with_lte=args.with_lte,
                         **extra, **common)
        return gen_chemical_plant(cfg, seed)
    cfg = SchoolConfig(with_iab=args.with_iab, **common)
    return gen_school_shooting(cfg, seed)


def run_scenario_seed(args, seed: int, out: Path) -> Dict[str, Optional[float]]:
    spec = _scenario_spec(args, seed)
    sim = Simulation(spec, window=args.window, seed=seed)
    report = sim.run()
    out.mkdir(parents=True, exist_ok=True)
    write_trace_csv(sim.trace, out / "trace.csv")
    if args.ns2:
        export_ns2_trace(sim.trace, out / "trace.ns2")
    write_flows_csv(report, out / "flows.csv")
    write_timeseries_csv(report, out / "timeseries.csv")
    (out / "scenario.json").write_text(dumps(spec) + "\n")
    return {"aggregate_uplink_bps": report.aggregate_uplink_throughput,
            "aggregate_downlink_bps": downlink_throughput(report),
            "p_rx_ctrl": report.p_rx_ctrl}


def walk_demo_trace(bounds: Box, n_boxes: int, n_walkers: int, horizon: float, seed: int,
                    box_size=(5.0, 20.0)):
    """Building-aware walkers among random boxes; every recorded piece end."""
    rng = np.random.default_rng(seed)
    boxes = create_random_buildings(bounds, n_boxes, box_size, rng)
    rows = []
    streams = np.random.SeedSequence(seed).spawn(n_walkers)
    params = WalkParams(bounds)
    for node, ss in enumerate(streams):
        wrng = np.random.default_rng(ss)
        start = sample_outdoor_position(bounds, boxes, wrng)
        walk = RandomWalk(params, start, wrng, boxes, record_trace=True)
        walk.advance(horizon)
        rows.extend((t, node, x, y) for t, x, y in walk.trace)
    rows.sort(key=lambda r: (r[0], r[1]))
    return boxes, rows


def group_demo_trace(bounds: Box, n_masters: int, n_slaves: int, horizon: float, seed: int,
                     n_boxes: int = 0, step: float = 0.1, box_size=(5.0, 20.0)):
    """Master/slave groups sampled every ``step`` seconds.

    Even-numbered masters do an uncorrelated walk and odd ones a correlated
    walk.  Node ids: master ``g*(n_slaves+1)``, then its slaves.
    """
    rng = np.random.default_rng(seed)
    boxes = create_random_buildings(bounds, n_boxes, box_size, rng) if n_boxes else []
    constraint = outdoor_constraint(boxes, bounds)
    groups = []
    streams = np.random.SeedSequence(seed).spawn(n_masters)
    for g, ss in enumerate(streams):
        grng = np.random.default_rng(ss)
        params = WalkParams(bounds, direction_memory=0.0 if g % 2 == 0 else 0.85)
        start = sample_outdoor_position(bounds, boxes, grng)
        master = RandomWalk(params, start, grng, boxes)
        groups.append(build_group(master, n_slaves, DeviationDist(), constraint, grng,
                                  master_id=g * (n_slaves + 1)))
    rows = []
    n_steps = max(1, math.ceil(horizon / step - 1e-9))
    for k in range(n_steps + 1):
        t = min(k * step, horizon)
        for g, group in enumerate(groups):
            if k:
                group.advance(t)
            for j, model in enumerate(group.nodes):
                p = model.position
                rows.append((t, g * (n_slaves + 1) + j, p.x, p.y))
    return boxes, rows


def run_demo_seed(args, seed: int, out: Path) -> Dict[str, Optional[float]]:
    horizon = 100.0 if args.horizon is None else args.horizon
    if args.command == "walk-demo":
        _, rows = walk_demo_trace(args.bounds, args.boxes, args.walkers, horizon, seed)
    else:
        _, rows = group_demo_trace(args.bounds, args.masters, args.slaves, horizon, seed,
                                   args.boxes)
    out.mkdir(parents=True, exist_ok=True)
    write_trace_csv(rows, out / "trace.csv")
    if args.ns2:
        export_ns2_trace(rows, out / "trace.ns2")
    return {}


def _run_seed(args, seed: int, root: Path):
    job = run_demo_seed if args.command in DEMOS else run_scenario_seed
    return seed, job(args, seed, root / f"seed-{seed}")


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pscsim",
                                     description="Public-safety scenario simulator.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seeds", type=parse_seeds, default=[0],
                        help="seed range a..b (inclusive) or comma list (default 0)")
    common.add_argument("--horizon", type=_positive(float), default=None,
                        help="simulated seconds (scenario default if omitted)")
    common.add_argument("--out", type=Path, default=None,
                        help=f"output directory (default ${OUT_ENV} or ./pscsim-out)")
    common.add_argument("--jobs", type=_positive(int), default=1,
                        help="worker processes for the seed sweep")
    common.add_argument("--ns2", action="store_true", help="also write trace.ns2")

    radio = argparse.ArgumentParser(add_help=False)
    radio.add_argument("--video-rate", type=parse_rate, default=None,
                       help="per-feed video source rate, e.g. 10M")
    radio.add_argument("--antenna-bs", type=int, choices=(16, 64), default=64)
    radio.add_argument("--antenna-ue", type=int, choices=(4, 16), default=16)
    radio.add_argument("--window", type=_positive(float), default=0.1,
                       help="link evaluation window in seconds")

    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("mva", parents=[common, radio], help="multi-vehicle accident")
    p.add_argument("--responders", type=_non_negative_int, default=10)
    p.add_argument("--ar-fraction", type=_fraction, default=0.3)
    p.add_argument("--no-mmwave", action="store_true", help="LTE only")

    p = sub.add_parser("chemical", parents=[common, radio], help="chemical plant explosion")
    p.add_argument("--responders", type=_non_negative_int, default=10)
    p.add_argument("--control-rate", type=parse_rate, default=None)
    p.add_argument("--with-lte", action="store_true")

    p = sub.add_parser("school", parents=[common, radio], help="school shooting")
    p.add_argument("--with-iab", action="store_true")

    demo_bounds = Box(-10.0, 100.0, -10.0, 90.0)
    p = sub.add_parser("walk-demo", parents=[common], help="building-aware walk traces")
    p.add_argument("--boxes", type=_non_negative_int, default=5)
    p.add_argument("--bounds", type=parse_bounds, default=demo_bounds,
                   help="xmin,ymin,xmax,ymax")
    p.add_argument("--walkers", type=_positive(int), default=1)

    p = sub.add_parser("group-demo", parents=[common], help="master/slave group traces")
    p.add_argument("--masters", type=_positive(int), default=2)
    p.add_argument("--slaves", type=_non_negative_int, default=2)
    p.add_argument("--boxes", type=_non_negative_int, default=0)
    p.add_argument("--bounds", type=parse_bounds, default=demo_bounds,
                   help="xmin,ymin,xmax,ymax")
    return parser


def output_root(args) -> Path:
    if args.out is not None:
        return args.out
    return Path(os.environ.get(OUT_ENV) or "pscsim-out")


def _join_bounds(argv: Sequence[str]) -> List[str]:
    # "--bounds -10,-10,100,90" would otherwise read the value as an option
    out = list(argv)
    for i in range(len(out) - 1):
        if out[i] == "--bounds" and out[i + 1].startswith("-"):
            out[i:i + 2] = [f"--bounds={out[i + 1]}"]
            break
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(_join_bounds(sys.argv[1:] if argv is None else argv))
    root = output_root(args)
    try:
        root.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        parser.error(f"cannot create output directory {root}: {exc}")
    if not os.access(root, os.W_OK):
        parser.error(f"output directory {root} is not writable")

    try:
        if args.jobs > 1 and len(args.seeds) > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                futures = [pool.submit(_run_seed, args, s, root) for s in args.seeds]
                results = dict(f.result() for f in futures)
        else:
            results = dict(_run_seed(args, s, root) for s in args.seeds)
    except (PscSimError, ValueError) as exc:
        print(f"pscsim {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1

    if args.command in SCENARIOS:
        write_summary_csv(results, root / "summary.csv")
    print(f"wrote {len(args.seeds)} seed(s) to {root}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
