"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line."""

import math
import statistics
import time

import numpy as np
import pytest

from oracles import (bisect_first_hit, random_box, replay_ns2, robust_intersects,
                     water_level_allocation)
from pscsim.cli import main, walk_demo_trace
from pscsim.errors import GroupConstraintError
from pscsim.geometry import (Box, first_hit_parameter, is_line_clear, is_outdoor,
                             sample_outdoor_position, segment_intersects_box)
from pscsim.mobility import DeviationDist, RandomWalk, WalkParams, bind_group, sample_offset
from pscsim.radio import allocate
from pscsim.scenario import (ChemConfig, MvaConfig, SchoolConfig, create_random_buildings,
                             gen_chemical_plant, gen_mva, gen_school_shooting)
from pscsim.simcore import run
from pscsim.traces import export_ns2_trace, load_ns2_trace, split_by_node

BOUNDS = Box(-10, 100, -10, 90)
SEEDS = range(10)
ANTENNAS = ((16, 4), (64, 4), (64, 16))


@pytest.fixture
def verdict(record_property):
    def report(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        print(line)
        record_property("acceptance", line)
        assert ok, line
    return report


def mean_over_seeds(make, metric):
    return statistics.fmean(metric(run(make(s))) for s in SEEDS)


def test_1_outdoor_invariant(verdict):
    t0 = time.perf_counter()
    indoor = blocked = steps = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        boxes = create_random_buildings(BOUNDS, 5, (5.0, 20.0), rng)
        # alternate uncorrelated and correlated walks
        params = WalkParams(BOUNDS, direction_memory=0.0 if seed % 2 == 0 else 0.85)
        walk = RandomWalk(params, sample_outdoor_position(BOUNDS, boxes, rng), rng, boxes,
                          record_trace=True)
        walk.advance(10_000 * params.update_step)
        trace = walk.trace
        steps += round(walk.time / params.update_step)
        for (_, x0, y0), (_, x1, y1) in zip(trace, trace[1:]):
            indoor += not is_outdoor((x1, y1), BOUNDS, boxes)
            blocked += not is_line_clear((x0, y0), (x1, y1), boxes)
    elapsed = time.perf_counter() - t0
    ok = indoor == 0 and blocked == 0 and steps == 100 * 10_000 and elapsed < 30
    verdict(1, ok, f"{steps} steps, {indoor} indoor, {blocked} blocked, {elapsed:.1f} s")


def test_2_geometry_oracles(verdict):
    rng = np.random.default_rng(2024)
    seg_cases = seg_bad = hit_cases = hit_bad = 0
    worst = 0.0
    while seg_cases < 1000 or hit_cases < 1000:
        box = random_box(rng)
        a, b = rng.uniform(-12, 12, 2), rng.uniform(-12, 12, 2)
        expected = robust_intersects(a, b, box)
        if expected is None:
            continue
        if seg_cases < 1000:
            seg_cases += 1
            seg_bad += segment_intersects_box(a, b, box) != expected
        if expected and hit_cases < 1000:
            hit_cases += 1
            t = first_hit_parameter(a, b, box)
            ref = bisect_first_hit(a, b, box)
            err = math.inf if t is None else abs(t - ref)
            worst = max(worst, err)
            hit_bad += err > 1e-6
    ok = seg_bad == 0 and hit_bad == 0
    verdict(2, ok, f"{seg_cases} segment cases ({seg_bad} wrong), {hit_cases} first-hit cases "
                   f"({hit_bad} off, max |dt| {worst:.1e})")


def test_3_group_statistics(verdict):
    rng = np.random.default_rng(3)
    dev = DeviationDist()
    offs = np.array([sample_offset(dev, None, (0.0, 0.0), 100, rng) for _ in range(100_000)])
    means, stds = offs.mean(axis=0), offs.std(axis=0, ddof=1)
    bounded = bool(np.all(np.abs(offs) <= 20.0))
    moments = bool(np.all(np.abs(means) <= 0.02) and np.all(np.abs(stds - 1.0) <= 0.05))

    calls = []

    def never(p):
        calls.append(p)
        return False

    max_iterations = 37
    try:
        bind_group(0, dev, never, max_iterations, np.random.default_rng(0))
        raised = False
    except GroupConstraintError:
        raised = True
    exact = raised and len(calls) == max_iterations
    ok = bounded and moments and exact
    verdict(3, ok, f"mean {means.round(4).tolist()}, std {stds.round(4).tolist()}, "
                   f"bounded={bounded}, error after {len(calls)}/{max_iterations} draws")


def test_4_mva_reproduction(verdict):
    t0 = time.perf_counter()

    def agg(n, rate, mmwave):
        cfg = MvaConfig(n_responders=n, video_rate=rate, with_mmwave=mmwave)
        return mean_over_seeds(lambda s: gen_mva(cfg, s), lambda r: r.aggregate_uplink_throughput)

    lte = {n: agg(n, 100e6, False) for n in (5, 10)}
    both = {n: agg(n, 100e6, True) for n in (1, 5, 10)}
    plateau_ok = abs(lte[10] - lte[5]) / min(lte.values()) < 0.10
    exceeds_ok = all(both[n] > lte[n] for n in (5, 10))
    monotone_ok = both[1] < both[5] < both[10]
    low_err = max(abs(agg(n, 1e6, mm) / (n * 1e6) - 1) for n in (5, 10) for mm in (False, True))
    low_ok = low_err <= 0.02
    elapsed = time.perf_counter() - t0
    ok = plateau_ok and exceeds_ok and monotone_ok and low_ok and elapsed < 60
    mb = lambda d: ", ".join(f"N={n}: {v / 1e6:.1f}" for n, v in d.items())
    verdict(4, ok, f"LTE-only [{mb(lte)}] Mbit/s; LTE+mmWave [{mb(both)}] Mbit/s; "
                   f"1 Mbit/s max deviation {low_err:.2%}; {elapsed:.1f} s")


def test_5_chemical_reproduction(verdict):
    rates = (1e6, 10e6, 100e6)

    def prx(rate, lte):
        cfg = ChemConfig(video_rate=rate, with_lte=lte)
        return mean_over_seeds(lambda s: gen_chemical_plant(cfg, s), lambda r: r.p_rx_ctrl)

    dedicated = [prx(r, True) for r in rates]
    shared = [prx(r, False) for r in rates]
    ok = (all(p == 1.0 for p in dedicated) and all(p < 1 for p in shared)
          and shared[0] >= shared[1] >= shared[2])
    verdict(5, ok, f"dedicated LTE {dedicated}, shared mmWave "
                   f"{[round(p, 3) for p in shared]} at 1/10/100 Mbit/s")


def test_6_school_reproduction(verdict):
    def agg(iab, bs, ue):
        cfg = SchoolConfig(with_iab=iab, antenna_bs=bs, antenna_ue=ue)
        return mean_over_seeds(lambda s: gen_school_shooting(cfg, s),
                               lambda r: r.aggregate_uplink_throughput)

    without = [agg(False, *a) for a in ANTENNAS]
    with_iab = [agg(True, *a) for a in ANTENNAS]
    gaps = [w - o for w, o in zip(with_iab, without)]
    ok = (all(g >= 0 for g in gaps) and gaps[0] >= gaps[1] >= gaps[2]
          and without[0] < without[1] < without[2] and with_iab[0] < with_iab[1] < with_iab[2])
    fmt = lambda v: "/".join(f"{x / 1e6:.1f}" for x in v)
    verdict(6, ok, f"without IAB {fmt(without)}, with IAB {fmt(with_iab)}, "
                   f"gaps {fmt(gaps)} Mbit/s")


def test_7_cli_determinism(verdict, tmp_path):
    commands = [
        ["mva", "--seeds", "0..1", "--horizon", "2", "--ns2"],
        ["chemical", "--seeds", "0", "--horizon", "2"],
        ["school", "--seeds", "0", "--horizon", "3", "--with-iab"],
        ["walk-demo", "--seeds", "0", "--boxes", "5", "--bounds", "-10,-10,100,90"],
        ["group-demo", "--seeds", "0", "--masters", "2", "--slaves", "2"],
    ]
    differing = []
    n_files = 0
    for i, argv in enumerate(commands):
        trees = []
        for run_id in ("a", "b"):
            out = tmp_path / f"{i}{run_id}"
            assert main(argv + ["--out", str(out)]) == 0
            trees.append({p.relative_to(out).as_posix(): p.read_bytes()
                          for p in sorted(out.rglob("*")) if p.is_file()})
        n_files += len(trees[0])
        if not trees[0] or trees[0] != trees[1]:
            differing.append(argv[0])
    verdict(7, not differing, f"{len(commands)} subcommands, {n_files} files compared, "
                              f"differing: {differing or 'none'}")


def test_8_allocation_oracle(verdict):
    rng = np.random.default_rng(8)
    worst = 0.0
    over = 0
    for _ in range(1000):
        n = int(rng.integers(1, 20))
        flows = [(i, float(rng.uniform(0, 1e9)), float(rng.uniform(0, 1e9))) for i in range(n)]
        if rng.random() < 0.2:
            # ties and zero demands
            flows[0] = (0, flows[-1][1], 0.0)
            flows[-1] = (n - 1, flows[-1][1], flows[-1][1])
        capacity = float(rng.uniform(0, 1.2) * sum(min(r, o) for _, r, o in flows))
        got = np.array([g for _, g in allocate(flows, capacity)])
        ref = water_level_allocation(flows, capacity)
        scale = max(capacity, 1.0)
        worst = max(worst, float(np.max(np.abs(got - ref))) / scale)
        over += got.sum() > capacity * (1 + 1e-12) + 1e-9
    ok = worst <= 1e-9 and over == 0
    verdict(8, ok, f"1000 cases, max relative deviation {worst:.1e}, over-allocations {over}")


def test_9_ns2_round_trip(verdict, tmp_path):
    worst = 0.0
    endpoints = 0
    for seed in range(100):
        _, rows = walk_demo_trace(BOUNDS, 5, 1, 100.0, seed)
        path = tmp_path / f"walk{seed}.ns2"
        export_ns2_trace(rows, path)
        initial, cmds = load_ns2_trace(path)
        for node, pts in split_by_node(rows).items():
            # leg endpoints are the source points where a new setdest begins, plus the last
            starts = [c[0] for c in cmds if c[1] == node]
            times = [t for t, _, _ in pts]
            idx = {min(range(len(times)), key=lambda k: abs(times[k] - s)) for s in starts}
            idx.add(len(pts) - 1)
            for k in sorted(idx):
                t, x, y = pts[k]
                got = replay_ns2(initial, cmds, t)[node]
                worst = max(worst, math.dist(got, (x, y)))
                endpoints += 1
    ok = worst <= 1e-3
    verdict(9, ok, f"100 walks, {endpoints} leg endpoints, max error {worst:.1e} m")
