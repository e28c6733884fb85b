"""Discrete-event engine with fluid CBR flows.

Every window the engine moves all nodes, re-evaluates line of sight and
link rates, picks a station per flow, shares each station among its flows
and credits the delivered bits.  Control flows are additionally counted
in packets so the control-packet reception ratio can be reported.
"""

from __future__ import annotations

import heapq
import math
from collections import defaultdict
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Dict, List, Optional, Tuple

import numpy as np

from .geometry import Point2, clear_matrix, distance, is_line_clear
from .mobility import (DeviationDist, GroupSlave, MobilityModel, RandomWalk, StaticPosition,
                       Uniform, WalkParams, WaypointMover, bind_group, outdoor_constraint)
from .radio import (LTE, MMWAVE_BS, MMWAVE_RELAY, LinkAssessment, LinkModelParams, allocate,
                    capacity_of, link_rate, relay_path_rate, select_link, share_airtime)
from .scenario import (CONTROL, DOWNLINK, UPLINK, FlowSpec, ScenarioSpec, SlaveAssignment,
                       StaticAssignment, WalkAssignment, WaypointAssignment, reposition_relay)

__all__ = ["EventKind", "Event", "EventQueue", "FlowRecord", "MetricsReport", "Simulation",
           "FlowSpec", "build_mobility", "run", "sample_metrics"]

_EPS = 1e-9


class EventKind(IntEnum):
    # value doubles as the processing priority among same-time events
    MOBILITY_UPDATE = 0
    RELAY_REPOSITION = 1
    FLOW_START = 2
    LINK_EVALUATION = 3
    METRIC_SAMPLE = 4
    END = 5


@dataclass(frozen=True, order=True)
class Event:
    time: float
    kind: EventKind
    subject: int = 0
    sequence: int = 0


class EventQueue:
    """Min-heap of events ordered by (time, kind, subject, sequence).

    The order depends only on event contents, so the pop sequence does not
    depend on insertion order.
    """

    def __init__(self):
        self._heap: List[Event] = []
        self._seq = 0
        self.now = 0.0

    def __len__(self) -> int:
        return len(self._heap)

    def push(self, time: float, kind: EventKind, subject: int = 0) -> Event:
        if time < self.now - _EPS:
            raise ValueError(f"cannot schedule {kind.name} at t={time} before now={self.now}")
        ev = Event(float(time), EventKind(kind), subject, self._seq)
        self._seq += 1
        heapq.heappush(self._heap, ev)
        return ev

    def pop(self) -> Event:
        ev = heapq.heappop(self._heap)
        self.now = max(self.now, ev.time)
        return ev


@dataclass
class FlowRecord:
    flow_id: int
    node: int
    direction: str
    kind: str
    offered_rate: float
    start: float
    delivered_bits: List[float] = field(default_factory=list)
    tx_packets: int = 0
    rx_packets: int = 0
    window_tx: List[int] = field(default_factory=list)
    window_rx: List[int] = field(default_factory=list)
    stations: List[Optional[int]] = field(default_factory=list)

    @classmethod
    def for_flow(cls, f: FlowSpec) -> "FlowRecord":
        return cls(f.id, f.node, f.direction, f.kind, f.offered_rate, f.start)


@dataclass
class MetricsReport:
    aggregate_uplink_throughput: float
    per_flow_throughput: Dict[int, float]
    p_rx_ctrl: Optional[float]
    # rows: (t_start, t_end, uplink bit/s, downlink bit/s, ctrl tx, ctrl rx)
    timeseries: List[Tuple[float, float, float, float, int, int]]
    records: List[FlowRecord] = field(default_factory=list, repr=False)


def window_edges(horizon: float, window: float) -> List[Tuple[float, float]]:
    n = max(1, math.ceil(horizon / window - _EPS))
    return [(k * window, min((k + 1) * window, horizon)) for k in range(n)]


def sample_metrics(records: List[FlowRecord], horizon: float, window: float) -> MetricsReport:
    """Reduce per-window flow records to the reported metrics.

    Throughput means are taken over [first flow start, horizon].
    ``p_rx_ctrl`` is None when no control packet was sent.
    """
    edges = window_edges(horizon, window)
    if any(len(r.delivered_bits) != len(edges) for r in records):
        raise ValueError("records do not match the window grid")
    first = min((r.start for r in records), default=0.0)
    span = horizon - first
    per_flow = {}
    for r in records:
        per_flow[r.flow_id] = sum(r.delivered_bits) / span if span > 0 else 0.0
    aggregate = sum(per_flow[r.flow_id] for r in records if r.direction == UPLINK)
    tx = sum(r.tx_packets for r in records if r.kind == CONTROL)
    rx = sum(r.rx_packets for r in records if r.kind == CONTROL)
    p_rx = rx / tx if tx > 0 else None
    rows = []
    for k, (t0, t1) in enumerate(edges):
        dt = t1 - t0
        up = sum(r.delivered_bits[k] for r in records if r.direction == UPLINK) / dt
        down = sum(r.delivered_bits[k] for r in records if r.direction == DOWNLINK) / dt
        ctx = sum(r.window_tx[k] for r in records if r.kind == CONTROL and r.window_tx)
        crx = sum(r.window_rx[k] for r in records if r.kind == CONTROL and r.window_rx)
        rows.append((t0, t1, up, down, ctx, crx))
    return MetricsReport(aggregate, per_flow, p_rx, rows, records)


def _walk_params(m: WalkAssignment) -> WalkParams:
    return WalkParams(m.bounds, speed=Uniform(m.speed_min, m.speed_max), leg_time=m.leg_time,
                      update_step=m.update_step, direction_memory=m.direction_memory)


def build_mobility(spec: ScenarioSpec, seed: int) -> Dict[int, MobilityModel]:
    """Instantiate one mobility model per node; masters before slaves.

    Each node draws from its own child stream of ``seed``.
    """
    streams = np.random.SeedSequence(seed).spawn(len(spec.nodes))
    rngs = {n.id: np.random.default_rng(s) for n, s in zip(spec.nodes, streams)}
    models: Dict[int, MobilityModel] = {}
    for n in spec.nodes:
        m = n.mobility
        if isinstance(m, WalkAssignment):
            models[n.id] = RandomWalk(_walk_params(m), m.start, rngs[n.id], spec.boxes,
                                      m.building_aware)
        elif isinstance(m, WaypointAssignment):
            models[n.id] = WaypointMover(m.waypoints, m.speed)
        elif isinstance(m, StaticAssignment):
            models[n.id] = StaticPosition(m.position)
    for n in spec.nodes:
        m = n.mobility
        if isinstance(m, SlaveAssignment):
            master = models[m.master]
            constraint = (outdoor_constraint(spec.boxes, m.constraint_bounds)
                          if m.constraint == "outdoor" else None)
            dev = DeviationDist(m.mu, m.sigma, m.bound)
            binding = bind_group(m.master, dev, constraint, m.max_iterations, rngs[n.id],
                                 master.position)
            models[n.id] = GroupSlave(master, binding, rngs[n.id])
    return models


class Simulation:
    """One engine instance; single-threaded, deterministic for a given seed."""

    def __init__(self, spec: ScenarioSpec, params: Optional[LinkModelParams] = None,
                 window: float = 0.1, seed: Optional[int] = None, record_trace: bool = True):
        if not window > 0:
            raise ValueError("window must be positive")
        spec.validate()
        self.spec = spec
        self.params = params if params is not None else spec.radio
        self.window = window
        self.seed = spec.seed if seed is None else seed
        self.models = build_mobility(spec, self.seed)
        # masters first so slaves read an up-to-date reference point
        self.order = sorted(self.models, key=lambda i: (isinstance(self.models[i], GroupSlave), i))
        self.stations = {s.id: s for s in spec.stations}
        self.relay_pos = {s.id: s.position for s in spec.stations if s.kind == MMWAVE_RELAY}
        self.node_antennas = {n.id: n.antennas for n in spec.nodes}
        self.flows = sorted(spec.flows, key=lambda f: f.id)
        self.flow_by_id = {f.id: f for f in self.flows}
        self.records = {f.id: FlowRecord.for_flow(f) for f in self.flows}
        pkt_seeds = np.random.SeedSequence([self.seed, 0x5EED]).spawn(len(self.flows))
        self.packet_rng = {f.id: np.random.default_rng(s) for f, s in zip(self.flows, pkt_seeds)}
        self.trace: Optional[List[Tuple[float, int, float, float]]] = [] if record_trace else None
        # (t_start, resource key, delivered bits, capacity bits)
        self.station_log: List[Tuple[float, tuple, float, float]] = []
        self.events_processed: List[Event] = []
        self.started: set = set()
        # (t_end, uplink bit/s) appended at each metric sample
        self.live_uplink: List[Tuple[float, float]] = []
        self.queue = EventQueue()

    # -- link evaluation ----------------------------------------------------

    def station_position(self, sid: int) -> Point2:
        return self.relay_pos.get(sid, self.stations[sid].position)

    def assess(self, flow: FlowSpec, ue: Point2,
               los_of: Optional[Dict[int, bool]] = None,
               backhaul_los: Optional[Dict[int, bool]] = None) -> List[LinkAssessment]:
        """Achievable rate from ``ue`` to every station the flow may use.

        ``los_of`` and ``backhaul_los`` map station ids to precomputed
        visibility; missing entries are computed on the spot.
        """
        boxes = self.spec.boxes
        ue_ant = self.node_antennas[flow.node]
        out = []
        for s in self.spec.stations:
            if s.kind not in flow.station_kinds:
                continue
            pos = self.station_position(s.id)
            los = los_of[s.id] if los_of and s.id in los_of else is_line_clear(pos, ue, boxes)
            d = distance(pos, ue)
            if s.kind == LTE:
                rate = link_rate(LTE, self.params, los, s.antennas, ue_ant, d)
            elif s.kind == MMWAVE_BS:
                rate = link_rate(MMWAVE_BS, self.params, los, s.antennas, ue_ant, d)
            else:
                donor = self.stations[s.attached_to]
                access = link_rate(MMWAVE_RELAY, self.params, los, s.antennas, ue_ant, d)
                if backhaul_los and s.id in backhaul_los:
                    bh_los = backhaul_los[s.id]
                else:
                    bh_los = is_line_clear(donor.position, pos, boxes)
                backhaul = link_rate(MMWAVE_BS, self.params, bh_los, donor.antennas, ue_ant,
                                     distance(donor.position, pos))
                rate = relay_path_rate(access, backhaul, self.params)
            out.append(LinkAssessment(s.id, los, rate, s.kind))
        return out

    def _visibility(self, positions: Dict[int, Point2]):
        sids = [s.id for s in self.spec.stations]
        nodes = sorted({f.node for f in self.flows})
        m = clear_matrix([self.station_position(i) for i in sids],
                         [positions[n] for n in nodes], self.spec.boxes)
        per_node = {n: {sid: bool(m[i, j]) for i, sid in enumerate(sids)}
                    for j, n in enumerate(nodes)}
        relays = [s for s in self.spec.stations if s.kind == MMWAVE_RELAY]
        backhaul = {}
        for s in relays:
            donor = self.stations[s.attached_to]
            backhaul[s.id] = bool(clear_matrix([donor.position], [self.station_position(s.id)],
                                               self.spec.boxes)[0, 0])
        return per_node, backhaul

    def evaluate_window(self, t0: float, t1: float) -> None:
        dt = t1 - t0
        positions = {nid: m.position for nid, m in self.models.items()}
        groups: Dict[tuple, List[Tuple[int, float, float]]] = defaultdict(list)
        offered_eff: Dict[int, float] = {}
        frac: Dict[int, float] = {}
        los_table, backhaul_los = self._visibility(positions)
        for f in self.flows:
            rec = self.records[f.id]
            active = t1 - max(f.start, t0)
            if active <= 0:
                rec.stations.append(None)
                continue
            frac[f.id] = active / dt
            offered_eff[f.id] = f.offered_rate * frac[f.id]
            assessments = self.assess(f, positions[f.node], los_table[f.node], backhaul_los)
            if not assessments:
                rec.stations.append(None)
                continue
            sid = select_link(assessments, f.policy)
            rate = next(a.achievable_rate for a in assessments if a.station_id == sid)
            rec.stations.append(sid)
            kind = self.stations[sid].kind
            # LTE is FDD (separate up/down capacity); mmWave is TDD (shared airtime)
            key = (sid, f.direction) if kind == LTE else (sid,)
            groups[key].append((f.id, rate, offered_eff[f.id]))

        granted: Dict[int, float] = {}
        for key in sorted(groups):
            items = groups[key]
            kind = self.stations[key[0]].kind
            # the scheduler is fair across UEs; flows of one UE share its
            # bearer first-come first-served, i.e. in proportion to load
            per_ue: Dict[int, List[Tuple[int, float, float]]] = defaultdict(list)
            for fid, rate, off in items:
                per_ue[self.flow_by_id[fid].node].append((fid, rate, off))
            ue_items = [(nid, fl[0][1], sum(o for _, _, o in fl))
                        for nid, fl in sorted(per_ue.items())]
            # a UE exists for part of the window; the station is busy only
            # while at least one of its UEs does
            ue_active = [max(frac[fid] for fid, _, _ in per_ue[nid]) for nid, _, _ in ue_items]
            busy = max(ue_active)
            if kind == LTE:
                ue_shares = allocate([(nid, r * a, o) for (nid, r, o), a
                                      in zip(ue_items, ue_active)],
                                     self.params.lte_usable_capacity * busy)
            else:
                ue_shares = share_airtime(ue_items, airtime=busy, active=ue_active)
            shares = []
            for (nid, _, total), (_, g) in zip(ue_items, ue_shares):
                for fid, _, off in per_ue[nid]:
                    shares.append((fid, g * off / total if total > 0 else 0.0))
            granted.update(shares)
            cap = capacity_of(kind, self.params, [r for _, r, _ in items])
            self.station_log.append((t0, key, sum(g for _, g in shares) * dt, cap * busy * dt))

        for f in self.flows:
            rec = self.records[f.id]
            g = granted.get(f.id, 0.0)
            rec.delivered_bits.append(g * dt)
            if f.kind == CONTROL:
                self._count_packets(f, rec, t0, t1, g, offered_eff.get(f.id, 0.0))

    def _count_packets(self, f: FlowSpec, rec: FlowRecord, t0: float, t1: float,
                       granted: float, offered: float) -> None:
        interval = f.packet_size * 8.0 / f.offered_rate
        first = max(0, math.ceil((t0 - f.start) / interval - _EPS))
        last = math.ceil((t1 - f.start) / interval - _EPS)  # exclusive
        n_tx = max(0, last - first)
        if n_tx == 0:
            rec.window_tx.append(0)
            rec.window_rx.append(0)
            return
        p = 1.0 if offered <= 0 or granted >= offered * (1.0 - 1e-9) else granted / offered
        u = self.packet_rng[f.id].random(n_tx)
        n_rx = int(np.count_nonzero(u < p))
        rec.tx_packets += n_tx
        rec.rx_packets += n_rx
        rec.window_tx.append(n_tx)
        rec.window_rx.append(n_rx)

    # -- event loop -----------------------------------------------------------

    def _move_all(self, t: float) -> None:
        for nid in self.order:
            self.models[nid].advance(t)
        if self.trace is not None:
            for nid in sorted(self.models):
                p = self.models[nid].position
                self.trace.append((t, nid, p.x, p.y))

    def _reposition_relays(self) -> None:
        for s in self.spec.stations:
            if s.kind != MMWAVE_RELAY or s.follows is None:
                continue
            donor = self.stations[s.attached_to].position
            team = self.models[s.follows].position
            self.relay_pos[s.id] = reposition_relay(self.relay_pos[s.id], donor, team,
                                                    self.spec.relay_candidates, self.spec.boxes)

    def run(self) -> MetricsReport:
        horizon = self.spec.horizon
        edges = window_edges(horizon, self.window)
        q = self.queue
        for k, (t0, _) in enumerate(edges):
            q.push(t0, EventKind.MOBILITY_UPDATE, k)
            q.push(t0, EventKind.LINK_EVALUATION, k)
            q.push(edges[k][1], EventKind.METRIC_SAMPLE, k)
        if self.relay_pos:
            n_rel = max(1, math.ceil(horizon / self.spec.relay_period - _EPS))
            for j in range(n_rel):
                q.push(j * self.spec.relay_period, EventKind.RELAY_REPOSITION, j)
        for f in self.flows:
            if f.start < horizon:
                q.push(f.start, EventKind.FLOW_START, f.id)
        q.push(horizon, EventKind.END)

        while q:
            ev = q.pop()
            self.events_processed.append(ev)
            if ev.kind == EventKind.MOBILITY_UPDATE:
                self._move_all(ev.time)
            elif ev.kind == EventKind.RELAY_REPOSITION:
                for nid in self.order:
                    self.models[nid].advance(ev.time)
                self._reposition_relays()
            elif ev.kind == EventKind.FLOW_START:
                self.started.add(ev.subject)
            elif ev.kind == EventKind.METRIC_SAMPLE:
                t0, t1 = edges[ev.subject]
                bits = sum(r.delivered_bits[ev.subject] for r in self.records.values()
                           if r.direction == UPLINK)
                self.live_uplink.append((t1, bits / (t1 - t0)))
            elif ev.kind == EventKind.LINK_EVALUATION:
                t0, t1 = edges[ev.subject]
                self.evaluate_window(t0, t1)
            elif ev.kind == EventKind.END:
                self._move_all(horizon)
                break
        return sample_metrics([self.records[f.id] for f in self.flows], horizon, self.window)


def run(spec: ScenarioSpec, params: Optional[LinkModelParams] = None, window: float = 0.1,
        seed: Optional[int] = None) -> MetricsReport:
    return Simulation(spec, params, window, seed, record_trace=False).run()

