"""Scenario description and seeded generators for the three incidents.

A :class:`ScenarioSpec` is a complete, serializable world: obstacle boxes,
nodes with their mobility assignments, base stations, traffic flows and
the simulated horizon.  The generators here build one from a config and a
seed; the same (config, seed) always gives the same spec.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import PlacementError
from .geometry import Box, Point2, contains, distance, is_line_clear, sample_outdoor_position
from .radio import LTE, MMWAVE_BS, MMWAVE_RELAY, POLICY_BEST, POLICY_PREFER_LTE, LinkModelParams

UPLINK = "uplink"
DOWNLINK = "downlink"
VIDEO = "video"
CONTROL = "control"

FLOW_START_WINDOW = 0.1


# --- data model -----------------------------------------------------------

@dataclass(frozen=True)
class WalkAssignment:
    start: Point2
    bounds: Box
    speed_min: float = 2.0
    speed_max: float = 4.0
    leg_time: float = 1.0
    update_step: float = 0.1
    building_aware: bool = True
    direction_memory: float = 0.0
    kind: str = field(default="walk", init=False)


@dataclass(frozen=True)
class WaypointAssignment:
    waypoints: Tuple[Point2, ...]
    speed: float
    kind: str = field(default="waypoints", init=False)


@dataclass(frozen=True)
class SlaveAssignment:
    master: int
    mu: float = 0.0
    sigma: float = 1.0
    bound: float = 20.0
    # "outdoor" keeps the slave in `constraint_bounds` and outside all boxes
    constraint: Optional[str] = None
    constraint_bounds: Optional[Box] = None
    max_iterations: int = 100
    kind: str = field(default="slave", init=False)


@dataclass(frozen=True)
class StaticAssignment:
    position: Point2
    kind: str = field(default="static", init=False)


Assignment = Union[WalkAssignment, WaypointAssignment, SlaveAssignment, StaticAssignment]


@dataclass(frozen=True)
class NodeSpec:
    id: int
    role: str
    mobility: Assignment
    antennas: int = 16

    def initial_position(self, nodes_by_id=None) -> Point2:
        m = self.mobility
        if isinstance(m, WalkAssignment):
            return m.start
        if isinstance(m, WaypointAssignment):
            return m.waypoints[0]
        if isinstance(m, StaticAssignment):
            return m.position
        return nodes_by_id[m.master].initial_position(nodes_by_id)


@dataclass(frozen=True)
class StationSpec:
    id: int
    kind: str
    position: Point2
    antennas: int = 64
    attached_to: Optional[int] = None
    # relays: the node whose team the relay accompanies
    follows: Optional[int] = None


@dataclass(frozen=True)
class FlowSpec:
    """CBR flow between a node and the incident-command side.

    Uplink flows run from ``node`` to the IC sink, downlink flows from the
    IC source to ``node``.
    """

    id: int
    node: int
    direction: str
    offered_rate: float
    start: float
    kind: str = VIDEO
    packet_size: Optional[int] = None
    policy: str = POLICY_BEST
    station_kinds: Tuple[str, ...] = (LTE, MMWAVE_BS, MMWAVE_RELAY)

    def __post_init__(self):
        if self.direction not in (UPLINK, DOWNLINK):
            raise ValueError(f"unknown flow direction {self.direction!r}")
        if self.kind not in (VIDEO, CONTROL):
            raise ValueError(f"unknown flow kind {self.kind!r}")
        if not self.offered_rate > 0:
            raise ValueError("offered_rate must be positive")
        if self.start < 0:
            raise ValueError("flow start must be >= 0")
        if self.kind == CONTROL and not (self.packet_size and self.packet_size > 0):
            raise ValueError("control flows need a positive packet_size")


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    bounds: Box
    boxes: Tuple[Box, ...]
    nodes: Tuple[NodeSpec, ...]
    stations: Tuple[StationSpec, ...]
    flows: Tuple[FlowSpec, ...]
    horizon: float = 10.0
    seed: int = 0
    radio: LinkModelParams = field(default_factory=LinkModelParams)
    relay_candidates: Tuple[Point2, ...] = ()
    relay_period: float = 1.0

    def node(self, node_id: int) -> NodeSpec:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def station(self, station_id: int) -> StationSpec:
        for s in self.stations:
            if s.id == station_id:
                return s
        raise KeyError(station_id)

    def validate(self) -> None:
        """Raise ValueError on dangling references or infeasible starts."""
        node_ids = {n.id for n in self.nodes}
        station_ids = {s.id: s for s in self.stations}
        if len(node_ids) != len(self.nodes) or len(station_ids) != len(self.stations):
            raise ValueError("duplicate node or station id")
        for s in self.stations:
            if s.kind not in (LTE, MMWAVE_BS, MMWAVE_RELAY):
                raise ValueError(f"unknown station kind {s.kind!r}")
            if s.kind == MMWAVE_RELAY:
                donor = station_ids.get(s.attached_to)
                if donor is None or donor.kind != MMWAVE_BS:
                    raise ValueError(f"relay {s.id} must attach to an mmwave_bs")
                if s.follows is not None and s.follows not in node_ids:
                    raise ValueError(f"relay {s.id} follows unknown node {s.follows}")
        for f in self.flows:
            if f.node not in node_ids:
                raise ValueError(f"flow {f.id} references unknown node {f.node}")
        if len({f.id for f in self.flows}) != len(self.flows):
            raise ValueError("duplicate flow id")
        by_id = {n.id: n for n in self.nodes}
        for n in self.nodes:
            m = n.mobility
            if isinstance(m, SlaveAssignment):
                if m.master not in node_ids or isinstance(by_id[m.master].mobility, SlaveAssignment):
                    raise ValueError(f"node {n.id}: invalid master {m.master}")
            if isinstance(m, WalkAssignment):
                if not contains(m.bounds, m.start):
                    raise ValueError(f"node {n.id} starts outside its walk bounds")
                if m.building_aware and any(contains(b, m.start) for b in self.boxes):
                    raise ValueError(f"node {n.id} starts indoors")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")


# --- serialization --------------------------------------------------------

SCHEMA_VERSION = 1


def _box_doc(b: Optional[Box]):
    return None if b is None else list(b.as_tuple())


def _box(doc) -> Optional[Box]:
    return None if doc is None else Box(*doc)


def _pt(doc) -> Point2:
    return Point2(float(doc[0]), float(doc[1]))


def _mobility_doc(m: Assignment) -> dict:
    if isinstance(m, WalkAssignment):
        return {"kind": m.kind, "start": list(m.start), "bounds": _box_doc(m.bounds),
                "speed_min": m.speed_min, "speed_max": m.speed_max, "leg_time": m.leg_time,
                "update_step": m.update_step, "building_aware": m.building_aware,
                "direction_memory": m.direction_memory}
    if isinstance(m, WaypointAssignment):
        return {"kind": m.kind, "waypoints": [list(p) for p in m.waypoints], "speed": m.speed}
    if isinstance(m, SlaveAssignment):
        return {"kind": m.kind, "master": m.master, "mu": m.mu, "sigma": m.sigma,
                "bound": m.bound, "constraint": m.constraint,
                "constraint_bounds": _box_doc(m.constraint_bounds),
                "max_iterations": m.max_iterations}
    return {"kind": m.kind, "position": list(m.position)}


def _mobility(doc: dict) -> Assignment:
    kind = doc["kind"]
    if kind == "walk":
        return WalkAssignment(_pt(doc["start"]), _box(doc["bounds"]), doc["speed_min"],
                              doc["speed_max"], doc["leg_time"], doc["update_step"],
                              doc["building_aware"], doc["direction_memory"])
    if kind == "waypoints":
        return WaypointAssignment(tuple(_pt(p) for p in doc["waypoints"]), doc["speed"])
    if kind == "slave":
        return SlaveAssignment(doc["master"], doc["mu"], doc["sigma"], doc["bound"],
                               doc["constraint"], _box(doc["constraint_bounds"]),
                               doc["max_iterations"])
    if kind == "static":
        return StaticAssignment(_pt(doc["position"]))
    raise ValueError(f"unknown mobility kind {kind!r}")


def to_document(spec: ScenarioSpec) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "name": spec.name,
        "seed": spec.seed,
        "horizon": spec.horizon,
        "bounds": _box_doc(spec.bounds),
        "boxes": [_box_doc(b) for b in spec.boxes],
        "nodes": [{"id": n.id, "role": n.role, "antennas": n.antennas,
                   "mobility": _mobility_doc(n.mobility)} for n in spec.nodes],
        "stations": [{"id": s.id, "kind": s.kind, "position": list(s.position),
                      "antennas": s.antennas, "attached_to": s.attached_to,
                      "follows": s.follows} for s in spec.stations],
        "flows": [{"id": f.id, "node": f.node, "direction": f.direction,
                   "offered_rate": f.offered_rate, "start": f.start, "kind": f.kind,
                   "packet_size": f.packet_size, "policy": f.policy,
                   "station_kinds": list(f.station_kinds)} for f in spec.flows],
        "radio": spec.radio.to_document(),
        "relay_candidates": [list(p) for p in spec.relay_candidates],
        "relay_period": spec.relay_period,
    }


def load_schema() -> dict:
    text = resources.files("pscsim").joinpath("schemas/scenario.schema.json").read_text()
    return json.loads(text)


def from_document(doc: dict, validate: bool = True) -> ScenarioSpec:
    if validate:
        import jsonschema
        jsonschema.validate(doc, load_schema())
    spec = ScenarioSpec(
        name=doc["name"],
        bounds=_box(doc["bounds"]),
        boxes=tuple(_box(b) for b in doc["boxes"]),
        nodes=tuple(NodeSpec(n["id"], n["role"], _mobility(n["mobility"]), n["antennas"])
                    for n in doc["nodes"]),
        stations=tuple(StationSpec(s["id"], s["kind"], _pt(s["position"]), s["antennas"],
                                   s["attached_to"], s["follows"]) for s in doc["stations"]),
        flows=tuple(FlowSpec(f["id"], f["node"], f["direction"], f["offered_rate"], f["start"],
                             f["kind"], f["packet_size"], f["policy"], tuple(f["station_kinds"]))
                    for f in doc["flows"]),
        horizon=doc["horizon"],
        seed=doc["seed"],
        radio=LinkModelParams.from_document(doc["radio"]),
        relay_candidates=tuple(_pt(p) for p in doc["relay_candidates"]),
        relay_period=doc["relay_period"],
    )
    spec.validate()
    return spec


def dumps(spec: ScenarioSpec) -> str:
    return json.dumps(to_document(spec), indent=2, sort_keys=True) + "\n"


def loads(text: str) -> ScenarioSpec:
    return from_document(json.loads(text))


# --- placement helpers ----------------------------------------------------

ALIGNED = "aligned"
ORTHOGONAL = "orthogonal"


def place_random_obstacle(street: Box, width: float, length: float, orientation: str,
                          existing: Sequence[Box], rng: np.random.Generator,
                          max_attempts: int = 1000, clearance: float = 0.0) -> Box:
    """Drop a ``width`` x ``length`` obstacle uniformly inside the street.

    The street runs along x.  An aligned obstacle has its length along the
    street, an orthogonal one across it.  Obstacles closer than
    ``clearance`` to an existing box are rejected and redrawn.
    """
    if orientation == ALIGNED:
        dx, dy = length, width
    elif orientation == ORTHOGONAL:
        dx, dy = width, length
    else:
        raise ValueError(f"unknown orientation {orientation!r}")
    if dx > street.width or dy > street.height:
        raise PlacementError(
            f"{orientation} obstacle {dx}x{dy} m does not fit in street "
            f"{street.width}x{street.height} m")
    for _ in range(max_attempts):
        x0 = float(rng.uniform(street.x_min, street.x_max - dx))
        y0 = float(rng.uniform(street.y_min, street.y_max - dy))
        box = Box(x0, x0 + dx, y0, y0 + dy)
        if not any(box.overlaps(e, clearance) for e in existing):
            return box
    raise PlacementError(
        f"could not place {orientation} {dx}x{dy} m obstacle among {len(existing)} "
        f"others after {max_attempts} attempts")


def create_random_buildings(area: Box, count: int, size_range: Tuple[float, float],
                            rng: np.random.Generator, clearance: float = 0.0,
                            max_attempts: int = 1000) -> List[Box]:
    """Non-overlapping buildings with uniform sides, kept ``clearance`` inside ``area``."""
    inner = Box(area.x_min + clearance, area.x_max - clearance,
                area.y_min + clearance, area.y_max - clearance)
    boxes: List[Box] = []
    for _ in range(count):
        w = float(rng.uniform(*size_range))
        h = float(rng.uniform(*size_range))
        boxes.append(place_random_obstacle(inner, h, w, ALIGNED, boxes, rng,
                                           max_attempts, clearance))
    return boxes


def _flow_start(rng: np.random.Generator) -> float:
    return float(rng.uniform(0.0, FLOW_START_WINDOW))


# --- multi-vehicle accident ----------------------------------------------

@dataclass(frozen=True)
class MvaConfig:
    n_responders: int = 10
    ar_fraction: float = 0.3
    n_cars: int = 2
    n_trucks: int = 1
    road_width: float = 5.5
    incident_length: float = 25.0
    video_rate: float = 10e6
    rsu_isd: float = 50.0
    lte_distance: float = 500.0
    with_mmwave: bool = True
    car_size: Tuple[float, float] = (1.8, 4.5)
    truck_size: Tuple[float, float] = (2.5, 10.0)
    shoulder: float = 5.0
    obstacle_clearance: float = 0.5
    rsu_offset: float = 1.0
    antenna_bs: int = 64
    antenna_ue: int = 16
    horizon: float = 10.0

    def __post_init__(self):
        if not 0.0 <= self.ar_fraction <= 1.0:
            raise ValueError("ar_fraction must be in [0, 1]")
        if min(self.road_width, self.incident_length, self.rsu_isd, self.lte_distance) <= 0:
            raise ValueError("lengths must be positive")
        if self.n_responders < 0 or self.n_cars < 0 or self.n_trucks < 0:
            raise ValueError("counts must be >= 0")


def _place_vehicles(street: Box, sizes, clearance: float, rng: np.random.Generator,
                    layout_attempts: int = 100) -> List[Box]:
    for width, length in sizes:
        if length > street.width or width > street.height:
            raise PlacementError(f"vehicle {length}x{width} m does not fit in street "
                                 f"{street.width}x{street.height} m")
    # early vehicles can leave no room for later ones; start the layout over
    last: Optional[PlacementError] = None
    for _ in range(layout_attempts):
        boxes: List[Box] = []
        try:
            for width, length in sizes:
                boxes.append(place_random_obstacle(street, width, length, ALIGNED, boxes, rng,
                                                   max_attempts=100, clearance=clearance))
            return boxes
        except PlacementError as exc:
            last = exc
    raise PlacementError(f"no vehicle layout after {layout_attempts} attempts: {last}")


def gen_mva(config: MvaConfig = MvaConfig(), seed: int = 0) -> ScenarioSpec:
    rng = np.random.default_rng(seed)
    street = Box(0.0, config.incident_length, 0.0, config.road_width)
    sizes = [config.truck_size] * config.n_trucks + [config.car_size] * config.n_cars
    boxes = _place_vehicles(street, sizes, config.obstacle_clearance, rng)
    bounds = Box(0.0, config.incident_length,
                 -config.shoulder, config.road_width + config.shoulder)

    nodes = []
    for i in range(config.n_responders):
        start = sample_outdoor_position(bounds, boxes, rng)
        nodes.append(NodeSpec(i, "responder", WalkAssignment(start, bounds),
                              config.antenna_ue))

    stations = []
    if config.with_mmwave:
        mid = 0.5 * config.incident_length
        x1 = mid - config.rsu_isd + float(rng.uniform(0.0, config.rsu_isd))
        y = -config.rsu_offset
        stations.append(StationSpec(0, MMWAVE_BS, Point2(x1, y), config.antenna_bs))
        stations.append(StationSpec(1, MMWAVE_BS, Point2(x1 + config.rsu_isd, y),
                                    config.antenna_bs))
    stations.append(StationSpec(len(stations), LTE,
                                Point2(0.5 * config.incident_length, -config.lte_distance),
                                config.antenna_bs))

    kinds = (LTE, MMWAVE_BS) if config.with_mmwave else (LTE,)
    flows = []
    for n in nodes:
        flows.append(FlowSpec(len(flows), n.id, UPLINK, config.video_rate, _flow_start(rng),
                              station_kinds=kinds))
    n_ar = math.floor(config.ar_fraction * config.n_responders + 1e-9)
    for n in nodes[:n_ar]:
        flows.append(FlowSpec(len(flows), n.id, DOWNLINK, config.video_rate, _flow_start(rng),
                              station_kinds=kinds))

    spec = ScenarioSpec("mva", bounds, tuple(boxes), tuple(nodes), tuple(stations),
                        tuple(flows), config.horizon, seed)
    spec.validate()
    return spec


# --- chemical plant explosion --------------------------------------------

@dataclass(frozen=True)
class ChemConfig:
    n_responders: int = 10
    area_side: float = 1000.0
    n_buildings: int = 10
    building_size: Tuple[float, float] = (20.0, 80.0)
    n_mmwave_bs: int = 5
    with_lte: bool = False
    video_rate: float = 10e6
    control_rate: float = 500e3
    control_packet_size: int = 1250
    robot_area: Optional[Box] = None
    robot_area_side: float = 100.0
    building_clearance: float = 5.0
    antenna_bs: int = 64
    antenna_ue: int = 16
    horizon: float = 10.0

    def __post_init__(self):
        if min(self.n_responders, self.n_buildings, self.n_mmwave_bs) < 0:
            raise ValueError("counts must be >= 0")
        if not self.area_side > 0:
            raise ValueError("area_side must be positive")
        ra = self.resolved_robot_area()
        if not (0 <= ra.x_min and ra.x_max <= self.area_side
                and 0 <= ra.y_min and ra.y_max <= self.area_side):
            raise ValueError("robot_area must lie inside the plant area")

    def resolved_robot_area(self) -> Box:
        if self.robot_area is not None:
            return self.robot_area
        c, h = 0.5 * self.area_side, 0.5 * min(self.robot_area_side, self.area_side)
        return Box(c - h, c + h, c - h, c + h)


def gen_chemical_plant(config: ChemConfig = ChemConfig(), seed: int = 0) -> ScenarioSpec:
    rng = np.random.default_rng(seed)
    area = Box(0.0, config.area_side, 0.0, config.area_side)
    boxes = create_random_buildings(area, config.n_buildings, config.building_size, rng,
                                    clearance=config.building_clearance)
    nodes = []
    for i in range(config.n_responders):
        start = sample_outdoor_position(area, boxes, rng)
        nodes.append(NodeSpec(i, "responder", WalkAssignment(start, area), config.antenna_ue))
    robot_area = config.resolved_robot_area()
    robot_start = sample_outdoor_position(robot_area, boxes, rng)
    robot = NodeSpec(len(nodes), "robot", WalkAssignment(robot_start, robot_area),
                     config.antenna_ue)
    nodes.append(robot)

    stations = []
    for _ in range(config.n_mmwave_bs):
        stations.append(StationSpec(len(stations), MMWAVE_BS,
                                    sample_outdoor_position(area, boxes, rng),
                                    config.antenna_bs))
    if config.with_lte:
        stations.append(StationSpec(len(stations), LTE,
                                    sample_outdoor_position(area, boxes, rng),
                                    config.antenna_bs))

    flows = []
    for n in nodes:
        flows.append(FlowSpec(len(flows), n.id, UPLINK, config.video_rate, _flow_start(rng),
                              station_kinds=(MMWAVE_BS,)))
    ctrl_kinds = (LTE, MMWAVE_BS) if config.with_lte else (MMWAVE_BS,)
    flows.append(FlowSpec(len(flows), robot.id, DOWNLINK, config.control_rate,
                          _flow_start(rng), kind=CONTROL,
                          packet_size=config.control_packet_size,
                          policy=POLICY_PREFER_LTE if config.with_lte else POLICY_BEST,
                          station_kinds=ctrl_kinds))

    spec = ScenarioSpec("chemical", area, tuple(boxes), tuple(nodes), tuple(stations),
                        tuple(flows), config.horizon, seed)
    spec.validate()
    return spec


# --- school shooting -------------------------------------------------------

@dataclass(frozen=True)
class SchoolConfig:
    rooms_per_side: int = 4
    room_side: float = 20.0
    corridor_width: float = 4.0
    n_teams: int = 4
    team_size: int = 4
    with_iab: bool = False
    antenna_bs: int = 64
    antenna_ue: int = 16
    video_rate: float = 10e6
    walk_speed: float = 1.5
    horizon: float = 70.0
    relay_period: float = 1.0

    def __post_init__(self):
        if self.rooms_per_side < 1 or self.team_size < 1:
            raise ValueError("rooms_per_side and team_size must be >= 1")
        if not 0 <= self.n_teams <= 4:
            raise ValueError("one team per building corner: n_teams in [0, 4]")
        if self.antenna_bs not in (16, 64) or self.antenna_ue not in (4, 16):
            raise ValueError("antenna_bs must be 16 or 64 and antenna_ue 4 or 16")
        if min(self.room_side, self.corridor_width) <= 0:
            raise ValueError("room_side and corridor_width must be positive")

    @property
    def footprint_side(self) -> float:
        n = self.rooms_per_side
        return n * self.room_side + (n - 1) * self.corridor_width


def gen_school_building(config: SchoolConfig = SchoolConfig()) -> List[Box]:
    pitch = config.room_side + config.corridor_width
    rooms = []
    for i in range(config.rooms_per_side):
        for j in range(config.rooms_per_side):
            x0, y0 = i * pitch, j * pitch
            rooms.append(Box(x0, x0 + config.room_side, y0, y0 + config.room_side))
    return rooms


def corridor_lines(config: SchoolConfig) -> List[float]:
    """Centerlines of the walkway ring and of every internal corridor."""
    w = config.corridor_width
    inner = [(k + 1) * config.room_side + k * w + 0.5 * w
             for k in range(config.rooms_per_side - 1)]
    return [-0.5 * w, *inner, config.footprint_side + 0.5 * w]


def _team_route(corner: int, lines: List[float], center: Point2) -> List[Point2]:
    lo, hi = lines[0], lines[-1]
    cx, cy = center
    if corner == 0:
        return [Point2(lo, lo), Point2(cx, lo), Point2(cx, cy)]
    if corner == 1:
        return [Point2(hi, lo), Point2(hi, cy), Point2(cx, cy)]
    if corner == 2:
        return [Point2(hi, hi), Point2(cx, hi), Point2(cx, cy)]
    return [Point2(lo, hi), Point2(lo, cy), Point2(cx, cy)]


def reposition_relay(relay: Sequence[float], donor: Sequence[float], team: Sequence[float],
                     candidates: Sequence[Point2], boxes: Sequence[Box]) -> Point2:
    """Nomadic relay rule.

    Keep the current spot while it sees both the donor station and the team
    leader; otherwise jump to the candidate junction nearest the leader that
    sees both.  With no such junction the relay stays put.
    """
    relay = Point2(relay[0], relay[1])
    if is_line_clear(relay, donor, boxes) and is_line_clear(relay, team, boxes):
        return relay
    best = None
    for c in candidates:
        if is_line_clear(c, donor, boxes) and is_line_clear(c, team, boxes):
            key = (distance(c, team), c.x, c.y)
            if best is None or key < best[0]:
                best = (key, c)
    return relay if best is None else best[1]


def gen_school_shooting(config: SchoolConfig = SchoolConfig(), seed: int = 0) -> ScenarioSpec:
    rng = np.random.default_rng(seed)
    rooms = gen_school_building(config)
    w = config.corridor_width
    side = config.footprint_side
    bounds = Box(-w, side + w, -w, side + w)
    lines = corridor_lines(config)
    junctions = tuple(Point2(x, y) for x in lines for y in lines)
    mid = 0.5 * side
    center = min(junctions, key=lambda p: (distance(p, (mid, mid)), p.x, p.y))

    corners = [Point2(-w, -w), Point2(side + w, -w), Point2(side + w, side + w),
               Point2(-w, side + w)]
    stations = [StationSpec(k, MMWAVE_BS, corners[k], config.antenna_bs) for k in range(4)]

    nodes = []
    for team in range(config.n_teams):
        route = _team_route(team, lines, center)
        master_id = len(nodes)
        nodes.append(NodeSpec(master_id, "team_leader",
                              WaypointAssignment(tuple(route), config.walk_speed),
                              config.antenna_ue))
        for _ in range(config.team_size - 1):
            nodes.append(NodeSpec(len(nodes), "team_member",
                                  SlaveAssignment(master_id, constraint="outdoor",
                                                  constraint_bounds=bounds),
                                  config.antenna_ue))
        if config.with_iab:
            start = reposition_relay(route[0], corners[team], route[0], junctions, rooms)
            stations.append(StationSpec(len(stations), MMWAVE_RELAY, start, config.antenna_bs,
                                        attached_to=team, follows=master_id))

    kinds = (MMWAVE_BS, MMWAVE_RELAY)
    flows = tuple(FlowSpec(i, n.id, UPLINK, config.video_rate, _flow_start(rng),
                           station_kinds=kinds) for i, n in enumerate(nodes))
    spec = ScenarioSpec("school", bounds, tuple(rooms), tuple(nodes), tuple(stations), flows,
                        config.horizon, seed, relay_candidates=junctions,
                        relay_period=config.relay_period)
    spec.validate()
    return spec
