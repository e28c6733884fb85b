"""Time-stepped mobility models.

Three families live here:

* a 2D random walk that optionally avoids obstacle boxes (the walker is
  kept outdoors and never crosses a box between two recorded positions),
* a scripted waypoint mover for nodes with a known route,
* master/slave group mobility, where each slave holds a random offset
  around its master and redraws it whenever the master changes course.

The walk is written as plain functions over a :class:`WalkState` so it can
be tested step by step; the ``MobilityModel`` classes wrap those functions
with course-change notification for the simulation engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import GroupConstraintError, MobilityError
from .geometry import (Box, Point2, Vector2, contains, exit_parameter,
                       first_hit_parameter, is_line_clear, is_outdoor,
                       segment_intersects_box)

TWO_PI = 2.0 * math.pi
_TIME_EPS = 1e-9

TraceRecord = Tuple[float, float, float]
CourseChangeCallback = Callable[[float, Point2], None]
Constraint = Callable[[Point2], bool]


@dataclass(frozen=True)
class Uniform:
    low: float
    high: float

    def __call__(self, rng: np.random.Generator) -> float:
        return float(rng.uniform(self.low, self.high))


@dataclass(frozen=True)
class Constant:
    value: float

    def __call__(self, rng: np.random.Generator) -> float:
        # consume one draw so swapping distributions keeps stream alignment
        rng.random()
        return self.value


@dataclass(frozen=True)
class WalkParams:
    bounds: Box
    speed: Callable[[np.random.Generator], float] = Uniform(2.0, 4.0)
    direction: Callable[[np.random.Generator], float] = Uniform(0.0, TWO_PI)
    mode: str = "time"
    leg_time: float = 1.0
    leg_distance: float = 10.0
    update_step: float = 0.1
    # 0 gives an uncorrelated walk; close to 1 keeps the previous course
    direction_memory: float = 0.0
    avoid_retries: int = 50
    standoff: float = 1e-3

    def __post_init__(self):
        if self.mode not in ("time", "distance"):
            raise ValueError(f"unknown leg mode {self.mode!r}")
        if self.mode == "time" and not self.leg_time > 0:
            raise ValueError("leg_time must be positive")
        if self.mode == "distance" and not self.leg_distance > 0:
            raise ValueError("leg_distance must be positive")
        if not self.update_step > 0:
            raise ValueError("update_step must be positive")
        if not 0.0 <= self.direction_memory < 1.0:
            raise ValueError("direction_memory must be in [0, 1)")
        if self.avoid_retries < 1:
            raise ValueError("avoid_retries must be >= 1")


@dataclass(frozen=True)
class WalkState:
    position: Point2
    velocity: Vector2
    time: float
    leg_end_time: float
    building_aware: bool = True

    @property
    def speed(self) -> float:
        return math.hypot(self.velocity[0], self.velocity[1])


def _wrap_angle(a: float) -> float:
    return (a + math.pi) % TWO_PI - math.pi


def draw_course(params: WalkParams, rng: np.random.Generator,
                previous: Optional[Sequence[float]] = None) -> Vector2:
    """Velocity from the speed and direction distributions.

    Always consumes one speed draw followed by one direction draw.  With
    ``direction_memory`` > 0 and a previous velocity the new course is
    blended with the old one (a Gauss-Markov style correlated walk).
    """
    speed = params.speed(rng)
    heading = params.direction(rng)
    if not speed > 0:
        raise MobilityError(f"speed distribution produced non-positive speed {speed}")
    alpha = params.direction_memory
    if alpha > 0.0 and previous is not None:
        old_speed = math.hypot(previous[0], previous[1])
        if old_speed > 0.0:
            old_heading = math.atan2(previous[1], previous[0])
            heading = old_heading + (1.0 - alpha) * _wrap_angle(heading - old_heading)
            speed = alpha * old_speed + (1.0 - alpha) * speed
    return Vector2(speed * math.cos(heading), speed * math.sin(heading))


def _leg_end(params: WalkParams, now: float, velocity: Sequence[float]) -> float:
    if params.mode == "time":
        return now + params.leg_time
    return now + params.leg_distance / math.hypot(velocity[0], velocity[1])


def init_walk(params: WalkParams, start: Sequence[float], rng: np.random.Generator,
              boxes: Sequence[Box] = (), building_aware: bool = True,
              time: float = 0.0) -> WalkState:
    start = Point2(float(start[0]), float(start[1]))
    if not contains(params.bounds, start):
        raise MobilityError(f"start {tuple(start)} outside bounds {params.bounds.as_tuple()}")
    if building_aware and any(contains(b, start) for b in boxes):
        raise MobilityError(f"building-aware walk cannot start indoors at {tuple(start)}")
    velocity = draw_course(params, rng)
    return WalkState(start, velocity, time, _leg_end(params, time, velocity), building_aware)


def avoid_building(position: Sequence[float], params: WalkParams, boxes: Sequence[Box],
                   rng: np.random.Generator, retries: Optional[int] = None) -> Vector2:
    """Redraw the course until one update step from ``position`` is clear.

    The candidate segment must stay inside the bounds and must not touch
    any box.  Raises :class:`MobilityError` when ``retries`` draws fail.
    """
    retries = params.avoid_retries if retries is None else retries
    x, y = position[0], position[1]
    dt = params.update_step
    for _ in range(retries):
        v = draw_course(params, rng)
        end = (x + v[0] * dt, y + v[1] * dt)
        if contains(params.bounds, end) and is_line_clear((x, y), end, boxes):
            return v
    raise MobilityError(
        f"no clear course from position ({x:.6f}, {y:.6f}) after {retries} draws")


def _first_blocking(x: float, y: float, tx: float, ty: float,
                    boxes: Sequence[Box]) -> Optional[float]:
    hit = None
    a = (x, y)
    b = (tx, ty)
    for box in boxes:
        if segment_intersects_box(a, b, box):
            t = first_hit_parameter(a, b, box)
            if t is None:
                # grazing contact the slab clip rounds away; stop right here
                t = 0.0
            if hit is None or t < hit:
                hit = t
    return hit


def advance_walk(state: WalkState, params: WalkParams, boxes: Sequence[Box], until: float,
                 rng: np.random.Generator, *, record: Optional[List[TraceRecord]] = None,
                 on_course_change: Optional[CourseChangeCallback] = None) -> WalkState:
    """Advance a walker to time ``until`` in sub-steps of ``update_step``.

    Positions are appended to ``record`` at the end of every sub-step and at
    every rebound or obstacle stop, so consecutive records are joined by
    straight, unobstructed segments.
    """
    if until < state.time - _TIME_EPS:
        raise ValueError(f"cannot advance from t={state.time} back to t={until}")
    bounds = params.bounds
    active = tuple(boxes) if state.building_aware else ()
    step = params.update_step
    standoff = params.standoff
    t = state.time
    x, y = state.position
    vx, vy = state.velocity
    leg_end = state.leg_end_time

    def notify(now, px, py):
        if on_course_change is not None:
            on_course_change(now, Point2(px, py))

    def redirect(px, py):
        v = avoid_building((px, py), params, active, rng)
        return v[0], v[1]

    while until - t > _TIME_EPS:
        if leg_end - t <= _TIME_EPS:
            v = draw_course(params, rng, (vx, vy))
            vx, vy = v
            leg_end = _leg_end(params, t, v)
            notify(t, x, y)
            continue
        t_next = t + step
        if leg_end - t_next <= _TIME_EPS:
            t_next = leg_end
        if until - t_next <= _TIME_EPS:
            t_next = until
        remaining = t_next - t
        for _ in range(1000):
            tx = x + vx * remaining
            ty = y + vy * remaining
            hit = _first_blocking(x, y, tx, ty, active) if active else None
            t_out, flip_x, flip_y = exit_parameter((x, y), (tx, ty), bounds)
            if hit is not None and hit <= t_out:
                seg_len = math.hypot(tx - x, ty - y)
                back = hit - standoff / seg_len if seg_len > 0.0 else 0.0
                if back > 0.0:
                    nx = x + back * (tx - x)
                    ny = y + back * (ty - y)
                    if is_outdoor((nx, ny), bounds, active):
                        x, y = nx, ny
                        t += back * remaining
                        remaining -= back * remaining
                        if record is not None:
                            record.append((t, x, y))
                vx, vy = redirect(x, y)
                notify(t, x, y)
                continue
            if t_out < 1.0:
                nx = x + t_out * (tx - x)
                ny = y + t_out * (ty - y)
                if flip_x:
                    nx = bounds.x_max if vx > 0 else bounds.x_min
                if flip_y:
                    ny = bounds.y_max if vy > 0 else bounds.y_min
                if active and not is_outdoor((nx, ny), bounds, active):
                    vx, vy = redirect(x, y)
                    notify(t, x, y)
                    continue
                x, y = nx, ny
                t += t_out * remaining
                remaining -= t_out * remaining
                if flip_x:
                    vx = -vx
                if flip_y:
                    vy = -vy
                if record is not None:
                    record.append((t, x, y))
                notify(t, x, y)
                if remaining <= 0.0:
                    break
                continue
            x, y = tx, ty
            break
        else:
            raise MobilityError(f"walker stuck near ({x:.6f}, {y:.6f}) at t={t:.6f}")
        t = t_next
        if record is not None:
            record.append((t, x, y))
    return WalkState(Point2(x, y), Vector2(vx, vy), t, leg_end, state.building_aware)


# --- group mobility -------------------------------------------------------

@dataclass(frozen=True)
class DeviationDist:
    """Per-axis random deviation around the master, truncated by rejection.

    ``family`` is ``"gaussian"`` or any callable ``rng -> float`` returning
    one raw (untruncated) component.
    """

    mu: float = 0.0
    sigma: float = 1.0
    bound: float = 20.0
    family: object = "gaussian"
    max_component_draws: int = 100_000

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if not self.bound > 0:
            raise ValueError("bound must be > 0")
        if self.family != "gaussian" and not callable(self.family):
            raise ValueError(f"unknown deviation family {self.family!r}")

    def draw_component(self, rng: np.random.Generator) -> float:
        for _ in range(self.max_component_draws):
            if self.family == "gaussian":
                v = float(rng.normal(self.mu, self.sigma)) if self.sigma > 0 else float(self.mu)
            else:
                v = float(self.family(rng))
            if abs(v) <= self.bound:
                return v
        raise GroupConstraintError(
            f"deviation (mu={self.mu}, sigma={self.sigma}) never fell within "
            f"+/-{self.bound} m in {self.max_component_draws} draws")


@dataclass(frozen=True)
class GroupBinding:
    master_id: object
    deviation: DeviationDist
    current_offset: Vector2
    constraint: Optional[Constraint] = None
    max_iterations: int = 100


def sample_offset(deviation: DeviationDist, constraint: Optional[Constraint],
                  master_pos: Sequence[float], max_iterations: int,
                  rng: np.random.Generator) -> Vector2:
    """Random offset around ``master_pos`` accepted by ``constraint``.

    Raises :class:`GroupConstraintError` after ``max_iterations`` rejected
    candidates.
    """
    if max_iterations < 1:
        raise ValueError("max_iterations must be >= 1")
    mx, my = master_pos[0], master_pos[1]
    for _ in range(max_iterations):
        ox = deviation.draw_component(rng)
        oy = deviation.draw_component(rng)
        if constraint is None or constraint(Point2(mx + ox, my + oy)):
            return Vector2(ox, oy)
    raise GroupConstraintError(
        f"no slave position around master ({mx:.3f}, {my:.3f}) satisfied the "
        f"constraint in {max_iterations} iterations")


def bind_group(master_id, deviation: DeviationDist, constraint: Optional[Constraint],
               max_iterations: int, rng: np.random.Generator,
               master_pos: Sequence[float] = (0.0, 0.0)) -> GroupBinding:
    offset = sample_offset(deviation, constraint, master_pos, max_iterations, rng)
    return GroupBinding(master_id, deviation, offset, constraint, max_iterations)


def on_master_course_change(binding: GroupBinding, master_pos: Sequence[float],
                            rng: np.random.Generator) -> GroupBinding:
    offset = sample_offset(binding.deviation, binding.constraint, master_pos,
                           binding.max_iterations, rng)
    return replace(binding, current_offset=offset)


def slave_position(binding: GroupBinding, master_pos: Sequence[float]) -> Point2:
    return Point2(master_pos[0] + binding.current_offset[0],
                  master_pos[1] + binding.current_offset[1])


def outdoor_constraint(boxes: Sequence[Box], bounds: Optional[Box] = None) -> Constraint:
    boxes = tuple(boxes)

    def check(p: Point2) -> bool:
        return is_outdoor(p, bounds, boxes)

    return check


# --- model objects --------------------------------------------------------

class MobilityModel:
    """A node's position over time, with course-change listeners."""

    time: float = 0.0

    def __init__(self):
        self._listeners: List[CourseChangeCallback] = []

    def add_course_change_listener(self, callback: CourseChangeCallback) -> None:
        self._listeners.append(callback)

    def _notify(self, t: float, pos: Point2) -> None:
        for cb in self._listeners:
            cb(t, pos)

    @property
    def position(self) -> Point2:
        raise NotImplementedError

    def advance(self, until: float) -> None:
        raise NotImplementedError


class StaticPosition(MobilityModel):
    def __init__(self, position: Sequence[float]):
        super().__init__()
        self._pos = Point2(float(position[0]), float(position[1]))

    @property
    def position(self) -> Point2:
        return self._pos

    def advance(self, until: float) -> None:
        self.time = until


class RandomWalk(MobilityModel):
    """Random walk, building-aware unless ``building_aware=False``."""

    def __init__(self, params: WalkParams, start: Sequence[float], rng: np.random.Generator,
                 boxes: Sequence[Box] = (), building_aware: bool = True,
                 record_trace: bool = False):
        super().__init__()
        self.params = params
        self.boxes = tuple(boxes)
        self.rng = rng
        self.state = init_walk(params, start, rng, self.boxes, building_aware)
        self.trace: Optional[List[TraceRecord]] = None
        if record_trace:
            self.trace = [(self.state.time, *self.state.position)]

    @property
    def time(self) -> float:
        return self.state.time

    @property
    def position(self) -> Point2:
        return self.state.position

    def advance(self, until: float) -> None:
        self.state = advance_walk(self.state, self.params, self.boxes, until, self.rng,
                                  record=self.trace, on_course_change=self._notify)


class WaypointMover(MobilityModel):
    """Constant-speed motion along a polyline; stops at the last waypoint."""

    def __init__(self, waypoints: Sequence[Sequence[float]], speed: float):
        super().__init__()
        if not waypoints:
            raise ValueError("at least one waypoint is required")
        if not speed > 0:
            raise ValueError("speed must be positive")
        self.waypoints = [Point2(float(p[0]), float(p[1])) for p in waypoints]
        self.speed = speed
        self.arrivals = [0.0]
        for a, b in zip(self.waypoints, self.waypoints[1:]):
            self.arrivals.append(self.arrivals[-1] + math.hypot(b.x - a.x, b.y - a.y) / speed)
        self.time = 0.0

    def position_at(self, t: float) -> Point2:
        if t <= 0.0:
            return self.waypoints[0]
        for k in range(1, len(self.waypoints)):
            if t < self.arrivals[k]:
                a, b = self.waypoints[k - 1], self.waypoints[k]
                span = self.arrivals[k] - self.arrivals[k - 1]
                f = (t - self.arrivals[k - 1]) / span
                return Point2(a.x + f * (b.x - a.x), a.y + f * (b.y - a.y))
        return self.waypoints[-1]

    @property
    def position(self) -> Point2:
        return self.position_at(self.time)

    def advance(self, until: float) -> None:
        for k in range(1, len(self.arrivals)):
            if self.time < self.arrivals[k] <= until:
                self._notify(self.arrivals[k], self.waypoints[k])
        self.time = until


class GroupSlave(MobilityModel):
    """Follows a master at a held random offset.

    The offset is redrawn on every master course change.  ``refresh`` also
    redraws it when master motion has carried the held offset into a
    position the constraint rejects.
    """

    def __init__(self, master: MobilityModel, binding: GroupBinding, rng: np.random.Generator):
        super().__init__()
        self.master = master
        self.binding = binding
        self.rng = rng
        master.add_course_change_listener(self._master_course_changed)

    def _master_course_changed(self, t: float, master_pos: Point2) -> None:
        self.binding = on_master_course_change(self.binding, master_pos, self.rng)
        self._notify(t, slave_position(self.binding, master_pos))

    @property
    def time(self) -> float:
        return self.master.time

    @property
    def position(self) -> Point2:
        return slave_position(self.binding, self.master.position)

    def refresh(self) -> None:
        constraint = self.binding.constraint
        if constraint is not None and not constraint(self.position):
            self._master_course_changed(self.master.time, self.master.position)

    def advance(self, until: float) -> None:
        if self.master.time < until - _TIME_EPS:
            self.master.advance(until)
        self.refresh()


@dataclass
class Group:
    master: MobilityModel
    slaves: List[GroupSlave] = field(default_factory=list)

    @property
    def nodes(self) -> List[MobilityModel]:
        return [self.master, *self.slaves]

    def advance(self, until: float) -> None:
        self.master.advance(until)
        for s in self.slaves:
            s.refresh()


def build_group(master: MobilityModel, slave_count: int, deviation: DeviationDist,
                constraint: Optional[Constraint], rng: np.random.Generator,
                max_iterations: int = 100, master_id=0) -> Group:
    """Attach ``slave_count`` slaves to an already-built master model."""
    if slave_count < 0:
        raise ValueError("slave_count must be >= 0")
    group = Group(master)
    for _ in range(slave_count):
        binding = bind_group(master_id, deviation, constraint, max_iterations, rng,
                             master.position)
        group.slaves.append(GroupSlave(master, binding, rng))
    return group
