"""Planar geometry: axis-aligned boxes, segment tests and rectangle rebounds.

Boxes are closed sets; a point on the boundary is inside, and a segment
that touches a box edge or corner intersects it.  All functions are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .errors import PlacementError


class Point2(NamedTuple):
    x: float
    y: float


# Velocities share the representation: (vx, vy) in m/s.
Vector2 = Point2


@dataclass(frozen=True, slots=True)
class Box:
    """Axis-aligned rectangle in meters."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        vals = (self.x_min, self.x_max, self.y_min, self.y_max)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite box coordinates {vals}")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"degenerate box {vals}")

    @classmethod
    def from_corner(cls, x: float, y: float, width: float, height: float) -> "Box":
        return cls(x, x + width, y, y + height)

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> Point2:
        return Point2(0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))

    def expanded(self, margin: float) -> "Box":
        return Box(self.x_min - margin, self.x_max + margin,
                   self.y_min - margin, self.y_max + margin)

    def overlaps(self, other: "Box", gap: float = 0.0) -> bool:
        """True if the boxes are closer than ``gap`` (touching counts for gap 0)."""
        return not (self.x_max + gap < other.x_min or other.x_max + gap < self.x_min
                    or self.y_max + gap < other.y_min or other.y_max + gap < self.y_min)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.x_max, self.y_min, self.y_max)


# The walker's bounding rectangle uses the same type.
Bounds = Box


def contains(box: Box, p: Sequence[float]) -> bool:
    return box.x_min <= p[0] <= box.x_max and box.y_min <= p[1] <= box.y_max


def is_outdoor(p: Sequence[float], bounds: Optional[Box], boxes: Iterable[Box]) -> bool:
    """In ``bounds`` (if given) and outside every box."""
    if bounds is not None and not contains(bounds, p):
        return False
    return not any(contains(b, p) for b in boxes)


def segment_intersects_box(a: Sequence[float], b: Sequence[float], box: Box) -> bool:
    """Separating-axis test between the closed segment ``ab`` and ``box``.

    Candidate axes are the two box axes and the segment normal.  Endpoints
    are put in a canonical order first so the result is exactly symmetric
    in ``a`` and ``b`` under floating point.
    """
    ax, ay = a[0], a[1]
    bx, by = b[0], b[1]
    if (bx, by) < (ax, ay):
        ax, ay, bx, by = bx, by, ax, ay
    # box axes: interval overlap of the projections
    if (ax if ax > bx else bx) < box.x_min or (ax if ax < bx else bx) > box.x_max:
        return False
    if (ay if ay > by else by) < box.y_min or (ay if ay < by else by) > box.y_max:
        return False
    # an endpoint inside decides it exactly; the normal axis can round away
    if (box.x_min <= ax <= box.x_max and box.y_min <= ay <= box.y_max) or \
            (box.x_min <= bx <= box.x_max and box.y_min <= by <= box.y_max):
        return True
    nx = ay - by
    ny = bx - ax
    if nx == 0.0 and ny == 0.0:
        return True  # degenerate segment already inside both slabs
    c = nx * ax + ny * ay
    if nx >= 0.0:
        lo_x, hi_x = nx * box.x_min, nx * box.x_max
    else:
        lo_x, hi_x = nx * box.x_max, nx * box.x_min
    if ny >= 0.0:
        lo_y, hi_y = ny * box.y_min, ny * box.y_max
    else:
        lo_y, hi_y = ny * box.y_max, ny * box.y_min
    return lo_x + lo_y <= c <= hi_x + hi_y


def is_line_clear(a: Sequence[float], b: Sequence[float], boxes: Iterable[Box]) -> bool:
    for box in boxes:
        if segment_intersects_box(a, b, box):
            return False
    return True


def clear_matrix(starts: Sequence[Sequence[float]], ends: Sequence[Sequence[float]],
                 boxes: Sequence[Box]) -> np.ndarray:
    """Vectorised ``is_line_clear`` for every (start, end) pair.

    Returns a boolean array of shape ``(len(starts), len(ends))``.  The
    arithmetic mirrors :func:`segment_intersects_box` term by term, so both
    agree exactly.
    """
    a = np.asarray(starts, dtype=float).reshape(-1, 2)
    b = np.asarray(ends, dtype=float).reshape(-1, 2)
    shape = (a.shape[0], b.shape[0])
    if not boxes or 0 in shape:
        return np.ones(shape, dtype=bool)
    ax, ay = np.broadcast_to(a[:, 0:1], shape), np.broadcast_to(a[:, 1:2], shape)
    bx, by = np.broadcast_to(b[None, :, 0], shape), np.broadcast_to(b[None, :, 1], shape)
    swap = (bx < ax) | ((bx == ax) & (by < ay))
    ax, bx = np.where(swap, bx, ax), np.where(swap, ax, bx)
    ay, by = np.where(swap, by, ay), np.where(swap, ay, by)
    ax, ay, bx, by = (v[..., None] for v in (ax, ay, bx, by))
    arr = np.array([bx_.as_tuple() for bx_ in boxes], dtype=float)
    x0, x1, y0, y1 = arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]
    hit = ~((np.maximum(ax, bx) < x0) | (np.minimum(ax, bx) > x1)
            | (np.maximum(ay, by) < y0) | (np.minimum(ay, by) > y1))
    nx = ay - by
    ny = bx - ax
    c = nx * ax + ny * ay
    pos_x = nx >= 0.0
    pos_y = ny >= 0.0
    lo = np.where(pos_x, nx * x0, nx * x1) + np.where(pos_y, ny * y0, ny * y1)
    hi = np.where(pos_x, nx * x1, nx * x0) + np.where(pos_y, ny * y1, ny * y0)
    degenerate = (nx == 0.0) & (ny == 0.0)
    ends_in = (((x0 <= ax) & (ax <= x1) & (y0 <= ay) & (ay <= y1))
               | ((x0 <= bx) & (bx <= x1) & (y0 <= by) & (by <= y1)))
    hit &= degenerate | ends_in | ((lo <= c) & (c <= hi))
    return ~hit.any(axis=-1)


def first_hit_parameter(a: Sequence[float], b: Sequence[float], box: Box) -> Optional[float]:
    """Smallest t in [0, 1] with ``a + t (b - a)`` in the box, by slab clipping.

    Returns None when the segment misses the box and 0.0 when ``a`` is
    already inside it.
    """
    t0, t1 = 0.0, 1.0
    for p, d, lo, hi in ((a[0], b[0] - a[0], box.x_min, box.x_max),
                         (a[1], b[1] - a[1], box.y_min, box.y_max)):
        if d == 0.0:
            if p < lo or p > hi:
                return None
            continue
        ta = (lo - p) / d
        tb = (hi - p) / d
        if ta > tb:
            ta, tb = tb, ta
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
        if t0 > t1:
            return None
    return t0


def exit_parameter(a: Sequence[float], b: Sequence[float], bounds: Box) -> tuple[float, bool, bool]:
    """Fraction along ``ab`` at which the segment leaves ``bounds``.

    ``a`` must lie inside ``bounds``.  Returns ``(t, hit_x, hit_y)`` where
    t is 1.0 if the segment stays inside, and the flags tell which pair of
    edges is crossed at t (both at a corner).
    """
    tx = ty = 1.0
    dx = b[0] - a[0]
    dy = b[1] - a[1]
    if b[0] > bounds.x_max:
        tx = (bounds.x_max - a[0]) / dx
    elif b[0] < bounds.x_min:
        tx = (bounds.x_min - a[0]) / dx
    if b[1] > bounds.y_max:
        ty = (bounds.y_max - a[1]) / dy
    elif b[1] < bounds.y_min:
        ty = (bounds.y_min - a[1]) / dy
    t = min(tx, ty)
    if t >= 1.0:
        return 1.0, False, False
    return max(t, 0.0), tx <= t, ty <= t


def sample_outdoor_position(bounds: Box, boxes: Sequence[Box], rng: np.random.Generator,
                            max_attempts: int = 1000) -> Point2:
    """Uniform point in ``bounds`` outside every box, by rejection sampling."""
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    for _ in range(max_attempts):
        p = Point2(float(rng.uniform(bounds.x_min, bounds.x_max)),
                   float(rng.uniform(bounds.y_min, bounds.y_max)))
        if not any(contains(box, p) for box in boxes):
            return p
    raise PlacementError(
        f"no outdoor position found in bounds {bounds.as_tuple()} with "
        f"{len(boxes)} boxes after {max_attempts} attempts")


def reflect_in_rectangle(p: Sequence[float], v: Sequence[float],
                         bounds: Box) -> tuple[Point2, Vector2]:
    """Mirror an overshooting position back into ``bounds``.

    Each violated edge mirrors the coordinate and flips the matching
    velocity component; repeated until the point is inside.
    """
    x, y = p[0], p[1]
    vx, vy = v[0], v[1]
    while not (bounds.x_min <= x <= bounds.x_max):
        if x < bounds.x_min:
            x = 2.0 * bounds.x_min - x
        else:
            x = 2.0 * bounds.x_max - x
        vx = -vx
    while not (bounds.y_min <= y <= bounds.y_max):
        if y < bounds.y_min:
            y = 2.0 * bounds.y_min - y
        else:
            y = 2.0 * bounds.y_max - y
        vy = -vy
    return Point2(x, y), Vector2(vx, vy)


def distance(a: Sequence[float], b: Sequence[float]) -> float:
    return math.hypot(b[0] - a[0], b[1] - a[1])
