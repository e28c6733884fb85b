"""Position traces: CSV files and NS-2 movement scripts.

A trace is a list of ``(time, node, x, y)`` records.  The CSV form keeps
every record; the NS-2 form keeps only the points where a node's velocity
changes, which is what ``setdest`` needs.
"""

from __future__ import annotations

import csv
import math
import re
from collections import defaultdict
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple, Union

from .errors import TraceError

TraceRow = Tuple[float, int, float, float]
PathLike = Union[str, Path]

TRACE_COLUMNS = ("time_s", "node", "x_m", "y_m")

# relative tolerance when deciding two legs share a velocity
_VEL_RTOL = 1e-9


def _fmt(v: float) -> str:
    return "%.10g" % v


def write_trace_csv(rows: Iterable[TraceRow], path: PathLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for t, node, x, y in rows:
            w.writerow((repr(float(t)), int(node), repr(float(x)), repr(float(y))))


def read_trace_csv(path: PathLike) -> List[TraceRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [(float(r["time_s"]), int(r["node"]), float(r["x_m"]), float(r["y_m"]))
                for r in reader]


def split_by_node(rows: Iterable[TraceRow]) -> Dict[int, List[Tuple[float, float, float]]]:
    """Per-node ``(t, x, y)`` lists; timestamps must strictly increase."""
    per_node: Dict[int, List[Tuple[float, float, float]]] = defaultdict(list)
    last_t = -math.inf
    for t, node, x, y in rows:
        if not all(math.isfinite(v) for v in (t, x, y)):
            raise TraceError(f"non-finite trace record {(t, node, x, y)}")
        if t < last_t:
            raise TraceError(f"trace not sorted by time: {t} after {last_t}")
        last_t = t
        seq = per_node[int(node)]
        if seq and t <= seq[-1][0]:
            raise TraceError(f"duplicate timestamp {t} for node {node}")
        seq.append((float(t), float(x), float(y)))
    return dict(per_node)


def _legs(points: Sequence[Tuple[float, float, float]]):
    """Merge consecutive constant-velocity pieces into (t0, t1, x1, y1, speed)."""
    legs = []
    for (t0, x0, y0), (t1, x1, y1) in zip(points, points[1:]):
        dt = t1 - t0
        vx, vy = (x1 - x0) / dt, (y1 - y0) / dt
        if legs:
            pt0, _, _, _, pvx, pvy = legs[-1]
            scale = 1.0 + math.hypot(pvx, pvy)
            if abs(vx - pvx) <= _VEL_RTOL * scale and abs(vy - pvy) <= _VEL_RTOL * scale:
                legs[-1] = (pt0, t1, x1, y1, pvx, pvy)
                continue
        legs.append((t0, t1, x1, y1, vx, vy))
    return legs


def export_ns2_trace(positions: Iterable[TraceRow], path: PathLike) -> int:
    """Write an NS-2 movement script; returns the number of setdest lines.

    Each node gets its initial ``set X_``/``set Y_`` lines, then one
    ``setdest`` per constant-velocity leg.  Pauses emit nothing: the node
    simply waits at its last destination.
    """
    per_node = split_by_node(positions)
    header: List[str] = []
    moves: List[Tuple[float, int, str]] = []
    for node in sorted(per_node):
        pts = per_node[node]
        _, x0, y0 = pts[0]
        header.append(f"$node_({node}) set X_ {_fmt(x0)}")
        header.append(f"$node_({node}) set Y_ {_fmt(y0)}")
        for t0, t1, x1, y1, vx, vy in _legs(pts):
            speed = math.hypot(vx, vy)
            if speed == 0.0:
                continue
            moves.append((t0, node, f'$ns_ at {_fmt(t0)} "$node_({node}) setdest '
                                    f'{_fmt(x1)} {_fmt(y1)} {_fmt(speed)}"'))
    moves.sort(key=lambda m: (m[0], m[1]))
    with open(path, "w") as fh:
        for line in header:
            fh.write(line + "\n")
        for _, _, line in moves:
            fh.write(line + "\n")
    return len(moves)


_SET_RE = re.compile(r"^\$node_\((\d+)\) set ([XYZ])_ (\S+)$")
_AT_RE = re.compile(r'^\$ns_ at (\S+) "\$node_\((\d+)\) setdest (\S+) (\S+) (\S+)"$')


def load_ns2_trace(path: PathLike):
    """Parse an NS-2 movement script.

    Returns ``(initial, commands)``: ``initial[node] = (x, y)`` and
    ``commands`` a list of ``(t, node, x, y, speed)`` in file order.
    """
    initial: Dict[int, List[float]] = {}
    commands = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            m = _SET_RE.match(line)
            if m:
                node, axis, val = int(m.group(1)), m.group(2), float(m.group(3))
                if axis != "Z":
                    initial.setdefault(node, [0.0, 0.0])["XY".index(axis)] = val
                continue
            m = _AT_RE.match(line)
            if m:
                commands.append((float(m.group(1)), int(m.group(2)), float(m.group(3)),
                                 float(m.group(4)), float(m.group(5))))
                continue
            raise TraceError(f"{path}:{lineno}: unrecognised line {line!r}")
    return {n: (xy[0], xy[1]) for n, xy in initial.items()}, commands
