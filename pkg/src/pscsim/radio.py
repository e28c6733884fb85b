"""Abstract link models standing in for the LTE and mmWave stacks.

There is no PHY here.  LTE is a coverage layer with a fixed cell capacity,
and a mmWave link delivers a distance-dependent line-of-sight rate that a
blocked path scales down by a constant factor.  Station resources are
shared max-min fairly.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

from .errors import RadioConfigError
from .geometry import Box, is_line_clear

LTE = "lte"
MMWAVE_BS = "mmwave_bs"
MMWAVE_RELAY = "mmwave_relay"
STATION_KINDS = (LTE, MMWAVE_BS, MMWAVE_RELAY)

POLICY_BEST = "best"
POLICY_PREFER_LTE = "prefer-lte"

# peak LOS rate per (bs antennas, ue antennas) at zero distance, bit/s
DEFAULT_PEAK_RATES = {(16, 4): 150e6, (64, 4): 400e6, (64, 16): 650e6}
DEFAULT_MAX_RANGE = 200.0

Curve = Tuple[Tuple[float, float], ...]


def default_los_curves(max_range: float = DEFAULT_MAX_RANGE) -> Dict[Tuple[int, int], Curve]:
    # linear decay to 20% of the peak at the edge of coverage
    return {cfg: ((0.0, peak), (max_range, 0.2 * peak))
            for cfg, peak in DEFAULT_PEAK_RATES.items()}


def _interp(curve: Curve, d: float) -> float:
    ds = [p[0] for p in curve]
    if d <= ds[0]:
        return curve[0][1]
    if d >= ds[-1]:
        return curve[-1][1]
    k = bisect.bisect_right(ds, d)
    (d0, r0), (d1, r1) = curve[k - 1], curve[k]
    return r0 + (r1 - r0) * (d - d0) / (d1 - d0)


@dataclass(frozen=True)
class LinkModelParams:
    lte_cell_capacity: float = 70e6
    # scheduler/protocol overhead folded into the usable LTE capacity
    lte_efficiency: float = 0.95
    mmwave_los_curves: Dict[Tuple[int, int], Curve] = field(default_factory=default_los_curves)
    mmwave_nlos_factor: float = 0.05
    mmwave_max_range: float = DEFAULT_MAX_RANGE
    relay_backhaul_share: float = 0.5

    def __post_init__(self):
        if self.lte_cell_capacity < 0 or not 0 < self.lte_efficiency <= 1:
            raise RadioConfigError("invalid LTE capacity or efficiency")
        if not 0.0 <= self.mmwave_nlos_factor <= 1.0:
            raise RadioConfigError("mmwave_nlos_factor must be in [0, 1]")
        if not 0.0 < self.relay_backhaul_share <= 1.0:
            raise RadioConfigError("relay_backhaul_share must be in (0, 1]")
        if not self.mmwave_max_range > 0:
            raise RadioConfigError("mmwave_max_range must be positive")
        curves = {}
        for cfg, pts in self.mmwave_los_curves.items():
            pts = tuple((float(d), float(r)) for d, r in pts)
            if not pts:
                raise RadioConfigError(f"empty rate curve for {cfg}")
            if any(r < 0 for _, r in pts):
                raise RadioConfigError(f"negative rate in curve for {cfg}")
            if any(b[0] <= a[0] for a, b in zip(pts, pts[1:])):
                raise RadioConfigError(f"curve distances for {cfg} must increase")
            if any(b[1] > a[1] for a, b in zip(pts, pts[1:])):
                raise RadioConfigError(f"rate curve for {cfg} must not increase with distance")
            curves[(int(cfg[0]), int(cfg[1]))] = pts
        object.__setattr__(self, "mmwave_los_curves", curves)
        self._check_antenna_order()

    def _check_antenna_order(self):
        probes = sorted({d for pts in self.mmwave_los_curves.values() for d, _ in pts})
        for a in self.mmwave_los_curves:
            for b in self.mmwave_los_curves:
                if a != b and a[0] <= b[0] and a[1] <= b[1]:
                    ca, cb = self.mmwave_los_curves[a], self.mmwave_los_curves[b]
                    if any(_interp(ca, d) > _interp(cb, d) for d in probes):
                        raise RadioConfigError(
                            f"rate curve {a} exceeds {b} despite fewer antennas")

    @property
    def lte_usable_capacity(self) -> float:
        return self.lte_cell_capacity * self.lte_efficiency

    def los_curve(self, antennas_bs: int, antennas_ue: int) -> Curve:
        try:
            return self.mmwave_los_curves[(antennas_bs, antennas_ue)]
        except KeyError:
            known = ", ".join(f"{b}x{u}" for b, u in sorted(self.mmwave_los_curves))
            raise RadioConfigError(
                f"unknown antenna configuration {antennas_bs}x{antennas_ue} (known: {known})"
            ) from None

    def to_document(self) -> dict:
        return {
            "lte_cell_capacity": self.lte_cell_capacity,
            "lte_efficiency": self.lte_efficiency,
            "mmwave_los_curves": {f"{b}x{u}": [list(p) for p in pts]
                                  for (b, u), pts in sorted(self.mmwave_los_curves.items())},
            "mmwave_nlos_factor": self.mmwave_nlos_factor,
            "mmwave_max_range": self.mmwave_max_range,
            "relay_backhaul_share": self.relay_backhaul_share,
        }

    @classmethod
    def from_document(cls, doc: dict) -> "LinkModelParams":
        kwargs = dict(doc)
        if "mmwave_los_curves" in kwargs:
            curves = {}
            for key, pts in kwargs["mmwave_los_curves"].items():
                b, u = key.lower().split("x")
                curves[(int(b), int(u))] = tuple(tuple(p) for p in pts)
            kwargs["mmwave_los_curves"] = curves
        return cls(**kwargs)


@dataclass(frozen=True)
class LinkAssessment:
    station_id: int
    los: bool
    achievable_rate: float
    kind: str = MMWAVE_BS


def is_los(a: Sequence[float], b: Sequence[float], boxes: Sequence[Box]) -> bool:
    return is_line_clear(a, b, boxes)


def link_rate(kind: str, params: LinkModelParams, los: bool, antennas_bs: int,
              antennas_ue: int, distance: float) -> float:
    """Achievable rate in bit/s of a single link."""
    if distance < 0:
        raise ValueError("distance must be >= 0")
    if kind == LTE:
        return params.lte_cell_capacity
    if kind not in (MMWAVE_BS, MMWAVE_RELAY, "mmwave"):
        raise RadioConfigError(f"unknown link kind {kind!r}")
    curve = params.los_curve(antennas_bs, antennas_ue)
    if distance > params.mmwave_max_range:
        return 0.0
    rate = _interp(curve, distance)
    return rate if los else rate * params.mmwave_nlos_factor


def allocate(flows: Sequence[Tuple[Hashable, float, float]],
             capacity: float) -> List[Tuple[Hashable, float]]:
    """Max-min fair split of ``capacity`` by progressive filling.

    Each entry is ``(flow_id, achievable_rate, offered_rate)``; a flow never
    gets more than either of its own two rates.  Output keeps input order.
    """
    if capacity < 0:
        raise ValueError("capacity must be >= 0")
    caps = []
    for fid, achievable, offered in flows:
        if achievable < 0 or offered < 0:
            raise ValueError(f"negative rate for flow {fid!r}")
        caps.append(min(achievable, offered))
    granted = [0.0] * len(caps)
    order = sorted(range(len(caps)), key=lambda i: caps[i])
    left = capacity
    for rank, i in enumerate(order):
        share = left / (len(order) - rank)
        if caps[i] <= share:
            granted[i] = caps[i]
            left -= caps[i]
        else:
            for j in order[rank:]:
                granted[j] = share
            break
    return [(flows[i][0], granted[i]) for i in range(len(flows))]


def share_airtime(flows: Sequence[Tuple[Hashable, float, float]], airtime: float = 1.0,
                  active: Optional[Sequence[float]] = None) -> List[Tuple[Hashable, float]]:
    """Processor sharing of a time-division station.

    Airtime is split max-min fairly; a flow's demand is the fraction of time
    it needs at its own link rate, and its grant is that airtime times the
    rate.  A station therefore never delivers more than its best link rate.
    ``airtime`` is the budget to split and ``active`` optionally caps each
    flow's share (the part of the interval in which it exists).
    """
    if airtime < 0:
        raise ValueError("airtime must be >= 0")
    if active is not None and len(active) != len(flows):
        raise ValueError("active must match flows")
    demands = []
    for i, (fid, achievable, offered) in enumerate(flows):
        if achievable < 0 or offered < 0:
            raise ValueError(f"negative rate for flow {fid!r}")
        limit = 1.0 if active is None else active[i]
        demand = min(limit, offered / achievable) if achievable > 0 else 0.0
        demands.append((fid, limit, demand))
    shares = allocate(demands, airtime)
    return [(fid, share * flows[i][1]) for i, (fid, share) in enumerate(shares)]


def select_link(assessments: Sequence[LinkAssessment], policy: str = POLICY_BEST) -> int:
    if not assessments:
        raise ValueError("select_link needs at least one assessment")
    if policy == POLICY_PREFER_LTE:
        lte = [a for a in assessments if a.kind == LTE]
        if lte:
            return min(a.station_id for a in lte)
    elif policy != POLICY_BEST:
        raise ValueError(f"unknown link selection policy {policy!r}")
    best = max(assessments, key=lambda a: (a.achievable_rate, -a.station_id))
    return best.station_id


def relay_path_rate(access_rate: float, backhaul_rate: float, params: LinkModelParams) -> float:
    if access_rate < 0 or backhaul_rate < 0:
        raise ValueError("rates must be >= 0")
    return min(access_rate, backhaul_rate) * params.relay_backhaul_share


def capacity_of(kind: str, params: LinkModelParams, achievable_rates: Sequence[float]) -> float:
    """Upper bound on what a station can deliver in one second."""
    if kind == LTE:
        return params.lte_usable_capacity
    return max(achievable_rates, default=0.0)

