"""Random-waypoint mobility with exact analytic position queries."""

import math
from bisect import bisect_right
from dataclasses import dataclass

from .engine import RngStream


@dataclass(slots=True)
class MobilityParams:
    area: tuple[float, float] = (800.0, 600.0)
    v_max: float = 5.0
    v_min: float = 0.5
    pause_time: float = 0.0

    def validate(self) -> None:
        if self.area[0] <= 0 or self.area[1] <= 0:
            raise ValueError("mobility.area dimensions must be > 0")
        if not (0 < self.v_min <= self.v_max):
            raise ValueError("mobility speeds must satisfy 0 < v_min <= v_max")
        if self.pause_time < 0:
            raise ValueError("mobility.pause_time must be >= 0")


@dataclass(slots=True)
class WaypointLeg:
    """One move-then-pause segment: travel start->end, then dwell."""

    start_pos: tuple[float, float]
    end_pos: tuple[float, float]
    depart_time: float
    speed: float
    pause_after: float

    @property
    def travel_time(self) -> float:
        if self.speed <= 0.0:
            return 0.0
        return math.dist(self.start_pos, self.end_pos) / self.speed

    @property
    def arrival_time(self) -> float:
        return self.depart_time + self.travel_time


def generate_schedule(
    params: MobilityParams, horizon: float, rng: RngStream
) -> list[WaypointLeg]:
    """Waypoint legs covering [0, horizon].

    The node pauses at its initial placement for pause_time before the
    first move, so pause_time >= horizon degenerates to a static node.
    """
    if horizon <= 0:
        raise ValueError("horizon must be > 0")
    w, h = params.area
    pos = (rng.uniform(0.0, w), rng.uniform(0.0, h))
    legs = [WaypointLeg(pos, pos, 0.0, 0.0, params.pause_time)]
    t = params.pause_time
    while t < horizon:
        target = (rng.uniform(0.0, w), rng.uniform(0.0, h))
        speed = rng.uniform(params.v_min, params.v_max)
        leg = WaypointLeg(pos, target, t, speed, params.pause_time)
        legs.append(leg)
        t = leg.arrival_time + params.pause_time
        pos = target
    return legs


def position_at(legs: list[WaypointLeg], t: float) -> tuple[float, float]:
    """Exact position at time t: linear along the current leg, fixed in pauses."""
    idx = bisect_right(_depart_times(legs), t) - 1
    if idx < 0:
        idx = 0
    leg = legs[idx]
    dt = t - leg.depart_time
    travel = leg.travel_time
    if dt >= travel:
        return leg.end_pos
    frac = dt / travel
    x0, y0 = leg.start_pos
    x1, y1 = leg.end_pos
    return (x0 + (x1 - x0) * frac, y0 + (y1 - y0) * frac)


def _depart_times(legs: list[WaypointLeg]) -> list[float]:
    return [leg.depart_time for leg in legs]


class MobilityModel:
    """Per-node waypoint schedules generated once, queried analytically."""

    def __init__(self, schedules: list[list[WaypointLeg]]):
        self.schedules = schedules
        self._departs = [[leg.depart_time for leg in legs] for legs in schedules]

    @classmethod
    def generate(
        cls,
        node_count: int,
        params: MobilityParams,
        horizon: float,
        stream_for: "callable",
    ) -> "MobilityModel":
        params.validate()
        schedules = [
            generate_schedule(params, horizon, stream_for(f"mobility/{node}"))
            for node in range(node_count)
        ]
        return cls(schedules)

    @property
    def node_count(self) -> int:
        return len(self.schedules)

    def position(self, node: int, t: float) -> tuple[float, float]:
        legs = self.schedules[node]
        idx = bisect_right(self._departs[node], t) - 1
        if idx < 0:
            idx = 0
        leg = legs[idx]
        dt = t - leg.depart_time
        travel = leg.travel_time
        if dt >= travel:
            return leg.end_pos
        frac = dt / travel
        x0, y0 = leg.start_pos
        x1, y1 = leg.end_pos
        return (x0 + (x1 - x0) * frac, y0 + (y1 - y0) * frac)

    def export_text(self) -> str:
        """Line-based schedule dump: 'node time x y speed pause'."""
        lines = []
        for node, legs in enumerate(self.schedules):
            for leg in legs:
                lines.append(
                    f"{node} {leg.depart_time:.6f} {leg.end_pos[0]:.3f} "
                    f"{leg.end_pos[1]:.3f} {leg.speed:.3f} {leg.pause_after:.3f}"
                )
        return "\n".join(lines) + "\n"
