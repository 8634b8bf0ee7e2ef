"""Deterministic discrete-event scheduler with labelled random streams."""

import hashlib
import heapq
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

# Events closer together than this are treated as simultaneous and fall
# back to FIFO insertion order.
TIME_EPSILON = 1e-9


class SimulationError(Exception):
    """Hard fault: indicates a simulator bug, aborts the run."""


class EventKind(Enum):
    FRAME_DELIVERY = "frame"
    TIMER = "timer"
    TRAFFIC_TICK = "traffic"
    MOBILITY_WAYPOINT = "waypoint"


@dataclass(slots=True)
class Event:
    """A unit of scheduled work; ``fn`` runs when the clock reaches ``time``."""

    time: float
    kind: EventKind
    fn: Callable[[], None]
    seq: int = -1
    cancelled: bool = False


class Engine:
    """Virtual-clock event loop.

    Events are processed in strictly non-decreasing time order; ties are
    broken FIFO by insertion counter, so a run is fully reproducible.
    """

    def __init__(self) -> None:
        self.now = 0.0
        self._heap: list[tuple[float, int, Event]] = []
        self._counter = 0
        self.processed = 0

    def schedule(self, time: float, kind: EventKind, fn: Callable[[], None]) -> Event:
        """Enqueue work at ``time``; returns a handle usable with cancel()."""
        if time < self.now:
            if self.now - time <= TIME_EPSILON:
                time = self.now
            else:
                raise SimulationError(
                    f"scheduled event at t={time} in the past (clock={self.now})"
                )
        ev = Event(time, kind, fn, seq=self._counter)
        self._counter += 1
        heapq.heappush(self._heap, (time, ev.seq, ev))
        return ev

    def cancel(self, handle: Event) -> None:
        handle.cancelled = True

    def run_until(self, t_end: float) -> int:
        """Process every event with time <= t_end; clock finishes at t_end."""
        if t_end < self.now:
            raise SimulationError(f"run_until({t_end}) behind clock {self.now}")
        processed = 0
        heap = self._heap
        while heap and heap[0][0] <= t_end:
            time, _, ev = heapq.heappop(heap)
            if ev.cancelled:
                continue
            self.now = time
            ev.fn()
            processed += 1
        self.now = t_end
        self.processed += processed
        return processed


class RngStream(random.Random):
    """Pseudo-random stream derived from (master seed, label).

    Equal (seed, label) pairs reproduce the exact same sequence; distinct
    labels give independent streams, so subsystems can be added without
    perturbing each other's draws.
    """

    def __new__(cls, master_seed: int, label: str):
        return super().__new__(cls)

    def __init__(self, master_seed: int, label: str):
        digest = hashlib.sha256(f"{master_seed}:{label}".encode()).digest()
        super().__init__(int.from_bytes(digest[:8], "big"))
        self.label = label


@dataclass(slots=True)
class StreamFactory:
    """Hands out labelled RngStreams off one master seed."""

    master_seed: int
    _cache: dict = field(default_factory=dict)

    def stream(self, label: str) -> RngStream:
        if label not in self._cache:
            self._cache[label] = RngStream(self.master_seed, label)
        return self._cache[label]
