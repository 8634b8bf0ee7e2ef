"""Unit-disk broadcast medium with transmission delay and energy charging."""

import math
from dataclasses import dataclass
from typing import Callable

from .engine import Engine, EventKind, RngStream
from .mobility import MobilityModel
from .proto_common import Data


@dataclass(slots=True)
class RadioParams:
    range: float = 250.0
    bandwidth: float = 2_000_000.0  # bits/s
    propagation_delay: float = 0.0  # s per meter
    per_frame_loss_prob: float = 0.0

    def validate(self) -> None:
        if self.range <= 0:
            raise ValueError("radio.range must be > 0")
        if self.bandwidth <= 0:
            raise ValueError("radio.bandwidth must be > 0")
        if not 0.0 <= self.per_frame_loss_prob <= 1.0:
            raise ValueError("radio.per_frame_loss_prob must be in [0, 1]")


class Radio:
    """Delivers frames to every alive node within range of the sender.

    Range membership is decided once per frame, at send time. Unicast frames
    (addressee set) are consumed only by the addressee; bystanders pay no
    energy. A unicast whose addressee is not reachable vanishes, which for
    data packets is recorded as a link-break loss.
    """

    def __init__(
        self,
        params: RadioParams,
        engine: Engine,
        mobility: MobilityModel,
        energy,
        metrics,
        trace,
        loss_rng: RngStream | None = None,
    ):
        params.validate()
        self.params = params
        self.engine = engine
        self.mobility = mobility
        self.energy = energy
        self.metrics = metrics
        self.trace = trace
        self.loss_rng = loss_rng
        self.deliver_fn: Callable | None = None
        # frames cluster at shared instants (flood waves, hello ticks), so
        # one whole-network position snapshot per timestamp pays off
        self._pos_time = -1.0
        self._pos_cache: list[tuple[float, float]] = []

    def tx_duration(self, size_bytes: int) -> float:
        return size_bytes * 8 / self.params.bandwidth

    def positions(self, t: float) -> list[tuple[float, float]]:
        if t != self._pos_time:
            mob = self.mobility
            self._pos_cache = [mob.position(n, t) for n in range(mob.node_count)]
            self._pos_time = t
        return self._pos_cache

    def neighbors(self, node: int, t: float) -> list[int]:
        """Alive nodes within range of `node` at time t, ascending id."""
        pos = self.positions(t)
        px, py = pos[node]
        rng2 = self.params.range * self.params.range
        out = []
        for other in range(self.mobility.node_count):
            if other == node or not self.energy.alive(other):
                continue
            ox, oy = pos[other]
            dx, dy = ox - px, oy - py
            if dx * dx + dy * dy <= rng2:
                out.append(other)
        return out

    def send(self, sender: int, packet, size_bytes: int, addressee: int | None = None) -> int:
        """Transmit a frame; returns the number of deliveries scheduled."""
        now = self.engine.now
        is_data = isinstance(packet, Data)
        kind = "data" if is_data else "control"
        if not self.energy.alive(sender):
            # A dead node transmits nothing; data it tried to send is lost.
            if is_data:
                self.metrics.on_dropped(packet, "dead_node")
                if self.trace.enabled:
                    self.trace.emit(now, sender, "drop", packet.pkt_id, "dead_node")
            return 0

        duration = self.tx_duration(size_bytes)
        self.energy.debit(sender, "tx", duration, kind)
        if not self.energy.alive(sender):
            # battery drained mid-transmission; the frame never completes
            if is_data:
                self.metrics.on_dropped(packet, "dead_node")
                if self.trace.enabled:
                    self.trace.emit(now, sender, "drop", packet.pkt_id, "dead_node")
            return 0
        if is_data:
            self.metrics.on_data_tx()
        else:
            self.metrics.on_control_tx()
        if self.trace.enabled:
            label = type(packet).__name__.lower()
            tgt = "*" if addressee is None else addressee
            pid = packet.pkt_id if is_data else "-"
            self.trace.emit(now, sender, f"tx_{label}", pid, f"to={tgt}")

        pos = self.positions(now)
        px, py = pos[sender]
        rng2 = self.params.range * self.params.range
        loss_p = self.params.per_frame_loss_prob
        if addressee is not None:
            candidates = (addressee,)
        else:
            candidates = range(self.mobility.node_count)
        receivers = []
        for recv in candidates:
            if recv == sender or not self.energy.alive(recv):
                continue
            ox, oy = pos[recv]
            dx, dy = ox - px, oy - py
            d2 = dx * dx + dy * dy
            if d2 > rng2:
                continue
            if loss_p > 0.0 and self.loss_rng is not None and self.loss_rng.random() < loss_p:
                continue
            receivers.append((recv, d2))
        if not receivers:
            if addressee is not None and is_data:
                # Unicast into the void: the frame reaches nobody.
                self.metrics.on_dropped(packet, "link_break")
                if self.trace.enabled:
                    self.trace.emit(now, sender, "drop", packet.pkt_id, "link_break")
            return 0
        if self.params.propagation_delay == 0.0:
            # one shared delivery instant; batching keeps ordering identical
            batch = tuple(recv for recv, _ in receivers)
            self.engine.schedule(
                now + duration,
                EventKind.FRAME_DELIVERY,
                lambda rs=batch, p=packet, s=sender, dur=duration, k=kind: self._deliver_batch(
                    rs, p, s, dur, k
                ),
            )
        else:
            for recv, d2 in receivers:
                delay = duration + self.params.propagation_delay * math.sqrt(d2)
                self.engine.schedule(
                    now + delay,
                    EventKind.FRAME_DELIVERY,
                    lambda rs=(recv,), p=packet, s=sender, dur=duration, k=kind: self._deliver_batch(
                        rs, p, s, dur, k
                    ),
                )
        return len(receivers)

    def _deliver_batch(
        self, receivers: tuple[int, ...], packet, sender: int, duration: float, kind: str
    ) -> None:
        energy = self.energy
        deliver = self.deliver_fn
        for recv in receivers:
            if not energy.alive(recv):
                continue
            energy.debit(recv, "rx", duration, kind)
            if not energy.alive(recv):
                # reception drained the battery; frame is not processed
                continue
            deliver(recv, packet, sender)
