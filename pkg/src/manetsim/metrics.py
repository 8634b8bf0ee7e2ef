"""Per-run packet ledger and derivation of the six report measurements."""

import math
from collections import Counter
from dataclasses import dataclass, field

from .engine import SimulationError
from .proto_common import Data


@dataclass(slots=True)
class PacketRecord:
    pkt_id: int
    flow_id: int
    data_seq: int
    size: int
    sent_at: float
    delivered_at: float | None = None
    drop_cause: str | None = None
    hops: int = 0
    traversed: tuple[int, ...] = ()
    source_route: tuple[int, ...] = ()

    @property
    def terminal(self) -> bool:
        return self.delivered_at is not None or self.drop_cause is not None


@dataclass(slots=True)
class MetricsReport:
    sent: int
    delivered: int
    in_flight: int
    drop_breakdown: dict[str, int]
    throughput_kbps: float
    avg_e2e_delay: float  # nan when nothing was delivered
    pdr: float
    loss_ratio: float
    nrl: float  # nan when nothing was delivered
    control_transmissions: int
    data_transmissions: int
    network_energy_j: float
    routing_energy_j: float
    energy_series: list[tuple[float, float, float]]
    protocol_events: dict[str, int]
    records: list[PacketRecord]

    @property
    def dropped(self) -> int:
        return sum(self.drop_breakdown.values())


class PacketLedger:
    """Records every data packet's lifecycle exactly once per stage."""

    def __init__(self) -> None:
        self.records: dict[int, PacketRecord] = {}
        self.control_transmissions = 0
        self.data_transmissions = 0
        self.deliveries = 0
        self.energy_series: list[tuple[float, float, float]] = []
        self.events: Counter = Counter()  # protocol lifecycle counters

    # -- lifecycle ----------------------------------------------------------

    def on_sent(self, pkt: Data) -> None:
        if pkt.pkt_id in self.records:
            raise SimulationError(f"packet {pkt.pkt_id} sent twice")
        self.records[pkt.pkt_id] = PacketRecord(
            pkt.pkt_id, pkt.flow_id, pkt.data_seq, pkt.payload_size, pkt.sent_at
        )

    def on_delivered(self, pkt: Data, t: float) -> None:
        rec = self.records[pkt.pkt_id]
        if rec.terminal:
            raise SimulationError(
                f"duplicate terminal state for packet {pkt.pkt_id} "
                f"(routing loop or duplication bug)"
            )
        rec.delivered_at = t
        rec.hops = max(len(pkt.traversed) - 1, 0)
        rec.traversed = tuple(pkt.traversed)
        rec.source_route = tuple(pkt.source_route)
        self.deliveries += 1

    def on_dropped(self, pkt: Data, cause: str) -> None:
        rec = self.records[pkt.pkt_id]
        if rec.terminal:
            raise SimulationError(f"duplicate terminal state for packet {pkt.pkt_id}")
        rec.drop_cause = cause
        rec.traversed = tuple(pkt.traversed)

    def on_control_tx(self) -> None:
        self.control_transmissions += 1

    def on_data_tx(self) -> None:
        self.data_transmissions += 1

    def on_event(self, name: str) -> None:
        self.events[name] += 1

    def sample_energy(self, t: float, network_j: float, routing_j: float) -> None:
        self.energy_series.append((t, network_j, routing_j))

    # -- derivation ---------------------------------------------------------

    def finalize(self, duration: float, energy_ledger=None) -> MetricsReport:
        recs = list(self.records.values())
        sent = len(recs)
        delivered = [r for r in recs if r.delivered_at is not None]
        drops = Counter(r.drop_cause for r in recs if r.drop_cause is not None)
        in_flight = sent - len(delivered) - sum(drops.values())

        delivered_bytes = sum(r.size for r in delivered)
        throughput = delivered_bytes * 8 / duration / 1000 if duration > 0 else 0.0
        if delivered:
            delay = sum(r.delivered_at - r.sent_at for r in delivered) / len(delivered)
            nrl = self.control_transmissions / len(delivered)
        else:
            delay = math.nan
            nrl = math.nan
        pdr = len(delivered) / sent if sent else 0.0
        loss = (sent - len(delivered) - in_flight) / sent if sent else 0.0

        network_j = routing_j = 0.0
        if energy_ledger is not None:
            network_j = energy_ledger.network_consumed()
            routing_j = energy_ledger.routing_consumed()
            if self.energy_series:
                last_t, last_net, last_routing = self.energy_series[-1]
                if last_t == duration and (
                    last_net != network_j or last_routing != routing_j
                ):
                    raise SimulationError("energy series diverged from ledger totals")

        return MetricsReport(
            sent=sent,
            delivered=len(delivered),
            in_flight=in_flight,
            drop_breakdown=dict(sorted(drops.items())),
            throughput_kbps=throughput,
            avg_e2e_delay=delay,
            pdr=pdr,
            loss_ratio=loss,
            nrl=nrl,
            control_transmissions=self.control_transmissions,
            data_transmissions=self.data_transmissions,
            network_energy_j=network_j,
            routing_energy_j=routing_j,
            energy_series=list(self.energy_series),
            protocol_events=dict(sorted(self.events.items())),
            records=recs,
        )
