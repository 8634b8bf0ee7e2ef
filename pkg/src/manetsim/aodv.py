"""On-demand distance-vector routing: flooded requests, unicast replies,
hop-by-hop table forwarding, local repair, and error propagation."""

from dataclasses import dataclass, field

from .engine import EventKind
from .proto_common import (
    Data,
    Rerr,
    Rrep,
    Rreq,
    RouterBase,
    RoutingTableEntry,
    fresher,
)


@dataclass(slots=True)
class PendingDiscovery:
    dest: int
    attempts_left: int
    requested_seq: int
    buffered: list = field(default_factory=list)
    timer: object = None


@dataclass(slots=True)
class RepairState:
    dest: int
    broken_hop: int
    precursors: set
    buffered: list = field(default_factory=list)
    timer: object = None


class AodvRouter(RouterBase):
    def __init__(self, node, ctx):
        super().__init__(node, ctx)
        self.table: dict[int, RoutingTableEntry] = {}
        self.pending: dict[int, PendingDiscovery] = {}
        self.repairs: dict[int, RepairState] = {}
        self.rreq_seen: dict[tuple[int, int], float] = {}
        self.last_dest_seq: dict[int, int] = {}
        self.sourced: set[int] = set()

    # -- helpers -------------------------------------------------------------

    def _valid_entry(self, dest: int) -> RoutingTableEntry | None:
        e = self.table.get(dest)
        if e is not None and e.valid(self.now):
            return e
        return None

    def _update_route(
        self, dest: int, next_hop: int, hops: int, seq: int, lifetime: float = 0.0
    ) -> RoutingTableEntry:
        life = lifetime if lifetime > 0 else self.params.route_lifetime
        e = self.table.get(dest)
        if e is None:
            e = RoutingTableEntry(dest, next_hop, hops, seq, set(), self.now + life)
            self.table[dest] = e
            return e
        if (
            not e.valid(self.now)
            or fresher(seq, e.dest_seq)
            or (seq == e.dest_seq and hops < e.hop_count)
        ):
            e.next_hop = next_hop
            e.hop_count = hops
            e.dest_seq = seq
            e.expires_at = self.now + life
        elif seq == e.dest_seq and next_hop == e.next_hop:
            e.expires_at = max(e.expires_at, self.now + life)
        return e

    def _note_dest_seq(self, dest: int, seq: int) -> None:
        known = self.last_dest_seq.get(dest)
        if known is None or fresher(seq, known):
            self.last_dest_seq[dest] = seq

    def _transmit(self, pkt: Data, e: RoutingTableEntry) -> None:
        if e.next_hop in pkt.traversed:
            # A mid-flight route change (typically a repair splice) can point
            # back through a node this packet already crossed. The tables are
            # consistent for future traffic; this one packet is sacrificed
            # rather than allowed to revisit a node.
            self.ctx.metrics.on_dropped(pkt, "loop_avoided")
            if self.ctx.trace.enabled:
                self.ctx.trace.emit(self.now, self.node, "drop", pkt.pkt_id, "loop_avoided")
            return
        e.last_used = self.now
        e.expires_at = self.now + self.params.route_lifetime
        self.ctx.radio.send(self.node, pkt, pkt.payload_size, addressee=e.next_hop)
        self.watch(e.next_hop)

    # -- hello scoping and liveness -------------------------------------------

    def hello_active(self) -> bool:
        now = self.now
        life = self.params.route_lifetime
        for e in self.table.values():
            if e.valid(now) and e.last_used + life > now:
                return True
        return False

    def watch_relevant(self, neighbor: int) -> bool:
        now = self.now
        life = self.params.route_lifetime
        for e in self.table.values():
            if e.next_hop == neighbor and e.valid(now) and e.last_used + life > now:
                return True
        return False

    def on_neighbor_lost(self, neighbor: int) -> None:
        now = self.now
        life = self.params.route_lifetime
        affected = [
            e
            for e in self.table.values()
            if e.next_hop == neighbor and e.valid(now) and e.last_used + life > now
        ]
        if not affected:
            return
        self.ctx.metrics.on_event("link_break")
        if self.ctx.trace.enabled:
            self.ctx.trace.emit(now, self.node, "link_break", "-", f"neighbor={neighbor}")
        for e in affected:
            e.expires_at = now
            dest = e.dest
            if dest == neighbor or dest in self.sourced:
                # At the source the break point is the source itself, so
                # repair degenerates to a fresh discovery.
                if dest in self.sourced and dest not in self.pending and self.may_discover(dest):
                    self._start_discovery(dest, bump=True)
            elif dest not in self.repairs:
                self._begin_repair(dest, neighbor, set(e.active_neighbors))

    # -- traffic entry ---------------------------------------------------------

    def send_data(self, pkt: Data) -> None:
        if pkt.dest == self.node:
            self.ctx.metrics.on_delivered(pkt, self.now)
            if self.ctx.trace.enabled:
                self.ctx.trace.emit(self.now, self.node, "deliver", pkt.pkt_id, "local")
            return
        self.sourced.add(pkt.dest)
        e = self._valid_entry(pkt.dest)
        if e is not None:
            self._transmit(pkt, e)
        else:
            self._buffer_for_discovery(pkt)

    def _buffer_for_discovery(self, pkt: Data) -> None:
        pending = self.pending.get(pkt.dest)
        if pending is None:
            if not self.may_discover(pkt.dest):
                self.ctx.metrics.on_dropped(pkt, "no_route")
                if self.ctx.trace.enabled:
                    self.ctx.trace.emit(self.now, self.node, "drop", pkt.pkt_id, "no_route")
                return
            pending = self._start_discovery(pkt.dest)
        if len(pending.buffered) >= self.params.queue_capacity:
            self.ctx.metrics.on_dropped(pkt, "queue_overflow")
            if self.ctx.trace.enabled:
                self.ctx.trace.emit(self.now, self.node, "drop", pkt.pkt_id, "queue_overflow")
            return
        pending.buffered.append(pkt)

    # -- discovery ---------------------------------------------------------------

    def _start_discovery(self, dest: int, bump: bool = False) -> PendingDiscovery:
        known = self.last_dest_seq.get(dest, 0)
        requested = known + 1 if bump and known else known
        pending = PendingDiscovery(dest, self.params.rreq_retries, requested)
        self.pending[dest] = pending
        self.ctx.metrics.on_event("discovery_start")
        if self.ctx.trace.enabled:
            self.ctx.trace.emit(self.now, self.node, "discovery_start", "-", f"dest={dest}")
        self._flood_rreq(pending)
        return pending

    def _flood_rreq(self, pending: PendingDiscovery) -> None:
        self.seq += 1
        self.rreq_counter += 1
        rreq = Rreq(
            origin=self.node,
            dest=pending.dest,
            rreq_id=self.rreq_counter,
            origin_seq=self.seq,
            dest_seq_known=pending.requested_seq,
            hop_count=0,
            route_record=(self.node,),
        )
        self.ctx.radio.send(self.node, rreq, self.params.control_bytes)
        pending.timer = self.ctx.engine.schedule(
            self.now + self.ctx.discovery_timeout,
            EventKind.TIMER,
            lambda d=pending.dest: self._discovery_timeout(d),
        )

    def _discovery_timeout(self, dest: int) -> None:
        if not self.alive:
            return
        pending = self.pending.get(dest)
        if pending is None:
            return
        if pending.attempts_left > 0:
            pending.attempts_left -= 1
            self.ctx.metrics.on_event("discovery_retry")
            if self.ctx.trace.enabled:
                self.ctx.trace.emit(self.now, self.node, "discovery_retry", "-", f"dest={dest}")
            self._flood_rreq(pending)
            return
        del self.pending[dest]
        self.note_discovery_failure(dest)
        self.ctx.metrics.on_event("discovery_fail")
        if self.ctx.trace.enabled:
            self.ctx.trace.emit(self.now, self.node, "discovery_fail", "-", f"dest={dest}")
        for pkt in pending.buffered:
            self.ctx.metrics.on_dropped(pkt, "no_route")
            if self.ctx.trace.enabled:
                self.ctx.trace.emit(self.now, self.node, "drop", pkt.pkt_id, "no_route")

    # -- local repair ---------------------------------------------------------

    def _begin_repair(self, dest: int, broken_hop: int, precursors: set) -> None:
        repair = RepairState(dest, broken_hop, precursors)
        self.repairs[dest] = repair
        self.ctx.metrics.on_event("repair_start")
        if self.ctx.trace.enabled:
            self.ctx.trace.emit(self.now, self.node, "repair_start", "-", f"dest={dest}")
        known = self.last_dest_seq.get(dest, 0)
        self._flood_repair(repair, known + 1 if known else 0)

    def _flood_repair(self, repair: RepairState, requested: int) -> None:
        self.seq += 1
        self.rreq_counter += 1
        rreq = Rreq(
            origin=self.node,
            dest=repair.dest,
            rreq_id=self.rreq_counter,
            origin_seq=self.seq,
            dest_seq_known=requested,
            hop_count=0,
            route_record=(self.node,),
            repair=True,
        )
        self.ctx.radio.send(self.node, rreq, self.params.control_bytes)
        repair.timer = self.ctx.engine.schedule(
            self.now + 2 * self.params.hello_interval,
            EventKind.TIMER,
            lambda d=repair.dest: self._repair_timeout(d),
        )

    def _repair_timeout(self, dest: int) -> None:
        if not self.alive:
            return
        repair = self.repairs.pop(dest, None)
        if repair is None:
            return
        self.ctx.metrics.on_event("repair_fail")
        if self.ctx.trace.enabled:
            self.ctx.trace.emit(self.now, self.node, "repair_fail", "-", f"dest={dest}")
        for pkt in repair.buffered:
            self.ctx.metrics.on_dropped(pkt, "no_route")
            if self.ctx.trace.enabled:
                self.ctx.trace.emit(self.now, self.node, "drop", pkt.pkt_id, "no_route")
        self._emit_rerr((self.node, repair.broken_hop), (dest,))

    # -- control handlers --------------------------------------------------------

    def _handle_rreq(self, rreq: Rreq, sender: int) -> None:
        if rreq.origin == self.node:
            return
        key = (rreq.origin, rreq.rreq_id)
        seen_until = self.rreq_seen.get(key)
        if seen_until is not None and seen_until > self.now:
            return
        self.rreq_seen[key] = self.now + self.params.rreq_id_cache_ttl
        hops = rreq.hop_count + 1
        self._update_route(rreq.origin, sender, hops, rreq.origin_seq)
        if self.node == rreq.dest:
            self.seq = max(self.seq + 1, rreq.dest_seq_known)
            rrep = Rrep(
                origin=rreq.origin,
                dest=self.node,
                dest_seq=self.seq,
                hop_count=0,
                path_set=(),
                lifetime=self.params.route_lifetime,
            )
            self._forward_rrep(rrep)
            return
        e = self._valid_entry(rreq.dest)
        if (
            e is not None
            and (e.dest_seq == rreq.dest_seq_known or fresher(e.dest_seq, rreq.dest_seq_known))
            # split horizon: never advertise a route that runs back through
            # the requesting side, which would weld a forwarding loop
            and e.next_hop != sender
            and e.next_hop != rreq.origin
        ):
            rrep = Rrep(
                origin=rreq.origin,
                dest=rreq.dest,
                dest_seq=e.dest_seq,
                hop_count=e.hop_count,
                path_set=(),
                lifetime=max(e.expires_at - self.now, self.params.hello_interval),
            )
            self._forward_rrep(rrep)
            return
        fwd = Rreq(
            origin=rreq.origin,
            dest=rreq.dest,
            rreq_id=rreq.rreq_id,
            origin_seq=rreq.origin_seq,
            dest_seq_known=rreq.dest_seq_known,
            hop_count=hops,
            route_record=rreq.route_record + (self.node,),
            repair=rreq.repair,
        )
        self.ctx.radio.send(self.node, fwd, self.params.control_bytes)

    def _forward_rrep(self, rrep: Rrep) -> None:
        e = self._valid_entry(rrep.origin)
        if e is None:
            if self.ctx.trace.enabled:
                self.ctx.trace.emit(self.now, self.node, "rrep_lost", "-", "no_reverse_route")
            return
        # The reverse route carries the reply and will carry errors back;
        # treat that as use so its nodes keep announcing themselves.
        e.last_used = self.now
        e.expires_at = self.now + self.params.route_lifetime
        fwd_entry = self.table.get(rrep.dest)
        if fwd_entry is not None and rrep.dest != self.node:
            fwd_entry.active_neighbors.add(e.next_hop)
        self.ctx.radio.send(
            self.node, rrep, self.params.control_bytes, addressee=e.next_hop
        )

    def _handle_rrep(self, rrep: Rrep, sender: int) -> None:
        hops = rrep.hop_count + 1
        self._update_route(rrep.dest, sender, hops, rrep.dest_seq, lifetime=rrep.lifetime)
        self._note_dest_seq(rrep.dest, rrep.dest_seq)
        if rrep.origin == self.node:
            self._reply_reached_origin(rrep.dest)
            return
        fwd = Rrep(
            origin=rrep.origin,
            dest=rrep.dest,
            dest_seq=rrep.dest_seq,
            hop_count=hops,
            path_set=(),
            lifetime=rrep.lifetime,
        )
        self._forward_rrep(fwd)

    def _reply_reached_origin(self, dest: int) -> None:
        repair = self.repairs.pop(dest, None)
        if repair is not None:
            if repair.timer is not None:
                self.ctx.engine.cancel(repair.timer)
            self.ctx.metrics.on_event("repair_ok")
            if self.ctx.trace.enabled:
                self.ctx.trace.emit(self.now, self.node, "repair_ok", "-", f"dest={dest}")
            for pkt in repair.buffered:
                self._forward_transit(pkt)
        pending = self.pending.pop(dest, None)
        if pending is not None:
            if pending.timer is not None:
                self.ctx.engine.cancel(pending.timer)
            self.discovery_backoff.pop(dest, None)
            self.ctx.metrics.on_event("discovery_ok")
            if self.ctx.trace.enabled:
                self.ctx.trace.emit(self.now, self.node, "discovery_ok", "-", f"dest={dest}")
            for pkt in pending.buffered:
                self.send_data(pkt)

    def _handle_rerr(self, rerr: Rerr, sender: int) -> None:
        now = self.now
        affected = []
        for dest in rerr.unreachable_dests:
            e = self.table.get(dest)
            if e is not None and e.valid(now) and e.next_hop == sender:
                e.expires_at = now
                affected.append(dest)
        if not affected:
            return
        if self.ctx.trace.enabled:
            self.ctx.trace.emit(now, self.node, "route_invalid", "-", f"dests={affected}")
        for dest in affected:
            if dest in self.sourced and dest not in self.pending and self.may_discover(dest):
                self._start_discovery(dest, bump=True)
        self._emit_rerr(rerr.broken_link, tuple(affected))

    def _emit_rerr(self, broken_link: tuple[int, int], dests: tuple[int, ...]) -> None:
        rerr = Rerr(broken_link=broken_link, unreachable_dests=dests, reporter=self.node)
        self.ctx.radio.send(self.node, rerr, self.params.control_bytes)

    # -- data plane -----------------------------------------------------------

    def _handle_data(self, pkt: Data, sender: int) -> None:
        if self.node in pkt.traversed:
            self.ctx.metrics.on_event("loop")
            self.ctx.metrics.on_dropped(pkt, "loop")
            if self.ctx.trace.enabled:
                self.ctx.trace.emit(self.now, self.node, "drop", pkt.pkt_id, "loop")
            return
        pkt.traversed.append(self.node)
        if pkt.dest == self.node:
            self._touch_reverse(pkt, sender, install=True)
            self.ctx.metrics.on_delivered(pkt, self.now)
            if self.ctx.trace.enabled:
                self.ctx.trace.emit(
                    self.now, self.node, "deliver", pkt.pkt_id, f"hops={len(pkt.traversed) - 1}"
                )
            return
        self._touch_reverse(pkt, sender, install=False)
        if pkt.dest in self.repairs:
            repair = self.repairs[pkt.dest]
            if len(repair.buffered) >= self.params.queue_capacity:
                self.ctx.metrics.on_dropped(pkt, "queue_overflow")
                if self.ctx.trace.enabled:
                    self.ctx.trace.emit(self.now, self.node, "drop", pkt.pkt_id, "queue_overflow")
            else:
                repair.buffered.append(pkt)
            return
        e = self._valid_entry(pkt.dest)
        if e is None:
            self.ctx.metrics.on_dropped(pkt, "no_route")
            if self.ctx.trace.enabled:
                self.ctx.trace.emit(self.now, self.node, "drop", pkt.pkt_id, "no_route")
            self._emit_rerr((self.node, self.node), (pkt.dest,))
            return
        e.active_neighbors.add(sender)
        self._transmit(pkt, e)

    def _forward_transit(self, pkt: Data) -> None:
        e = self._valid_entry(pkt.dest)
        if e is None:
            self.ctx.metrics.on_dropped(pkt, "no_route")
            if self.ctx.trace.enabled:
                self.ctx.trace.emit(self.now, self.node, "drop", pkt.pkt_id, "no_route")
            return
        self._transmit(pkt, e)

    def _touch_reverse(self, pkt: Data, sender: int, install: bool) -> None:
        """Keep the path back toward the origin warm.

        Valid entries are refreshed in place; next hops are never rewritten
        from data (that is discovery's job). Only the destination installs a
        missing entry, so it keeps announcing itself to its last hop.
        """
        origin = pkt.origin
        e = self.table.get(origin)
        if e is not None and e.valid(self.now):
            e.expires_at = max(e.expires_at, self.now + self.params.route_lifetime)
            e.last_used = self.now
        elif install:
            hops_back = len(pkt.traversed) - 1
            e = RoutingTableEntry(
                origin, sender, hops_back, 0, set(), self.now + self.params.route_lifetime
            )
            e.last_used = self.now
            self.table[origin] = e
