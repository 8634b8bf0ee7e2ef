"""Scenario configuration: flat key=value text files, validation, defaults."""

from dataclasses import dataclass, field, replace

from .energy import EnergyParams
from .mobility import MobilityParams
from .proto_common import ProtocolParams
from .radio import RadioParams
from .traffic import FlowSpec

PROTOCOLS = ("aodv", "maodv")


class ScenarioError(ValueError):
    """Configuration rejected; the message names the offending field."""


@dataclass
class Scenario:
    name: str = "scenario"
    node_count: int = 20
    radio: RadioParams = field(default_factory=RadioParams)
    mobility: MobilityParams = field(default_factory=MobilityParams)
    energy: EnergyParams = field(default_factory=EnergyParams)
    protocol: str = "aodv"
    proto: ProtocolParams = field(default_factory=ProtocolParams)
    flows: list[FlowSpec] = field(default_factory=list)  # explicit; else generated
    flow_count: int = 5
    payload: int = 512
    interval: float = 0.25
    traffic_start: float = 1.0
    duration: float = 120.0
    master_seed: int = 1

    @property
    def area(self) -> tuple[float, float]:
        return self.mobility.area

    def validate(self) -> None:
        if self.node_count < 2:
            raise ScenarioError("node_count must be >= 2")
        if self.duration <= 0:
            raise ScenarioError("duration must be > 0")
        if self.protocol not in PROTOCOLS:
            raise ScenarioError(f"protocol must be one of {PROTOCOLS}")
        try:
            self.radio.validate()
            self.mobility.validate()
            self.energy.validate()
            self.proto.validate()
        except ValueError as exc:
            raise ScenarioError(str(exc)) from exc
        if self.flows:
            for flow in self.flows:
                try:
                    flow.validate(self.node_count)
                except ValueError as exc:
                    raise ScenarioError(str(exc)) from exc
        else:
            if self.flow_count < 1:
                raise ScenarioError("flow_count must be >= 1")
            if self.flow_count > self.node_count * (self.node_count - 1):
                raise ScenarioError("flow_count exceeds available node pairs")
            if self.payload <= 0:
                raise ScenarioError("payload must be > 0")
            if self.interval <= 0:
                raise ScenarioError("interval must be > 0")
            if not (0 <= self.traffic_start < self.duration):
                raise ScenarioError("traffic_start must lie within [0, duration)")

    def variant(self, **overrides) -> "Scenario":
        """Copy with some top-level fields replaced; nested params are copied."""
        sc = replace(
            self,
            radio=replace(self.radio),
            mobility=replace(self.mobility),
            energy=replace(self.energy),
            proto=replace(self.proto),
            flows=list(self.flows),
        )
        for key, value in overrides.items():
            if key == "pause_time":
                sc.mobility.pause_time = value
            elif hasattr(sc, key):
                setattr(sc, key, value)
            else:
                raise ScenarioError(f"unknown scenario field: {key}")
        return sc

    def params_dict(self) -> dict:
        """Every parameter, defaults included, for report headers."""
        return {
            "name": self.name,
            "protocol": self.protocol,
            "seed": self.master_seed,
            "node_count": self.node_count,
            "area_w": self.mobility.area[0],
            "area_h": self.mobility.area[1],
            "range_m": self.radio.range,
            "bandwidth_bps": self.radio.bandwidth,
            "propagation_delay": self.radio.propagation_delay,
            "loss_prob": self.radio.per_frame_loss_prob,
            "v_max": self.mobility.v_max,
            "v_min": self.mobility.v_min,
            "pause_time": self.mobility.pause_time,
            "p_tx_w": self.energy.p_tx,
            "p_rx_w": self.energy.p_rx,
            "initial_energy_j": self.energy.initial,
            "rreq_retries": self.proto.rreq_retries,
            "hello_interval": self.proto.hello_interval,
            "allowed_hello_loss": self.proto.allowed_hello_loss,
            "route_lifetime": self.proto.route_lifetime,
            "rreq_id_cache_ttl": self.proto.rreq_id_cache_ttl,
            "queue_capacity": self.proto.queue_capacity,
            "control_bytes": self.proto.control_bytes,
            "discovery_timeout": self.proto.discovery_timeout,
            "n0": self.proto.n0,
            "s0": self.proto.s0,
            "mpath_slack": self.proto.mpath_slack,
            "mpath_max_copies": self.proto.mpath_max_copies,
            "mpath_max_paths": self.proto.mpath_max_paths,
            "rrep_wait": self.proto.rrep_wait,
            "degree_tiebreak": int(self.proto.degree_tiebreak),
            "flow_count": len(self.flows) if self.flows else self.flow_count,
            "explicit_flows": int(bool(self.flows)),
            "payload": self.payload,
            "interval": self.interval,
            "traffic_start": self.traffic_start,
            "duration": self.duration,
        }


_INT_KEYS = {
    "node_count",
    "master_seed",
    "rreq_retries",
    "allowed_hello_loss",
    "queue_capacity",
    "control_bytes",
    "n0",
    "s0",
    "mpath_slack",
    "mpath_max_copies",
    "mpath_max_paths",
    "flow_count",
    "payload",
}
_FLOAT_KEYS = {
    "range",
    "bandwidth",
    "propagation_delay",
    "loss_prob",
    "v_max",
    "v_min",
    "pause_time",
    "p_tx",
    "p_rx",
    "initial_energy",
    "hello_interval",
    "route_lifetime",
    "rreq_id_cache_ttl",
    "discovery_timeout",
    "rrep_wait",
    "interval",
    "traffic_start",
    "duration",
}


def parse_scenario(text: str, name: str = "scenario") -> Scenario:
    """Parse the flat `key = value` format; diagnostics name the field."""
    sc = Scenario(name=name)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        try:
            _apply_key(sc, key, value)
        except ScenarioError:
            raise
        except ValueError as exc:
            raise ScenarioError(f"line {lineno}: field {key!r}: {exc}") from exc
    return sc


def _apply_key(sc: Scenario, key: str, value: str) -> None:
    if key == "flow":
        parts = value.split()
        if len(parts) != 6:
            raise ScenarioError(
                "field 'flow': expected 'src dest payload interval start stop'"
            )
        sc.flows.append(
            FlowSpec(
                src=int(parts[0]),
                dest=int(parts[1]),
                payload=int(parts[2]),
                interval=float(parts[3]),
                start=float(parts[4]),
                stop=float(parts[5]),
                flow_id=len(sc.flows),
            )
        )
        return
    if key == "area":
        parts = value.split()
        if len(parts) != 2:
            raise ScenarioError("field 'area': expected 'width height'")
        sc.mobility.area = (float(parts[0]), float(parts[1]))
        return
    if key == "protocol":
        if value not in PROTOCOLS:
            raise ScenarioError(f"field 'protocol': must be one of {PROTOCOLS}")
        sc.protocol = value
        return
    if key == "name":
        sc.name = value
        return
    if key == "degree_tiebreak":
        sc.proto.degree_tiebreak = bool(int(value))
        return
    if key in _INT_KEYS:
        parsed: float = int(value)
    elif key in _FLOAT_KEYS:
        parsed = float(value)
    else:
        raise ScenarioError(f"unknown scenario field: {key}")

    if key == "range":
        sc.radio.range = parsed
    elif key == "bandwidth":
        sc.radio.bandwidth = parsed
    elif key == "propagation_delay":
        sc.radio.propagation_delay = parsed
    elif key == "loss_prob":
        sc.radio.per_frame_loss_prob = parsed
    elif key == "v_max":
        sc.mobility.v_max = parsed
    elif key == "v_min":
        sc.mobility.v_min = parsed
    elif key == "pause_time":
        sc.mobility.pause_time = parsed
    elif key == "p_tx":
        sc.energy.p_tx = parsed
    elif key == "p_rx":
        sc.energy.p_rx = parsed
    elif key == "initial_energy":
        sc.energy.initial = parsed
    elif key in (
        "rreq_retries",
        "hello_interval",
        "allowed_hello_loss",
        "route_lifetime",
        "rreq_id_cache_ttl",
        "queue_capacity",
        "control_bytes",
        "discovery_timeout",
        "n0",
        "s0",
        "mpath_slack",
        "mpath_max_copies",
        "mpath_max_paths",
        "rrep_wait",
    ):
        setattr(sc.proto, key, parsed)
    else:
        setattr(sc, key, parsed)


def scenario_text(sc: Scenario) -> str:
    """Serialize back to the flat file format (defaults written explicitly)."""
    lines = [
        f"name = {sc.name}",
        f"node_count = {sc.node_count}",
        f"area = {sc.mobility.area[0]:g} {sc.mobility.area[1]:g}",
        f"range = {sc.radio.range:g}",
        f"bandwidth = {sc.radio.bandwidth:g}",
        f"propagation_delay = {sc.radio.propagation_delay:g}",
        f"loss_prob = {sc.radio.per_frame_loss_prob:g}",
        f"v_max = {sc.mobility.v_max:g}",
        f"v_min = {sc.mobility.v_min:g}",
        f"pause_time = {sc.mobility.pause_time:g}",
        f"p_tx = {sc.energy.p_tx:g}",
        f"p_rx = {sc.energy.p_rx:g}",
        f"initial_energy = {sc.energy.initial:g}",
        f"protocol = {sc.protocol}",
        f"rreq_retries = {sc.proto.rreq_retries}",
        f"hello_interval = {sc.proto.hello_interval:g}",
        f"allowed_hello_loss = {sc.proto.allowed_hello_loss}",
        f"route_lifetime = {sc.proto.route_lifetime:g}",
        f"rreq_id_cache_ttl = {sc.proto.rreq_id_cache_ttl:g}",
        f"queue_capacity = {sc.proto.queue_capacity}",
        f"control_bytes = {sc.proto.control_bytes}",
        f"discovery_timeout = {sc.proto.discovery_timeout:g}",
        f"n0 = {sc.proto.n0}",
        f"s0 = {sc.proto.s0}",
        f"mpath_slack = {sc.proto.mpath_slack}",
        f"mpath_max_copies = {sc.proto.mpath_max_copies}",
        f"mpath_max_paths = {sc.proto.mpath_max_paths}",
        f"rrep_wait = {sc.proto.rrep_wait:g}",
        f"degree_tiebreak = {int(sc.proto.degree_tiebreak)}",
        f"payload = {sc.payload}",
        f"interval = {sc.interval:g}",
        f"traffic_start = {sc.traffic_start:g}",
        f"duration = {sc.duration:g}",
        f"master_seed = {sc.master_seed}",
    ]
    if sc.flows:
        for f in sc.flows:
            lines.append(
                f"flow = {f.src} {f.dest} {f.payload} {f.interval:g} {f.start:g} {f.stop:g}"
            )
    else:
        lines.append(f"flow_count = {sc.flow_count}")
    return "\n".join(lines) + "\n"
