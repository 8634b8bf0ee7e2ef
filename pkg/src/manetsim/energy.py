"""Per-node energy ledger splitting consumption into control and data classes."""

from dataclasses import dataclass
from typing import Callable

# Ledger arithmetic runs on integer picojoules so the books close exactly:
# initial - remaining == sum of debits with zero float drift.
PJ = 10**12


@dataclass(slots=True)
class EnergyParams:
    p_tx: float = 0.660  # watts
    p_rx: float = 0.395
    initial: float = 10.0  # joules

    def validate(self) -> None:
        if not (self.p_tx > self.p_rx > 0):
            raise ValueError("energy powers must satisfy p_tx > p_rx > 0")
        if self.initial <= 0:
            raise ValueError("energy.initial must be > 0")


@dataclass(slots=True)
class EnergyState:
    remaining_pj: int
    tx_control_pj: int = 0
    tx_data_pj: int = 0
    rx_control_pj: int = 0
    rx_data_pj: int = 0
    alive: bool = True

    @property
    def consumed_tx(self) -> float:
        return (self.tx_control_pj + self.tx_data_pj) / PJ

    @property
    def consumed_rx(self) -> float:
        return (self.rx_control_pj + self.rx_data_pj) / PJ

    @property
    def consumed_control(self) -> float:
        return (self.tx_control_pj + self.rx_control_pj) / PJ

    @property
    def consumed_data(self) -> float:
        return (self.tx_data_pj + self.rx_data_pj) / PJ

    @property
    def consumed_pj(self) -> int:
        return (
            self.tx_control_pj + self.tx_data_pj + self.rx_control_pj + self.rx_data_pj
        )

    @property
    def remaining(self) -> float:
        return self.remaining_pj / PJ


class EnergyLedger:
    """Tracks every node's battery; kills nodes that hit zero."""

    def __init__(
        self,
        node_count: int,
        params: EnergyParams,
        on_death: Callable[[int], None] | None = None,
    ):
        params.validate()
        self.params = params
        self.initial_pj = round(params.initial * PJ)
        self.states = [EnergyState(self.initial_pj) for _ in range(node_count)]
        self.on_death = on_death

    def alive(self, node: int) -> bool:
        return self.states[node].alive

    def debit(self, node: int, direction: str, duration: float, kind: str) -> float:
        """Charge p_dir * duration, clamped at zero; returns remaining joules.

        Debiting a dead node is a no-op (it can no longer process packets).
        """
        if duration < 0:
            raise ValueError("debit duration must be >= 0")
        st = self.states[node]
        if not st.alive:
            return 0.0
        power = self.params.p_tx if direction == "tx" else self.params.p_rx
        amount = round(power * duration * PJ)
        if amount > st.remaining_pj:
            amount = st.remaining_pj
        st.remaining_pj -= amount
        if direction == "tx":
            if kind == "control":
                st.tx_control_pj += amount
            else:
                st.tx_data_pj += amount
        else:
            if kind == "control":
                st.rx_control_pj += amount
            else:
                st.rx_data_pj += amount
        if st.remaining_pj == 0:
            st.alive = False
            if self.on_death is not None:
                self.on_death(node)
        return st.remaining_pj / PJ

    def network_consumed(self) -> float:
        """Total joules burned by all nodes so far."""
        return sum(st.consumed_pj for st in self.states) / PJ

    def routing_consumed(self) -> float:
        """Joules burned on control traffic (discovery plus maintenance)."""
        return sum(st.tx_control_pj + st.rx_control_pj for st in self.states) / PJ

    def network_consumed_pj(self) -> int:
        return sum(st.consumed_pj for st in self.states)

    def routing_consumed_pj(self) -> int:
        return sum(st.tx_control_pj + st.rx_control_pj for st in self.states)

    def closed(self) -> bool:
        """Every node's books balance exactly: initial == remaining + debits."""
        return all(
            st.remaining_pj + st.consumed_pj == self.initial_pj for st in self.states
        )
