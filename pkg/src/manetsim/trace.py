"""Run trace: one line per event, a stable golden-file target."""

import hashlib


class Trace:
    """Collects `time node event packet detail...` lines.

    Field order is fixed; '-' stands in for a missing packet id. The text is
    byte-stable for a given scenario and seed, so its digest doubles as a
    determinism check.
    """

    def __init__(self, enabled: bool = True):
        self.enabled = enabled
        self.lines: list[str] = []

    def emit(self, t: float, node, event: str, pkt="-", detail: str = "") -> None:
        if not self.enabled:
            return
        line = f"{t:.9f} {node} {event} {pkt}"
        if detail:
            line = f"{line} {detail}"
        self.lines.append(line)

    def text(self) -> str:
        return "\n".join(self.lines) + ("\n" if self.lines else "")

    def digest(self) -> str:
        return hashlib.sha256(self.text().encode()).hexdigest()

    def count(self, event: str) -> int:
        marker = f" {event} "
        return sum(1 for line in self.lines if marker in line)
