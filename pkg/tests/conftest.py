"""Shared fixtures: scripted topologies and independent oracles."""

import math

import pytest

from manetsim.mobility import MobilityModel, WaypointLeg

# Nine-node benchmark topology (S=0, N1..N7=1..7, D=8). The coordinates
# realize exactly the intended adjacency as a unit-disk graph at 250 m,
# with >= 15 m slack on every edge/non-edge decision.
BENCH_POSITIONS = {
    0: (354.8, 544.3),  # S
    1: (180.6, 394.4),  # N1
    2: (438.6, 455.2),  # N2
    3: (10.0, 364.3),  # N3
    4: (273.0, 289.0),  # N4
    5: (454.6, 248.3),  # N5
    6: (86.3, 146.5),  # N6
    7: (343.1, 80.8),  # N7
    8: (182.1, 10.0),  # D
}

BENCH_EDGES = {
    (0, 1), (0, 2), (1, 3), (1, 4), (2, 4), (2, 5), (3, 6),
    (4, 5), (4, 6), (4, 7), (5, 7), (6, 8), (7, 8),
}

# The eight source-to-destination routes the benchmark topology is built
# around (S=0 ... D=8).
BENCH_LISTED_PATHS = [
    (0, 1, 3, 6, 8),
    (0, 1, 4, 6, 8),
    (0, 1, 4, 5, 7, 8),
    (0, 1, 4, 7, 8),
    (0, 2, 5, 7, 8),
    (0, 2, 4, 6, 8),
    (0, 2, 5, 4, 6, 8),
    (0, 2, 5, 4, 7, 8),
]


def static_model(positions) -> MobilityModel:
    """Mobility model where every node sits still forever."""
    if isinstance(positions, dict):
        positions = [positions[i] for i in sorted(positions)]
    legs = [[WaypointLeg(tuple(p), tuple(p), 0.0, 0.0, 1e12)] for p in positions]
    return MobilityModel(legs)


def departing_model(positions, movers: dict) -> MobilityModel:
    """Static layout where chosen nodes move away: movers[node] = (t, target, speed)."""
    if isinstance(positions, dict):
        positions = [positions[i] for i in sorted(positions)]
    schedules = []
    for node, p in enumerate(positions):
        p = tuple(p)
        if node in movers:
            depart, target, speed = movers[node]
            schedules.append(
                [
                    WaypointLeg(p, p, 0.0, 0.0, depart),
                    WaypointLeg(p, tuple(target), depart, speed, 1e12),
                ]
            )
        else:
            schedules.append([WaypointLeg(p, p, 0.0, 0.0, 1e12)])
    return MobilityModel(schedules)


def all_simple_paths(adjacency: dict, src, dst, max_hops: int) -> list[tuple]:
    """Depth-first enumeration of simple src->dst paths up to max_hops."""
    out = []

    def dfs(node, path):
        if len(path) - 1 > max_hops:
            return
        if node == dst:
            out.append(tuple(path))
            return
        for nxt in sorted(adjacency.get(node, ())):
            if nxt not in path:
                path.append(nxt)
                dfs(nxt, path)
                path.pop()

    dfs(src, [src])
    return out


def adjacency_from_edges(edges) -> dict:
    adj: dict = {}
    for a, b in edges:
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    return adj


def adjacency_from_positions(positions, radio_range: float) -> dict:
    if isinstance(positions, dict):
        positions = [positions[i] for i in sorted(positions)]
    adj: dict = {i: set() for i in range(len(positions))}
    for i in range(len(positions)):
        for j in range(i + 1, len(positions)):
            if math.dist(positions[i], positions[j]) <= radio_range:
                adj[i].add(j)
                adj[j].add(i)
    return adj


def bfs_hops(adjacency: dict, src, dst) -> int | None:
    """Shortest hop count oracle."""
    frontier = [src]
    seen = {src}
    hops = 0
    while frontier:
        nxt = []
        for node in frontier:
            if node == dst:
                return hops
            for peer in adjacency.get(node, ()):
                if peer not in seen:
                    seen.add(peer)
                    nxt.append(peer)
        frontier = nxt
        hops += 1
    return None


@pytest.fixture
def bench_model():
    return static_model(BENCH_POSITIONS)
