"""Communication graph, command connectivity, and heartbeat scoring.

Node 0 is the ground control station. An edge exists when two nodes are within
comm range on the same channel; effective link attacks suppress edges, and
relay assignments from the defense layer license one-hop detours.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np


def pair(i: int, j: int) -> tuple:
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class CommGraph:
    n_nodes: int                    # N + 1 including the GCS
    channels: tuple                 # per-node channel index
    edges: frozenset                # sorted (i, j) pairs
    relay_routes: dict = field(default_factory=dict)  # node -> serving relay

    def has_edge(self, i: int, j: int) -> bool:
        return pair(i, j) in self.edges


def eq_edge(positions, channels, comm_range, i, j) -> bool:
    """Physical link criterion: in range and co-channel (ignores attacks)."""
    if channels[i] != channels[j]:
        return False
    diff = np.asarray(positions[i], dtype=float) - np.asarray(positions[j],
                                                              dtype=float)
    return float(diff @ diff) <= comm_range * comm_range


def build_graph(positions, channels, comm_range, suppressed_links=(),
                relay_routes=None) -> CommGraph:
    """Assemble the per-step graph snapshot.

    suppressed_links: pairs removed by an effective link attack.
    relay_routes: node -> relay mapping installed by route mutation.
    """
    n = len(positions)
    assert len(channels) == n
    suppressed = {pair(*link) for link in suppressed_links}
    pts = np.asarray(positions, dtype=float)
    diff = pts[:, None, :] - pts[None, :, :]
    within = (diff * diff).sum(axis=-1) <= comm_range * comm_range
    edges = set()
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) in suppressed:
                continue
            if within[i, j] and channels[i] == channels[j]:
                edges.add((i, j))
    return CommGraph(n_nodes=n, channels=tuple(channels),
                     edges=frozenset(edges),
                     relay_routes=dict(relay_routes or {}))


def connectivity_indicator(graph: CommGraph, leader: int, i: int,
                           node_attacked: bool) -> int:
    """1 when node i can receive commands this step, else 0.

    The leader needs a GCS path (direct or through its assigned relay); a
    follower needs the leader, the GCS, or its assigned relay detour. An
    effectively node-attacked UAV receives nothing regardless of links.
    """
    if i == 0:
        raise ValueError("connectivity is defined for UAVs, not the GCS")
    if node_attacked:
        return 0
    relay = graph.relay_routes.get(i)
    if i == leader:
        if graph.has_edge(0, i):
            return 1
        if relay is not None and graph.has_edge(relay, i):
            return 1
        return 0
    if graph.has_edge(leader, i) or graph.has_edge(0, i):
        return 1
    if relay is not None and graph.has_edge(relay, i):
        return 1
    return 0


class HeartbeatTracker:
    """Sliding window of acknowledged heartbeats per UAV.

    The score is the mean of the last W connectivity bits (shorter during
    warm-up); a UAV counts as disconnected when its score drops below the
    threshold.
    """

    def __init__(self, n_uavs: int, window: int):
        self.window = window
        self.bits = [deque(maxlen=window) for _ in range(n_uavs)]

    def update(self, e_bits) -> "HeartbeatTracker":
        for buf, bit in zip(self.bits, e_bits):
            buf.append(int(bit))
        return self

    def score(self, i: int) -> float:
        buf = self.bits[i]
        if not buf:
            return 0.0
        return sum(buf) / len(buf)

    def scores(self) -> np.ndarray:
        return np.array([self.score(i) for i in range(len(self.bits))])

    def is_disconnected(self, i: int, threshold: float) -> bool:
        return self.score(i) < threshold

    def disconnected(self, threshold: float) -> np.ndarray:
        return self.scores() < threshold


def update_heartbeat(tracker: HeartbeatTracker, e_bits) -> HeartbeatTracker:
    return tracker.update(e_bits)


def is_disconnected(tracker: HeartbeatTracker, i: int, threshold: float) -> bool:
    return tracker.is_disconnected(i, threshold)
