"""DoS attacker: node flooding and link jamming under three targeting strategies.

One attacker is active per episode. An attack round lasts tau_eff = tau_atk +
tau_recon seconds: effective while round_clock < tau_atk (given channel
alignment), silent during the reconnaissance tail. At each round boundary the
random strategy redraws its target and the greedy strategy re-acquires the
current leader (or GCS-leader link) and network channel; the fixed strategy
never changes anything after its initial draw.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .network import eq_edge, pair

NODE = "node"
LINK = "link"
STRATEGIES = ("fixed", "random", "greedy")


@dataclass(frozen=True)
class AttackState:
    kind: str                 # "node" | "link"
    strategy: str             # "fixed" | "random" | "greedy"
    target: object            # UAV id, or sorted (i, j) link pair
    f_atk: int                # channel the attacker transmits on
    round_clock: float = 0.0  # seconds into the current round
    round_index: int = 0      # completed rounds

    def in_active_window(self, tau_atk: float) -> bool:
        return self.round_clock < tau_atk


def _draw_target(kind, strategy, *, leader, n_uavs, candidate_links, rng):
    if strategy == "greedy":
        return leader if kind == NODE else pair(0, leader)
    if kind == NODE:
        return int(rng.gen.integers(1, n_uavs + 1))
    # candidate_links may be a lazy provider (it is only needed here)
    links = sorted(candidate_links() if callable(candidate_links)
                   else candidate_links)
    if not links:
        return pair(0, leader)
    return links[int(rng.gen.integers(0, len(links)))]


def init_attack(strategy: str, kind: str, *, leader: int, n_uavs: int,
                channels, candidate_links, rng) -> AttackState:
    """Draw the initial target; f_atk matches the victim's current channel."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown attacker strategy {strategy!r}")
    if kind not in (NODE, LINK):
        raise ValueError(f"unknown attack kind {kind!r}")
    target = _draw_target(kind, strategy, leader=leader, n_uavs=n_uavs,
                          candidate_links=candidate_links, rng=rng)
    victim = target if kind == NODE else target[1]
    return AttackState(kind=kind, strategy=strategy, target=target,
                       f_atk=int(channels[victim]))


def node_effective(atk: AttackState, i: int, channels, tau_atk: float) -> int:
    """1 when UAV i is currently flooded: targeted, co-channel, active window."""
    if atk is None or atk.kind != NODE:
        return 0
    return int(atk.target == i
               and channels[i] == atk.f_atk
               and atk.in_active_window(tau_atk))


def link_effective(atk: AttackState, i: int, j: int, positions, channels,
                   comm_range: float, tau_atk: float) -> int:
    """1 when link (i, j) is jammed: targeted, physically present, co-channel
    with the jammer, active window."""
    if atk is None or atk.kind != LINK:
        return 0
    if pair(i, j) != atk.target:
        return 0
    if not atk.in_active_window(tau_atk):
        return 0
    if channels[i] != atk.f_atk or channels[j] != atk.f_atk:
        return 0
    return int(eq_edge(positions, channels, comm_range, i, j))


def tick_attack(atk: AttackState, *, dt: float, tau_eff: float, leader: int,
                n_uavs: int, channels, candidate_links, rng) -> AttackState:
    """Advance the round clock; at a round boundary wrap and re-target."""
    if atk is None:
        return None
    clock = atk.round_clock + dt
    if clock < tau_eff:
        return replace(atk, round_clock=clock)
    clock -= tau_eff
    n = atk.round_index + 1
    if atk.strategy == "fixed":
        return replace(atk, round_clock=clock, round_index=n)
    target = _draw_target(atk.kind, atk.strategy, leader=leader,
                          n_uavs=n_uavs, candidate_links=candidate_links,
                          rng=rng)
    victim = target if atk.kind == NODE else target[1]
    return AttackState(kind=atk.kind, strategy=atk.strategy, target=target,
                       f_atk=int(channels[victim]), round_clock=clock,
                       round_index=n)
