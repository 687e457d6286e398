"""Defense mechanisms: leader switching, route mutation, frequency hopping.

Commands issued at step t take effect tau_exec later (one step at defaults).
The environment is the single writer of DefenseState: it enqueues effects when
agents act and applies due effects at the start of the next step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .adversary import link_effective
from .network import eq_edge


@dataclass(frozen=True)
class MtdCommand:
    """One agent's action triple: leader claim, relay flag change, hop vote."""
    leader_claim: int = 0   # {0, 1}: nominate self as leader
    relay: int = 0          # {-1, 0, 1}: clear / keep / set own relay flag
    hop: int = 0            # {0, 1}: vote for a global frequency hop

    def __post_init__(self):
        if self.leader_claim not in (0, 1):
            raise ValueError("leader_claim must be 0 or 1")
        if self.relay not in (-1, 0, 1):
            raise ValueError("relay must be -1, 0 or 1")
        if self.hop not in (0, 1):
            raise ValueError("hop must be 0 or 1")


NO_OP = MtdCommand(0, 0, 0)


def action_cost(cmd: MtdCommand) -> int:
    """Number of nonzero sub-actions issued this step."""
    return cmd.leader_claim + abs(cmd.relay) + cmd.hop


@dataclass
class DefenseState:
    leader: int
    current_channel: int
    n_uavs: int
    relay_flags: set = field(default_factory=set)       # UAV ids acting as relays
    relay_routes: dict = field(default_factory=dict)    # node -> serving relay
    pending_leader: tuple = None    # (new_leader, due_step)
    pending_flags: tuple = None     # ({uav: +1/-1}, due_step)
    pending_hop: float = None       # due_step
    pending_routes: tuple = None    # ({node: relay}, due_step)


def apply_due_effects(state: DefenseState, t: float, n_channels: int,
                      rng) -> DefenseState:
    """Apply every queued effect whose due step has arrived."""
    if state.pending_leader is not None and t >= state.pending_leader[1]:
        state.leader = state.pending_leader[0]
        state.pending_leader = None
    if state.pending_flags is not None and t >= state.pending_flags[1]:
        changes, _ = state.pending_flags
        for uav, change in changes.items():
            if change > 0:
                state.relay_flags.add(uav)
            else:
                state.relay_flags.discard(uav)
                # Tearing down a relay kills routes served through it now.
                state.relay_routes = {node: r for node, r
                                      in state.relay_routes.items() if r != uav}
        state.pending_flags = None
    if state.pending_hop is not None and t >= state.pending_hop:
        others = [c for c in range(n_channels) if c != state.current_channel]
        state.current_channel = int(others[int(rng.gen.integers(0, len(others)))])
        state.pending_hop = None
    if state.pending_routes is not None and t >= state.pending_routes[1]:
        routes, _ = state.pending_routes
        state.relay_routes = {node: r for node, r in routes.items()
                              if r in state.relay_flags}
        state.pending_routes = None
    return state


def resolve_leader_switch(claims, state: DefenseState, scores, t: float,
                          tau_exec: float) -> DefenseState:
    """Schedule a switch to the claimant with the best heartbeat score.

    claims[i] is UAV (i+1)'s self-nomination bit; the sitting leader's claim
    and empty claim sets leave leadership unchanged. Ties break to the lowest
    UAV id.
    """
    claimants = [i + 1 for i, bit in enumerate(claims)
                 if bit and (i + 1) != state.leader]
    if not claimants:
        return state
    best = max(claimants, key=lambda uav: (scores[uav - 1], -uav))
    state.pending_leader = (best, t + tau_exec)
    return state


def resolve_route_mutation(relay_actions, state: DefenseState, t: float,
                           tau_exec: float) -> DefenseState:
    """Schedule relay-flag changes (+1 set, -1 clear) for t + tau_exec."""
    changes = {}
    for i, action in enumerate(relay_actions):
        if action != 0:
            changes[i + 1] = int(action)
    if changes:
        pending = dict(state.pending_flags[0]) if state.pending_flags else {}
        pending.update(changes)
        state.pending_flags = (pending, t + tau_exec)
    return state


def resolve_frequency_hop(votes, state: DefenseState, t: float,
                          tau_exec: float) -> DefenseState:
    """Any vote triggers one global hop at t + tau_exec (re-issue re-arms)."""
    if any(votes):
        state.pending_hop = t + tau_exec
    return state


def assign_relay_routes(state: DefenseState, attack, positions, channels,
                        comm_range: float, tau_atk: float) -> dict:
    """Recompute desired relay routes from current flags and attack state.

    A UAV x needs a detour when the ongoing link attack is effective on one of
    its upstream links ((GCS, leader) for the leader, (leader, x) or (GCS, x)
    for followers). Eligible relays are flagged UAVs r with the source-to-r
    link unjammed and a physical edge r-x; the closest detour wins, ties to
    the lowest id.
    """
    if attack is None or attack.kind != "link":
        return {}
    a, b = attack.target
    if not link_effective(attack, a, b, positions, channels, comm_range,
                          tau_atk):
        return {}
    routes = {}
    for x in (a, b):
        if x == 0:
            continue
        other = b if x == a else a
        if x == state.leader:
            if other != 0:
                continue  # the leader's upstream is the GCS link only
            src = 0
        else:
            if other not in (0, state.leader):
                continue  # jammed link is not x's upstream
            src = state.leader
        best = None
        for r in sorted(state.relay_flags):
            if r in (0, src, x):
                continue
            if link_effective(attack, src, r, positions, channels, comm_range,
                              tau_atk):
                continue
            if not eq_edge(positions, channels, comm_range, r, x):
                continue
            detour = (float(np.linalg.norm(positions[src] - positions[r]))
                      + float(np.linalg.norm(positions[r] - positions[x])))
            if best is None or detour < best[0]:
                best = (detour, r)
        if best is not None:
            routes[x] = best[1]
    return routes


def schedule_routes(state: DefenseState, routes: dict, t: float,
                    tau_exec: float) -> DefenseState:
    state.pending_routes = (dict(routes), t + tau_exec)
    return state
