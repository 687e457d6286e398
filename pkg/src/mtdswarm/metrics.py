"""Episode traces and the four evaluation quantities.

Mitigation rate and recovery times are both computed from the heartbeat
disconnection flags so the two metrics share one ground truth. Energy covers
the patrol phase plus a straight maximum-speed return leg to the GCS.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class EpisodeTrace:
    """Per-step record of one episode (arrays indexed [step, uav])."""
    e: np.ndarray               # (T, N) connectivity bits
    disconnected: np.ndarray    # (T, N) heartbeat-disconnected flags
    speeds: np.ndarray          # (T, N) commanded speeds, m/s
    costs: np.ndarray           # (T, N) per-agent action counts
    rewards: np.ndarray         # (T, N)
    deviations: np.ndarray      # (T, N) distance from ideal point, m
    channel: np.ndarray         # (T,)
    leader: np.ndarray          # (T,)
    attack_effective: np.ndarray  # (T,) effectiveness bit on the attack target
    final_positions: np.ndarray   # (N, 3)
    dt: float = 1.0

    @property
    def n_steps(self) -> int:
        return self.e.shape[0]

    @property
    def n_uavs(self) -> int:
        return self.e.shape[1]


@dataclass(frozen=True)
class PowerModel:
    c1: float = 2.8037     # (m/kg)^0.5
    c2: float = 0.3177     # (m/kg)^0.5
    c3: float = 0.0296     # kg/m
    mass: float = 1.283    # kg
    gravity: float = 9.8   # m/s^2

    @classmethod
    def from_config(cls, cfg) -> "PowerModel":
        return cls(c1=cfg.energy_c1, c2=cfg.energy_c2, c3=cfg.energy_c3,
                   mass=cfg.uav_mass, gravity=cfg.gravity)


def power(v: float, pm: PowerModel) -> float:
    """Rotor power draw at speed v: hover term plus cubic drag term (watts)."""
    hover = (pm.c1 + pm.c2) * (pm.mass * pm.gravity) ** 1.5
    return hover + pm.c3 * float(v) ** 3


def episode_energy(trace: EpisodeTrace, pm: PowerModel, cfg) -> float:
    """Patrol energy plus straight-line return legs to the GCS (joules)."""
    hover = (pm.c1 + pm.c2) * (pm.mass * pm.gravity) ** 1.5
    patrol = float(np.sum((hover + pm.c3 * trace.speeds ** 3) * trace.dt))
    gcs = np.asarray(cfg.gcs_position, dtype=float)
    dists = np.linalg.norm(trace.final_positions - gcs, axis=1)
    return_legs = float(np.sum(power(cfg.v_max, pm) * dists / cfg.v_max))
    return patrol + return_legs


def mitigation_rate(trace: EpisodeTrace) -> float:
    """Mean fraction of UAVs heartbeat-connected per step."""
    if trace.n_steps == 0:
        return 1.0
    connected = 1.0 - trace.disconnected.astype(float)
    return float(connected.mean())


def recovery_times(trace: EpisodeTrace):
    """Lengths (seconds) of maximal intervals with >= 1 UAV disconnected."""
    any_down = trace.disconnected.any(axis=1)
    times = []
    run = 0
    for down in any_down:
        if down:
            run += 1
        elif run:
            times.append(run * trace.dt)
            run = 0
    if run:
        times.append(run * trace.dt)
    return times


@dataclass
class EpisodeMetrics:
    mitigation_rate: float
    recovery_times: list
    mean_recovery: float        # NaN when the episode had no disruption
    energy: float
    cumulative_cost: float
    agent_returns: np.ndarray   # (N,) undiscounted per-agent reward totals

    @property
    def mean_return(self) -> float:
        return float(self.agent_returns.mean())

    @classmethod
    def from_trace(cls, trace: EpisodeTrace, pm: PowerModel, cfg) -> "EpisodeMetrics":
        times = recovery_times(trace)
        return cls(
            mitigation_rate=mitigation_rate(trace),
            recovery_times=times,
            mean_recovery=float(np.mean(times)) if times else float("nan"),
            energy=episode_energy(trace, pm, cfg),
            cumulative_cost=float(trace.costs.sum()),
            agent_returns=trace.rewards.sum(axis=0),
        )
