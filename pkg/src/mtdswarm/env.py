"""Multi-agent patrol environment under DoS attack.

Each step consumes the attack/graph/connectivity evaluation prepared for it
(at reset, or at the end of the previous step) and runs: (1) enqueue the
agents' new MTD commands, (2) schedule relay-route reactions to the ongoing
attack, (3) integrate kinematics, (4) score rewards, (5) push heartbeats,
(6) advance the attack round clock (wrap/retarget at boundaries), (7) apply
defense effects that fall due, and (8) re-evaluate effectiveness, the comm
graph, and per-UAV connectivity for the next step's observations.

A command issued at t is applied in phase 7 and therefore has zero effect on
step t itself and full effect on step t+1; the attack round clock equals
(t mod tau_eff) so active windows line up with step indices. Observations
always carry the connectivity of the state the agent is acting on.
"""

from __future__ import annotations

import math

import numpy as np

from . import adversary, mtd
from .adversary import init_attack, link_effective, node_effective, tick_attack
from .config import Rng, ScenarioConfig
from .dynamics import (FormationSpec, deviation_from_ideal, initial_kinematics,
                       step_kinematics)
from .metrics import EpisodeTrace
from .network import HeartbeatTracker, build_graph, connectivity_indicator, eq_edge


def observation_size(cfg: ScenarioConfig) -> int:
    # position (3) + speed (1) + heading sin/cos (2) + leader one-hot (N)
    # + channel one-hot (|F|) + connectivity bit (1)
    return 7 + cfg.n_uavs + cfg.n_channels


def compute_reward(cfg: ScenarioConfig, *, connected: int, deviation: float,
                   cost: int, node_eff: int, link_eff: int,
                   speed: float) -> float:
    """Connectivity and formation rewards minus cost, attack and speed penalties.

    The formation term is deliberately unclamped below zero so runaway drift
    keeps hurting.
    """
    r_form = 1.0 - deviation / cfg.deviation_threshold
    p_vel = (speed - cfg.v_pat) / (cfg.v_max - cfg.v_pat)
    p_atk = node_eff + 0.5 * link_eff
    return (cfg.alpha * connected + cfg.beta * r_form
            - cfg.zeta * cost - cfg.eta * p_atk - cfg.xi * p_vel)


class PatrolEnv:
    """Composes dynamics, networking, the attacker and the defenses."""

    def __init__(self, cfg: ScenarioConfig, attacker: str = "fixed",
                 attack_kind: str = "node"):
        self.cfg = cfg
        self.attacker = attacker           # fixed | random | greedy | None
        self.attack_kind = attack_kind
        self.spec = FormationSpec.from_config(cfg)
        self.n = cfg.n_uavs
        self.t = 0
        self.done = True

    # -- helpers -----------------------------------------------------------

    def positions(self):
        gcs = np.asarray(self.cfg.gcs_position, dtype=float)
        return [gcs] + [k.position for k in self.kin]

    def channels(self):
        return [self.defense.current_channel] * (self.n + 1)

    def _candidate_links(self):
        """Physical edges of the current snapshot (attack target pool)."""
        positions = self.positions()
        channels = self.channels()
        links = []
        for i in range(self.n + 1):
            for j in range(i + 1, self.n + 1):
                if eq_edge(positions, channels, self.cfg.comm_range, i, j):
                    links.append((i, j))
        return links

    def _evaluate_attack(self):
        """Per-UAV node effectiveness, target-link effectiveness, suppressions."""
        positions = self.positions()
        channels = self.channels()
        node_eff = np.zeros(self.n, dtype=int)
        link_eff_target = 0
        suppressed = []
        if self.attack is not None:
            if self.attack.kind == adversary.NODE:
                for i in range(1, self.n + 1):
                    node_eff[i - 1] = node_effective(
                        self.attack, i, channels, self.cfg.tau_atk)
            else:
                a, b = self.attack.target
                link_eff_target = link_effective(
                    self.attack, a, b, positions, channels,
                    self.cfg.comm_range, self.cfg.tau_atk)
                if link_eff_target:
                    suppressed.append((a, b))
        return node_eff, link_eff_target, suppressed

    def _connectivity(self, node_eff, suppressed):
        positions = self.positions()
        graph = build_graph(positions, self.channels(), self.cfg.comm_range,
                            suppressed_links=suppressed,
                            relay_routes=self.defense.relay_routes)
        e = np.array([
            connectivity_indicator(graph, self.defense.leader, i,
                                   bool(node_eff[i - 1]))
            for i in range(1, self.n + 1)
        ])
        return graph, e

    def _link_penalty_bit(self, i: int) -> int:
        """Effectiveness of agent i's command link for the attack penalty.

        Followers are judged on their leader link; the leader on its GCS link.
        """
        if self.attack is None or self.attack.kind != adversary.LINK:
            return 0
        leader = self.defense.leader
        other = 0 if i == leader else leader
        return link_effective(self.attack, other, i, self.positions(),
                              self.channels(), self.cfg.comm_range,
                              self.cfg.tau_atk)

    def _observation(self, i: int) -> np.ndarray:
        cfg = self.cfg
        kin = self.kin[i - 1]
        obs = np.empty(observation_size(cfg))
        obs[0] = kin.position[0] / cfg.area_size[0]
        obs[1] = kin.position[1] / cfg.area_size[1]
        obs[2] = kin.position[2] / cfg.area_size[0]
        obs[0:3] = np.clip(obs[0:3], -1.0, 1.0)
        obs[3] = (kin.speed - cfg.v_pat) / (cfg.v_max - cfg.v_pat)
        obs[4] = math.sin(kin.heading)
        obs[5] = math.cos(kin.heading)
        leader_hot = np.zeros(self.n)
        leader_hot[self.defense.leader - 1] = 1.0
        obs[6:6 + self.n] = leader_hot
        chan_hot = np.zeros(cfg.n_channels)
        chan_hot[self.defense.current_channel] = 1.0
        obs[6 + self.n:6 + self.n + cfg.n_channels] = chan_hot
        # Connectivity bit encoded symmetrically (+1 connected, -1 cut) so the
        # rare attacked samples carry gradient through their own input row.
        obs[-1] = 2.0 * float(self.e[i - 1]) - 1.0
        return obs

    def observations(self) -> np.ndarray:
        return np.stack([self._observation(i) for i in range(1, self.n + 1)])

    # -- episode API --------------------------------------------------------

    def reset(self, seed=None, *, env_rng=None, attacker_rng=None,
              attack=None) -> np.ndarray:
        """Start a fresh episode; returns the initial per-agent observations."""
        cfg = self.cfg
        if env_rng is None:
            env_rng = Rng(seed if seed is not None else 0).split("env")
        if attacker_rng is None:
            attacker_rng = Rng(seed if seed is not None else 0).split("attacker")
        self.env_rng = env_rng
        self.attacker_rng = attacker_rng

        channel = int(env_rng.gen.integers(0, cfg.n_channels))
        self.defense = mtd.DefenseState(leader=1, current_channel=channel,
                                        n_uavs=self.n)
        self.kin = [initial_kinematics(self.spec, 2.0 * math.pi * i / self.n)
                    for i in range(1, self.n + 1)]
        self.heartbeat = HeartbeatTracker(self.n, cfg.heartbeat_window)
        self.t = 0
        self.done = False

        if attack is not None:
            self.attack = attack
        elif self.attacker is None:
            self.attack = None
        else:
            self.attack = init_attack(
                self.attacker, self.attack_kind, leader=self.defense.leader,
                n_uavs=self.n, channels=self.channels(),
                candidate_links=self._candidate_links(), rng=attacker_rng)

        # Evaluate attack/graph/connectivity for step 0's observations.
        self._refresh_snapshot()
        self._trace = {key: [] for key in (
            "e", "disconnected", "speeds", "costs", "rewards", "deviations",
            "channel", "leader", "attack_effective")}
        return self.observations()

    def _refresh_snapshot(self):
        """Evaluate effectiveness and connectivity of the current state."""
        self.node_eff, self.link_eff_target, suppressed = \
            self._evaluate_attack()
        self.graph, self.e = self._connectivity(self.node_eff, suppressed)

    def step(self, joint_action):
        """Advance one step; joint_action is one MtdCommand per UAV."""
        if self.done:
            raise RuntimeError("step() called on a finished episode; reset first")
        cfg = self.cfg
        assert len(joint_action) == self.n
        node_eff = self.node_eff
        link_eff_target = self.link_eff_target

        # 1. enqueue this step's commands (due tau_exec later)
        claims = [cmd.leader_claim for cmd in joint_action]
        relays = [cmd.relay for cmd in joint_action]
        votes = [cmd.hop for cmd in joint_action]
        costs = np.array([mtd.action_cost(cmd) for cmd in joint_action])
        mtd.resolve_leader_switch(claims, self.defense,
                                  self.heartbeat.scores(), self.t,
                                  cfg.tau_exec_leader)
        mtd.resolve_route_mutation(relays, self.defense, self.t,
                                   cfg.tau_exec_route)
        mtd.resolve_frequency_hop(votes, self.defense, self.t,
                                  cfg.tau_exec_freq)

        # 2. relay routes reacting to this step's attack, live next step
        desired = mtd.assign_relay_routes(self.defense, self.attack,
                                          self.positions(), self.channels(),
                                          cfg.comm_range, cfg.tau_atk)
        mtd.schedule_routes(self.defense, desired, self.t, cfg.tau_exec_route)

        # current-step attack penalty on each agent's command link
        link_bits = np.array([self._link_penalty_bit(i)
                              for i in range(1, self.n + 1)])

        # 3. kinematics under this step's connectivity
        self.kin = [
            step_kinematics(kin, self.spec, bool(self.e[i]), cfg.dt,
                            cfg.v_max, cfg.deviation_threshold)
            for i, kin in enumerate(self.kin)
        ]
        speeds = np.array([k.speed for k in self.kin])
        deviations = np.array([deviation_from_ideal(k, self.spec)
                               for k in self.kin])

        # 4. rewards
        rewards = np.array([
            compute_reward(cfg, connected=int(self.e[i]),
                           deviation=float(deviations[i]),
                           cost=int(costs[i]), node_eff=int(node_eff[i]),
                           link_eff=int(link_bits[i]),
                           speed=float(speeds[i]))
            for i in range(self.n)
        ])

        # 5. heartbeats
        self.heartbeat.update(self.e)
        disconnected = self.heartbeat.disconnected(cfg.heartbeat_threshold)
        attack_bit = int(np.any(node_eff)) if (
            self.attack is not None and self.attack.kind == adversary.NODE
        ) else int(link_eff_target)

        tr = self._trace
        tr["e"].append(self.e.copy())
        tr["disconnected"].append(disconnected.copy())
        tr["speeds"].append(speeds)
        tr["costs"].append(costs)
        tr["rewards"].append(rewards)
        tr["deviations"].append(deviations)
        tr["channel"].append(self.defense.current_channel)
        tr["leader"].append(self.defense.leader)
        tr["attack_effective"].append(attack_bit)

        info = {
            "e": self.e.copy(),
            "node_eff": node_eff.copy(),
            "link_eff": link_bits,
            "disconnected": disconnected,
            "costs": costs,
            "channel": self.defense.current_channel,
            "leader": self.defense.leader,
        }

        # 6. attack round clock advances; boundaries wrap and retarget using
        #    the pre-effect defense state (the attacker's reconnaissance view)
        self.attack = tick_attack(
            self.attack, dt=cfg.dt, tau_eff=cfg.tau_eff,
            leader=self.defense.leader, n_uavs=self.n,
            channels=self.channels(),
            candidate_links=self._candidate_links, rng=self.attacker_rng)

        # 7. defense effects falling due at the next step
        self.t += 1
        mtd.apply_due_effects(self.defense, self.t, cfg.n_channels,
                              self.env_rng)

        # 8. evaluation for the next step's observations
        self._refresh_snapshot()
        self.done = self.t >= cfg.steps_per_episode
        return self.observations(), rewards, self.done, info

    def episode_trace(self) -> EpisodeTrace:
        tr = self._trace
        stack = lambda key: (np.array(tr[key]) if tr[key]
                             else np.zeros((0, self.n)))
        return EpisodeTrace(
            e=stack("e"), disconnected=stack("disconnected"),
            speeds=stack("speeds"), costs=stack("costs"),
            rewards=stack("rewards"), deviations=stack("deviations"),
            channel=np.array(tr["channel"], dtype=int),
            leader=np.array(tr["leader"], dtype=int),
            attack_effective=np.array(tr["attack_effective"], dtype=int),
            final_positions=np.stack([k.position for k in self.kin]),
            dt=self.cfg.dt,
        )
