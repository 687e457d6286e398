"""Policy rollouts for evaluation: learned checkpoints or reference baselines."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baselines import no_defense_policy, periodic_hop_policy, random_policy
from .config import Rng, ScenarioConfig
from .env import PatrolEnv
from .metrics import EpisodeMetrics, PowerModel
from .policy import argmax_action, sample_action

POLICY_NAMES = ("learned", "none", "random", "periodic")


def parse_policy_name(name: str):
    """Split --policy values like 'periodic:10' into (kind, period)."""
    if name.startswith("periodic"):
        _, _, raw = name.partition(":")
        period = int(raw) if raw else 10
        if period <= 0:
            raise ValueError("periodic policy period must be positive")
        return "periodic", period
    if name not in ("learned", "none", "random"):
        raise ValueError(f"unknown policy {name!r}")
    return name, None


def make_policy(kind: str, params_list=None, period=None, stochastic=False):
    """Returns act(agent_id, obs, step, rng) -> MtdCommand."""
    if kind == "learned":
        if params_list is None:
            raise ValueError("learned policy needs checkpoint parameters")
        if stochastic:
            return lambda i, obs, t, rng: sample_action(
                params_list[i - 1], obs, rng)[0]
        return lambda i, obs, t, rng: argmax_action(params_list[i - 1], obs)
    if kind == "none":
        return lambda i, obs, t, rng: no_defense_policy(obs)
    if kind == "random":
        return lambda i, obs, t, rng: random_policy(obs, rng)
    if kind == "periodic":
        return lambda i, obs, t, rng: periodic_hop_policy(
            obs, period, step=t, agent_index=i)
    raise ValueError(f"unknown policy kind {kind!r}")


@dataclass
class EvalEpisode:
    seed: int
    episode: int
    metrics: EpisodeMetrics
    cumcost_curve: np.ndarray   # (T,) running swarm action count
    trace: object = None        # EpisodeTrace when keep_traces was requested


@dataclass
class EvalResult:
    episodes: list

    def mitigation(self):
        return np.array([e.metrics.mitigation_rate for e in self.episodes])

    def mean_recoveries(self):
        vals = [e.metrics.mean_recovery for e in self.episodes
                if not np.isnan(e.metrics.mean_recovery)]
        return np.array(vals)

    def energies(self):
        return np.array([e.metrics.energy for e in self.episodes])

    def costs(self):
        return np.array([e.metrics.cumulative_cost for e in self.episodes])

    def returns(self):
        return np.array([e.metrics.mean_return for e in self.episodes])

    def mean_cumcost_curve(self):
        return np.mean([e.cumcost_curve for e in self.episodes], axis=0)


def evaluate(cfg: ScenarioConfig, attacker, attack_kind, act, seeds,
             episodes_per_seed: int, keep_traces: bool = False) -> EvalResult:
    """Roll the given policy over a seed range; deterministic per call."""
    env = PatrolEnv(cfg, attacker, attack_kind)
    pm = PowerModel.from_config(cfg)
    out = []
    for seed in seeds:
        root = Rng(seed).split("eval")
        for ep in range(episodes_per_seed):
            obs = env.reset(env_rng=root.split(f"ep{ep}-env"),
                            attacker_rng=root.split(f"ep{ep}-attacker"))
            agent_rngs = [root.split(f"ep{ep}-agent{i}")
                          for i in range(cfg.n_uavs)]
            done = False
            t = 0
            while not done:
                cmds = [act(i + 1, obs[i], t, agent_rngs[i])
                        for i in range(cfg.n_uavs)]
                obs, _, done, _ = env.step(cmds)
                t += 1
            trace = env.episode_trace()
            out.append(EvalEpisode(
                seed=seed, episode=ep,
                metrics=EpisodeMetrics.from_trace(trace, pm, cfg),
                cumcost_curve=np.cumsum(trace.costs.sum(axis=1)),
                trace=trace if keep_traces else None,
            ))
    return EvalResult(out)


def trace_records(episode: EvalEpisode):
    """Flatten one evaluated episode into per-step dicts (JSONL-friendly)."""
    tr = episode.trace
    if tr is None:
        raise ValueError("evaluate(..., keep_traces=True) required")
    for t in range(tr.n_steps):
        yield {
            "seed": episode.seed,
            "episode": episode.episode,
            "t": t,
            "e": tr.e[t].tolist(),
            "disconnected": tr.disconnected[t].astype(int).tolist(),
            "speeds": tr.speeds[t].tolist(),
            "costs": tr.costs[t].tolist(),
            "rewards": tr.rewards[t].tolist(),
            "deviations": tr.deviations[t].tolist(),
            "channel": int(tr.channel[t]),
            "leader": int(tr.leader[t]),
            "attack_effective": int(tr.attack_effective[t]),
        }
