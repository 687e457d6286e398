"""Reward-weighted federated aggregation and the full training loop.

Every agg_interval episodes the agents "upload" their parameters; the
aggregator weights them by recent average return, averages the shared layers
only, broadcasts the result, and each agent runs local fine-tuning steps on
mini-batches from its own experience buffer. The aggregator is in-process
(it plays the GCS role) but is shaped so a wire transport could replace it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .config import Rng, ScenarioConfig
from .env import PatrolEnv, observation_size
from .metrics import EpisodeMetrics, PowerModel
from .policy import (OptimizerState, PolicyParams, SHARED_KEYS,
                     compute_returns, loss_and_grads, policy_gradient_update,
                     Rollout, sample_action)

log = logging.getLogger(__name__)

WEIGHT_EPS = 1e-6


def recent_average_return(history, m: int) -> float:
    """Mean episode-total reward over the last min(m, available) episodes."""
    if len(history) == 0:
        raise ValueError("no completed episodes to average")
    window = history[-m:]
    return float(np.mean(window))


def aggregation_weights(returns, mode: str = "auto",
                        eps: float = WEIGHT_EPS) -> np.ndarray:
    """Per-agent aggregation weights from recent average returns.

    raw: literal return-proportional weights (positive returns only).
    shifted: subtract the minimum and add a floor, safe for any sign.
    auto: raw when every return is positive, shifted otherwise.
    """
    r = np.asarray(returns, dtype=float)
    if r.ndim != 1 or r.size == 0:
        raise ValueError("returns must be a non-empty vector")
    if mode == "auto":
        mode = "raw" if np.all(r > 0) else "shifted"
    if mode == "raw":
        if np.any(r <= 0):
            raise ValueError(
                "raw return-proportional weights need all-positive returns; "
                "use shifted (or auto) weighting")
        return r / r.sum()
    if mode == "shifted":
        g = r - r.min() + eps
        return g / g.sum()
    raise ValueError(f"unknown weighting mode {mode!r}")


def aggregate_shared(params_list, weights) -> dict:
    """Elementwise weighted mean of the shared layers only."""
    weights = np.asarray(weights, dtype=float)
    if len(params_list) != len(weights):
        raise ValueError("one weight per agent required")
    shapes = [{k: p[k].shape for k in SHARED_KEYS} for p in params_list]
    if any(s != shapes[0] for s in shapes):
        raise ValueError("shared layer shapes differ across agents")
    out = {}
    for key in SHARED_KEYS:
        out[key] = sum(w * p[key] for w, p in zip(weights, params_list))
    return out


class ExperienceBuffer:
    """Per-agent episode store with whole-episode eviction."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.episodes = []          # list of (obs, actions, rhat)
        self.n_transitions = 0

    def add_episode(self, obs, actions, normalized_returns) -> None:
        obs = np.asarray(obs, dtype=float)
        actions = np.asarray(actions, dtype=int)
        rhat = np.asarray(normalized_returns, dtype=float)
        self.episodes.append((obs, actions, rhat))
        self.n_transitions += len(obs)
        while self.n_transitions > self.capacity and len(self.episodes) > 1:
            old_obs, _, _ = self.episodes.pop(0)
            self.n_transitions -= len(old_obs)

    def sample(self, batch_size: int, rng, recent_episodes=None):
        """Uniform mini-batch from the most recent episodes (all tuples when
        the pool is smaller than the batch)."""
        if not self.episodes:
            raise ValueError("cannot sample from an empty buffer")
        pool = self.episodes if recent_episodes is None \
            else self.episodes[-recent_episodes:]
        obs = np.concatenate([e[0] for e in pool])
        actions = np.concatenate([e[1] for e in pool])
        rhat = np.concatenate([e[2] for e in pool])
        if len(obs) <= batch_size:
            return obs, actions, rhat
        idx = rng.gen.choice(len(obs), size=batch_size, replace=False)
        return obs[idx], actions[idx], rhat[idx]


def clip_gradients(grads: dict, max_norm: float) -> dict:
    """Cap each tensor's gradient norm independently.

    Per-tensor (not global) so a large trunk gradient cannot starve the much
    smaller head gradients of their budget.
    """
    out = {}
    for key, grad in grads.items():
        norm = math.sqrt(float(np.sum(grad * grad)))
        out[key] = grad * (max_norm / norm) if norm > max_norm else grad
    return out


def fine_tune(params: PolicyParams, theta_global: dict,
              buffer: ExperienceBuffer, steps: int, batch_size: int,
              entropy_coeff: float, rng, recent_episodes=None,
              lr: float = 5e-3, grad_clip: float = 0.3) -> PolicyParams:
    """Sync shared layers to the aggregate, then local mini-batch updates.

    Replay uses plain clipped gradient steps: adaptive-moment scaling blows
    stale-minibatch noise up to full-size steps and ratchets heads into
    saturation, while magnitude-true steps consolidate only real signal.
    """
    params.set_shared(theta_global)
    if not buffer.episodes:
        log.info("fine-tuning skipped: empty experience buffer")
        return params
    for _ in range(steps):
        obs, actions, rhat = buffer.sample(batch_size, rng, recent_episodes)
        loss, grads, _ = loss_and_grads(params, obs, actions, rhat,
                                        entropy_coeff)
        if not np.isfinite(loss):
            raise FloatingPointError("non-finite fine-tuning loss")
        grads = clip_gradients(grads, grad_clip)
        for key, grad in grads.items():
            params[key] = params[key] - lr * grad
    return params


class CreditAssigner:
    """Turns one agent's episode rewards into update credits.

    Reward-to-go minus a per-step running baseline, scaled by a running std
    estimate shared across episodes. Normalizing within a single episode
    would blow pure noise up to unit scale once the policy is good and shrink
    the rare attack-recovery signal by its own episode's variance; running
    statistics keep credit proportional to how unusual an outcome really is.
    """

    def __init__(self, n_steps: int, gamma: float, ema: float, clip: float):
        self.gamma = gamma
        self.ema = ema
        self.clip = clip
        self.baseline = np.zeros(n_steps)
        self.var = 1.0
        self.seen = 0

    def credit(self, rewards) -> tuple:
        omega, _ = compute_returns(rewards, self.gamma)
        if self.seen == 0:
            self.baseline[:] = omega
            self.var = float(np.mean((omega - self.baseline) ** 2)) or 1.0
        advantage = omega - self.baseline
        self.baseline += self.ema * (omega - self.baseline)
        self.var += self.ema * (float(np.mean(advantage ** 2)) - self.var)
        self.seen += 1
        scaled = advantage / (math.sqrt(max(self.var, 0.0)) + 1e-8)
        return omega, np.clip(scaled, -self.clip, self.clip)


@dataclass
class EpisodeRow:
    episode: int
    mean_return: float
    agent_returns: np.ndarray
    mitigation_rate: float
    mean_recovery: float        # NaN when no disruption occurred
    energy: float
    cumulative_cost: float
    agg_round: int


@dataclass
class RoundRow:
    round_index: int
    episode: int
    rbars: list
    weights: list


@dataclass
class TrainResult:
    params: list
    episodes: list
    rounds: list
    config: ScenarioConfig
    seed: int


def run_training(cfg: ScenarioConfig, seed: int, attacker: str,
                 attack_kind: str, on_episode=None) -> TrainResult:
    """Full training run; deterministic in (cfg, seed)."""
    n = cfg.n_uavs
    root = Rng(seed)
    obs_dim = observation_size(cfg)
    theta0 = PolicyParams.init(obs_dim, cfg.hidden_sizes, root.split("init"))
    params = [theta0.copy() for _ in range(n)]
    opts = [OptimizerState(p, lr=cfg.lr) for p in params]
    buffers = [ExperienceBuffer(cfg.buffer_capacity) for _ in range(n)]
    credits = [CreditAssigner(cfg.steps_per_episode, cfg.gamma,
                              cfg.baseline_ema, cfg.credit_clip)
               for _ in range(n)]
    env = PatrolEnv(cfg, attacker, attack_kind)
    pm = PowerModel.from_config(cfg)
    policy_root = root.split("policy")
    env_root = root.split("env")
    attacker_root = root.split("attacker")
    agg_root = root.split("agg")

    return_history = [[] for _ in range(n)]
    episode_rows, round_rows = [], []

    for k in range(1, cfg.max_episodes + 1):
        obs = env.reset(env_rng=env_root.split(f"ep{k}"),
                        attacker_rng=attacker_root.split(f"ep{k}"))
        agent_rngs = [policy_root.split(f"ep{k}-agent{i}") for i in range(n)]
        obs_buf = [[] for _ in range(n)]
        next_buf = [[] for _ in range(n)]
        act_buf = [[] for _ in range(n)]
        logp_buf = [[] for _ in range(n)]
        rew_buf = [[] for _ in range(n)]
        done = False
        while not done:
            cmds = []
            for i in range(n):
                cmd, logp, idx = sample_action(params[i], obs[i], agent_rngs[i])
                obs_buf[i].append(obs[i])
                act_buf[i].append(idx)
                logp_buf[i].append(logp)
                cmds.append(cmd)
            obs, rewards, done, _ = env.step(cmds)
            for i in range(n):
                rew_buf[i].append(rewards[i])
                next_buf[i].append(obs[i])

        metrics = EpisodeMetrics.from_trace(env.episode_trace(), pm, cfg)
        for i in range(n):
            rollout = Rollout(obs=np.array(obs_buf[i]),
                              actions=np.array(act_buf[i], dtype=int),
                              log_probs=np.array(logp_buf[i]),
                              rewards=np.array(rew_buf[i]),
                              next_obs=np.array(next_buf[i]))
            rollout.returns, rollout.normalized_returns = \
                credits[i].credit(rollout.rewards)
            policy_gradient_update(params[i], opts[i], rollout,
                                   cfg.entropy_coeff)
            buffers[i].add_episode(rollout.obs, rollout.actions,
                                   rollout.normalized_returns)
            return_history[i].append(float(rollout.rewards.sum()))

        row = EpisodeRow(
            episode=k,
            mean_return=metrics.mean_return,
            agent_returns=metrics.agent_returns,
            mitigation_rate=metrics.mitigation_rate,
            mean_recovery=metrics.mean_recovery,
            energy=metrics.energy,
            cumulative_cost=metrics.cumulative_cost,
            agg_round=k // cfg.agg_interval,
        )
        episode_rows.append(row)
        if on_episode is not None:
            on_episode(row)

        if k % cfg.agg_interval == 0:
            r_index = k // cfg.agg_interval
            rbars = [recent_average_return(return_history[i], cfg.reward_window)
                     for i in range(n)]
            weights = aggregation_weights(rbars, cfg.aggregation_weighting)
            theta_global = aggregate_shared(params, weights)
            for i in range(n):
                fine_tune(params[i], theta_global, buffers[i],
                          cfg.finetune_steps, cfg.batch_size,
                          cfg.entropy_coeff,
                          agg_root.split(f"round{r_index}-agent{i}"),
                          cfg.finetune_recent_episodes,
                          lr=cfg.finetune_lr, grad_clip=cfg.finetune_grad_clip)
            round_rows.append(RoundRow(round_index=r_index, episode=k,
                                       rbars=rbars,
                                       weights=weights.tolist()))

    return TrainResult(params=params, episodes=episode_rows,
                       rounds=round_rows, config=cfg, seed=seed)
