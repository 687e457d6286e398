"""Per-agent stochastic policy learned from scratch.

Two shared ReLU layers feed three local softmax heads (leader claim, relay
trit, hop vote). Updates are score-function gradients on normalized
reward-to-go with an entropy bonus, applied with hand-rolled Adam. The
shared/head split is structural: federated aggregation touches only the
shared tensors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mtd import MtdCommand

HEAD_SIZES = {"l": 2, "r": 3, "f": 2}
RELAY_VALUES = (-1, 0, 1)
SHARED_KEYS = ("w0", "b0", "w1", "b1")
HEAD_KEYS = ("wl", "bl", "wr", "br", "wf", "bf")
ENTROPY_GUARD = 1e-12
STD_GUARD = 1e-8


class PolicyParams:
    """Weight/bias tensors partitioned into shared trunk and local heads."""

    def __init__(self, tensors: dict):
        self.tensors = tensors

    def __getitem__(self, key):
        return self.tensors[key]

    def __setitem__(self, key, value):
        self.tensors[key] = value

    @classmethod
    def init(cls, obs_dim: int, hidden=(64, 64), rng=None) -> "PolicyParams":
        """Scaled uniform fan-in init for weights, zero biases."""
        gen = rng.gen if rng is not None else np.random.default_rng(0)
        h1, h2 = hidden

        def uniform(fan_in, shape):
            bound = 1.0 / np.sqrt(fan_in)
            return gen.uniform(-bound, bound, size=shape)

        tensors = {
            "w0": uniform(obs_dim, (obs_dim, h1)),
            "b0": np.zeros(h1),
            "w1": uniform(h1, (h1, h2)),
            "b1": np.zeros(h2),
            "wl": uniform(h2, (h2, HEAD_SIZES["l"])),
            "bl": np.zeros(HEAD_SIZES["l"]),
            "wr": uniform(h2, (h2, HEAD_SIZES["r"])),
            "br": np.zeros(HEAD_SIZES["r"]),
            "wf": uniform(h2, (h2, HEAD_SIZES["f"])),
            "bf": np.zeros(HEAD_SIZES["f"]),
        }
        return cls(tensors)

    def copy(self) -> "PolicyParams":
        return PolicyParams({k: v.copy() for k, v in self.tensors.items()})

    def shared(self) -> dict:
        return {k: self.tensors[k] for k in SHARED_KEYS}

    def heads(self) -> dict:
        return {k: self.tensors[k] for k in HEAD_KEYS}

    def set_shared(self, shared: dict) -> None:
        for k in SHARED_KEYS:
            self.tensors[k] = shared[k].copy()

    @property
    def obs_dim(self) -> int:
        return self.tensors["w0"].shape[0]

    def finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.tensors.values())


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _trunk(params: PolicyParams, obs: np.ndarray):
    h1 = np.maximum(obs @ params["w0"] + params["b0"], 0.0)
    h2 = np.maximum(h1 @ params["w1"] + params["b1"], 0.0)
    return h1, h2


def forward(params: PolicyParams, obs: np.ndarray):
    """Probabilities of the three heads; obs may be a vector or a batch."""
    obs = np.asarray(obs, dtype=float)
    if obs.shape[-1] != params.obs_dim:
        raise ValueError(
            f"observation dim {obs.shape[-1]} != input layer {params.obs_dim}")
    _, h2 = _trunk(params, obs)
    return (
        _softmax(h2 @ params["wl"] + params["bl"]),
        _softmax(h2 @ params["wr"] + params["br"]),
        _softmax(h2 @ params["wf"] + params["bf"]),
    )


def _draw(probs: np.ndarray, rng) -> int:
    u = rng.gen.random()
    return int(np.searchsorted(np.cumsum(probs), u))


def sample_action(params: PolicyParams, obs: np.ndarray, rng):
    """Draw one sub-action per head; returns the command and joint log-prob."""
    pl, pr, pf = forward(params, obs)
    il, ir, ih = _draw(pl, rng), _draw(pr, rng), _draw(pf, rng)
    logp = (np.log(pl[il] + ENTROPY_GUARD) + np.log(pr[ir] + ENTROPY_GUARD)
            + np.log(pf[ih] + ENTROPY_GUARD))
    cmd = MtdCommand(il, RELAY_VALUES[ir], ih)
    return cmd, float(logp), (il, ir, ih)


def argmax_action(params: PolicyParams, obs: np.ndarray) -> MtdCommand:
    pl, pr, pf = forward(params, obs)
    return MtdCommand(int(pl.argmax()), RELAY_VALUES[int(pr.argmax())],
                      int(pf.argmax()))


def compute_returns(rewards, gamma: float):
    """Reward-to-go and its per-episode normalization."""
    rewards = np.asarray(rewards, dtype=float)
    omega = np.zeros_like(rewards)
    acc = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        acc = rewards[t] + gamma * acc
        omega[t] = acc
    rhat = (omega - omega.mean()) / (omega.std() + STD_GUARD)
    return omega, rhat


def entropy(probs: np.ndarray) -> np.ndarray:
    """Shannon entropy along the last axis (guarded log)."""
    return -np.sum(probs * np.log(probs + ENTROPY_GUARD), axis=-1)


def loss_and_grads(params: PolicyParams, obs: np.ndarray, actions: np.ndarray,
                   rhat: np.ndarray, entropy_coeff: float):
    """Batch loss -(1/B) sum[logpi * rhat + mu * H] and its exact gradients."""
    obs = np.atleast_2d(np.asarray(obs, dtype=float))
    actions = np.atleast_2d(np.asarray(actions, dtype=int))
    rhat = np.asarray(rhat, dtype=float).reshape(-1)
    batch = obs.shape[0]

    h1 = np.maximum(obs @ params["w0"] + params["b0"], 0.0)
    h2 = np.maximum(h1 @ params["w1"] + params["b1"], 0.0)

    grads = {}
    d_h2 = np.zeros_like(h2)
    total_logp = np.zeros(batch)
    total_entropy = np.zeros(batch)
    for col, (wk, bk) in enumerate((("wl", "bl"), ("wr", "br"), ("wf", "bf"))):
        probs = _softmax(h2 @ params[wk] + params[bk])
        idx = actions[:, col]
        picked = probs[np.arange(batch), idx]
        total_logp += np.log(picked + ENTROPY_GUARD)
        head_h = entropy(probs)
        total_entropy += head_h

        # dL/dlogits = (1/B)[rhat (p - onehot) + mu p (log p + H)]
        d_logits = probs * rhat[:, None]
        d_logits[np.arange(batch), idx] -= rhat
        d_logits += entropy_coeff * probs * (
            np.log(probs + ENTROPY_GUARD) + head_h[:, None])
        d_logits /= batch

        grads[wk] = h2.T @ d_logits
        grads[bk] = d_logits.sum(axis=0)
        d_h2 += d_logits @ params[wk].T

    d_h2[h2 <= 0.0] = 0.0
    grads["w1"] = h1.T @ d_h2
    grads["b1"] = d_h2.sum(axis=0)
    d_h1 = d_h2 @ params["w1"].T
    d_h1[h1 <= 0.0] = 0.0
    grads["w0"] = obs.T @ d_h1
    grads["b0"] = d_h1.sum(axis=0)

    loss = float(-(total_logp * rhat + entropy_coeff * total_entropy).mean())
    return loss, grads, float(total_entropy.mean())


class OptimizerState:
    """Adam accumulators for one parameter set."""

    def __init__(self, params: PolicyParams, lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step = 0
        self.m = {k: np.zeros_like(v) for k, v in params.tensors.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.tensors.items()}

    def apply(self, params: PolicyParams, grads: dict) -> None:
        self.step += 1
        bc1 = 1.0 - self.beta1 ** self.step
        bc2 = 1.0 - self.beta2 ** self.step
        for key, grad in grads.items():
            m = self.m[key] = self.beta1 * self.m[key] + (1 - self.beta1) * grad
            v = self.v[key] = self.beta2 * self.v[key] + (1 - self.beta2) * grad ** 2
            params[key] = params[key] - self.lr * (m / bc1) / (
                np.sqrt(v / bc2) + self.eps)


@dataclass
class Rollout:
    """One agent's episode: observations, head indices, credit signal."""
    obs: np.ndarray          # (T, obs_dim)
    actions: np.ndarray      # (T, 3) head indices
    log_probs: np.ndarray    # (T,)
    rewards: np.ndarray      # (T,)
    next_obs: np.ndarray = None   # (T, obs_dim) successor observations
    returns: np.ndarray = None
    normalized_returns: np.ndarray = None

    def finalize(self, gamma: float) -> "Rollout":
        self.returns, self.normalized_returns = compute_returns(
            self.rewards, gamma)
        return self


def policy_gradient_update(params: PolicyParams, opt: OptimizerState,
                           rollout: Rollout, entropy_coeff: float) -> float:
    """One Monte-Carlo policy-gradient step over a finished episode."""
    loss, grads, _ = loss_and_grads(params, rollout.obs, rollout.actions,
                                    rollout.normalized_returns, entropy_coeff)
    if not np.isfinite(loss):
        raise FloatingPointError(
            f"non-finite policy loss at optimizer step {opt.step + 1}")
    for key, grad in grads.items():
        if not np.all(np.isfinite(grad)):
            raise FloatingPointError(
                f"non-finite gradient for {key} at optimizer step {opt.step + 1}")
    opt.apply(params, grads)
    return loss
