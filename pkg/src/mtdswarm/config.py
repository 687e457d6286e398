"""Scenario configuration and deterministic, label-addressed random streams.

The config file format is flat UTF-8 ``key = value`` lines; ``#`` starts a
comment, arrays are comma lists. Unset keys fall back to the defaults below.
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass

import numpy as np


class ConfigError(ValueError):
    """Malformed config file or violated invariant."""


@dataclass(frozen=True)
class ScenarioConfig:
    # Arena and formation geometry (meters, seconds)
    area_size: tuple = (1000.0, 1000.0)
    gcs_position: tuple = (500.0, 500.0, 0.0)
    patrol_radius: float = 300.0
    patrol_height: float = 100.0
    n_uavs: int = 5
    n_channels: int = 5
    comm_range: float = 500.0
    v_pat: float = 15.0
    v_max: float = 20.0
    d_min: float = 20.0
    deviation_threshold: float = 40.0

    # Attack round structure and defense execution delays
    tau_atk: float = 15.0
    tau_recon: float = 5.0
    tau_exec_leader: float = 1.0
    tau_exec_route: float = 1.0
    tau_exec_freq: float = 1.0

    # Episode / training schedule
    steps_per_episode: int = 50
    dt: float = 1.0
    max_episodes: int = 2000
    gamma: float = 0.99
    hidden_sizes: tuple = (64, 64)
    lr: float = 1e-3
    batch_size: int = 128
    buffer_capacity: int = 20000
    agg_interval: int = 20
    reward_window: int = 20
    finetune_steps: int = 100
    finetune_recent_episodes: int = 5
    finetune_lr: float = 5e-3       # plain gradient steps during fine-tuning
    finetune_grad_clip: float = 0.3  # per-tensor norm cap
    aggregation_weighting: str = "auto"  # auto | raw | shifted

    # Credit-signal conditioning for the per-episode updates
    baseline_ema: float = 0.05      # per-step reward-to-go baseline tracking
    credit_clip: float = 10.0       # cap on normalized credit magnitude

    # Reward coefficients: alpha connectivity, beta formation, xi velocity,
    # eta attack, zeta action cost
    alpha: float = 0.5
    beta: float = 0.5
    xi: float = 1.0
    eta: float = 2.0
    zeta: float = 0.5
    entropy_coeff: float = 0.01

    # Heartbeat-based connectivity scoring
    heartbeat_window: int = 3
    heartbeat_threshold: float = 0.5

    # Rotor power model constants
    energy_c1: float = 2.8037
    energy_c2: float = 0.3177
    energy_c3: float = 0.0296
    uav_mass: float = 1.283
    gravity: float = 9.8

    @property
    def omega(self) -> float:
        """Angular speed of the rotating formation (rad/s)."""
        return self.v_pat / self.patrol_radius

    @property
    def tau_eff(self) -> float:
        """Length of one attack round: active window plus reconnaissance."""
        return self.tau_atk + self.tau_recon

    def validate(self) -> "ScenarioConfig":
        def positive(name):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be strictly positive")

        for name in (
            "patrol_radius", "patrol_height", "n_uavs", "n_channels",
            "comm_range", "v_pat", "v_max", "d_min", "deviation_threshold",
            "tau_atk", "tau_recon", "tau_exec_leader", "tau_exec_route",
            "tau_exec_freq", "steps_per_episode", "dt", "max_episodes",
            "lr", "batch_size", "buffer_capacity", "agg_interval",
            "reward_window", "heartbeat_window",
        ):
            positive(name)
        if len(self.area_size) != 2 or any(a <= 0 for a in self.area_size):
            raise ConfigError("area_size must be two positive extents")
        if len(self.gcs_position) != 3:
            raise ConfigError("gcs_position must have three coordinates")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError("gamma must lie in [0, 1]")
        if self.entropy_coeff < 0:
            raise ConfigError("entropy_coeff must be non-negative")
        if self.v_pat > self.v_max:
            raise ConfigError("v_pat must not exceed v_max")
        ring_gap = 2.0 * self.patrol_radius * math.sin(math.pi / self.n_uavs)
        if self.d_min >= ring_gap:
            raise ConfigError(
                f"d_min ({self.d_min}) must be below the initial ring spacing "
                f"({ring_gap:.3f}) for a collision-free start")
        if self.tau_atk + self.tau_recon > self.steps_per_episode * self.dt:
            raise ConfigError(
                "tau_atk + tau_recon must fit within one episode "
                "(steps_per_episode * dt)")
        if self.aggregation_weighting not in ("auto", "raw", "shifted"):
            raise ConfigError("aggregation_weighting must be auto, raw or shifted")
        if self.finetune_steps < 0 or self.finetune_recent_episodes <= 0:
            raise ConfigError("fine-tune schedule fields must be sensible")
        if self.finetune_lr <= 0 or self.finetune_grad_clip <= 0:
            raise ConfigError("finetune_lr and finetune_grad_clip must be positive")
        if not 0.0 < self.baseline_ema <= 1.0:
            raise ConfigError("baseline_ema must lie in (0, 1]")
        if self.credit_clip <= 0:
            raise ConfigError("credit_clip must be positive")
        if not 0.0 <= self.heartbeat_threshold <= 1.0:
            raise ConfigError("heartbeat_threshold must lie in [0, 1]")
        return self


_FIELDS = {f.name: f for f in dataclasses.fields(ScenarioConfig)}
_INT_FIELDS = {
    "n_uavs", "n_channels", "steps_per_episode", "max_episodes",
    "batch_size", "buffer_capacity", "agg_interval", "reward_window",
    "finetune_steps", "finetune_recent_episodes", "heartbeat_window",
}
_TUPLE_FIELDS = {"area_size", "gcs_position", "hidden_sizes"}
_STR_FIELDS = {"aggregation_weighting"}


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    try:
        if key in _STR_FIELDS:
            return raw
        if key in _TUPLE_FIELDS:
            parts = [p.strip() for p in raw.split(",") if p.strip()]
            if key == "hidden_sizes":
                return tuple(int(p) for p in parts)
            return tuple(float(p) for p in parts)
        if key in _INT_FIELDS:
            return int(raw)
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"cannot parse value for {key!r}: {raw!r}") from exc


def parse_overrides(pairs) -> dict:
    """Parse ``key=value`` strings (CLI --set) into typed config fields."""
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} is not of the form key=value")
        key, raw = pair.split("=", 1)
        key = key.strip()
        if key not in _FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        out[key] = _parse_value(key, raw)
    return out


def load_config(path=None, overrides=None) -> ScenarioConfig:
    """Load a scenario config; unset keys take the built-in defaults."""
    values = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = line.split("=", 1)
            key = key.strip()
            if key not in _FIELDS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _parse_value(key, raw)
    if overrides:
        values.update(overrides)
    return ScenarioConfig(**values).validate()


def serialize_config(cfg: ScenarioConfig) -> str:
    """Render a config as the flat key = value format (round-trips exactly)."""
    lines = ["# scenario configuration"]
    for f in dataclasses.fields(ScenarioConfig):
        value = getattr(cfg, f.name)
        if f.name in _TUPLE_FIELDS:
            rendered = ", ".join(repr(v) if isinstance(v, float) else str(v)
                                 for v in value)
        elif isinstance(value, float):
            rendered = repr(value)
        else:
            rendered = str(value)
        lines.append(f"{f.name} = {rendered}")
    return "\n".join(lines) + "\n"


class Rng:
    """Deterministic random stream addressed by (seed, label path).

    Child streams are derived by hashing labels into the seed sequence, so the
    same (seed, labels) always yields the same draws and drawing from a child
    never advances its parent.
    """

    def __init__(self, seed: int, path: tuple = ()):
        self.seed = int(seed)
        self.path = tuple(path)
        key = []
        for label in self.path:
            digest = hashlib.sha256(label.encode("utf-8")).digest()
            key.extend(int.from_bytes(digest[i:i + 4], "little")
                       for i in range(0, 8, 4))
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=tuple(key))
        self.gen = np.random.Generator(np.random.PCG64(seq))

    def split(self, label: str) -> "Rng":
        return Rng(self.seed, self.path + (label,))

    def __repr__(self):
        return f"Rng(seed={self.seed}, path={self.path!r})"


def split_rng(rng: Rng, label: str) -> Rng:
    """Derive an independent child stream identified by ``label``."""
    return rng.split(label)
