"""mtdswarm: UAV-swarm DoS-defense simulator and federated policy-gradient trainer."""

from .config import ScenarioConfig, Rng, load_config, serialize_config, split_rng
from .env import PatrolEnv, compute_reward, observation_size
from .federated import run_training
from .metrics import EpisodeMetrics, EpisodeTrace, PowerModel, power
from .mtd import MtdCommand
from .runner import evaluate, make_policy

__all__ = [
    "EpisodeMetrics",
    "EpisodeTrace",
    "MtdCommand",
    "PatrolEnv",
    "PowerModel",
    "Rng",
    "ScenarioConfig",
    "compute_reward",
    "evaluate",
    "load_config",
    "make_policy",
    "observation_size",
    "power",
    "run_training",
    "serialize_config",
    "split_rng",
]

__version__ = "0.1.0"
