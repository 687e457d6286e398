"""Non-learning reference policies for sanity comparisons."""

from __future__ import annotations

from .mtd import NO_OP, MtdCommand
from .policy import RELAY_VALUES


def no_defense_policy(obs) -> MtdCommand:
    """Never acts."""
    return NO_OP


def random_policy(obs, rng) -> MtdCommand:
    """Each sub-action drawn independently and uniformly."""
    return MtdCommand(
        int(rng.gen.integers(0, 2)),
        RELAY_VALUES[int(rng.gen.integers(0, 3))],
        int(rng.gen.integers(0, 2)),
    )


def periodic_hop_policy(obs, period: int, *, step: int,
                        agent_index: int) -> MtdCommand:
    """Agent 1 votes for a hop every `period` steps; everyone else idles."""
    if period <= 0:
        raise ValueError("period must be a positive step count")
    if agent_index == 1 and step % period == 0:
        return MtdCommand(0, 0, 1)
    return NO_OP
