"""Immutable, swappable policy artifacts.

A snapshot wraps a pure ``act(state) -> ActionId`` function together with a
kind tag and a version stamp. Snapshots are the only objects handed between
the live match loop and the background trainer, which keeps the swap atomic:
a frame uses exactly one snapshot.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .arena import ActionId, GameState

KIND_RULE_BASED = "rule_based"
KIND_IMITATION = "imitation"
KIND_RL = "rl"


@dataclass(frozen=True)
class AgentSnapshot:
    kind: str
    act: Callable[[GameState], ActionId]
    version: int = 0

    def stamped(self, version: int) -> "AgentSnapshot":
        return AgentSnapshot(kind=self.kind, act=self.act, version=version)
