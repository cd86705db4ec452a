"""Scripted players standing in for humans during headless runs.

Deterministic personas (idle, rushdown, turtle, zoner) are pure functions of
the game state; `random` and `noisy` draw from a per-instance seeded
generator; `switching` changes persona at a fixed frame. Persona rules only
read quantities the imitation learner can see (relative position, current
actions) plus own energy, which stays intentionally invisible to the model.

Specs are strings: "idle", "rushdown", "noisy:rushdown:0.2",
"switching:rushdown:turtle:10000".
"""
from __future__ import annotations

import numpy as np

from .arena import ACTION_TABLE, ActionId, GameState, P1
from .errors import ConfigError

DETERMINISTIC_KINDS = ("idle", "rushdown", "turtle", "zoner")
SIMPLE_KINDS = DETERMINISTIC_KINDS + ("random",)


class Persona:
    def __init__(self, kind, rng=None, base=None, epsilon=0.0, a=None, b=None,
                 t_switch=0, side=P1):
        self.kind = kind
        self.rng = rng
        self.base = base
        self.epsilon = epsilon
        self.a = a
        self.b = b
        self.t_switch = t_switch
        self.side = side

    def act(self, state: GameState, frame: int) -> ActionId:
        return persona_act(self, state, frame)

    def player_source(self):
        """Adapter matching the orchestrator's player-source signature."""
        return lambda state, frame: persona_act(self, state, frame)


def make_persona(spec: str, seed: int = 0, side: str = P1) -> Persona:
    parts = spec.split(":")
    kind = parts[0]
    rng = np.random.default_rng(seed)
    if kind in SIMPLE_KINDS:
        if len(parts) != 1:
            raise ConfigError(f"persona {kind!r} takes no arguments: {spec!r}")
        return Persona(kind, rng=rng, side=side)
    if kind == "noisy":
        if len(parts) != 3 or parts[1] not in SIMPLE_KINDS:
            raise ConfigError(f"expected noisy:<kind>:<epsilon>, got {spec!r}")
        epsilon = float(parts[2])
        if not 0.0 <= epsilon <= 1.0:
            raise ConfigError(f"noise epsilon must be in [0,1], got {epsilon}")
        base = Persona(parts[1], rng=rng, side=side)
        return Persona("noisy", rng=rng, base=base, epsilon=epsilon, side=side)
    if kind == "switching":
        if len(parts) != 4 or parts[1] not in SIMPLE_KINDS or parts[2] not in SIMPLE_KINDS:
            raise ConfigError(f"expected switching:<kind>:<kind>:<frame>, got {spec!r}")
        t_switch = int(parts[3])
        if t_switch < 0:
            raise ConfigError("switch frame must be >= 0")
        a = Persona(parts[1], rng=rng, side=side)
        b = Persona(parts[2], rng=rng, side=side)
        return Persona("switching", rng=rng, a=a, b=b, t_switch=t_switch, side=side)
    raise ConfigError(f"unknown persona spec {spec!r}")


def persona_act(p: Persona, state: GameState, frame: int) -> ActionId:
    me, opp = (state.p1, state.p2) if p.side == P1 else (state.p2, state.p1)
    kind = p.kind

    if kind == "idle":
        return ActionId.IDLE
    if kind == "random":
        return ActionId(int(p.rng.integers(8)))
    if kind == "noisy":
        if p.rng.random() < p.epsilon:
            return ActionId(int(p.rng.integers(8)))
        return persona_act(p.base, state, frame)
    if kind == "switching":
        return persona_act(p.a if frame < p.t_switch else p.b, state, frame)

    dist = abs(opp.x - me.x)
    toward = ActionId.MOVE_RIGHT if opp.x > me.x else ActionId.MOVE_LEFT
    away = ActionId.MOVE_LEFT if opp.x > me.x else ActionId.MOVE_RIGHT

    if kind == "rushdown":
        punch_reach = ACTION_TABLE[ActionId.PUNCH].reach
        return toward if dist > punch_reach else ActionId.PUNCH
    if kind == "turtle":
        kick_reach = ACTION_TABLE[ActionId.KICK].reach
        return ActionId.GUARD if dist <= kick_reach else away
    if kind == "zoner":
        special = ACTION_TABLE[ActionId.SPECIAL]
        if dist <= special.reach * 0.8:
            return away
        if me.energy >= special.energy_cost and dist <= special.reach:
            return ActionId.SPECIAL
        return ActionId.IDLE
    raise AssertionError(f"unhandled persona kind {kind}")
