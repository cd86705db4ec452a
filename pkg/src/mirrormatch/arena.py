"""Deterministic frame-based 1v1 fighting arena.

World model: a flat stage ``stage_w`` units wide. Characters are boxes
(CHAR_W x CHAR_H) standing at ground level y=0; Jump lifts a character along
a fixed integer parabolic arc. Attacks run a startup/active/recovery phase
machine and can land at most once per activation, during an active frame,
when the attack's reach interval overlaps the opponent's body interval and
the height difference is within VERTICAL_HIT_BAND.

Everything here is a pure function over immutable values: `step` consumes a
GameState and returns a fresh one, so independent games can run concurrently
without shared state. Replaying the same seed and action streams reproduces
the exact same state sequence (see `state_hash`).
"""
from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, replace
from enum import IntEnum

import numpy as np

from .errors import ConfigError

# ---------------------------------------------------------------------------
# actions

class ActionId(IntEnum):
    IDLE = 0
    MOVE_LEFT = 1
    MOVE_RIGHT = 2
    JUMP = 3
    GUARD = 4
    PUNCH = 5
    KICK = 6
    SPECIAL = 7


N_ACTIONS = 8

MOVE_SPEED = 6.0
JUMP_FRAMES = 24  # airborne height follows y = t * (JUMP_FRAMES - t), apex 144


@dataclass(frozen=True)
class ActionSpec:
    action: ActionId
    startup_frames: int = 0
    active_frames: int = 0
    recovery_frames: int = 0
    damage: int = 0
    energy_cost: int = 0
    energy_gain_on_hit: int = 0
    reach: float = 0.0
    move_delta: float = 0.0


ACTION_TABLE: dict[ActionId, ActionSpec] = {
    ActionId.IDLE: ActionSpec(ActionId.IDLE),
    ActionId.MOVE_LEFT: ActionSpec(ActionId.MOVE_LEFT, move_delta=-MOVE_SPEED),
    ActionId.MOVE_RIGHT: ActionSpec(ActionId.MOVE_RIGHT, move_delta=MOVE_SPEED),
    ActionId.JUMP: ActionSpec(ActionId.JUMP, active_frames=JUMP_FRAMES),
    ActionId.GUARD: ActionSpec(ActionId.GUARD),
    ActionId.PUNCH: ActionSpec(
        ActionId.PUNCH, 3, 2, 8, damage=10, energy_gain_on_hit=10, reach=80.0
    ),
    ActionId.KICK: ActionSpec(
        ActionId.KICK, 5, 3, 12, damage=20, energy_gain_on_hit=20, reach=100.0
    ),
    ActionId.SPECIAL: ActionSpec(
        ActionId.SPECIAL, 10, 4, 20, damage=50, energy_cost=100, reach=140.0
    ),
}

ATTACK_ACTIONS = (ActionId.PUNCH, ActionId.KICK, ActionId.SPECIAL)

# phases of an attack / jump activation
PHASE_NONE = "none"
PHASE_STARTUP = "startup"
PHASE_ACTIVE = "active"
PHASE_RECOVERY = "recovery"

FACING_LEFT = "left"
FACING_RIGHT = "right"

P1 = "p1"
P2 = "p2"

# body geometry (world units)
CHAR_HALF_W = 20.0
CHAR_H = 80.0
VERTICAL_HIT_BAND = 60.0

# observation frame geometry: world coordinates divided by RENDER_SCALE,
# clipped to a fixed FRAME_H x FRAME_W grid
FRAME_H = 64
FRAME_W = 96
RENDER_SCALE = 10
P1_INTENSITY = 180
P2_INTENSITY = 90

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


# ---------------------------------------------------------------------------
# state types

@dataclass(frozen=True)
class EnvConfig:
    hp_max: int = 400
    energy_max: int = 300
    stage_w: float = 960.0
    stage_h: float = 640.0
    round_frames: int = 3600
    guard_factor: float = 0.2

    def validate(self) -> None:
        if self.hp_max <= 0:
            raise ConfigError(f"hp_max must be positive, got {self.hp_max}")
        if self.energy_max <= 0:
            raise ConfigError(f"energy_max must be positive, got {self.energy_max}")
        if self.stage_w <= 0 or self.stage_h <= 0:
            raise ConfigError(
                f"stage dimensions must be positive, got {self.stage_w}x{self.stage_h}"
            )
        if self.round_frames < 1:
            raise ConfigError(f"round_frames must be >= 1, got {self.round_frames}")
        if not 0.0 <= self.guard_factor <= 1.0:
            raise ConfigError(f"guard_factor must be in [0,1], got {self.guard_factor}")


@dataclass(frozen=True)
class CharacterState:
    x: float
    y: float
    hp: int
    energy: int
    current_action: ActionId = ActionId.IDLE
    phase: str = PHASE_NONE
    phase_frames_left: int = 0
    facing: str = FACING_RIGHT
    attack_landed: bool = False  # current activation already connected


@dataclass(frozen=True)
class GameState:
    frame: int
    p1: CharacterState
    p2: CharacterState
    timer_frames_left: int
    rng_state: int
    config: EnvConfig


@dataclass(frozen=True)
class FeatureVector:
    """Relative position of the two characters plus both current actions."""

    dx: float
    dy: float
    self_action: int
    opp_action: int

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.dx, self.dy, float(self.self_action), float(self.opp_action)],
            dtype=np.float64,
        )


@dataclass(frozen=True)
class StepOutcome:
    next: GameState
    hit_events: tuple  # ((attacker side, damage dealt), ...)
    reward_p1: float
    reward_p2: float
    round_over: bool
    winner: str  # "p1" | "p2" | "draw" | "none"


# ---------------------------------------------------------------------------
# round setup

def new_game(config: EnvConfig, seed: int) -> GameState:
    """Fresh round: full HP, zero energy, characters at quarter points facing in."""
    config.validate()
    p1 = CharacterState(
        x=config.stage_w * 0.25, y=0.0, hp=config.hp_max, energy=0, facing=FACING_RIGHT
    )
    p2 = CharacterState(
        x=config.stage_w * 0.75, y=0.0, hp=config.hp_max, energy=0, facing=FACING_LEFT
    )
    return GameState(
        frame=0,
        p1=p1,
        p2=p2,
        timer_frames_left=config.round_frames,
        rng_state=_splitmix64(seed & _MASK64),
        config=config,
    )


def is_round_over(state: GameState) -> bool:
    return state.p1.hp == 0 or state.p2.hp == 0 or state.timer_frames_left <= 0


def round_winner(state: GameState) -> str:
    """Winner label for a finished round; "none" while the round is live."""
    ko1, ko2 = state.p1.hp == 0, state.p2.hp == 0
    if ko1 and ko2:
        return "draw"
    if ko2:
        return P1
    if ko1:
        return P2
    if state.timer_frames_left <= 0:
        if state.p1.hp > state.p2.hp:
            return P1
        if state.p2.hp > state.p1.hp:
            return P2
        return "draw"
    return "none"


# ---------------------------------------------------------------------------
# frame resolution

def _face_opponent(c: CharacterState, opp: CharacterState) -> CharacterState:
    if c.phase != PHASE_NONE:
        return c  # cannot turn mid-activation
    if opp.x > c.x:
        return replace(c, facing=FACING_RIGHT)
    if opp.x < c.x:
        return replace(c, facing=FACING_LEFT)
    return c


def _initiate(c: CharacterState, action: ActionId) -> CharacterState:
    # initiation is ignored while an activation is running
    if c.phase != PHASE_NONE:
        return c
    action = ActionId(action)
    spec = ACTION_TABLE[action]
    if action in ATTACK_ACTIONS:
        if c.energy < spec.energy_cost:
            return replace(c, current_action=ActionId.IDLE)
        if spec.startup_frames > 0:
            phase, left = PHASE_STARTUP, spec.startup_frames
        else:
            phase, left = PHASE_ACTIVE, spec.active_frames
        return replace(
            c,
            current_action=action,
            phase=phase,
            phase_frames_left=left,
            energy=c.energy - spec.energy_cost,
            attack_landed=False,
        )
    if action == ActionId.JUMP:
        return replace(
            c, current_action=action, phase=PHASE_ACTIVE, phase_frames_left=JUMP_FRAMES
        )
    # Idle / movement / Guard are per-frame intents with no phase
    return replace(c, current_action=action)


def _move(c: CharacterState, config: EnvConfig) -> CharacterState:
    if c.phase == PHASE_NONE:
        if c.current_action in (ActionId.MOVE_LEFT, ActionId.MOVE_RIGHT):
            delta = ACTION_TABLE[c.current_action].move_delta
            x = min(max(c.x + delta, 0.0), config.stage_w)
            return replace(c, x=x)
        return c
    if c.current_action == ActionId.JUMP:
        t = JUMP_FRAMES - c.phase_frames_left + 1
        return replace(c, y=float(t * (JUMP_FRAMES - t)))
    return c


def _attack_connects(attacker: CharacterState, defender: CharacterState) -> bool:
    if attacker.phase != PHASE_ACTIVE or attacker.current_action not in ATTACK_ACTIONS:
        return False
    if attacker.attack_landed:
        return False
    reach = ACTION_TABLE[attacker.current_action].reach
    if attacker.facing == FACING_RIGHT:
        lo, hi = attacker.x, attacker.x + reach
    else:
        lo, hi = attacker.x - reach, attacker.x
    if hi < defender.x - CHAR_HALF_W or lo > defender.x + CHAR_HALF_W:
        return False
    return abs(attacker.y - defender.y) <= VERTICAL_HIT_BAND


def _tick_phase(c: CharacterState) -> CharacterState:
    if c.phase == PHASE_NONE:
        return c
    left = c.phase_frames_left - 1
    if left > 0:
        return replace(c, phase_frames_left=left)
    spec = ACTION_TABLE[c.current_action]
    if c.phase == PHASE_STARTUP and spec.active_frames > 0:
        return replace(c, phase=PHASE_ACTIVE, phase_frames_left=spec.active_frames)
    if c.phase == PHASE_ACTIVE and spec.recovery_frames > 0:
        return replace(c, phase=PHASE_RECOVERY, phase_frames_left=spec.recovery_frames)
    return replace(
        c,
        phase=PHASE_NONE,
        phase_frames_left=0,
        current_action=ActionId.IDLE,
        attack_landed=False,
    )


def step(state: GameState, a1: ActionId, a2: ActionId) -> StepOutcome:
    """Advance one frame.

    Resolution order: facing, action initiation, movement, simultaneous hit
    resolution (both sides checked against the same post-movement snapshot,
    trades allowed), energy gain for landed hits, then phase and timer
    bookkeeping. Deterministic: identical inputs give identical outputs.
    """
    if is_round_over(state):
        raise ValueError("cannot step a finished round")
    config = state.config

    c1 = _face_opponent(state.p1, state.p2)
    c2 = _face_opponent(state.p2, state.p1)
    c1 = _move(_initiate(c1, a1), config)
    c2 = _move(_initiate(c2, a2), config)

    # hits resolve simultaneously off one snapshot; damage floors through guard
    snap1, snap2 = c1, c2
    hit_events = []
    if _attack_connects(snap1, snap2):
        spec = ACTION_TABLE[snap1.current_action]
        dmg = spec.damage
        if snap2.current_action == ActionId.GUARD:
            dmg = math.floor(dmg * config.guard_factor)
        c2 = replace(c2, hp=max(0, c2.hp - dmg))
        c1 = replace(
            c1,
            attack_landed=True,
            energy=min(config.energy_max, c1.energy + spec.energy_gain_on_hit),
        )
        hit_events.append((P1, dmg))
    if _attack_connects(snap2, snap1):
        spec = ACTION_TABLE[snap2.current_action]
        dmg = spec.damage
        if snap1.current_action == ActionId.GUARD:
            dmg = math.floor(dmg * config.guard_factor)
        c1 = replace(c1, hp=max(0, c1.hp - dmg))
        c2 = replace(
            c2,
            attack_landed=True,
            energy=min(config.energy_max, c2.energy + spec.energy_gain_on_hit),
        )
        hit_events.append((P2, dmg))

    c1 = _tick_phase(c1)
    c2 = _tick_phase(c2)

    nxt = GameState(
        frame=state.frame + 1,
        p1=c1,
        p2=c2,
        timer_frames_left=state.timer_frames_left - 1,
        rng_state=_splitmix64(state.rng_state),
        config=config,
    )
    reward_p1 = compute_reward(state, nxt, P1)
    over = is_round_over(nxt)
    return StepOutcome(
        next=nxt,
        hit_events=tuple(hit_events),
        reward_p1=reward_p1,
        reward_p2=-reward_p1,
        round_over=over,
        winner=round_winner(nxt) if over else "none",
    )


# ---------------------------------------------------------------------------
# reward and encoders

def compute_reward(prev: GameState, nxt: GameState, side: str) -> float:
    """HP swing reward: opponent's loss minus own loss, in units of hp_max."""
    hp_max = prev.config.hp_max
    if side == P1:
        own_loss = prev.p1.hp - nxt.p1.hp
        opp_loss = prev.p2.hp - nxt.p2.hp
    else:
        own_loss = prev.p2.hp - nxt.p2.hp
        opp_loss = prev.p1.hp - nxt.p1.hp
    return opp_loss / hp_max - own_loss / hp_max


def encode_features(state: GameState, side: str) -> FeatureVector:
    """Low-dimensional view for the player model: relative position + actions."""
    me, opp = (state.p1, state.p2) if side == P1 else (state.p2, state.p1)
    return FeatureVector(
        dx=(opp.x - me.x) / state.config.stage_w,
        dy=(opp.y - me.y) / state.config.stage_h,
        self_action=int(me.current_action),
        opp_action=int(opp.current_action),
    )


def render_frame(state: GameState) -> np.ndarray:
    """Grayscale observation frame, shape (FRAME_H, FRAME_W), dtype uint8.

    Characters are filled rectangles at world coordinates / RENDER_SCALE
    (p2 drawn over p1 on overlap). Four status pixels overwrite the top
    corners: (0,0)/(0,1) hold p1 HP/energy, (0,95)/(0,94) hold p2 HP/energy,
    each scaled to 0..255.
    """
    config = state.config
    px = np.zeros((FRAME_H, FRAME_W), dtype=np.uint8)
    for c, intensity in ((state.p1, P1_INTENSITY), (state.p2, P2_INTENSITY)):
        col0 = int((c.x - CHAR_HALF_W) // RENDER_SCALE)
        col1 = int(math.ceil((c.x + CHAR_HALF_W) / RENDER_SCALE))
        row_bot = FRAME_H - 1 - int(c.y // RENDER_SCALE)
        row_top = FRAME_H - 1 - int((c.y + CHAR_H - 1) // RENDER_SCALE)
        px[max(0, row_top) : min(FRAME_H, row_bot + 1),
           max(0, col0) : min(FRAME_W, col1)] = intensity
    px[0, 0] = state.p1.hp * 255 // config.hp_max
    px[0, 1] = state.p1.energy * 255 // config.energy_max
    px[0, FRAME_W - 1] = state.p2.hp * 255 // config.hp_max
    px[0, FRAME_W - 2] = state.p2.energy * 255 // config.energy_max
    return px


# ---------------------------------------------------------------------------
# canonical hashing (replay verification)

_PHASE_CODE = {PHASE_NONE: 0, PHASE_STARTUP: 1, PHASE_ACTIVE: 2, PHASE_RECOVERY: 3}
_FACING_CODE = {FACING_LEFT: 0, FACING_RIGHT: 1}


def _pack_char(c: CharacterState) -> bytes:
    return struct.pack(
        "<ddiiBBiB?",
        c.x,
        c.y,
        c.hp,
        c.energy,
        int(c.current_action),
        _PHASE_CODE[c.phase],
        c.phase_frames_left,
        _FACING_CODE[c.facing],
        c.attack_landed,
    )


def state_hash(state: GameState) -> str:
    """Canonical SHA-256 over the full state; equal iff states are bit-equal."""
    cfg = state.config
    h = hashlib.sha256()
    h.update(
        struct.pack(
            "<qqQiiddid",
            state.frame,
            state.timer_frames_left,
            state.rng_state,
            cfg.hp_max,
            cfg.energy_max,
            cfg.stage_w,
            cfg.stage_h,
            cfg.round_frames,
            cfg.guard_factor,
        )
    )
    h.update(_pack_char(state.p1))
    h.update(_pack_char(state.p2))
    return h.hexdigest()
