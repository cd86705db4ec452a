"""Live match loop with background training and opponent swapping.

Per frame the session: (1) at swap boundaries installs the newest RL policy
snapshot as the live opponent, (2) asks the player source and the current
opponent snapshot for one action each, (3) steps the arena, (4) feeds the
player's (features, action) pair to the online imitation model, (5) grants
the background trainer its frame budget. The trainer plays the RL agent
against a frozen imitation snapshot of the player in a separate environment
and refreshes that snapshot at episode boundaries.

Cross-context traffic is immutable snapshots through single slots in both
directions, so headless mode can interleave both loops on one thread (budget
mechanism) while the service runs the trainer on its own thread.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from . import arena
from .arena import (
    ACTION_TABLE,
    ActionId,
    EnvConfig,
    GameState,
    P1,
    P2,
    encode_features,
    new_game,
    render_frame,
    step,
)
from .errors import PolicyDivergence
from .imitation import (
    ForestConfig,
    ForestModel,
    LabeledExample,
    forest_new,
    imitation_snapshot,
    learn_one,
)
from .policy import (
    A2CState,
    RolloutBuffer,
    TrainConfig,
    Transition,
    a2c_new,
    a2c_update,
    act,
    evaluate_value,
    rl_snapshot,
)
from .snapshots import AgentSnapshot, KIND_RULE_BASED


# ---------------------------------------------------------------------------
# rule-based baseline

def rule_based_opponent(state: GameState, side: str = P2) -> ActionId:
    """Starter opponent: close in, spend energy on specials, otherwise punch."""
    me, opp = (state.p2, state.p1) if side == P2 else (state.p1, state.p2)
    if me.phase != arena.PHASE_NONE:
        return ActionId.IDLE
    if abs(me.x - opp.x) > ACTION_TABLE[ActionId.PUNCH].reach:
        return ActionId.MOVE_RIGHT if opp.x > me.x else ActionId.MOVE_LEFT
    if me.energy >= ACTION_TABLE[ActionId.SPECIAL].energy_cost:
        return ActionId.SPECIAL
    return ActionId.PUNCH


def rule_based_snapshot(side: str = P2) -> AgentSnapshot:
    return AgentSnapshot(
        kind=KIND_RULE_BASED, act=lambda s: rule_based_opponent(s, side), version=0
    )


# ---------------------------------------------------------------------------
# swapping

@dataclass(frozen=True)
class SwapSchedule:
    interval_steps: int = 1  # K
    min_observations: int = 300

    def validate(self) -> None:
        from .errors import ConfigError

        if self.interval_steps < 1:
            raise ConfigError("swap interval must be >= 1")
        if self.min_observations < 0:
            raise ConfigError("min_observations must be >= 0")


def swap_opponent(
    current: AgentSnapshot,
    candidate: AgentSnapshot,
    frame: int,
    schedule: SwapSchedule,
) -> AgentSnapshot:
    """Install the candidate only on schedule boundaries past the observation
    threshold; otherwise keep the current snapshot."""
    if frame % schedule.interval_steps == 0 and frame >= schedule.min_observations:
        return candidate
    return current


# ---------------------------------------------------------------------------
# background trainer

class PublishSlot:
    """Single-slot handoff for immutable snapshots (atomic swap semantics)."""

    def __init__(self):
        self.snapshot: AgentSnapshot | None = None
        self.version = 0

    def publish(self, snapshot: AgentSnapshot) -> None:
        self.version += 1
        self.snapshot = snapshot.stamped(self.version)


class TrainerState:
    """Owns the RL parameters and the training environment."""

    def __init__(
        self,
        env_config: EnvConfig,
        train_config: TrainConfig,
        imitation: AgentSnapshot,
        seed: int,
    ):
        train_config.validate()
        self.env_config = env_config
        self.train_config = train_config
        self.imitation = imitation
        self.a2c: A2CState = a2c_new(train_config)
        self.last_good: A2CState = self.a2c
        self.rng = np.random.default_rng(np.random.SeedSequence(seed))
        self.env_state: GameState = new_game(env_config, self._episode_seed())
        self.rollout = RolloutBuffer()
        self.frames_trained = 0
        self.episodes = 0
        self.divergence_events = 0

    def _episode_seed(self) -> int:
        return int(self.rng.integers(2**63))

    @property
    def params(self):
        return self.a2c.params


def background_train_tick(
    trainer: TrainerState, budget_frames: int, published: PublishSlot | None = None
) -> TrainerState:
    """Advance the training environment by exactly `budget_frames` frames.

    The RL agent plays the opponent side (p2) against the frozen imitation
    snapshot acting for the player side; updates fire whenever a rollout
    completes. A diverged update rolls parameters back to the last good set.
    Newly published imitation snapshots are picked up at episode boundaries.
    """
    cfg = trainer.train_config
    for _ in range(budget_frames):
        state = trainer.env_state
        obs = render_frame(state)
        action, log_prob, value_est = act(trainer.params, obs, "sample", trainer.rng)
        player_action = trainer.imitation.act(state)
        outcome = step(state, player_action, action)
        trainer.rollout.append(
            Transition(
                obs=obs,
                action=int(action),
                reward=outcome.reward_p2,
                done=outcome.round_over,
                value_est=value_est,
                log_prob=log_prob,
            )
        )
        trainer.frames_trained += 1
        if outcome.round_over:
            _flush_update(trainer, bootstrap=0.0)
            trainer.episodes += 1
            if published is not None and published.snapshot is not None:
                if published.snapshot.version > trainer.imitation.version:
                    trainer.imitation = published.snapshot
            trainer.env_state = new_game(trainer.env_config, trainer._episode_seed())
        else:
            trainer.env_state = outcome.next
            if len(trainer.rollout) >= cfg.n_steps:
                _flush_update(
                    trainer, bootstrap=evaluate_value(trainer.params, render_frame(outcome.next))
                )
    return trainer


def _flush_update(trainer: TrainerState, bootstrap: float) -> None:
    if not trainer.rollout.transitions:
        return
    trainer.rollout.finish(bootstrap)
    try:
        trainer.a2c, _ = a2c_update(trainer.a2c, trainer.rollout, trainer.train_config)
        trainer.last_good = trainer.a2c
    except PolicyDivergence:
        trainer.a2c = trainer.last_good
        trainer.divergence_events += 1
    trainer.rollout = RolloutBuffer()


# ---------------------------------------------------------------------------
# episode log

class EpisodeLog:
    """Line-record log of one match: frames, swap/drift/round events."""

    def __init__(self, header: dict):
        self.records: list[dict] = [dict(type="header", **header)]
        self.aborted = False

    def append(self, record: dict) -> None:
        self.records.append(record)

    def frames(self):
        return [r for r in self.records if r["type"] == "frame"]

    def events(self, kind: str):
        return [r for r in self.records if r["type"] == kind]

    def to_jsonl(self) -> str:
        return "\n".join(
            json.dumps(r, sort_keys=True, separators=(",", ":")) for r in self.records
        ) + "\n"

    @staticmethod
    def parse_jsonl(text: str) -> list[dict]:
        return [json.loads(line) for line in text.splitlines() if line.strip()]


def config_fingerprint(config: "MatchConfig") -> str:
    blob = repr(config).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


# ---------------------------------------------------------------------------
# the live session

@dataclass(frozen=True)
class MatchConfig:
    env: EnvConfig = field(default_factory=EnvConfig)
    forest: ForestConfig = field(default_factory=ForestConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    schedule: SwapSchedule = field(default_factory=SwapSchedule)
    rounds: int = 1
    budget_frames: int = 4  # training frames granted per live frame
    publish_interval: int = 60  # frames between imitation snapshot publishes
    acc_interval: int = 100  # frames between imitation accuracy records

    def validate(self) -> None:
        from .errors import ConfigError

        self.env.validate()
        self.forest.validate()
        self.train.validate()
        self.schedule.validate()
        if self.rounds < 1:
            raise ConfigError("rounds must be >= 1")
        if self.budget_frames < 0:
            raise ConfigError("budget_frames must be >= 0")
        if self.publish_interval < 1 or self.acc_interval < 1:
            raise ConfigError("intervals must be >= 1")


class MatchSession:
    """Stepwise driver for one match; the sync harness and the real-time
    service both advance it one player action at a time."""

    def __init__(self, config: MatchConfig, seed: int, header_extra: dict | None = None):
        config.validate()
        self.config = config
        ss = np.random.SeedSequence(seed).spawn(3)
        self.env_rng = np.random.default_rng(ss[0])
        self.forest: ForestModel = forest_new(config.forest, seed=_seed_of(ss[1]))
        self.frame = 0
        self.round_index = 0
        self.done = False
        self.state: GameState = new_game(config.env, self._round_seed())

        self.opponent: AgentSnapshot = rule_based_snapshot()
        self.imitation_slot = PublishSlot()
        self.imitation_slot.publish(imitation_snapshot(self.forest))
        self.trainer = TrainerState(
            env_config=config.env,
            train_config=config.train,
            imitation=self.imitation_slot.snapshot,
            seed=_seed_of(ss[2]),
        )

        header = {
            "seed": seed,
            "config_fingerprint": config_fingerprint(config),
            "k": config.schedule.interval_steps,
            "min_observations": config.schedule.min_observations,
            "rounds": config.rounds,
        }
        header.update(header_extra or {})
        self.log = EpisodeLog(header)

    def _round_seed(self) -> int:
        return int(self.env_rng.integers(2**63))

    # -- per-frame ----------------------------------------------------------

    def step_frame(self, player_action: ActionId) -> dict:
        """Run one live frame with the supplied player action; returns the
        frame record just logged."""
        if self.done:
            raise RuntimeError("match is over")
        cfg = self.config

        self._maybe_swap()

        features = encode_features(self.state, P1)
        opponent_action = self.opponent.act(self.state)
        outcome = step(self.state, player_action, opponent_action)

        events = learn_one(
            self.forest, LabeledExample(features, ActionId(player_action))
        )
        for member, kind in events:
            if kind == "drift":
                self.log.append(
                    {"type": "drift", "frame": self.frame, "member": member}
                )

        record = {
            "type": "frame",
            "frame": self.frame,
            "features": [features.dx, features.dy, features.self_action, features.opp_action],
            "player_action": int(player_action),
            "opponent_action": int(opponent_action),
            "reward_p1": outcome.reward_p1,
            "hp_p1": outcome.next.p1.hp,
            "hp_p2": outcome.next.p2.hp,
            "opponent_version": self.opponent.version,
        }
        self.log.append(record)

        if (self.frame + 1) % cfg.acc_interval == 0:
            from .imitation import prequential_accuracy

            acc = prequential_accuracy(self.forest)
            self.log.append(
                {
                    "type": "imitation_acc",
                    "frame": self.frame,
                    "window_acc": acc["window_acc"],
                    "lifetime_acc": acc["lifetime_acc"],
                }
            )
        if (self.frame + 1) % cfg.publish_interval == 0:
            self.imitation_slot.publish(imitation_snapshot(self.forest))

        if cfg.budget_frames > 0:
            background_train_tick(self.trainer, cfg.budget_frames, self.imitation_slot)

        self.frame += 1
        if outcome.round_over:
            self.log.append(
                {
                    "type": "round_end",
                    "frame": self.frame - 1,
                    "round": self.round_index,
                    "winner": outcome.winner,
                    "hp_p1": outcome.next.p1.hp,
                    "hp_p2": outcome.next.p2.hp,
                }
            )
            self.round_index += 1
            if self.round_index >= cfg.rounds:
                self.done = True
            else:
                self.state = new_game(cfg.env, self._round_seed())
        else:
            self.state = outcome.next
        return record

    def _maybe_swap(self) -> None:
        # frame 0 always plays against the rule-based starter
        if self.frame == 0:
            return
        schedule = self.config.schedule
        if self.frame % schedule.interval_steps != 0:
            return
        candidate = rl_snapshot(self.trainer.params).stamped(self.opponent.version + 1)
        installed = swap_opponent(self.opponent, candidate, self.frame, schedule)
        if installed is candidate:
            self.opponent = installed
            self.log.append(
                {
                    "type": "swap",
                    "frame": self.frame,
                    "version": installed.version,
                    "kind": installed.kind,
                }
            )

    def abort(self, reason: str) -> None:
        self.log.append({"type": "aborted", "frame": self.frame, "reason": reason})
        self.log.aborted = True
        self.done = True


def _seed_of(ss: np.random.SeedSequence) -> int:
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def run_match(player_source, config: MatchConfig, seed: int,
              header_extra: dict | None = None) -> EpisodeLog:
    """Drive a session to completion with a synchronous player source
    (callable (state, frame) -> ActionId). A failing source aborts the match
    and flags the partial log."""
    session = MatchSession(config, seed, header_extra=header_extra)
    while not session.done:
        try:
            action = player_source(session.state, session.frame)
        except Exception as exc:  # noqa: BLE001 - any player failure aborts
            session.abort(f"player source failed: {exc}")
            break
        session.step_frame(ActionId(action))
    return session.log
