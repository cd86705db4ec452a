"""Experiment driver and evaluation commands.

`run_experiment` plays `episodes` matches with per-episode derived seeds
(seed + index), persists one JSONL episode log each, final model checkpoints,
a canonical config snapshot, and a metrics summary. Given the same config the
whole output directory is byte-identical across runs.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from ..arena import (
    ActionId,
    EnvConfig,
    P1,
    encode_features,
    is_round_over,
    new_game,
    round_winner,
    step,
)
from ..errors import ConfigError
from ..imitation import (
    ForestConfig,
    LabeledExample,
    forest_new,
    learn_one,
    predict_one,
    prequential_accuracy,
    save_forest,
)
from ..orchestrator import MatchSession, rule_based_opponent
from ..personas import make_persona
from ..policy import NetworkParams, load_params, rl_snapshot, save_params
from ..snapshots import AgentSnapshot
from .config import ExperimentConfig, save_config


def run_experiment(config: ExperimentConfig, out_dir: str) -> dict:
    config.validate()
    os.makedirs(out_dir, exist_ok=True)
    checkpoints = os.path.join(out_dir, "checkpoints")
    os.makedirs(checkpoints, exist_ok=True)
    if not os.access(out_dir, os.W_OK):
        raise ConfigError(f"output directory not writable: {out_dir}")

    with open(os.path.join(out_dir, "config.snapshot"), "w", encoding="utf-8") as fh:
        fh.write(save_config(config))

    episode_summaries = []
    last_session = None
    for episode in range(config.episodes):
        episode_seed = config.seed + episode
        persona = make_persona(config.persona, seed=episode_seed)
        session = MatchSession(
            config.match,
            seed=episode_seed,
            header_extra={"episode": episode, "persona": config.persona},
        )
        while not session.done:
            session.step_frame(persona.act(session.state, session.frame))
        path = os.path.join(out_dir, f"episode_{episode}.jsonl")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(session.log.to_jsonl())
        episode_summaries.append(_summarize_episode(episode, episode_seed, session.log.records))
        last_session = session

    with open(os.path.join(checkpoints, "imitation.bin"), "wb") as fh:
        fh.write(save_forest(last_session.forest))
    with open(os.path.join(checkpoints, "policy.bin"), "wb") as fh:
        fh.write(save_params(last_session.trainer.params))

    acc = prequential_accuracy(last_session.forest)
    imitation_metrics = {
        "window_acc_timeline": [
            [r["frame"], r["window_acc"]]
            for r in last_session.log.records
            if r["type"] == "imitation_acc"
        ],
        "window_acc": acc["window_acc"],
        "lifetime_acc": acc["lifetime_acc"],
    }

    rl_metrics = {"win_rate_vs_persona": None, "mean_reward": None, "rounds": []}
    if config.eval_rounds > 0:
        tally = eval_rl(
            last_session.trainer.params,
            config.persona,
            config.eval_rounds,
            config.match.env,
            seed=config.seed + 10_000,
        )
        rl_metrics = {
            "win_rate_vs_persona": tally["wins"] / config.eval_rounds,
            "mean_reward": tally["mean_reward"],
            "rounds": tally["rounds"],
        }

    report = {
        "episodes": episode_summaries,
        "imitation": imitation_metrics,
        "rl": rl_metrics,
        "aggregate": _aggregate(episode_summaries),
    }
    with open(os.path.join(out_dir, "metrics.json"), "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=1)
        fh.write("\n")
    return report


def _summarize_episode(episode: int, seed: int, records: list[dict]) -> dict:
    frames = [r for r in records if r["type"] == "frame"]
    rounds = [r for r in records if r["type"] == "round_end"]
    swaps = [r for r in records if r["type"] == "swap"]
    drifts = [r for r in records if r["type"] == "drift"]
    p1_rounds = sum(r["winner"] == "p1" for r in rounds)
    p2_rounds = sum(r["winner"] == "p2" for r in rounds)
    if p1_rounds > p2_rounds:
        winner = "p1"
    elif p2_rounds > p1_rounds:
        winner = "p2"
    else:
        winner = "draw"
    hp_diffs = [r["hp_p1"] - r["hp_p2"] for r in rounds]
    return {
        "episode": episode,
        "seed": seed,
        "winner": winner,
        "round_winners": [r["winner"] for r in rounds],
        "final_hp_diff": float(np.mean(hp_diffs)) if hp_diffs else 0.0,
        "frames": len(frames),
        "swap_count": len(swaps),
        "drift_events": len(drifts),
    }


def _aggregate(episodes: list[dict]) -> dict:
    def stats(key):
        vals = [e[key] for e in episodes]
        mean = float(np.mean(vals))
        std = float(np.std(vals, ddof=1)) if len(vals) > 1 else None
        return mean, std

    mean_frames, std_frames = stats("frames")
    mean_hp, std_hp = stats("final_hp_diff")
    mean_swaps, std_swaps = stats("swap_count")
    mean_drifts, std_drifts = stats("drift_events")
    return {
        "episodes": len(episodes),
        "wins": {
            "p1": sum(e["winner"] == "p1" for e in episodes),
            "p2": sum(e["winner"] == "p2" for e in episodes),
            "draw": sum(e["winner"] == "draw" for e in episodes),
        },
        "mean_frames": mean_frames,
        "std_frames": std_frames,
        "mean_final_hp_diff": mean_hp,
        "std_final_hp_diff": std_hp,
        "mean_swap_count": mean_swaps,
        "std_swap_count": std_swaps,
        "mean_drift_events": mean_drifts,
        "std_drift_events": std_drifts,
    }


def recompute_metrics(out_dir: str) -> dict:
    """Re-derive the per-episode summaries and aggregates from the persisted
    logs; used to check metrics.json against its sources."""
    episodes = []
    index = 0
    while True:
        path = os.path.join(out_dir, f"episode_{index}.jsonl")
        if not os.path.exists(path):
            break
        with open(path, "r", encoding="utf-8") as fh:
            records = [json.loads(line) for line in fh if line.strip()]
        header = records[0]
        episodes.append(_summarize_episode(index, header["seed"], records))
        index += 1
    return {"episodes": episodes, "aggregate": _aggregate(episodes)}


# ---------------------------------------------------------------------------
# imitation evaluation

@dataclass
class ImitationEvalReport:
    timeline: list = field(default_factory=list)  # (step, window_acc, lifetime_acc)
    drift_steps: list = field(default_factory=list)
    correctness: list = field(default_factory=list)  # per-step 0/1 test-then-train bits
    window_acc: float | None = None
    lifetime_acc: float | None = None

    def window_at(self, step: int) -> float | None:
        best = None
        for s, w, _ in self.timeline:
            if s <= step:
                best = w
        return best


def eval_imitation(
    persona_spec: str,
    steps: int,
    forest_config: ForestConfig,
    env_config: EnvConfig,
    seed: int,
    sample_every: int = 100,
) -> ImitationEvalReport:
    """Stream live-simulation frames through the player model, test-then-train.

    The persona drives p1 against the rule-based opponent; rounds restart as
    they finish so the stream runs for exactly `steps` examples.
    """
    if steps < 1:
        raise ConfigError("steps must be >= 1")
    forest = forest_new(forest_config, seed=seed)
    persona = make_persona(persona_spec, seed=seed + 1)
    rng = np.random.default_rng(np.random.SeedSequence(seed + 2))
    state = new_game(env_config, int(rng.integers(2**63)))
    report = ImitationEvalReport()
    for i in range(steps):
        if is_round_over(state):
            state = new_game(env_config, int(rng.integers(2**63)))
        features = encode_features(state, P1)
        label = persona.act(state, i)
        predicted, _ = predict_one(forest, features)
        report.correctness.append(int(predicted == label))
        events = learn_one(forest, LabeledExample(features, ActionId(label)))
        report.drift_steps.extend(i for _, kind in events if kind == "drift")
        state = step(state, label, rule_based_opponent(state)).next
        if (i + 1) % sample_every == 0 or i == steps - 1:
            acc = prequential_accuracy(forest)
            report.timeline.append((i + 1, acc["window_acc"], acc["lifetime_acc"]))
    final = prequential_accuracy(forest)
    report.window_acc = final["window_acc"]
    report.lifetime_acc = final["lifetime_acc"]
    return report


# ---------------------------------------------------------------------------
# policy evaluation

def _as_opponent(opponent, seed: int) -> AgentSnapshot:
    if isinstance(opponent, AgentSnapshot):
        return opponent
    if isinstance(opponent, str):
        persona = make_persona(opponent, seed=seed)
        return AgentSnapshot(
            kind="persona", act=lambda s: persona.act(s, s.frame), version=0
        )
    raise ConfigError(f"cannot interpret opponent {opponent!r}")


def eval_rl(
    params,
    opponent,
    rounds: int,
    env_config: EnvConfig,
    seed: int,
) -> dict:
    """Greedy policy (p2) vs an opponent acting for p1, `rounds` rounds.

    `params` may be a NetworkParams, a checkpoint path, or checkpoint bytes;
    `opponent` a persona spec string or an AgentSnapshot.
    """
    if isinstance(params, (bytes, bytearray)):
        params = load_params(bytes(params))
    elif isinstance(params, str):
        with open(params, "rb") as fh:
            params = load_params(fh.read())
    if not isinstance(params, NetworkParams):
        raise ConfigError("expected NetworkParams or checkpoint")
    if rounds < 1:
        raise ConfigError("rounds must be >= 1")

    snapshot = rl_snapshot(params)
    opp = _as_opponent(opponent, seed=seed + 500)
    tally = {"wins": 0, "losses": 0, "draws": 0}
    hp_diffs = []
    rewards = []
    per_round = []
    for r in range(rounds):
        state = new_game(env_config, seed=seed + r)
        total_reward = 0.0
        while not is_round_over(state):
            outcome = step(state, opp.act(state), snapshot.act(state))
            total_reward += outcome.reward_p2
            state = outcome.next
        winner = round_winner(state)
        if winner == "p2":
            tally["wins"] += 1
        elif winner == "p1":
            tally["losses"] += 1
        else:
            tally["draws"] += 1
        hp_diffs.append(state.p2.hp - state.p1.hp)
        rewards.append(total_reward)
        per_round.append({"round": r, "winner": winner,
                          "hp_p1": state.p1.hp, "hp_p2": state.p2.hp})
    return {
        **tally,
        "rounds": per_round,
        "mean_hp_diff": float(np.mean(hp_diffs)),
        "mean_reward": float(np.mean(rewards)),
    }
