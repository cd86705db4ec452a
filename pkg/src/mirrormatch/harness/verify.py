"""Built-in invariant suites, runnable via `mirrormatch verify`.

Each suite returns {"suite", "passed", "details"}; `verify all` aggregates.
These are the same checks the test suite pins down, packaged so a fresh
install can self-check without pytest.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np

from ..arena import (
    ActionId,
    EnvConfig,
    encode_features,
    is_round_over,
    new_game,
    render_frame,
    state_hash,
    step,
)
from ..imitation.adwin import AdwinDetector
from ..imitation.tree import RANGE_R, hoeffding_bound
from ..policy import (
    REDUCED_ARCH,
    RolloutBuffer,
    TrainConfig,
    Transition,
    gradient_check,
    n_step_returns,
    policy_new,
)


def _suite_arena() -> dict:
    rng = np.random.default_rng(1234)
    actions = [(int(rng.integers(8)), int(rng.integers(8))) for _ in range(500)]

    def replay():
        state = new_game(EnvConfig(), seed=77)
        hashes = [state_hash(state)]
        zero_sum = True
        for a1, a2 in actions:
            if is_round_over(state):
                break
            out = step(state, ActionId(a1), ActionId(a2))
            zero_sum = zero_sum and out.reward_p1 + out.reward_p2 == 0.0
            state = out.next
            hashes.append(state_hash(state))
        return hashes, zero_sum

    h1, zs1 = replay()
    h2, _ = replay()
    deterministic = h1 == h2
    return {
        "suite": "arena",
        "passed": deterministic and zs1,
        "details": {"deterministic": deterministic, "zero_sum": zs1, "frames": len(h1) - 1},
    }


def _suite_encoder() -> dict:
    rng = np.random.default_rng(4321)
    config = EnvConfig()
    base = new_game(config, seed=5)
    corner_ok = True
    antisym_ok = True
    for _ in range(1000):
        s = dataclasses.replace(
            base,
            p1=dataclasses.replace(
                base.p1,
                x=float(rng.uniform(0, config.stage_w)),
                y=float(rng.uniform(0, 200)),
                hp=int(rng.integers(0, config.hp_max + 1)),
                energy=int(rng.integers(0, config.energy_max + 1)),
            ),
            p2=dataclasses.replace(
                base.p2,
                x=float(rng.uniform(0, config.stage_w)),
                y=float(rng.uniform(0, 200)),
                hp=int(rng.integers(0, config.hp_max + 1)),
                energy=int(rng.integers(0, config.energy_max + 1)),
            ),
        )
        px = render_frame(s)
        corner_ok = corner_ok and (
            px[0, 0] == s.p1.hp * 255 // config.hp_max
            and px[0, 1] == s.p1.energy * 255 // config.energy_max
            and px[0, 95] == s.p2.hp * 255 // config.hp_max
            and px[0, 94] == s.p2.energy * 255 // config.energy_max
            and px.size == 6144
        )
        f1 = encode_features(s, "p1")
        f2 = encode_features(s, "p2")
        antisym_ok = antisym_ok and f1.dx == -f2.dx and f1.dy == -f2.dy
    return {
        "suite": "encoder",
        "passed": bool(corner_ok and antisym_ok),
        "details": {"corner_pixels": bool(corner_ok), "antisymmetry": bool(antisym_ok)},
    }


def _suite_hoeffding() -> dict:
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(100):
        r = float(rng.uniform(0.1, 10.0))
        delta = float(rng.uniform(1e-9, 0.999))
        n = int(rng.integers(1, 100_000))
        expected = math.sqrt(r * r * math.log(1.0 / delta) / (2.0 * n))
        worst = max(worst, abs(hoeffding_bound(r, delta, n) - expected))
    fixtures_ok = (
        hoeffding_bound(1.0, 1.0, 5) == 0.0
        and abs(hoeffding_bound(3.0, 1e-7, 200) - 0.60221) < 1e-5
        and abs(hoeffding_bound(1.0, 0.05, 1) - 1.22387) < 1e-5
    )
    return {
        "suite": "hoeffding",
        "passed": worst < 1e-12 and fixtures_ok,
        "details": {"max_abs_err": worst, "fixtures": fixtures_ok, "range_r": RANGE_R},
    }


def _suite_adwin() -> dict:
    det = AdwinDetector(0.002)
    fired_constant = any(det.update(1.0) for _ in range(10_000))

    rng = np.random.default_rng(123)
    det2 = AdwinDetector(0.002)
    fired_at = []
    stream = np.concatenate(
        [(rng.random(500) < 0.9).astype(float), (rng.random(500) < 0.1).astype(float)]
    )
    for i, bit in enumerate(stream):
        if det2.update(bit):
            fired_at.append(i)
    shift_ok = bool(fired_at) and all(i >= 500 for i in fired_at)
    return {
        "suite": "adwin",
        "passed": (not fired_constant) and shift_ok,
        "details": {"constant_fired": fired_constant, "shift_detections": fired_at[:5]},
    }


def _suite_gradients() -> dict:
    config = TrainConfig(arch=REDUCED_ARCH, seed=7)
    params = policy_new(config)
    rng = np.random.default_rng(11)
    rollout = RolloutBuffer()
    for i in range(5):
        obs = rng.integers(0, 256, size=(REDUCED_ARCH.input_h, REDUCED_ARCH.input_w),
                           dtype=np.uint8)
        rollout.append(
            Transition(obs, int(rng.integers(8)), float(rng.normal()), i == 4,
                       float(rng.normal()), -1.0)
        )
    rollout.finish(0.0)
    err = float(gradient_check(params, rollout, config))
    return {
        "suite": "gradients",
        "passed": bool(err < 1e-4),
        "details": {"max_rel_err": err},
    }


def _suite_returns() -> dict:
    def rollout_of(rewards, dones, bootstrap):
        r = RolloutBuffer()
        for rew, done in zip(rewards, dones):
            r.append(Transition(np.zeros((1, 1)), 0, rew, done, 0.0, -1.0))
        r.finish(bootstrap)
        return r

    g0, _ = n_step_returns(rollout_of([0.5, -1.0, 2.0], [False] * 3, 3.0), gamma=0.0)
    collapse_ok = bool(np.allclose(g0, [0.5, -1.0, 2.0], atol=1e-9))
    g1, _ = n_step_returns(rollout_of([1.0, 0.0, 1.0], [False] * 3, 2.0), gamma=0.9)
    hand_ok = bool(abs(g1[0] - 3.268) < 1e-9)
    g2, _ = n_step_returns(
        rollout_of([1.0, 0.0, 1.0], [False, False, True], 2.0), gamma=0.9
    )
    terminal_ok = bool(abs(g2[0] - 1.81) < 1e-9)
    return {
        "suite": "returns",
        "passed": collapse_ok and hand_ok and terminal_ok,
        "details": {"gamma0": collapse_ok, "hand_case": hand_ok, "terminal": terminal_ok},
    }


SUITES = {
    "arena": _suite_arena,
    "encoder": _suite_encoder,
    "hoeffding": _suite_hoeffding,
    "adwin": _suite_adwin,
    "gradients": _suite_gradients,
    "returns": _suite_returns,
}


def run_suites(selector: str = "all") -> list[dict]:
    if selector == "all":
        names = list(SUITES)
    elif selector in SUITES:
        names = [selector]
    else:
        from ..errors import ConfigError

        raise ConfigError(f"unknown verify suite {selector!r}; have {sorted(SUITES)}")
    return [SUITES[name]() for name in names]
