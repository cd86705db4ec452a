import dataclasses

import numpy as np
import pytest

from mirrormatch.arena import ActionId, EnvConfig, new_game
from mirrormatch.errors import ConfigError
from mirrormatch.personas import make_persona, persona_act


def _state_at(x1, x2, energy1=0):
    s = new_game(EnvConfig(), seed=0)
    return dataclasses.replace(
        s,
        p1=dataclasses.replace(s.p1, x=x1, energy=energy1),
        p2=dataclasses.replace(s.p2, x=x2),
    )


def test_idle_always_idle():
    p = make_persona("idle", seed=1)
    for x1, x2 in ((0, 900), (500, 500), (700, 100)):
        assert persona_act(p, _state_at(x1, x2), 0) == ActionId.IDLE


def test_rushdown_rules():
    p = make_persona("rushdown", seed=1)
    # 300 apart > punch reach 80: approach
    assert persona_act(p, _state_at(200, 500), 0) == ActionId.MOVE_RIGHT
    assert persona_act(p, _state_at(500, 200), 0) == ActionId.MOVE_LEFT
    # in reach: punch
    assert persona_act(p, _state_at(450, 500), 0) == ActionId.PUNCH


def test_turtle_rules():
    p = make_persona("turtle", seed=1)
    assert persona_act(p, _state_at(450, 500), 0) == ActionId.GUARD  # within kick reach
    assert persona_act(p, _state_at(200, 500), 0) == ActionId.MOVE_LEFT  # flee


def test_zoner_rules():
    p = make_persona("zoner", seed=1)
    # too close (<= 112): back off
    assert persona_act(p, _state_at(450, 500), 0) == ActionId.MOVE_LEFT
    # in special range with energy: special
    assert persona_act(p, _state_at(380, 500, energy1=150), 0) == ActionId.SPECIAL
    # in special range without energy: hold
    assert persona_act(p, _state_at(380, 500, energy1=0), 0) == ActionId.IDLE


def test_deterministic_personas_are_pure():
    fixtures = [(_state_at(100 + 37 * i, 800 - 23 * i), i) for i in range(50)]
    for kind in ("idle", "rushdown", "turtle", "zoner"):
        p = make_persona(kind, seed=3)
        first = [persona_act(p, s, f) for s, f in fixtures]
        second = [persona_act(p, s, f) for s, f in fixtures]
        assert first == second


def test_noisy_zero_epsilon_equals_base():
    base = make_persona("rushdown", seed=5)
    noisy = make_persona("noisy:rushdown:0.0", seed=5)
    for i in range(200):
        s = _state_at(100 + i * 4, 800)
        assert persona_act(noisy, s, i) == persona_act(base, s, i)


def test_noisy_base_action_frequency():
    # base action shows up with probability (1-eps) + eps/8 = 0.825
    p = make_persona("noisy:rushdown:0.2", seed=7)
    s = _state_at(200, 700)  # rushdown would MOVE_RIGHT
    hits = sum(
        persona_act(p, s, i) == ActionId.MOVE_RIGHT for i in range(10_000)
    )
    assert hits / 10_000 == pytest.approx(0.825, abs=0.02)


def test_switching_matches_components():
    sw = make_persona("switching:rushdown:turtle:100", seed=9)
    rush = make_persona("rushdown", seed=9)
    turtle = make_persona("turtle", seed=9)
    for f in range(200):
        s = _state_at(300 + f, 700)
        expected = persona_act(rush if f < 100 else turtle, s, f)
        assert persona_act(sw, s, f) == expected


def test_random_is_seed_deterministic():
    a = make_persona("random", seed=11)
    b = make_persona("random", seed=11)
    s = _state_at(300, 600)
    assert [persona_act(a, s, i) for i in range(50)] == [
        persona_act(b, s, i) for i in range(50)
    ]


def test_bad_specs_rejected():
    for spec in ("nope", "noisy:rushdown", "noisy:rushdown:2.0",
                 "switching:rushdown:turtle", "noisy:noisy:0.1"):
        with pytest.raises(ConfigError):
            make_persona(spec, seed=0)
