import json

import numpy as np
import pytest

from mirrormatch.arena import EnvConfig
from mirrormatch.harness import ExperimentConfig, ServiceConfig
from mirrormatch.orchestrator import MatchConfig, SwapSchedule
from mirrormatch.protocol import (
    CharWire,
    ErrorMsg,
    Hello,
    InputMsg,
    ProtocolError,
    Rating,
    RoundEnd,
    StateMsg,
    decode_message,
    encode_message,
)
from mirrormatch.service import InputSlot, RatingsStore, StateQueue, create_app

starlette_testclient = pytest.importorskip("starlette.testclient")
TestClient = starlette_testclient.TestClient


def _random_message(rng) -> object:
    kind = rng.integers(6)
    if kind == 0:
        return Hello(version=int(rng.integers(0, 100)))
    if kind == 1:
        chars = tuple(
            CharWire(
                x=float(np.round(rng.uniform(0, 960), 3)),
                y=float(np.round(rng.uniform(0, 640), 3)),
                hp=int(rng.integers(0, 401)),
                energy=int(rng.integers(0, 301)),
                action=int(rng.integers(8)),
                facing=("left", "right")[int(rng.integers(2))],
            )
            for _ in range(2)
        )
        return StateMsg(
            frame=int(rng.integers(0, 100_000)),
            chars=chars,
            timer=int(rng.integers(0, 3600)),
            opponent_version=int(rng.integers(0, 500)),
        )
    if kind == 2:
        return InputMsg(frame=int(rng.integers(0, 100_000)), action=int(rng.integers(8)))
    if kind == 3:
        return RoundEnd(
            winner=("p1", "p2", "draw")[int(rng.integers(3))],
            hp=(int(rng.integers(0, 401)), int(rng.integers(0, 401))),
            frames=int(rng.integers(1, 3600)),
        )
    if kind == 4:
        return Rating(value=int(rng.integers(1, 11)))
    return ErrorMsg(code="some_code", message="something happened")


# -- protocol -----------------------------------------------------------------

def test_round_trip_1000_random_messages():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        msg = _random_message(rng)
        assert decode_message(encode_message(msg)) == msg


def test_decode_fixture_input():
    msg = decode_message('{"type":"input","frame":10,"action":3}')
    assert msg == InputMsg(frame=10, action=3)  # 3 = Kick


def test_decode_field_order_irrelevant():
    a = decode_message('{"frame":10,"type":"input","action":3}')
    b = decode_message('{"action":3,"frame":10,"type":"input"}')
    assert a == b


def test_decode_rejects_unknown_type():
    with pytest.raises(ProtocolError) as err:
        decode_message('{"type":"nope"}')
    assert err.value.code == "unknown_type"


def test_decode_rejects_bad_action():
    with pytest.raises(ProtocolError) as err:
        decode_message('{"type":"input","frame":1,"action":9}')
    assert err.value.code == "bad_action"


def test_decode_rejects_garbage():
    with pytest.raises(ProtocolError) as err:
        decode_message("{not json")
    assert err.value.code == "bad_json"
    with pytest.raises(ProtocolError):
        decode_message('{"type":"rating","value":11}')
    with pytest.raises(ProtocolError):
        decode_message('{"type":"hello"}')


# -- building blocks ------------------------------------------------------------

def test_input_slot_latest_wins_and_consumes():
    slot = InputSlot()
    assert int(slot.take()) == 0  # empty -> Idle
    slot.put(5)
    slot.put(6)  # latest wins
    assert int(slot.take()) == 6
    assert int(slot.take()) == 0  # consumed


def test_state_queue_bounded_drops_oldest():
    q = StateQueue(maxlen=4)
    for i in range(10):
        q.put(i)
    assert list(q._items) == [6, 7, 8, 9]


def test_ratings_store_appends(tmp_path):
    store = RatingsStore(str(tmp_path / "ratings.csv"))
    store.append("abc", "rl", 7)
    store.append("abc", "rl", 3)
    rows = store.rows()
    assert len(rows) == 2
    assert rows[0]["value"] == "7" and rows[0]["opponent_kind"] == "rl"


# -- end-to-end over a test websocket ---------------------------------------------

def _service_experiment(tmp_path, round_frames=90) -> ExperimentConfig:
    return ExperimentConfig(
        match=MatchConfig(
            env=EnvConfig(round_frames=round_frames),
            schedule=SwapSchedule(interval_steps=60, min_observations=10_000),
            budget_frames=0,  # no trainer thread in tests
        ),
        persona="idle",
        seed=11,
        service=ServiceConfig(
            fps=0.0,  # unthrottled
            broadcast_every=3,
            ratings_path=str(tmp_path / "ratings.csv"),
        ),
    )


def _recv_until(ws, wanted_type, limit=5000):
    for _ in range(limit):
        msg = decode_message(ws.receive_text())
        if msg.type == wanted_type:
            return msg
    raise AssertionError(f"no {wanted_type} message within {limit} frames")


def test_headless_client_full_round_and_rating(tmp_path):
    config = _service_experiment(tmp_path)
    app = create_app(config)
    client = TestClient(app)
    with client.websocket_connect("/play") as ws:
        ws.send_text(encode_message(Hello(version=1)))
        reply = decode_message(ws.receive_text())
        assert reply == Hello(version=1)

        # scripted play: hold punch, let the round run out
        ws.send_text(encode_message(InputMsg(frame=0, action=5)))
        state = _recv_until(ws, "state")
        assert state.frame % 3 == 0

        end = _recv_until(ws, "round_end")
        assert end.winner in ("p1", "p2", "draw")

        ws.send_text(encode_message(Rating(value=7)))
        # next round begins: more states arrive
        _recv_until(ws, "state")

    rows = RatingsStore(str(tmp_path / "ratings.csv")).rows()
    assert len(rows) == 1
    assert rows[0]["value"] == "7"


def test_version_mismatch_rejected(tmp_path):
    app = create_app(_service_experiment(tmp_path))
    client = TestClient(app)
    with client.websocket_connect("/play") as ws:
        ws.send_text(encode_message(Hello(version=99)))
        msg = decode_message(ws.receive_text())
        assert isinstance(msg, ErrorMsg) and msg.code == "version_mismatch"


def test_malformed_message_keeps_connection(tmp_path):
    app = create_app(_service_experiment(tmp_path))
    client = TestClient(app)
    with client.websocket_connect("/play") as ws:
        ws.send_text(encode_message(Hello(version=1)))
        decode_message(ws.receive_text())  # hello ack

        ws.send_text('{"type":"input","frame":1,"action":9}')
        err = _recv_until(ws, "error")
        assert err.code == "bad_action"

        # connection still alive: states keep flowing
        _recv_until(ws, "state")


def test_no_input_plays_idle(tmp_path):
    config = _service_experiment(tmp_path, round_frames=400)
    import dataclasses

    config = dataclasses.replace(
        config,
        match=dataclasses.replace(
            config.match, env=EnvConfig(hp_max=60, round_frames=400)
        ),
    )
    app = create_app(config)
    client = TestClient(app)
    with client.websocket_connect("/play") as ws:
        ws.send_text(encode_message(Hello(version=1)))
        decode_message(ws.receive_text())
        end = _recv_until(ws, "round_end")
        # idle player vs rule-based opponent: player never acts, opponent wins
        assert end.winner == "p2"
        assert end.hp[0] == 0  # idle player knocked out
