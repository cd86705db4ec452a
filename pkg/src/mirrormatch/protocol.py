"""Wire protocol for the real-time game service.

One JSON document per WebSocket text frame, discriminated by `type`:

    hello     {version}                           (both directions)
    state     {frame, chars[2], timer, opponent_version}   (server -> client)
    input     {frame, action 0..7}                (client -> server)
    round_end {winner, hp[2], frames}             (server -> client)
    rating    {value 1..10}                       (client -> server)
    error     {code, message}                     (server -> client)

Decoding validates field presence, types, and ranges; field order never
matters. decode(encode(m)) == m for every valid message.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

PROTOCOL_VERSION = 1

VALID_WINNERS = ("p1", "p2", "draw")
VALID_FACINGS = ("left", "right")


class ProtocolError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


@dataclass(frozen=True)
class Hello:
    version: int
    type: str = "hello"


@dataclass(frozen=True)
class CharWire:
    x: float
    y: float
    hp: int
    energy: int
    action: int
    facing: str


@dataclass(frozen=True)
class StateMsg:
    frame: int
    chars: tuple  # (CharWire, CharWire)
    timer: int
    opponent_version: int
    type: str = "state"


@dataclass(frozen=True)
class InputMsg:
    frame: int
    action: int
    type: str = "input"


@dataclass(frozen=True)
class RoundEnd:
    winner: str
    hp: tuple  # (hp_p1, hp_p2)
    frames: int
    type: str = "round_end"


@dataclass(frozen=True)
class Rating:
    value: int
    type: str = "rating"


@dataclass(frozen=True)
class ErrorMsg:
    code: str
    message: str
    type: str = "error"


WireMessage = Hello | StateMsg | InputMsg | RoundEnd | Rating | ErrorMsg


def encode_message(msg: WireMessage) -> str:
    if isinstance(msg, Hello):
        body = {"type": "hello", "version": msg.version}
    elif isinstance(msg, StateMsg):
        body = {
            "type": "state",
            "frame": msg.frame,
            "chars": [
                {
                    "x": c.x,
                    "y": c.y,
                    "hp": c.hp,
                    "energy": c.energy,
                    "action": c.action,
                    "facing": c.facing,
                }
                for c in msg.chars
            ],
            "timer": msg.timer,
            "opponent_version": msg.opponent_version,
        }
    elif isinstance(msg, InputMsg):
        body = {"type": "input", "frame": msg.frame, "action": msg.action}
    elif isinstance(msg, RoundEnd):
        body = {
            "type": "round_end",
            "winner": msg.winner,
            "hp": list(msg.hp),
            "frames": msg.frames,
        }
    elif isinstance(msg, Rating):
        body = {"type": "rating", "value": msg.value}
    elif isinstance(msg, ErrorMsg):
        body = {"type": "error", "code": msg.code, "message": msg.message}
    else:
        raise ProtocolError("bad_message", f"cannot encode {type(msg).__name__}")
    return json.dumps(body, separators=(",", ":"), sort_keys=True)


def _need(obj: dict, key: str, kinds, what: str):
    if key not in obj:
        raise ProtocolError("missing_field", f"{what} missing field {key!r}")
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, kinds):
        raise ProtocolError("bad_field", f"{what} field {key!r} has wrong type")
    return value


def _int(obj, key, what, lo=None, hi=None):
    value = _need(obj, key, int, what)
    if lo is not None and value < lo or hi is not None and value > hi:
        raise ProtocolError("bad_field", f"{what} field {key!r} out of range: {value}")
    return value


def decode_message(text: str) -> WireMessage:
    try:
        obj = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ProtocolError("bad_json", f"not a JSON document: {exc}") from exc
    if not isinstance(obj, dict):
        raise ProtocolError("bad_json", "message must be a JSON object")
    mtype = obj.get("type")
    if mtype == "hello":
        return Hello(version=_int(obj, "version", "hello", lo=0))
    if mtype == "state":
        chars_raw = _need(obj, "chars", list, "state")
        if len(chars_raw) != 2:
            raise ProtocolError("bad_field", "state must carry exactly 2 chars")
        chars = []
        for c in chars_raw:
            if not isinstance(c, dict):
                raise ProtocolError("bad_field", "state char must be an object")
            facing = _need(c, "facing", str, "state char")
            if facing not in VALID_FACINGS:
                raise ProtocolError("bad_field", f"bad facing {facing!r}")
            chars.append(
                CharWire(
                    x=float(_need(c, "x", (int, float), "state char")),
                    y=float(_need(c, "y", (int, float), "state char")),
                    hp=_int(c, "hp", "state char", lo=0),
                    energy=_int(c, "energy", "state char", lo=0),
                    action=_int(c, "action", "state char", lo=0, hi=7),
                    facing=facing,
                )
            )
        return StateMsg(
            frame=_int(obj, "frame", "state", lo=0),
            chars=tuple(chars),
            timer=_int(obj, "timer", "state", lo=0),
            opponent_version=_int(obj, "opponent_version", "state", lo=0),
        )
    if mtype == "input":
        frame = _int(obj, "frame", "input", lo=0)
        action = _need(obj, "action", int, "input")
        if not 0 <= action <= 7:
            raise ProtocolError("bad_action", f"action code out of range: {action}")
        return InputMsg(frame=frame, action=action)
    if mtype == "round_end":
        winner = _need(obj, "winner", str, "round_end")
        if winner not in VALID_WINNERS:
            raise ProtocolError("bad_field", f"bad winner {winner!r}")
        hp = _need(obj, "hp", list, "round_end")
        if len(hp) != 2 or not all(isinstance(v, int) and v >= 0 for v in hp):
            raise ProtocolError("bad_field", "round_end hp must be two counts")
        return RoundEnd(winner=winner, hp=tuple(hp), frames=_int(obj, "frames", "round_end", lo=0))
    if mtype == "rating":
        return Rating(value=_int(obj, "value", "rating", lo=1, hi=10))
    if mtype == "error":
        return ErrorMsg(
            code=_need(obj, "code", str, "error"),
            message=_need(obj, "message", str, "error"),
        )
    raise ProtocolError("unknown_type", f"unknown message type {mtype!r}")
