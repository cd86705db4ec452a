"""Real-time game server: one human player over a WebSocket.

The match loop is an asyncio task stepping the shared MatchSession at the
configured frame rate (fps=0 runs unthrottled for tests); the connection
handler only parses messages. The two sides meet through an input slot
(latest input wins, consumed once per frame) and a bounded state queue
(oldest states dropped when the client stalls, so the simulation never
blocks). Background RL training runs on its own thread, continuously, and
the match loop picks up whatever parameters were last published.

After each round the server emits round_end and accepts exactly one rating
(1-10), appended to a CSV ratings store; the next round starts once the
rating arrives.
"""
from __future__ import annotations

import asyncio
import csv
import logging
import threading
import time
import uuid
from collections import deque

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .arena import ActionId
from .harness.config import ExperimentConfig
from .orchestrator import MatchSession, background_train_tick
from .protocol import (
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

log = logging.getLogger("mirrormatch.service")

TRAINER_CHUNK = 64  # frames per background-thread slice


class InputSlot:
    """Latest-wins mailbox; reading consumes (missing input means Idle)."""

    def __init__(self):
        self._value: int | None = None

    def put(self, action: int) -> None:
        self._value = action

    def take(self) -> ActionId:
        value, self._value = self._value, None
        return ActionId(value) if value is not None else ActionId.IDLE


class StateQueue:
    """Bounded broadcast queue: overflow drops the oldest snapshot."""

    def __init__(self, maxlen: int):
        self._items: deque = deque(maxlen=maxlen)
        self._wakeup = asyncio.Event()

    def put(self, item) -> None:
        self._items.append(item)  # deque(maxlen) evicts the oldest
        self._wakeup.set()

    async def get(self):
        while not self._items:
            self._wakeup.clear()
            await self._wakeup.wait()
        return self._items.popleft()


class RatingsStore:
    """Append-only CSV rows: timestamp, session, opponent_kind, value."""

    COLUMNS = ("timestamp", "session", "opponent_kind", "value")

    def __init__(self, path: str):
        self.path = path

    def append(self, session: str, opponent_kind: str, value: int) -> None:
        import os

        new_file = not os.path.exists(self.path)
        with open(self.path, "a", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            if new_file:
                writer.writerow(self.COLUMNS)
            writer.writerow([f"{time.time():.3f}", session, opponent_kind, value])

    def rows(self) -> list[dict]:
        import os

        if not os.path.exists(self.path):
            return []
        with open(self.path, newline="", encoding="utf-8") as fh:
            return list(csv.DictReader(fh))


class LiveSession:
    """One connected player: match loop state + trainer thread."""

    def __init__(self, config: ExperimentConfig):
        import dataclasses

        self.config = config
        # budget_frames > 0 means "train"; live mode moves that work onto a
        # thread instead of the per-frame budget. budget_frames == 0 disables
        # background training entirely.
        self.train_enabled = config.match.budget_frames > 0
        match_config = dataclasses.replace(
            config.match, budget_frames=0, rounds=10**9
        )
        self.session = MatchSession(match_config, seed=config.seed)
        self.session_id = uuid.uuid4().hex[:12]
        self.input_slot = InputSlot()
        self.state_queue = StateQueue(config.service.state_queue_len)
        self.rating_expected = False
        self.rating_event = asyncio.Event()
        self.rounds_played = 0
        self.closed = False
        self._trainer_stop = threading.Event()
        self._trainer_thread: threading.Thread | None = None

    def start_trainer(self) -> None:
        if not self.train_enabled:
            return

        def loop():
            while not self._trainer_stop.is_set():
                background_train_tick(
                    self.session.trainer, TRAINER_CHUNK, self.session.imitation_slot
                )

        self._trainer_thread = threading.Thread(target=loop, daemon=True)
        self._trainer_thread.start()

    def stop(self) -> None:
        self.closed = True
        self._trainer_stop.set()
        self.rating_event.set()
        if self._trainer_thread is not None:
            self._trainer_thread.join(timeout=2.0)

    def state_message(self) -> StateMsg:
        s = self.session.state
        chars = tuple(
            CharWire(
                x=c.x, y=c.y, hp=c.hp, energy=c.energy,
                action=int(c.current_action), facing=c.facing,
            )
            for c in (s.p1, s.p2)
        )
        return StateMsg(
            frame=self.session.frame,
            chars=chars,
            timer=s.timer_frames_left,
            opponent_version=self.session.opponent.version,
        )


def create_app(config: ExperimentConfig, ratings: RatingsStore | None = None) -> FastAPI:
    config.validate()
    app = FastAPI(title="mirrormatch")
    app.state.config = config
    app.state.ratings = ratings or RatingsStore(config.service.ratings_path)
    app.state.live: LiveSession | None = None

    @app.websocket("/play")
    async def play(ws: WebSocket):  # noqa: ANN001
        await ws.accept()
        service = config.service

        # handshake
        try:
            first = decode_message(await ws.receive_text())
        except ProtocolError as exc:
            await ws.send_text(encode_message(ErrorMsg(code=exc.code, message=exc.message)))
            await ws.close()
            return
        if not isinstance(first, Hello) or first.version != service.protocol_version:
            await ws.send_text(
                encode_message(
                    ErrorMsg(
                        code="version_mismatch",
                        message=f"server speaks version {service.protocol_version}",
                    )
                )
            )
            await ws.close()
            return
        if app.state.live is not None:
            await ws.send_text(
                encode_message(ErrorMsg(code="busy", message="another session is active"))
            )
            await ws.close()
            return

        live = LiveSession(config)
        app.state.live = live
        live.start_trainer()
        await ws.send_text(encode_message(Hello(version=service.protocol_version)))

        match_task = asyncio.create_task(_match_loop(live, service))
        sender_task = asyncio.create_task(_sender_loop(live, ws))
        try:
            while True:
                text = await ws.receive_text()
                try:
                    msg = decode_message(text)
                except ProtocolError as exc:
                    await ws.send_text(
                        encode_message(ErrorMsg(code=exc.code, message=exc.message))
                    )
                    continue
                if isinstance(msg, InputMsg):
                    live.input_slot.put(msg.action)
                elif isinstance(msg, Rating):
                    if live.rating_expected:
                        live.rating_expected = False
                        app.state.ratings.append(
                            live.session_id,
                            live.session.opponent.kind,
                            msg.value,
                        )
                        live.rating_event.set()
                    else:
                        await ws.send_text(
                            encode_message(
                                ErrorMsg(code="no_round", message="no round awaiting a rating")
                            )
                        )
                else:
                    await ws.send_text(
                        encode_message(
                            ErrorMsg(code="unexpected", message=f"unexpected {msg.type}")
                        )
                    )
        except WebSocketDisconnect:
            pass
        finally:
            live.stop()
            match_task.cancel()
            sender_task.cancel()
            app.state.live = None

    # mounted last so /play stays reachable
    static_dir = config.service.static_dir
    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="webui")

    return app


async def _match_loop(live: LiveSession, service) -> None:
    session = live.session
    frame_dt = 1.0 / service.fps if service.fps > 0 else 0.0
    next_due = time.monotonic()
    while not live.closed and not session.done:
        record = session.step_frame(live.input_slot.take())

        if session.frame % service.broadcast_every == 0:
            live.state_queue.put(live.state_message())

        last = session.log.records[-1]
        if last["type"] == "round_end" and last["frame"] == record["frame"]:
            end = last
            live.state_queue.put(
                RoundEnd(
                    winner=end["winner"],
                    hp=(end["hp_p1"], end["hp_p2"]),
                    frames=end["frame"] + 1,
                )
            )
            live.rounds_played += 1
            live.rating_expected = True
            live.rating_event.clear()
            await live.rating_event.wait()  # next round starts once rated
            if live.closed:
                break
            max_rounds = service.max_rounds
            if max_rounds and live.rounds_played >= max_rounds:
                break
            next_due = time.monotonic()
            continue

        if frame_dt > 0.0:
            next_due += frame_dt
            delay = next_due - time.monotonic()
            if delay > 0:
                await asyncio.sleep(delay)
            elif delay < -frame_dt:
                log.warning("simulation overrun: %.1f ms behind", -delay * 1000)
                next_due = time.monotonic()
        else:
            await asyncio.sleep(0)  # yield so the receive loop runs


async def _sender_loop(live: LiveSession, ws: WebSocket) -> None:
    try:
        while True:
            msg = await live.state_queue.get()
            await ws.send_text(encode_message(msg))
    except (asyncio.CancelledError, RuntimeError, WebSocketDisconnect):
        return


def serve(config: ExperimentConfig) -> None:
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host="0.0.0.0", port=config.service.port, log_level="info")
