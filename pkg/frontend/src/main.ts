// Browser entry point: wires the socket, keyboard, canvas, and the rating
// dialog together. Game logic stays on the server; this file only schedules
// the loops.

import { KeyTracker } from "./input.js";
import { Session } from "./net.js";
import { drawToCanvas, renderCommands } from "./render.js";
import {
  ClientState,
  initialState,
  interpolate,
  onMessage,
  requestRating,
} from "./state.js";

const HP_MAX = 400;
const ENERGY_MAX = 300;
const STATE_INTERVAL_MS = 50; // 20 Hz broadcast: render one interval behind
const RETRY_MS = 1500;

function wsUrl(): string {
  const proto = location.protocol === "https:" ? "wss" : "ws";
  return `${proto}://${location.host}/play`;
}

function main(): void {
  const canvas = document.getElementById("stage") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  const banner = document.getElementById("banner")!;
  const dialog = document.getElementById("rating")!;
  const buttons = document.getElementById("rating-buttons")!;

  let state: ClientState = initialState();
  const keys = new KeyTracker();
  let session: Session;
  let frameCounter = 0;

  function setState(next: ClientState): void {
    const phaseChanged = next.phase !== state.phase;
    state = next;
    if (phaseChanged) {
      banner.textContent =
        state.phase === "connecting" ? "connecting…" :
        state.phase === "error" ? `connection error: ${state.lastError ?? ""}` : "";
      banner.style.display =
        state.phase === "connecting" || state.phase === "error" ? "block" : "none";
      dialog.style.display = state.phase === "round_over" ? "block" : "none";
      if (state.phase === "round_over" && state.roundEnd) {
        const r = state.roundEnd;
        document.getElementById("round-result")!.textContent =
          r.winner === "draw" ? "Draw!" : r.winner === "p1" ? "You win!" : "You lose!";
      }
    }
  }

  function connect(): void {
    setState({ ...initialState() });
    session = new Session(wsUrl(), {
      onMessage: (msg, at) => setState(onMessage(state, msg, at)),
      onClose: () => {
        setState({ ...state, phase: "connecting" });
        setTimeout(connect, RETRY_MS); // reconnect flow re-enters playing
      },
      now: () => performance.now(),
    });
    session.connect();
  }

  // rating dialog: 10 discrete choices, sent exactly once per round
  for (let value = 1; value <= 10; value++) {
    const btn = document.createElement("button");
    btn.textContent = String(value);
    btn.onclick = () => {
      const result = requestRating(state, value);
      setState(result.state);
      if (result.send) session.send({ type: "rating", value: result.value });
    };
    buttons.appendChild(btn);
  }

  window.addEventListener("keydown", (ev) => {
    if (ev.code in { ArrowLeft: 1, ArrowRight: 1, ArrowUp: 1, ArrowDown: 1 }) {
      ev.preventDefault();
    }
    keys.down(ev.code);
  });
  window.addEventListener("keyup", (ev) => keys.up(ev.code));
  window.addEventListener("blur", () => keys.clear());

  function frame(): void {
    if (state.phase === "playing") {
      // one input message per client frame, even when idle
      session.send({ type: "input", frame: frameCounter, action: keys.current() });
    }
    frameCounter += 1;
    const model = interpolate(state, performance.now() - STATE_INTERVAL_MS);
    if (model) {
      drawToCanvas(ctx, renderCommands(model, {
        width: canvas.width,
        height: canvas.height,
      }, HP_MAX, ENERGY_MAX));
    }
    requestAnimationFrame(frame);
  }

  connect();
  requestAnimationFrame(frame);
}

main();
