// Client-side session state. The client never simulates game rules: it only
// buffers the last two server states for interpolation, tracks the
// connection phase, and guards the one-rating-per-round rule. Every
// transition lives in pure functions so a recorded message stream replays
// to an identical sequence of render models.

import { CharWire, RoundEndMsg, StateMsg, WireMessage } from "./protocol.js";

export type Phase = "connecting" | "playing" | "round_over" | "error";

export interface ClientState {
  phase: Phase;
  serverVersion: number | null;
  prev: { msg: StateMsg; at: number } | null;
  last: { msg: StateMsg; at: number } | null;
  roundEnd: RoundEndMsg | null;
  ratingSent: boolean;
  lastError: string | null;
}

export function initialState(): ClientState {
  return {
    phase: "connecting",
    serverVersion: null,
    prev: null,
    last: null,
    roundEnd: null,
    ratingSent: false,
    lastError: null,
  };
}

/** Fold one server message into the client state. `at` is the receive
 * timestamp in milliseconds (performance.now() in the browser, synthetic in
 * tests). */
export function onMessage(state: ClientState, msg: WireMessage, at: number): ClientState {
  switch (msg.type) {
    case "hello":
      return { ...state, serverVersion: msg.version };
    case "state": {
      const last = { msg, at };
      return {
        ...state,
        phase: "playing",
        prev: state.last ?? last,
        last,
        // a state message after round_over means the next round started
        roundEnd: null,
        ratingSent: state.phase === "round_over" ? false : state.ratingSent,
      };
    }
    case "round_end":
      return { ...state, phase: "round_over", roundEnd: msg };
    case "error":
      if (msg.code === "version_mismatch" || msg.code === "busy") {
        return { ...state, phase: "error", lastError: `${msg.code}: ${msg.message}` };
      }
      return { ...state, lastError: `${msg.code}: ${msg.message}` };
    default:
      return state; // input/rating are client->server only
  }
}

/** Returns the updated state plus whether a rating message should actually
 * be sent; repeated requests for the same round are swallowed. */
export function requestRating(
  state: ClientState,
  value: number,
): { state: ClientState; send: boolean; value: number } {
  if (state.phase !== "round_over" || state.ratingSent || value < 1 || value > 10) {
    return { state, send: false, value };
  }
  return { state: { ...state, ratingSent: true }, send: true, value };
}

// -- interpolation ----------------------------------------------------------

export interface RenderChar {
  x: number;
  y: number;
  hp: number;
  energy: number;
  action: number;
  facing: "left" | "right";
}

export interface RenderModel {
  frame: number;
  timer: number;
  opponentVersion: number;
  chars: [RenderChar, RenderChar];
}

function lerpChar(a: CharWire, b: CharWire, alpha: number): RenderChar {
  return {
    x: a.x + (b.x - a.x) * alpha,
    y: a.y + (b.y - a.y) * alpha,
    hp: b.hp,
    energy: b.energy,
    action: b.action,
    facing: b.facing,
  };
}

/** Linear interpolation between the two buffered states at render time `t`
 * (same clock as `onMessage`'s `at`). Clamped to [0,1]: interpolation only,
 * never extrapolation past the newest confirmed state. */
export function interpolate(state: ClientState, t: number): RenderModel | null {
  if (!state.last) return null;
  const prev = state.prev ?? state.last;
  const span = state.last.at - prev.at;
  const alphaRaw = span > 0 ? (t - prev.at) / span : 1;
  const alpha = Math.min(1, Math.max(0, alphaRaw));
  const a = prev.msg;
  const b = state.last.msg;
  return {
    frame: b.frame,
    timer: b.timer,
    opponentVersion: b.opponent_version,
    chars: [
      lerpChar(a.chars[0], b.chars[0], alpha),
      lerpChar(a.chars[1], b.chars[1], alpha),
    ],
  };
}
