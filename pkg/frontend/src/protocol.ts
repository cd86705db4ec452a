// Wire protocol: one JSON document per WebSocket text frame, discriminated
// by `type`. Mirrors the server's message table exactly; decode validates
// presence, types, and ranges, and field order never matters.

export const PROTOCOL_VERSION = 1;

export interface CharWire {
  x: number;
  y: number;
  hp: number;
  energy: number;
  action: number;
  facing: "left" | "right";
}

export interface HelloMsg {
  type: "hello";
  version: number;
}

export interface StateMsg {
  type: "state";
  frame: number;
  chars: [CharWire, CharWire];
  timer: number;
  opponent_version: number;
}

export interface InputMsg {
  type: "input";
  frame: number;
  action: number;
}

export interface RoundEndMsg {
  type: "round_end";
  winner: "p1" | "p2" | "draw";
  hp: [number, number];
  frames: number;
}

export interface RatingMsg {
  type: "rating";
  value: number;
}

export interface ErrorMsg {
  type: "error";
  code: string;
  message: string;
}

export type WireMessage =
  | HelloMsg
  | StateMsg
  | InputMsg
  | RoundEndMsg
  | RatingMsg
  | ErrorMsg;

export class ProtocolError extends Error {
  constructor(public code: string, message: string) {
    super(message);
  }
}

function needNumber(obj: Record<string, unknown>, key: string, what: string): number {
  const v = obj[key];
  if (typeof v !== "number" || !Number.isFinite(v)) {
    throw new ProtocolError("bad_field", `${what} field '${key}' must be a number`);
  }
  return v;
}

function needInt(
  obj: Record<string, unknown>,
  key: string,
  what: string,
  lo?: number,
  hi?: number,
): number {
  const v = needNumber(obj, key, what);
  if (!Number.isInteger(v)) {
    throw new ProtocolError("bad_field", `${what} field '${key}' must be an integer`);
  }
  if ((lo !== undefined && v < lo) || (hi !== undefined && v > hi)) {
    throw new ProtocolError("bad_field", `${what} field '${key}' out of range: ${v}`);
  }
  return v;
}

function needString(obj: Record<string, unknown>, key: string, what: string): string {
  const v = obj[key];
  if (typeof v !== "string") {
    throw new ProtocolError("bad_field", `${what} field '${key}' must be a string`);
  }
  return v;
}

function decodeChar(raw: unknown): CharWire {
  if (typeof raw !== "object" || raw === null) {
    throw new ProtocolError("bad_field", "state char must be an object");
  }
  const obj = raw as Record<string, unknown>;
  const facing = needString(obj, "facing", "state char");
  if (facing !== "left" && facing !== "right") {
    throw new ProtocolError("bad_field", `bad facing '${facing}'`);
  }
  return {
    x: needNumber(obj, "x", "state char"),
    y: needNumber(obj, "y", "state char"),
    hp: needInt(obj, "hp", "state char", 0),
    energy: needInt(obj, "energy", "state char", 0),
    action: needInt(obj, "action", "state char", 0, 7),
    facing,
  };
}

export function decodeMessage(text: string): WireMessage {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (err) {
    throw new ProtocolError("bad_json", `not a JSON document: ${err}`);
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new ProtocolError("bad_json", "message must be a JSON object");
  }
  const obj = raw as Record<string, unknown>;
  switch (obj.type) {
    case "hello":
      return { type: "hello", version: needInt(obj, "version", "hello", 0) };
    case "state": {
      const charsRaw = obj.chars;
      if (!Array.isArray(charsRaw) || charsRaw.length !== 2) {
        throw new ProtocolError("bad_field", "state must carry exactly 2 chars");
      }
      return {
        type: "state",
        frame: needInt(obj, "frame", "state", 0),
        chars: [decodeChar(charsRaw[0]), decodeChar(charsRaw[1])],
        timer: needInt(obj, "timer", "state", 0),
        opponent_version: needInt(obj, "opponent_version", "state", 0),
      };
    }
    case "input": {
      const frame = needInt(obj, "frame", "input", 0);
      const action = needInt(obj, "action", "input");
      if (action < 0 || action > 7) {
        throw new ProtocolError("bad_action", `action code out of range: ${action}`);
      }
      return { type: "input", frame, action };
    }
    case "round_end": {
      const winner = needString(obj, "winner", "round_end");
      if (winner !== "p1" && winner !== "p2" && winner !== "draw") {
        throw new ProtocolError("bad_field", `bad winner '${winner}'`);
      }
      const hp = obj.hp;
      if (
        !Array.isArray(hp) ||
        hp.length !== 2 ||
        !hp.every((v) => Number.isInteger(v) && (v as number) >= 0)
      ) {
        throw new ProtocolError("bad_field", "round_end hp must be two counts");
      }
      return {
        type: "round_end",
        winner,
        hp: [hp[0] as number, hp[1] as number],
        frames: needInt(obj, "frames", "round_end", 0),
      };
    }
    case "rating":
      return { type: "rating", value: needInt(obj, "value", "rating", 1, 10) };
    case "error":
      return {
        type: "error",
        code: needString(obj, "code", "error"),
        message: needString(obj, "message", "error"),
      };
    default:
      throw new ProtocolError("unknown_type", `unknown message type '${obj.type}'`);
  }
}

export function encodeMessage(msg: WireMessage): string {
  // plain JSON.stringify: the server ignores key order
  return JSON.stringify(msg);
}
