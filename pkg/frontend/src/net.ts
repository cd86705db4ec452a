// WebSocket session: hello handshake, decoded message callbacks, and a
// retry loop for server restarts. Kept thin; all decisions live in state.ts.

import { decodeMessage, encodeMessage, PROTOCOL_VERSION, WireMessage } from "./protocol.js";

export interface SessionHooks {
  onMessage(msg: WireMessage, at: number): void;
  onClose(): void;
  now(): number;
}

export class Session {
  private ws: WebSocket | null = null;
  closed = false;

  constructor(private url: string, private hooks: SessionHooks) {}

  connect(): void {
    const ws = new WebSocket(this.url);
    this.ws = ws;
    ws.onopen = () => {
      ws.send(encodeMessage({ type: "hello", version: PROTOCOL_VERSION }));
    };
    ws.onmessage = (ev) => {
      if (typeof ev.data !== "string") return;
      try {
        this.hooks.onMessage(decodeMessage(ev.data), this.hooks.now());
      } catch {
        // a malformed server frame is dropped; the stream continues
      }
    };
    ws.onclose = () => {
      this.ws = null;
      if (!this.closed) this.hooks.onClose();
    };
  }

  send(msg: WireMessage): void {
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(encodeMessage(msg));
    }
  }

  close(): void {
    this.closed = true;
    this.ws?.close();
  }
}
