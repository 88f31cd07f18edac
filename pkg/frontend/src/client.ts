/**
 * Thin websocket client: assigns command sequence numbers, parses incoming
 * messages and dispatches them to the session plus user callbacks.
 */

import { encodeCommand, parseMessage } from "./protocol";
import type { CommandPayload, HelloPayload, StateFrame } from "./protocol";
import { SessionState } from "./session";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onerror: ((ev: unknown) => void) | null;
}

export interface ClientHooks {
  onHello?: (hello: HelloPayload) => void;
  onFrame?: (frame: StateFrame) => void;
  onNack?: (seq: number, reason: string) => void;
  onStatus?: (status: string) => void;
}

export class BridgeClient {
  private seq = 0;

  constructor(
    private readonly socket: SocketLike,
    readonly session: SessionState,
    private readonly hooks: ClientHooks = {},
  ) {
    socket.onopen = () => this.hooks.onStatus?.("open");
    socket.onclose = () => {
      this.session.status = "closed";
      this.hooks.onStatus?.("closed");
    };
    socket.onmessage = (ev) => this.handleRaw(String(ev.data));
  }

  handleRaw(raw: string): void {
    const msg = parseMessage(raw);
    if ("error" in msg) {
      // drop the message, keep the previous scene
      console.warn("dropped malformed message:", msg.error);
      this.session.noteDropped(msg.error);
      return;
    }
    switch (msg.type) {
      case "hello":
        this.session.applyHello(msg.payload);
        this.hooks.onHello?.(msg.payload);
        break;
      case "frame":
        this.session.applyFrame(msg.payload);
        this.hooks.onFrame?.(msg.payload);
        break;
      case "ack":
        this.session.resolveAck(msg.seq);
        break;
      case "nack":
        this.session.resolveNack(msg.seq, msg.payload.reason);
        this.hooks.onNack?.(msg.seq, msg.payload.reason);
        break;
    }
  }

  send(payload: CommandPayload): number {
    const seq = ++this.seq;
    this.session.commandSent(seq, payload.action);
    this.socket.send(encodeCommand(seq, payload));
    return seq;
  }

  close(): void {
    this.socket.close();
  }
}
