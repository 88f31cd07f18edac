import { describe, expect, it } from "vitest";

import { BridgeClient, SocketLike } from "../src/client";
import type { StateFrame } from "../src/protocol";
import { SessionState } from "../src/session";
import { frameDoc } from "./protocol.test";

function makeFrame(t: number, pe: [number, number, number],
                   extra: Record<string, unknown> = {}): StateFrame {
  return frameDoc({ t, p_e: pe, ...extra }).payload as unknown as StateFrame;
}

class FakeSocket implements SocketLike {
  sent: string[] = [];
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  onopen: (() => void) | null = null;
  onclose: (() => void) | null = null;
  onerror: ((ev: unknown) => void) | null = null;
  send(data: string) { this.sent.push(data); }
  close() { this.onclose?.(); }
}

describe("SessionState", () => {
  it("derives EEF speed from consecutive frames", () => {
    const s = new SessionState();
    s.applyFrame(makeFrame(0.0, [0.5, 0, 0.5]));
    s.applyFrame(makeFrame(0.04, [0.5, 0.0104, 0.5]));
    expect(s.eefSpeed.last()!.value).toBeCloseTo(0.26, 6);
  });

  it("keeps the plot buffers bounded to the window", () => {
    const s = new SessionState(25);
    for (let k = 0; k < 5000; k++) {
      s.applyFrame(makeFrame(k * 0.04, [0.5, 0, 0.5]));
    }
    expect(s.dMin.size).toBeLessThanOrEqual(s.dMin.capacity);
    expect(s.gamma.size).toBeLessThanOrEqual(s.gamma.capacity);
  });

  it("clears the plots when sim time jumps backward (reset)", () => {
    const s = new SessionState();
    s.applyFrame(makeFrame(1.0, [0.5, 0, 0.5]));
    s.applyFrame(makeFrame(1.04, [0.5, 0, 0.5]));
    expect(s.dMin.size).toBe(2);
    s.applyFrame(makeFrame(0.0, [0.5, 0, 0.5]));
    expect(s.dMin.size).toBe(1);  // only the post-reset sample survives
  });

  it("never plots sim time that was not received", () => {
    const s = new SessionState();
    s.applyFrame(makeFrame(0.0, [0.5, 0, 0.5]));
    s.applyFrame(makeFrame(0.04, [0.5, 0, 0.5]));
    const times = s.gamma.toArray().map((p) => p.t);
    expect(times).toEqual([0.0, 0.04]);
  });

  it("skips the distance series when no human is present", () => {
    const s = new SessionState();
    s.applyFrame(makeFrame(0.0, [0.5, 0, 0.5], { d_min: null, r1: null, r2: null }));
    expect(s.dMin.size).toBe(0);
    expect(s.gamma.size).toBe(1);
  });
});

describe("BridgeClient", () => {
  it("routes frames into the session and drops malformed input", () => {
    const socket = new FakeSocket();
    const session = new SessionState();
    new BridgeClient(socket, session);
    socket.onmessage!({ data: JSON.stringify(frameDoc()) });
    expect(session.framesReceived).toBe(1);
    socket.onmessage!({ data: "{broken" });
    expect(session.framesReceived).toBe(1);
    expect(session.droppedFrames).toBe(1);
    expect(session.latestFrame?.t).toBeCloseTo(0.12);  // previous state retained
  });

  it("assigns increasing seqs and resolves acks and nacks", () => {
    const socket = new FakeSocket();
    const session = new SessionState();
    const client = new BridgeClient(socket, session);
    const s1 = client.send({ action: "pause" });
    const s2 = client.send({ action: "set_param", name: "k1", value: -1 });
    expect(s2).toBe(s1 + 1);
    expect(session.pending.size).toBe(2);
    socket.onmessage!({ data: JSON.stringify({ type: "ack", seq: s1, payload: {} }) });
    expect(session.pending.size).toBe(1);
    socket.onmessage!({ data: JSON.stringify(
      { type: "nack", seq: s2, payload: { reason: "gains must be >= 0" } }) });
    expect(session.pending.size).toBe(0);
    expect(session.lastNack?.action).toBe("set_param");
    expect(session.lastNack?.reason).toContain("gains");
  });

  it("clears the plots when a reset command is acknowledged", () => {
    const socket = new FakeSocket();
    const session = new SessionState();
    const client = new BridgeClient(socket, session);
    session.applyFrame(makeFrame(0.5, [0.5, 0, 0.5]));
    const seq = client.send({ action: "reset" });
    socket.onmessage!({ data: JSON.stringify({ type: "ack", seq, payload: {} }) });
    expect(session.dMin.size).toBe(0);
  });
});
