/**
 * Client-side session state: the latest frame, bounded plot series and
 * in-flight command bookkeeping. Every rendered quantity originates from a
 * received message — nothing here extrapolates or fabricates state.
 */

import { RingBuffer } from "./ringbuffer";
import type { HelloPayload, StateFrame } from "./protocol";

export interface Sample {
  t: number;
  value: number;
}

export type ConnectionStatus = "connecting" | "connected" | "closed";

const PLOT_WINDOW_S = 30;

export class SessionState {
  status: ConnectionStatus = "connecting";
  hello: HelloPayload | null = null;
  latestFrame: StateFrame | null = null;
  framesReceived = 0;
  droppedFrames = 0;
  lastError = "";
  selectedCapsule: string | null = null;
  /** seq -> command action, cleared on ack/nack */
  pending = new Map<number, string>();
  lastNack: { seq: number; reason: string; action: string } | null = null;

  readonly dMin: RingBuffer<Sample>;
  readonly eefSpeed: RingBuffer<Sample>;
  readonly gamma: RingBuffer<Sample>;
  readonly beta: RingBuffer<Sample>;

  private prevT: number | null = null;
  private prevPe: [number, number, number] | null = null;

  constructor(tickRateHz = 25) {
    const capacity = Math.ceil(PLOT_WINDOW_S * tickRateHz) + 8;
    this.dMin = new RingBuffer(capacity);
    this.eefSpeed = new RingBuffer(capacity);
    this.gamma = new RingBuffer(capacity);
    this.beta = new RingBuffer(capacity);
  }

  applyHello(payload: HelloPayload): void {
    this.hello = payload;
    this.status = "connected";
  }

  /** Ingest one validated frame; updates the plot series. */
  applyFrame(frame: StateFrame): void {
    // sim time moving backwards means the simulation was reset
    if (this.prevT !== null && frame.t < this.prevT) {
      this.clearPlots();
    }
    this.latestFrame = frame;
    this.framesReceived++;

    if (frame.d_min !== null) this.dMin.push({ t: frame.t, value: frame.d_min });
    this.gamma.push({ t: frame.t, value: frame.gamma });
    this.beta.push({ t: frame.t, value: frame.beta });
    if (this.prevT !== null && this.prevPe !== null && frame.t > this.prevT) {
      const dt = frame.t - this.prevT;
      const [x0, y0, z0] = this.prevPe;
      const [x1, y1, z1] = frame.p_e;
      const speed = Math.hypot(x1 - x0, y1 - y0, z1 - z0) / dt;
      this.eefSpeed.push({ t: frame.t, value: speed });
    }
    this.prevT = frame.t;
    this.prevPe = [frame.p_e[0], frame.p_e[1], frame.p_e[2]];
  }

  noteDropped(reason: string): void {
    this.droppedFrames++;
    this.lastError = reason;
  }

  commandSent(seq: number, action: string): void {
    this.pending.set(seq, action);
  }

  resolveAck(seq: number): void {
    const action = this.pending.get(seq);
    this.pending.delete(seq);
    if (action === "reset") this.clearPlots();
  }

  resolveNack(seq: number, reason: string): void {
    const action = this.pending.get(seq) ?? "?";
    this.pending.delete(seq);
    this.lastNack = { seq, reason, action };
  }

  clearPlots(): void {
    this.dMin.clear();
    this.eefSpeed.clear();
    this.gamma.clear();
    this.beta.clear();
    this.prevT = null;
    this.prevPe = null;
  }
}
