/**
 * Strip charts over the session ring buffers: minimum distance, EEF speed
 * and the controller coefficients, over the last 30 s of acknowledged sim
 * time. The point-to-pixel mapping is a pure function so it can be tested
 * without a canvas.
 */

import { RingBuffer } from "./ringbuffer";
import type { Sample } from "./session";

export interface SeriesSpec {
  label: string;
  buffer: RingBuffer<Sample>;
  color: string;
  yMin: number;
  yMax: number | null;  // null: autoscale above yMin
  refLine?: number;
}

export interface PlotPoint {
  x: number;
  y: number;
}

/** Map the trailing `windowS` seconds of samples into a w x h pixel box. */
export function seriesPath(buffer: RingBuffer<Sample>, windowS: number,
                           w: number, h: number, yMin: number,
                           yMax: number | null): PlotPoint[] {
  const n = buffer.size;
  if (n === 0) return [];
  const tEnd = buffer.at(n - 1).t;
  const tStart = tEnd - windowS;
  let top = yMax ?? -Infinity;
  if (yMax === null) {
    for (let i = 0; i < n; i++) {
      const s = buffer.at(i);
      if (s.t >= tStart && s.value > top) top = s.value;
    }
    if (!isFinite(top) || top <= yMin) top = yMin + 1;
  }
  const out: PlotPoint[] = [];
  for (let i = 0; i < n; i++) {
    const s = buffer.at(i);
    if (s.t < tStart) continue;
    const x = windowS <= 0 ? w : ((s.t - tStart) / windowS) * w;
    const yClamped = Math.min(Math.max(s.value, yMin), top);
    const y = h - ((yClamped - yMin) / (top - yMin)) * h;
    out.push({ x, y });
  }
  return out;
}

export class StripChart {
  constructor(
    private readonly canvas: HTMLCanvasElement,
    private readonly spec: SeriesSpec,
    private readonly windowS = 30,
  ) {}

  render(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width: w, height: h } = this.canvas;
    ctx.clearRect(0, 0, w, h);
    ctx.fillStyle = "#14181f";
    ctx.fillRect(0, 0, w, h);

    const pts = seriesPath(this.spec.buffer, this.windowS, w, h,
                           this.spec.yMin, this.spec.yMax);
    if (this.spec.refLine !== undefined) {
      const top = this.spec.yMax ?? Math.max(this.spec.refLine * 2, 1);
      const y = h - ((this.spec.refLine - this.spec.yMin) / (top - this.spec.yMin)) * h;
      ctx.strokeStyle = "#555";
      ctx.setLineDash([4, 4]);
      ctx.beginPath();
      ctx.moveTo(0, y);
      ctx.lineTo(w, y);
      ctx.stroke();
      ctx.setLineDash([]);
    }
    if (pts.length > 1) {
      ctx.strokeStyle = this.spec.color;
      ctx.lineWidth = 1.5;
      ctx.beginPath();
      const first = pts[0]!;
      ctx.moveTo(first.x, first.y);
      for (const p of pts) ctx.lineTo(p.x, p.y);
      ctx.stroke();
    }
    ctx.fillStyle = "#aab";
    ctx.font = "11px system-ui, sans-serif";
    const last = this.spec.buffer.last();
    const value = last ? last.value.toFixed(3) : "-";
    ctx.fillText(`${this.spec.label}: ${value}`, 6, 13);
  }
}
