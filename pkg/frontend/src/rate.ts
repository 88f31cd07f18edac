/**
 * Minimum-interval gate: at most maxPerSecond events pass, whatever the
 * input rate. Used to keep drag commands at or below the tick rate.
 */
export class RateLimiter {
  private readonly intervalMs: number;
  private lastMs = -Infinity;

  constructor(maxPerSecond: number) {
    if (maxPerSecond <= 0) throw new Error("rate must be > 0");
    this.intervalMs = 1000 / maxPerSecond;
  }

  allow(nowMs: number): boolean {
    if (nowMs - this.lastMs >= this.intervalMs) {
      this.lastMs = nowMs;
      return true;
    }
    return false;
  }

  reset(): void {
    this.lastMs = -Infinity;
  }
}
