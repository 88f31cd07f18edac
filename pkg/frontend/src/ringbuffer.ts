/** Fixed-capacity ring buffer for streaming plot samples. */
export class RingBuffer<T> {
  private buf: (T | undefined)[];
  private head = 0;
  private count = 0;

  constructor(readonly capacity: number) {
    if (capacity < 1) throw new Error("capacity must be >= 1");
    this.buf = new Array(capacity);
  }

  push(item: T): void {
    this.buf[this.head] = item;
    this.head = (this.head + 1) % this.capacity;
    if (this.count < this.capacity) this.count++;
  }

  get size(): number {
    return this.count;
  }

  at(i: number): T {
    if (i < 0 || i >= this.count) throw new RangeError(`index ${i} of ${this.count}`);
    return this.buf[(this.head - this.count + i + this.capacity) % this.capacity] as T;
  }

  last(): T | undefined {
    return this.count ? this.at(this.count - 1) : undefined;
  }

  clear(): void {
    this.head = 0;
    this.count = 0;
  }

  toArray(): T[] {
    const out: T[] = [];
    for (let i = 0; i < this.count; i++) out.push(this.at(i));
    return out;
  }
}
