// Polling loop: one poll in flight at a time, a fixed cadence while the
// server answers, and exponential backoff up to a ceiling while it does not.

export class Poller {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private running = false;
  private intervalMs: number;

  constructor(
    private readonly poll: () => Promise<void>,
    private readonly baseIntervalMs = 2000,
    private readonly maxIntervalMs = 30000,
  ) {
    this.intervalMs = baseIntervalMs;
  }

  start(): void {
    if (this.running) {
      return;
    }
    this.running = true;
    this.intervalMs = this.baseIntervalMs;
    void this.tick();
  }

  stop(): void {
    this.running = false;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }

  get currentIntervalMs(): number {
    return this.intervalMs;
  }

  private async tick(): Promise<void> {
    if (!this.running) {
      return;
    }
    try {
      await this.poll();
      this.intervalMs = this.baseIntervalMs;
    } catch {
      this.intervalMs = Math.min(this.intervalMs * 2, this.maxIntervalMs);
    }
    if (this.running) {
      this.timer = setTimeout(() => void this.tick(), this.intervalMs);
    }
  }
}
