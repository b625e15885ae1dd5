/**
 * Ordered, batched, at-least-once event delivery.
 *
 * Events buffer locally and flush every 500 ms or 50 events, whichever comes
 * first. One request is in flight at a time so batches arrive in order; a
 * failed batch is retried with backoff and never dropped (the service
 * deduplicates, so resending after an ambiguous failure is safe).
 */

export const FLUSH_INTERVAL_MS = 500;
export const FLUSH_BATCH_SIZE = 50;

export type Sender<E> = (events: E[]) => Promise<void>;

/** A definitive server rejection (e.g. HTTP 4xx): retrying cannot succeed. */
export class RejectedBatchError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "RejectedBatchError";
  }
}

export class EventQueue<E> {
  /** Batches the server refused outright; surfaced instead of looping. */
  readonly rejected: E[][] = [];
  private pending: E[] = [];
  private inFlight: E[] | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private sending: Promise<void> = Promise.resolve();
  private retryDelay = 250;

  constructor(
    private readonly send: Sender<E>,
    private readonly intervalMs: number = FLUSH_INTERVAL_MS,
    private readonly batchSize: number = FLUSH_BATCH_SIZE,
    private readonly initialRetryMs: number = 250,
  ) {
    this.retryDelay = initialRetryMs;
  }

  push(event: E): void {
    this.pending.push(event);
    if (this.pending.length >= this.batchSize) {
      void this.flush();
    } else if (this.timer === null) {
      this.timer = setTimeout(() => void this.flush(), this.intervalMs);
    }
  }

  /** Flush everything buffered; resolves when all queued batches delivered. */
  flush(): Promise<void> {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.sending = this.sending.then(() => this.deliver());
    return this.sending;
  }

  private async deliver(): Promise<void> {
    while (this.pending.length > 0 || this.inFlight !== null) {
      const batch = this.inFlight ?? this.pending.splice(0, this.batchSize);
      this.inFlight = batch;
      try {
        await this.send(batch);
        this.inFlight = null;
        this.retryDelay = this.initialRetryMs;
      } catch (error) {
        if (error instanceof RejectedBatchError) {
          this.rejected.push(batch);
          this.inFlight = null;
          continue;
        }
        // connectivity loss: keep the batch at the head and retry in order
        await new Promise((resolve) => setTimeout(resolve, this.retryDelay));
        this.retryDelay = Math.min(this.retryDelay * 2, 5000);
      }
    }
  }
}
