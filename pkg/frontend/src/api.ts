/** Thin client for the collection service's HTTP endpoints. */

import { EventQueue, RejectedBatchError } from "./queue.js";
import { AnnotationEvent, PagePayload } from "./types.js";

export class ServiceClient {
  readonly events: EventQueue<AnnotationEvent>;

  constructor(
    private readonly baseUrl: string,
    private readonly assignmentId: string,
    intervalMs?: number,
    batchSize?: number,
  ) {
    this.events = new EventQueue(
      (batch) => this.postEvents(batch),
      intervalMs,
      batchSize,
    );
  }

  private url(path: string): string {
    return `${this.baseUrl}/hit/${encodeURIComponent(this.assignmentId)}${path}`;
  }

  private async postJson(path: string, body: unknown): Promise<any> {
    const response = await fetch(this.url(path), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) {
      throw new Error(`POST ${path}: ${response.status} ${await response.text()}`);
    }
    return response.json();
  }

  async open(workerId: string): Promise<{ kind: string; pages: number }> {
    return this.postJson("/open", { worker_id: workerId });
  }

  async fetchPage(pageIdx: number): Promise<PagePayload> {
    const response = await fetch(this.url(`/page/${pageIdx}`));
    if (!response.ok) {
      throw new Error(`GET page ${pageIdx}: ${response.status}`);
    }
    return response.json();
  }

  private async postEvents(batch: AnnotationEvent[]): Promise<void> {
    const response = await fetch(this.url("/events"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ events: batch }),
    });
    if (response.status >= 400 && response.status < 500) {
      throw new RejectedBatchError(`events rejected: ${response.status} ${await response.text()}`);
    }
    if (!response.ok) {
      throw new Error(`POST /events: ${response.status}`);
    }
  }

  /** Deliver everything buffered, then submit the page. */
  async submitPage(pageIdx: number, payload: Record<string, unknown> = {}): Promise<number> {
    await this.events.flush();
    const body = await this.postJson(`/page/${pageIdx}/submit`, { payload });
    return body.records as number;
  }

  async completionCode(): Promise<string> {
    const response = await fetch(this.url("/code"));
    if (!response.ok) {
      throw new Error(`GET code: ${response.status}`);
    }
    return (await response.json()).code as string;
  }
}
