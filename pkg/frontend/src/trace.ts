/**
 * Mouse-trace throttling per image slot.
 *
 * Mirrors the service's ingestion contract: emit while the pointer moves
 * (sources sample at 20 Hz or better), drop movements under 2 px, and never
 * emit more than 60 points per second for one slot. Emitted points are
 * normalized to the slot's image frame.
 */

import { SlotRect, TracePoint, normalizePoint } from "./types.js";

export const MIN_MOVE_PX = 2;
export const MAX_EVENTS_PER_SECOND = 60;

export class TraceThrottler {
  private lastEmitT = -Infinity;
  private lastX = NaN;
  private lastY = NaN;

  constructor(private readonly rect: SlotRect) {}

  /**
   * Feed one raw pointer sample (page-frame pixels); returns the normalized
   * trace point to record, or null when the sample is throttled away.
   */
  feed(px: number, py: number, t: number): TracePoint | null {
    const moved = Math.hypot(px - this.lastX, py - this.lastY);
    if (!Number.isNaN(this.lastX) && moved < MIN_MOVE_PX) {
      return null;
    }
    if (t - this.lastEmitT < 1000 / MAX_EVENTS_PER_SECOND) {
      return null;
    }
    this.lastEmitT = t;
    this.lastX = px;
    this.lastY = py;
    const { x, y } = normalizePoint(px, py, this.rect);
    // wire timestamps are integer ms; browser clocks are fractional
    return { x, y, t: Math.round(t) };
  }
}
