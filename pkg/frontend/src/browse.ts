/**
 * Browsing-interface page state: a grid of candidate images, click-to-toggle
 * selection, and per-slot mouse-trace capture.
 *
 * The rendered selection state is always the parity of the slot's click
 * history: every toggle appends exactly one entry and deselected images keep
 * their byproducts. The red-circle cursor nudge ("click on the object of
 * interest") is on by default.
 */

import { ServiceClient } from "./api.js";
import { TraceThrottler } from "./trace.js";
import { BrowsingPagePayload, SlotRect, normalizePoint } from "./types.js";

export class BrowsingPageState {
  readonly clickCounts: number[];
  readonly redCircleCursor: boolean;
  private readonly throttlers: TraceThrottler[];
  private readonly rects: SlotRect[];

  constructor(
    readonly payload: BrowsingPagePayload,
    private readonly client: ServiceClient,
    options: { redCircleCursor?: boolean } = {},
  ) {
    this.redCircleCursor = options.redCircleCursor ?? true;
    this.rects = payload.slots.map((s) => ({
      x: s.position.x,
      y: s.position.y,
      width: s.width,
      height: s.height,
    }));
    this.throttlers = this.rects.map((rect) => new TraceThrottler(rect));
    this.clickCounts = payload.slots.map(() => 0);
  }

  pageOpened(t: number): void {
    this.client.events.push({
      kind: "page_open",
      page_idx: this.payload.page_idx,
      t: Math.round(t),
    });
  }

  isSelected(slot: number): boolean {
    return this.clickCounts[slot] % 2 === 1;
  }

  /** Pointer moved over a slot's image; page-frame pixels. */
  pointerMove(slot: number, px: number, py: number, t: number): void {
    const point = this.throttlers[slot].feed(px, py, t);
    if (point !== null) {
      this.client.events.push({
        kind: "trace",
        page_idx: this.payload.page_idx,
        slot,
        x: point.x,
        y: point.y,
        t: point.t,
      });
    }
  }

  /** Click on a slot: flips the selection and appends exactly one entry. */
  toggleSelection(slot: number, px: number, py: number, t: number): void {
    const { x, y } = normalizePoint(px, py, this.rects[slot]);
    this.clickCounts[slot] += 1;
    this.client.events.push({
      kind: "click",
      page_idx: this.payload.page_idx,
      slot,
      x,
      y,
      t: Math.round(t),
    });
  }

  async submit(t: number): Promise<number> {
    return this.client.submitPage(this.payload.page_idx, { clientSubmitT: t });
  }
}
