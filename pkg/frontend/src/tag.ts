/**
 * Tagging-interface page state: one image, drag-and-drop class icons, and a
 * superclass browser.
 *
 * Icon gestures follow the live-icon rules: a category can hold at most one
 * live icon, `move`/`remove` need a live icon, and a second `add` for a live
 * category is a no-op in the UI, so illegal sequences can never reach the
 * wire. Arrow-key navigation of the superclass browser flags the record as
 * keyboard-assisted.
 */

import { ServiceClient } from "./api.js";
import { SUPERCLASS_NAMES, SUPERCLASSES } from "./categories.js";
import { TraceThrottler } from "./trace.js";
import { SlotRect, TaggingPagePayload, normalizePoint } from "./types.js";

export class TaggingPageState {
  readonly liveIcons = new Map<string, { x: number; y: number }>();
  superclassIndex = 0;
  usedKeyboard = false;
  private keyboardReported = false;
  private readonly throttler: TraceThrottler;

  constructor(
    readonly payload: TaggingPagePayload,
    private readonly client: ServiceClient,
    private readonly rect: SlotRect,
  ) {
    this.throttler = new TraceThrottler(rect);
  }

  get currentSuperclass(): string {
    return SUPERCLASS_NAMES[this.superclassIndex];
  }

  get visibleClasses(): string[] {
    return SUPERCLASSES[this.currentSuperclass];
  }

  pageOpened(t: number): void {
    this.client.events.push({
      kind: "page_open",
      page_idx: this.payload.page_idx,
      t: Math.round(t),
    });
  }

  pointerMove(px: number, py: number, t: number): void {
    const point = this.throttler.feed(px, py, t);
    if (point !== null) {
      this.client.events.push({
        kind: "trace",
        page_idx: this.payload.page_idx,
        x: point.x,
        y: point.y,
        t: point.t,
      });
    }
  }

  /** Browse to a superclass tab (mouse path). */
  selectSuperclass(name: string, t: number): void {
    const index = SUPERCLASS_NAMES.indexOf(name);
    if (index < 0) {
      return;
    }
    this.superclassIndex = index;
    this.client.events.push({
      kind: "category",
      page_idx: this.payload.page_idx,
      superclass: name,
      t: Math.round(t),
    });
  }

  /** Arrow-key navigation; sets the keyboard flag exactly once. */
  navigateSuperclass(direction: -1 | 1, t: number): void {
    const n = SUPERCLASS_NAMES.length;
    this.superclassIndex = (this.superclassIndex + direction + n) % n;
    this.usedKeyboard = true;
    if (!this.keyboardReported) {
      this.keyboardReported = true;
      this.client.events.push({
        kind: "keyboard",
        page_idx: this.payload.page_idx,
        t: Math.round(t),
      });
    }
    this.client.events.push({
      kind: "category",
      page_idx: this.payload.page_idx,
      superclass: this.currentSuperclass,
      t: Math.round(t),
    });
  }

  private pushAction(action: "add" | "move" | "remove", category: string,
                     x: number, y: number, t: number): void {
    this.client.events.push({
      kind: "action",
      page_idx: this.payload.page_idx,
      action,
      category,
      x,
      y,
      t: Math.round(t),
    });
  }

  /** Drop a class icon on the image; no-op when the category is already live. */
  placeIcon(category: string, px: number, py: number, t: number): boolean {
    if (this.liveIcons.has(category)) {
      return false;
    }
    const { x, y } = normalizePoint(px, py, this.rect);
    this.liveIcons.set(category, { x, y });
    this.pushAction("add", category, x, y, t);
    return true;
  }

  /** Drag a live icon to a new position; no-op without a live icon. */
  moveIcon(category: string, px: number, py: number, t: number): boolean {
    if (!this.liveIcons.has(category)) {
      return false;
    }
    const { x, y } = normalizePoint(px, py, this.rect);
    this.liveIcons.set(category, { x, y });
    this.pushAction("move", category, x, y, t);
    return true;
  }

  /** Remove a live icon; no-op without one. */
  removeIcon(category: string, t: number): boolean {
    const position = this.liveIcons.get(category);
    if (position === undefined) {
      return false;
    }
    this.liveIcons.delete(category);
    this.pushAction("remove", category, position.x, position.y, t);
    return true;
  }

  async submit(t: number): Promise<number> {
    return this.client.submitPage(this.payload.page_idx, { timeSpent: Math.round(t) });
  }
}
