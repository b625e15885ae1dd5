/** Wire types shared with the collection service. */

/** Mouse sample normalized to the image frame; t is ms since assignment start. */
export interface TracePoint {
  x: number;
  y: number;
  t: number;
}

export type IconActionKind = "add" | "move" | "remove";

/** One event of the batched stream POSTed to /hit/{id}/events. */
export interface AnnotationEvent {
  kind: "page_open" | "trace" | "click" | "action" | "category" | "keyboard";
  page_idx: number;
  t: number;
  slot?: number;
  x?: number;
  y?: number;
  action?: IconActionKind;
  category?: string;
  superclass?: string;
}

/** Page-frame rectangle of an image, as served in the task payload. */
export interface SlotRect {
  x: number;
  y: number;
  width: number;
  height: number;
}

export interface BrowsingSlotPayload {
  slot: number;
  image_id: string;
  position: { x: number; y: number };
  width: number;
  height: number;
}

export interface BrowsingPagePayload {
  kind: "browsing";
  assignment_id: string;
  page_idx: number;
  class_id: string;
  instruction: string;
  slots: BrowsingSlotPayload[];
}

export interface TaggingPagePayload {
  kind: "tagging";
  assignment_id: string;
  page_idx: number;
  image_id: number;
}

export type PagePayload = BrowsingPagePayload | TaggingPagePayload;

/** Clamp a page-frame point into the image frame as [0, 1] fractions. */
export function normalizePoint(px: number, py: number, rect: SlotRect): { x: number; y: number } {
  const x = Math.min(1, Math.max(0, (px - rect.x) / rect.width));
  const y = Math.min(1, Math.max(0, (py - rect.y) / rect.height));
  return { x, y };
}
