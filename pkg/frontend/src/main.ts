/**
 * Entry point: routes /annotate/browse/{hit} and /annotate/tag/{hit} to the
 * matching view against the collection service on the same origin.
 */

import { ServiceClient } from "./api.js";
import { BrowsingPageState } from "./browse.js";
import { renderBrowsingPage, renderTaggingPage } from "./dom.js";
import { TaggingPageState } from "./tag.js";

const TAG_CANVAS_RECT = { x: 40, y: 120, width: 640, height: 480 };

export function parseRoute(pathname: string): { mode: "browse" | "tag"; hit: string } | null {
  const match = pathname.match(/^\/annotate\/(browse|tag)\/([^/]+)$/);
  if (match === null) {
    return null;
  }
  return { mode: match[1] as "browse" | "tag", hit: match[2] };
}

export async function mount(
  root: HTMLElement,
  pathname: string,
  baseUrl: string,
  workerId: string,
  pageIdx = 0,
): Promise<void> {
  const route = parseRoute(pathname);
  if (route === null) {
    root.textContent = "Unknown route";
    return;
  }
  const client = new ServiceClient(baseUrl, route.hit);
  await client.open(workerId);
  const start = Date.now();
  const clock = () => Date.now() - start;
  const payload = await client.fetchPage(pageIdx);
  if (payload.kind === "browsing") {
    renderBrowsingPage(root, new BrowsingPageState(payload, client), clock);
  } else {
    renderTaggingPage(root, new TaggingPageState(payload, client, TAG_CANVAS_RECT), clock);
  }
}

declare global {
  interface Window {
    abkitMount?: typeof mount;
  }
}

if (typeof window !== "undefined") {
  window.abkitMount = mount;
}
