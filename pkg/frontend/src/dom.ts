/**
 * DOM rendering and event wiring for both annotation views.
 *
 * Slots are absolutely positioned from the layout in the task payload (the
 * same numbers the service stores in each record), and pointer coordinates
 * are normalized against that layout rather than measured boxes, so the
 * pipeline behaves identically in a real browser and a headless DOM.
 */

import { BrowsingPageState } from "./browse.js";
import { TaggingPageState } from "./tag.js";
import { SUPERCLASS_NAMES } from "./categories.js";

export type Clock = () => number;

export function renderBrowsingPage(
  root: HTMLElement,
  state: BrowsingPageState,
  clock: Clock,
): HTMLElement {
  const doc = root.ownerDocument;
  root.textContent = "";
  const instruction = doc.createElement("div");
  instruction.className = "instruction-panel";
  instruction.textContent = state.payload.instruction;
  root.appendChild(instruction);

  const grid = doc.createElement("div");
  grid.className = "grid" + (state.redCircleCursor ? " red-circle-cursor" : "");
  root.appendChild(grid);

  for (const slot of state.payload.slots) {
    const cell = doc.createElement("div");
    cell.className = "slot";
    cell.dataset.slot = String(slot.slot);
    cell.dataset.imageId = slot.image_id;
    cell.style.position = "absolute";
    cell.style.left = `${slot.position.x}px`;
    cell.style.top = `${slot.position.y}px`;
    cell.style.width = `${slot.width}px`;
    cell.style.height = `${slot.height}px`;
    cell.addEventListener("mousemove", (event) => {
      state.pointerMove(slot.slot, event.clientX, event.clientY, clock());
    });
    cell.addEventListener("mousedown", (event) => {
      state.toggleSelection(slot.slot, event.clientX, event.clientY, clock());
      cell.classList.toggle("selected", state.isSelected(slot.slot));
    });
    grid.appendChild(cell);
  }

  const submit = doc.createElement("button");
  submit.className = "submit";
  submit.textContent = "Submit";
  submit.addEventListener("mousedown", () => void state.submit(clock()));
  root.appendChild(submit);
  state.pageOpened(clock());
  return grid;
}

export function renderTaggingPage(
  root: HTMLElement,
  state: TaggingPageState,
  clock: Clock,
): HTMLElement {
  const doc = root.ownerDocument;
  root.textContent = "";

  const tabs = doc.createElement("div");
  tabs.className = "superclass-tabs";
  for (const name of SUPERCLASS_NAMES) {
    const tab = doc.createElement("button");
    tab.className = "superclass-tab";
    tab.dataset.superclass = name;
    tab.textContent = name;
    tab.addEventListener("mousedown", () => {
      state.selectSuperclass(name, clock());
      renderPalette();
    });
    tabs.appendChild(tab);
  }
  root.appendChild(tabs);

  const palette = doc.createElement("div");
  palette.className = "icon-palette";
  root.appendChild(palette);

  let armedCategory: string | null = null;

  function renderPalette(): void {
    palette.textContent = "";
    for (const category of state.visibleClasses) {
      const icon = doc.createElement("button");
      icon.className = "class-icon";
      icon.dataset.category = category;
      icon.textContent = category;
      icon.addEventListener("mousedown", () => {
        armedCategory = category;
      });
      palette.appendChild(icon);
    }
  }
  renderPalette();

  const canvas = doc.createElement("div");
  canvas.className = "tag-canvas";
  canvas.dataset.imageId = String(state.payload.image_id);
  root.appendChild(canvas);

  canvas.addEventListener("mousemove", (event) => {
    state.pointerMove(event.clientX, event.clientY, clock());
  });
  canvas.addEventListener("mouseup", (event) => {
    if (armedCategory !== null) {
      state.placeIcon(armedCategory, event.clientX, event.clientY, clock());
      armedCategory = null;
      renderIcons();
    }
  });

  function renderIcons(): void {
    canvas.querySelectorAll(".placed-icon").forEach((node) => node.remove());
    for (const [category, position] of state.liveIcons) {
      const icon = doc.createElement("div");
      icon.className = "placed-icon";
      icon.dataset.category = category;
      let dragging = false;
      icon.addEventListener("mousedown", () => {
        dragging = true;
      });
      icon.addEventListener("mouseup", (event) => {
        if (dragging) {
          state.moveIcon(category, event.clientX, event.clientY, clock());
          dragging = false;
          renderIcons();
        }
      });
      const remove = doc.createElement("button");
      remove.className = "remove-icon";
      remove.addEventListener("mousedown", () => {
        state.removeIcon(category, clock());
        renderIcons();
      });
      icon.appendChild(remove);
      icon.style.left = `${position.x * 100}%`;
      icon.style.top = `${position.y * 100}%`;
      canvas.appendChild(icon);
    }
  }

  root.addEventListener("keydown", (event) => {
    const key = (event as KeyboardEvent).key;
    if (key === "ArrowRight" || key === "ArrowLeft") {
      state.navigateSuperclass(key === "ArrowRight" ? 1 : -1, clock());
      renderPalette();
    }
  });

  const submit = doc.createElement("button");
  submit.className = "submit";
  submit.textContent = "Submit";
  submit.addEventListener("mousedown", () => void state.submit(clock()));
  root.appendChild(submit);
  state.pageOpened(clock());
  return canvas;
}
