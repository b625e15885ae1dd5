"""Work-unit assembly: candidate pools, browsing and tagging HITs, page layout.

A browsing HIT packs 10 pages of 48 image slots each (480 slots); candidates
mix seed and distractor images at a 1:3 ratio. A tagging HIT packs 20 pages
with a single image each. Assembly is deterministic given the RNG seed.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientPool

BROWSING_PAGES = 10
SLOTS_PER_PAGE = 48
SEED_FRACTION = 0.25
TAGGING_PAGES = 20

# Page-frame geometry of the 8x6 selection grid, in pixels.
GRID_COLS = 8
GRID_ROWS = 6
SLOT_WIDTH = 160.0
SLOT_HEIGHT = 120.0
SLOT_GAP = 8.0
GRID_ORIGIN = (16.0, 100.0)


@dataclass(frozen=True)
class CandidatePool:
    """Per-class image pool: seed images to recover plus crawled distractors."""

    class_id: str
    seed_images: tuple[str, ...]
    distractor_images: tuple[str, ...]

    def __post_init__(self) -> None:
        overlap = set(self.seed_images) & set(self.distractor_images)
        if overlap:
            raise ValueError(f"seed/distractor overlap: {sorted(overlap)[:3]}")


@dataclass(frozen=True)
class Slot:
    """One image cell of a browsing page, with its page-frame layout."""

    image_id: str
    is_seed: bool
    position: tuple[float, float]
    width: float
    height: float


@dataclass(frozen=True)
class BrowsingPage:
    page_idx: int
    slots: tuple[Slot, ...]


@dataclass(frozen=True)
class BrowsingHit:
    assignment_id: str
    class_id: str
    pages: tuple[BrowsingPage, ...]
    seed_fraction_target: float = SEED_FRACTION

    def __post_init__(self) -> None:
        if len(self.pages) != BROWSING_PAGES:
            raise ValueError(f"expected {BROWSING_PAGES} pages, got {len(self.pages)}")
        ids = [s.image_id for p in self.pages for s in p.slots]
        if any(len(p.slots) != SLOTS_PER_PAGE for p in self.pages):
            raise ValueError(f"every page must have {SLOTS_PER_PAGE} slots")
        if len(ids) != len(set(ids)):
            raise ValueError("an image appears more than once in the HIT")

    def slot(self, page_idx: int, slot_idx: int) -> Slot:
        return self.pages[page_idx].slots[slot_idx]

    def seed_image_ids(self) -> set[str]:
        return {s.image_id for p in self.pages for s in p.slots if s.is_seed}


@dataclass(frozen=True)
class TaggingPage:
    page_idx: int
    image_id: int


@dataclass(frozen=True)
class TaggingHit:
    assignment_id: str
    pages: tuple[TaggingPage, ...]

    def __post_init__(self) -> None:
        if len(self.pages) != TAGGING_PAGES:
            raise ValueError(f"expected {TAGGING_PAGES} pages, got {len(self.pages)}")
        ids = [p.image_id for p in self.pages]
        if len(ids) != len(set(ids)):
            raise ValueError("an image appears more than once in the HIT")


def slot_layout(slot_idx: int) -> tuple[float, float]:
    """Page-frame pixel position of a slot on the 8x6 grid."""
    row, col = divmod(slot_idx, GRID_COLS)
    x = GRID_ORIGIN[0] + col * (SLOT_WIDTH + SLOT_GAP)
    y = GRID_ORIGIN[1] + row * (SLOT_HEIGHT + SLOT_GAP)
    return (x, y)


def assemble_browsing_hit(pool: CandidatePool, rng_seed: int, assignment_id: str) -> BrowsingHit:
    """Assemble a 10-page browsing HIT from a candidate pool.

    Draws 120 seed and 360 distractor images (1:3 over 480 slots) without
    replacement and shuffles them uniformly across the pages. Deterministic
    for a given rng_seed.
    """
    n_total = BROWSING_PAGES * SLOTS_PER_PAGE
    n_seed = int(n_total * SEED_FRACTION)
    n_dist = n_total - n_seed
    if len(pool.seed_images) < n_seed or len(pool.distractor_images) < n_dist:
        raise InsufficientPool(
            f"need {n_seed} seed and {n_dist} distractor images, pool has "
            f"{len(pool.seed_images)} and {len(pool.distractor_images)}"
        )
    rng = np.random.Generator(np.random.Philox(key=np.uint64(rng_seed)))
    seed_pick = rng.choice(len(pool.seed_images), size=n_seed, replace=False)
    dist_pick = rng.choice(len(pool.distractor_images), size=n_dist, replace=False)
    entries = [(pool.seed_images[i], True) for i in seed_pick]
    entries += [(pool.distractor_images[i], False) for i in dist_pick]
    order = rng.permutation(n_total)
    pages = []
    for page_idx in range(BROWSING_PAGES):
        slots = []
        for slot_idx in range(SLOTS_PER_PAGE):
            image_id, is_seed = entries[order[page_idx * SLOTS_PER_PAGE + slot_idx]]
            slots.append(
                Slot(
                    image_id=image_id,
                    is_seed=is_seed,
                    position=slot_layout(slot_idx),
                    width=SLOT_WIDTH,
                    height=SLOT_HEIGHT,
                )
            )
        pages.append(BrowsingPage(page_idx=page_idx, slots=tuple(slots)))
    return BrowsingHit(assignment_id=assignment_id, class_id=pool.class_id, pages=tuple(pages))


def assemble_tagging_hit(image_ids, rng_seed: int, assignment_id: str) -> TaggingHit:
    """Collate 20 unique images into one tagging HIT, order shuffled by seed."""
    image_ids = list(image_ids)
    if len(image_ids) < TAGGING_PAGES:
        raise InsufficientPool(f"need {TAGGING_PAGES} images, got {len(image_ids)}")
    rng = np.random.Generator(np.random.Philox(key=np.uint64(rng_seed)))
    pick = rng.choice(len(image_ids), size=TAGGING_PAGES, replace=False)
    pages = tuple(
        TaggingPage(page_idx=i, image_id=int(image_ids[j])) for i, j in enumerate(pick)
    )
    return TaggingHit(assignment_id=assignment_id, pages=pages)


def repost_hit(hit: BrowsingHit | TaggingHit, repost_idx: int = 1):
    """Repackage a HIT's pages under a fresh assignment id."""
    base = hit.assignment_id
    if "-r" in base and base.rsplit("-r", 1)[1].isdigit():
        stem, n = base.rsplit("-r", 1)
        base, repost_idx = stem, int(n) + 1
    return dataclasses.replace(hit, assignment_id=f"{base}-r{repost_idx}")


# ---------------------------------------------------------------------------
# JSON persistence (hit.json inside each assignment directory)


def hit_to_dict(hit: BrowsingHit | TaggingHit) -> dict:
    if isinstance(hit, BrowsingHit):
        return {
            "kind": "browsing",
            "assignment_id": hit.assignment_id,
            "class_id": hit.class_id,
            "seed_fraction_target": hit.seed_fraction_target,
            "pages": [
                {
                    "page_idx": p.page_idx,
                    "slots": [
                        {
                            "image_id": s.image_id,
                            "is_seed": s.is_seed,
                            "position": {"x": s.position[0], "y": s.position[1]},
                            "width": s.width,
                            "height": s.height,
                        }
                        for s in p.slots
                    ],
                }
                for p in hit.pages
            ],
        }
    return {
        "kind": "tagging",
        "assignment_id": hit.assignment_id,
        "pages": [{"page_idx": p.page_idx, "image_id": p.image_id} for p in hit.pages],
    }


def hit_from_dict(obj: dict) -> BrowsingHit | TaggingHit:
    if obj["kind"] == "browsing":
        return BrowsingHit(
            assignment_id=obj["assignment_id"],
            class_id=obj["class_id"],
            seed_fraction_target=obj.get("seed_fraction_target", SEED_FRACTION),
            pages=tuple(
                BrowsingPage(
                    page_idx=p["page_idx"],
                    slots=tuple(
                        Slot(
                            image_id=s["image_id"],
                            is_seed=s["is_seed"],
                            position=(s["position"]["x"], s["position"]["y"]),
                            width=s["width"],
                            height=s["height"],
                        )
                        for s in p["slots"]
                    ),
                )
                for p in obj["pages"]
            ),
        )
    if obj["kind"] == "tagging":
        return TaggingHit(
            assignment_id=obj["assignment_id"],
            pages=tuple(
                TaggingPage(page_idx=p["page_idx"], image_id=p["image_id"])
                for p in obj["pages"]
            ),
        )
    raise ValueError(f"unknown hit kind {obj.get('kind')!r}")


def save_hit(path, hit: BrowsingHit | TaggingHit) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(hit_to_dict(hit), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_hit(path) -> BrowsingHit | TaggingHit:
    with open(path, "r", encoding="utf-8") as fh:
        return hit_from_dict(json.load(fh))
