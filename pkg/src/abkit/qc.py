"""Accept/reject rules for submitted HITs and the repost queue.

Thresholds reject on strict less-than; meeting a threshold exactly passes.
Browsing HITs are rejected when seed recall < 1/3, total selections < 30,
fewer than 9 of 10 pages completed, or records are absent while the
completion code fails verification. Tagging HITs are rejected when mean
per-page class recall < 1/3, icon-on-region accuracy < 0.75, fewer than
16 of 20 pages completed, or the same missing-records condition holds.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .analysis import BoxGroup, _live_categories
from .errors import MissingGroundTruth
from .hits import BrowsingHit, TaggingHit, repost_hit
from .records import CocoRecord, ImageNetRecord, extract_final_adds

ACCEPT = "Accept"
REJECT = "Reject"

LOW_RECALL = "LowRecall"
TOO_FEW_SELECTIONS = "TooFewSelections"
INCOMPLETE_PAGES = "IncompletePages"
MISSING_RECORD_BAD_CODE = "MissingRecordBadCode"
LOW_ICON_ACCURACY = "LowIconAccuracy"

# Ratios are exact fractions so boundary equality passes without float noise.
MIN_RECALL = Fraction(1, 3)
MIN_SELECTIONS = 30
MIN_BROWSING_PAGES = 9
MIN_ICON_ACCURACY = Fraction(3, 4)
MIN_TAGGING_PAGES = 16


@dataclass(frozen=True)
class HitVerdict:
    decision: str
    reasons: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.decision == ACCEPT and self.reasons:
            raise ValueError("accepted verdicts carry no reasons")
        if self.decision == REJECT and not self.reasons:
            raise ValueError("rejected verdicts must carry reasons")

    @property
    def accepted(self) -> bool:
        return self.decision == ACCEPT


def _verdict(reasons: list[str]) -> HitVerdict:
    if reasons:
        return HitVerdict(REJECT, tuple(reasons))
    return HitVerdict(ACCEPT, ())


@dataclass(frozen=True)
class ImageNetGroundTruth:
    """Seed membership for every image shown in the evaluated HIT."""

    seed_membership: Mapping[str, bool]

    def covers(self, image_ids: Iterable[str]) -> bool:
        return all(i in self.seed_membership for i in image_ids)


@dataclass(frozen=True)
class CocoGroundTruth:
    """Per-image category list with instance boxes (or rasterized masks' boxes)."""

    classes: Mapping[int, Mapping[str, BoxGroup]]

    def covers(self, image_ids: Iterable[int]) -> bool:
        return all(i in self.classes for i in image_ids)


def evaluate_imagenet_hit(
    records: Sequence[ImageNetRecord],
    gt: ImageNetGroundTruth,
    code_valid: bool = True,
) -> HitVerdict:
    """Apply the browsing-interface rejection rules to one HIT's records."""
    if not records:
        if not code_valid:
            return _verdict([MISSING_RECORD_BAD_CODE])
        return _verdict([])
    if gt is None:
        raise MissingGroundTruth(f"no ground truth for assignment {records[0].assignment_id!r}")
    if not gt.covers(r.image_id for r in records):
        missing = next(r.image_id for r in records if r.image_id not in gt.seed_membership)
        raise MissingGroundTruth(f"image {missing!r} not covered")
    reasons = []
    seed_total = sum(1 for is_seed in gt.seed_membership.values() if is_seed)
    if seed_total == 0:
        raise MissingGroundTruth("ground truth lists no seed images")
    selected = {r.image_id for r in records if r.selected}
    seed_selected = sum(
        1 for image_id, is_seed in gt.seed_membership.items() if is_seed and image_id in selected
    )
    if Fraction(seed_selected, seed_total) < MIN_RECALL:
        reasons.append(LOW_RECALL)
    if len(selected) < MIN_SELECTIONS:
        reasons.append(TOO_FEW_SELECTIONS)
    if len({r.page_idx for r in records}) < MIN_BROWSING_PAGES:
        reasons.append(INCOMPLETE_PAGES)
    return _verdict(reasons)


def evaluate_coco_hit(
    records: Sequence[CocoRecord],
    gt: CocoGroundTruth,
    code_valid: bool = True,
) -> HitVerdict:
    """Apply the tagging-interface rejection rules to one HIT's records."""
    if not records:
        if not code_valid:
            return _verdict([MISSING_RECORD_BAD_CODE])
        return _verdict([])
    if gt is None:
        raise MissingGroundTruth(f"no ground truth for assignment {records[0].assignment_id!r}")
    if not gt.covers(r.image_id for r in records):
        missing = next(r.image_id for r in records if r.image_id not in gt.classes)
        raise MissingGroundTruth(f"image {missing} not covered")
    reasons = []
    page_recalls = []
    icons_total = 0
    icons_on_region = 0
    for record in records:
        image_gt = gt.classes[record.image_id]
        live = _live_categories(record)
        if image_gt:
            retrieved = sum(1 for c in image_gt if c in live)
            page_recalls.append(Fraction(retrieved, len(image_gt)))
        for category, point in extract_final_adds(record).items():
            icons_total += 1
            boxes = image_gt.get(category, ())
            icons_on_region += any(b.contains(point.x, point.y) for b in boxes)
    if page_recalls and sum(page_recalls) / len(page_recalls) < MIN_RECALL:
        reasons.append(LOW_RECALL)
    if icons_total and Fraction(icons_on_region, icons_total) < MIN_ICON_ACCURACY:
        reasons.append(LOW_ICON_ACCURACY)
    if len({r.page_idx for r in records}) < MIN_TAGGING_PAGES:
        reasons.append(INCOMPLETE_PAGES)
    return _verdict(reasons)


def repost_rejected(
    verdicts: Mapping[str, HitVerdict],
    hits: Mapping[str, BrowsingHit | TaggingHit],
) -> list[BrowsingHit | TaggingHit]:
    """Repackage every rejected assignment's pages under a fresh id.

    Accepted assignments are untouched; reposted HITs keep identical page
    content. Output order follows sorted assignment ids for determinism.
    """
    fresh = []
    for assignment_id in sorted(verdicts):
        if not verdicts[assignment_id].accepted:
            fresh.append(repost_hit(hits[assignment_id]))
    return fresh
