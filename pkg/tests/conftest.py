"""Shared record/fixture builders for the test suite."""

from __future__ import annotations

from abkit.analysis import GtBox
from abkit.qc import CocoGroundTruth, ImageNetGroundTruth
from abkit.records import CocoRecord, IconAction, ImageNetRecord, TracePoint


def browsing_record(
    image_id: str,
    page_idx: int,
    selected: bool,
    assignment_id: str = "hit-a",
    click_xy: tuple[float, float] = (0.5, 0.5),
) -> ImageNetRecord:
    clicks = (TracePoint(click_xy[0], click_xy[1], 100),) if selected else ()
    rec = ImageNetRecord(
        image_id=image_id,
        class_id="c0",
        selected=selected,
        selectedRecord=clicks,
        mouseTracking=(TracePoint(0.1, 0.1, 50), TracePoint(click_xy[0], click_xy[1], 99)),
        imagePosition=(16.0, 100.0),
        imageWidth=160.0,
        imageHeight=120.0,
        worker_id="w" * 16,
        assignment_id=assignment_id,
        page_idx=page_idx,
    )
    rec.validate()
    return rec


def build_imagenet_case(
    seed_total: int,
    seed_selected: int,
    extra_selected: int,
    pages: int,
    assignment_id: str = "hit-a",
):
    """Records + ground truth with exact recall, selection, and page counts.

    Recall = seed_selected / seed_total; total selections = seed_selected +
    extra_selected; completed pages = `pages` distinct page indices.
    """
    records = []
    membership = {}
    idx = 0

    def page_of(i):
        return i % pages

    for i in range(seed_total):
        image_id = f"seed-{i:04d}"
        membership[image_id] = True
        records.append(browsing_record(image_id, page_of(idx), i < seed_selected, assignment_id))
        idx += 1
    for i in range(extra_selected):
        image_id = f"dist-{i:04d}"
        membership[image_id] = False
        records.append(browsing_record(image_id, page_of(idx), True, assignment_id))
        idx += 1
    # a few hovered-only distractors so not every record is a selection
    for i in range(extra_selected, extra_selected + 5):
        image_id = f"dist-{i:04d}"
        membership[image_id] = False
        records.append(browsing_record(image_id, page_of(idx), False, assignment_id))
        idx += 1
    return records, ImageNetGroundTruth(membership)


IN_BOX = (0.3, 0.3, 0.7, 0.7)
IN_POINT = (0.5, 0.5)
OUT_POINT = (0.05, 0.05)


def tagging_record(
    image_id: int,
    page_idx: int,
    icons: list[tuple[str, bool]],
    assignment_id: str = "hit-b",
) -> CocoRecord:
    """One tagging page; icons is a list of (category, placed_on_region)."""
    actions = []
    t = 100
    for category, inside in icons:
        x, y = IN_POINT if inside else OUT_POINT
        actions.append(IconAction("add", category, TracePoint(x, y, t)))
        t += 50
    rec = CocoRecord(
        image_id=image_id,
        actionHistories=tuple(actions),
        mouseTracking=(TracePoint(0.2, 0.2, 10),),
        categoryHistories=(("animal", 5),),
        usingKeyboard=False,
        timeSpent=t,
        page_idx=page_idx,
        assignment_id=assignment_id,
        worker_id="w" * 16,
    )
    rec.validate()
    return rec


def build_coco_case(plans: list[dict], assignment_id: str = "hit-b"):
    """Build records + ground truth from per-page plans.

    Each plan: {"classes": [category, ...], "icons": [(category, inside), ...]}.
    Page i uses image id 1000 + i.
    """
    records = []
    classes = {}
    for page_idx, plan in enumerate(plans):
        image_id = 1000 + page_idx
        classes[image_id] = {
            c: (GtBox(image_id, IN_BOX),) for c in plan["classes"]
        }
        records.append(tagging_record(image_id, page_idx, plan["icons"], assignment_id))
    return records, CocoGroundTruth(classes)
