"""Byproduct record formats for the browsing and tagging interfaces.

Defines the two record schemas (one per annotation interface), validates their
invariants, serializes them byte-stably to JSON Lines, and extracts the proxy
object locations used for point-supervised training.

Coordinates stored in records are image-normalized in [0, 1]^2; page-frame
pixels exist only transiently on the UI-to-service path (`normalize_point`
performs the conversion). Timestamps are integer milliseconds relative to
assignment start.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Iterable, Iterator, Mapping

from .errors import InvariantViolation, MalformedRecord, OutsideImage

ACTION_TYPES = ("add", "move", "remove")

# Canonical field order for serialization. Round-trips are byte-stable only
# for records emitted in this order.
IMAGENET_FIELDS = (
    "image_id",
    "class_id",
    "selected",
    "selectedRecord",
    "mouseTracking",
    "imagePosition",
    "imageWidth",
    "imageHeight",
    "worker_id",
    "assignment_id",
    "page_idx",
)
COCO_FIELDS = (
    "image_id",
    "actionHistories",
    "mouseTracking",
    "categoryHistories",
    "usingKeyboard",
    "timeSpent",
    "page_idx",
    "assignment_id",
    "worker_id",
)


@dataclass(frozen=True)
class TracePoint:
    """One mouse sample: position as fractions of the image, time in ms."""

    x: float
    y: float
    t: int

    def validate(self, path: str) -> None:
        if not 0.0 <= self.x <= 1.0:
            raise InvariantViolation(f"{path}.x", f"coordinate {self.x} outside [0, 1]")
        if not 0.0 <= self.y <= 1.0:
            raise InvariantViolation(f"{path}.y", f"coordinate {self.y} outside [0, 1]")
        if self.t < 0:
            raise InvariantViolation(f"{path}.t", f"timestamp {self.t} is negative")


@dataclass(frozen=True)
class ProxyPoint:
    """Normalized object-location proxy extracted from a record."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.x <= 1.0 and 0.0 <= self.y <= 1.0):
            raise InvariantViolation("proxy_point", f"({self.x}, {self.y}) outside [0, 1]^2")


@dataclass(frozen=True)
class IconAction:
    """One icon gesture on the tagging interface."""

    action: str
    category: str
    point: TracePoint

    def validate(self, path: str) -> None:
        if self.action not in ACTION_TYPES:
            raise InvariantViolation(f"{path}.action", f"unknown action {self.action!r}")
        self.point.validate(f"{path}.point")


@dataclass(frozen=True)
class ImageNetRecord:
    """Per-image byproducts from the browsing interface.

    `selected` is true iff the click-toggle history has odd length; the final
    element of `selectedRecord` is the proxy object location for selected
    images. `imagePosition`/`imageWidth`/`imageHeight` describe the page
    layout so mouse data can be reprojected into the page frame.
    """

    image_id: str
    class_id: str
    selected: bool
    selectedRecord: tuple[TracePoint, ...]
    mouseTracking: tuple[TracePoint, ...]
    imagePosition: tuple[float, float]
    imageWidth: float
    imageHeight: float
    worker_id: str
    assignment_id: str
    page_idx: int
    extras: tuple[tuple[str, Any], ...] = ()

    def validate(self) -> None:
        parity = len(self.selectedRecord) % 2 == 1
        if self.selected != parity:
            raise InvariantViolation(
                "selected",
                f"selected={self.selected} but selectedRecord has length "
                f"{len(self.selectedRecord)}",
            )
        _validate_trace("selectedRecord", self.selectedRecord)
        _validate_trace("mouseTracking", self.mouseTracking)
        if self.imageWidth <= 0:
            raise InvariantViolation("imageWidth", f"{self.imageWidth} must be > 0")
        if self.imageHeight <= 0:
            raise InvariantViolation("imageHeight", f"{self.imageHeight} must be > 0")
        if self.page_idx < 0:
            raise InvariantViolation("page_idx", f"{self.page_idx} must be >= 0")


@dataclass(frozen=True)
class CocoRecord:
    """Per-image byproducts from the tagging interface.

    `actionHistories` is the icon gesture log; per category the sequence must
    be legal (first action `add`; `move`/`remove` only on a live icon; at most
    one live icon per category). `categoryHistories` logs superclass browsing
    as (superclass, t) pairs.
    """

    image_id: int
    actionHistories: tuple[IconAction, ...]
    mouseTracking: tuple[TracePoint, ...]
    categoryHistories: tuple[tuple[str, int], ...]
    usingKeyboard: bool
    timeSpent: int
    page_idx: int
    assignment_id: str
    worker_id: str
    extras: tuple[tuple[str, Any], ...] = ()

    def validate(self) -> None:
        for i, act in enumerate(self.actionHistories):
            act.validate(f"actionHistories[{i}]")
        _validate_action_legality(self.actionHistories)
        ts = [a.point.t for a in self.actionHistories]
        if any(b < a for a, b in zip(ts, ts[1:])):
            raise InvariantViolation("actionHistories", "timestamps decrease")
        _validate_trace("mouseTracking", self.mouseTracking)
        cts = [t for _, t in self.categoryHistories]
        if any(t < 0 for t in cts):
            raise InvariantViolation("categoryHistories", "negative timestamp")
        if any(b < a for a, b in zip(cts, cts[1:])):
            raise InvariantViolation("categoryHistories", "timestamps decrease")
        if self.timeSpent < 0:
            raise InvariantViolation("timeSpent", f"{self.timeSpent} must be >= 0")
        last = max((ts[-1:] or [0]) + (cts[-1:] or [0]) + [p.t for p in self.mouseTracking[-1:]])
        if self.timeSpent < last:
            raise InvariantViolation(
                "timeSpent", f"{self.timeSpent} earlier than last event at {last}"
            )
        if self.page_idx < 0:
            raise InvariantViolation("page_idx", f"{self.page_idx} must be >= 0")


def _validate_trace(path: str, points: tuple[TracePoint, ...]) -> None:
    for i, p in enumerate(points):
        p.validate(f"{path}[{i}]")
    ts = [p.t for p in points]
    if any(b < a for a, b in zip(ts, ts[1:])):
        raise InvariantViolation(path, "timestamps decrease")


def _validate_action_legality(actions: tuple[IconAction, ...]) -> None:
    live: set[str] = set()
    for i, act in enumerate(actions):
        path = f"actionHistories[{i}]"
        if act.action == "add":
            if act.category in live:
                raise InvariantViolation(path, f"add while {act.category!r} icon is live")
            live.add(act.category)
        elif act.action == "move":
            if act.category not in live:
                raise InvariantViolation(path, f"move before add for {act.category!r}")
        else:  # remove
            if act.category not in live:
                raise InvariantViolation(path, f"remove before add for {act.category!r}")
            live.remove(act.category)


# ---------------------------------------------------------------------------
# Parsing


def _require(obj: Mapping[str, Any], key: str, types, path: str):
    if key not in obj:
        raise MalformedRecord(path, "missing field")
    value = obj[key]
    if types is bool:
        if not isinstance(value, bool):
            raise MalformedRecord(path, f"expected bool, got {type(value).__name__}")
    elif types is int:
        # bool is an int subclass; reject it explicitly
        if isinstance(value, bool) or not isinstance(value, int):
            raise MalformedRecord(path, f"expected int, got {type(value).__name__}")
    elif types is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise MalformedRecord(path, f"expected number, got {type(value).__name__}")
        value = float(value)
    elif not isinstance(value, types):
        raise MalformedRecord(
            path, f"expected {getattr(types, '__name__', types)}, got {type(value).__name__}"
        )
    return value


def _parse_trace_point(obj: Any, path: str) -> TracePoint:
    if not isinstance(obj, dict):
        raise MalformedRecord(path, "expected object")
    return TracePoint(
        x=_require(obj, "x", float, f"{path}.x"),
        y=_require(obj, "y", float, f"{path}.y"),
        t=_require(obj, "t", int, f"{path}.t"),
    )


def _parse_trace(obj: Any, path: str) -> tuple[TracePoint, ...]:
    if not isinstance(obj, list):
        raise MalformedRecord(path, "expected array")
    return tuple(_parse_trace_point(p, f"{path}[{i}]") for i, p in enumerate(obj))


def _load_object(data: bytes | str) -> dict:
    try:
        obj = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedRecord("<record>", f"invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise MalformedRecord("<record>", "record must be a JSON object")
    return obj


def _extras(obj: Mapping[str, Any], known: tuple[str, ...], strict: bool):
    unknown = [k for k in obj if k not in known]
    if unknown and strict:
        raise MalformedRecord(unknown[0], "unknown field in strict mode")
    return tuple((k, obj[k]) for k in unknown)


def parse_imagenet_record(data: bytes | str, *, strict: bool = True) -> ImageNetRecord:
    """Parse one serialized browsing-interface record and validate it.

    Raises MalformedRecord for structural problems and InvariantViolation for
    semantic ones; both carry the offending field path. Unknown fields are
    rejected when `strict`, preserved (and re-serialized) otherwise.
    """
    obj = _load_object(data)
    pos = _require(obj, "imagePosition", dict, "imagePosition")
    record = ImageNetRecord(
        image_id=_require(obj, "image_id", str, "image_id"),
        class_id=_require(obj, "class_id", str, "class_id"),
        selected=_require(obj, "selected", bool, "selected"),
        selectedRecord=_parse_trace(obj.get("selectedRecord"), "selectedRecord"),
        mouseTracking=_parse_trace(obj.get("mouseTracking"), "mouseTracking"),
        imagePosition=(
            _require(pos, "x", float, "imagePosition.x"),
            _require(pos, "y", float, "imagePosition.y"),
        ),
        imageWidth=_require(obj, "imageWidth", float, "imageWidth"),
        imageHeight=_require(obj, "imageHeight", float, "imageHeight"),
        worker_id=_require(obj, "worker_id", str, "worker_id"),
        assignment_id=_require(obj, "assignment_id", str, "assignment_id"),
        page_idx=_require(obj, "page_idx", int, "page_idx"),
        extras=_extras(obj, IMAGENET_FIELDS, strict),
    )
    record.validate()
    return record


def parse_coco_record(data: bytes | str, *, strict: bool = True) -> CocoRecord:
    """Parse one serialized tagging-interface record and validate it."""
    obj = _load_object(data)
    actions_raw = _require(obj, "actionHistories", list, "actionHistories")
    actions = []
    for i, a in enumerate(actions_raw):
        path = f"actionHistories[{i}]"
        if not isinstance(a, dict):
            raise MalformedRecord(path, "expected object")
        actions.append(
            IconAction(
                action=_require(a, "action", str, f"{path}.action"),
                category=_require(a, "category", str, f"{path}.category"),
                point=_parse_trace_point(a.get("point"), f"{path}.point"),
            )
        )
    cats_raw = _require(obj, "categoryHistories", list, "categoryHistories")
    cats = []
    for i, c in enumerate(cats_raw):
        path = f"categoryHistories[{i}]"
        if not isinstance(c, dict):
            raise MalformedRecord(path, "expected object")
        cats.append(
            (
                _require(c, "superclass", str, f"{path}.superclass"),
                _require(c, "t", int, f"{path}.t"),
            )
        )
    record = CocoRecord(
        image_id=_require(obj, "image_id", int, "image_id"),
        actionHistories=tuple(actions),
        mouseTracking=_parse_trace(obj.get("mouseTracking"), "mouseTracking"),
        categoryHistories=tuple(cats),
        usingKeyboard=_require(obj, "usingKeyboard", bool, "usingKeyboard"),
        timeSpent=_require(obj, "timeSpent", int, "timeSpent"),
        page_idx=_require(obj, "page_idx", int, "page_idx"),
        assignment_id=_require(obj, "assignment_id", str, "assignment_id"),
        worker_id=_require(obj, "worker_id", str, "worker_id"),
        extras=_extras(obj, COCO_FIELDS, strict),
    )
    record.validate()
    return record


# ---------------------------------------------------------------------------
# Serialization


def _trace_point_obj(p: TracePoint) -> dict:
    return {"x": p.x, "y": p.y, "t": p.t}


def _imagenet_obj(record: ImageNetRecord) -> dict:
    obj = {
        "image_id": record.image_id,
        "class_id": record.class_id,
        "selected": record.selected,
        "selectedRecord": [_trace_point_obj(p) for p in record.selectedRecord],
        "mouseTracking": [_trace_point_obj(p) for p in record.mouseTracking],
        "imagePosition": {"x": record.imagePosition[0], "y": record.imagePosition[1]},
        "imageWidth": record.imageWidth,
        "imageHeight": record.imageHeight,
        "worker_id": record.worker_id,
        "assignment_id": record.assignment_id,
        "page_idx": record.page_idx,
    }
    obj.update(record.extras)
    return obj


def _coco_obj(record: CocoRecord) -> dict:
    obj = {
        "image_id": record.image_id,
        "actionHistories": [
            {"action": a.action, "category": a.category, "point": _trace_point_obj(a.point)}
            for a in record.actionHistories
        ],
        "mouseTracking": [_trace_point_obj(p) for p in record.mouseTracking],
        "categoryHistories": [{"superclass": s, "t": t} for s, t in record.categoryHistories],
        "usingKeyboard": record.usingKeyboard,
        "timeSpent": record.timeSpent,
        "page_idx": record.page_idx,
        "assignment_id": record.assignment_id,
        "worker_id": record.worker_id,
    }
    obj.update(record.extras)
    return obj


def serialize_record(record: ImageNetRecord | CocoRecord) -> bytes:
    """Serialize one record to a canonical JSON line (no trailing newline).

    Keys are emitted in the schema order, followed by any preserved unknown
    fields in their original order, so serialize(parse(b)) == b for every
    canonically formatted input.
    """
    if isinstance(record, ImageNetRecord):
        obj = _imagenet_obj(record)
    elif isinstance(record, CocoRecord):
        obj = _coco_obj(record)
    else:
        raise TypeError(f"not a record: {type(record).__name__}")
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=True).encode("utf-8")


def write_records(path, records: Iterable[ImageNetRecord | CocoRecord]) -> int:
    """Append records to a JSON Lines file; returns the number written."""
    n = 0
    with open(path, "ab") as fh:
        for record in records:
            fh.write(serialize_record(record) + b"\n")
            n += 1
    return n


def read_imagenet_records(path, *, strict: bool = True) -> Iterator[ImageNetRecord]:
    with open(path, "rb") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield parse_imagenet_record(line, strict=strict)


def read_coco_records(path, *, strict: bool = True) -> Iterator[CocoRecord]:
    with open(path, "rb") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield parse_coco_record(line, strict=strict)


# ---------------------------------------------------------------------------
# Proxy object locations


def extract_final_click(record: ImageNetRecord) -> ProxyPoint | None:
    """Proxy location for a browsing record: the final click toggle.

    Returns the last `selectedRecord` element when the image ended up
    selected, None otherwise (absence is a valid result, not an error).
    """
    if not record.selected:
        return None
    last = record.selectedRecord[-1]
    return ProxyPoint(last.x, last.y)


def extract_final_adds(
    record: CocoRecord, *, use_live_position: bool = False
) -> dict[str, ProxyPoint]:
    """Proxy locations for a tagging record, one per category left live.

    The point is the category's final `add` action; later `move` actions do
    not replace it. `use_live_position=True` switches to the icon's last
    position (its final move, if any) for analytics comparisons.
    """
    last_add: dict[str, TracePoint] = {}
    position: dict[str, TracePoint] = {}
    live: set[str] = set()
    for act in record.actionHistories:
        if act.action == "add":
            live.add(act.category)
            last_add[act.category] = act.point
            position[act.category] = act.point
        elif act.action == "move":
            position[act.category] = act.point
        else:
            live.discard(act.category)
    source = position if use_live_position else last_add
    return {c: ProxyPoint(source[c].x, source[c].y) for c in sorted(live)}


def normalize_point(
    page_xy: tuple[float, float],
    image_position: tuple[float, float],
    image_width: float,
    image_height: float,
) -> ProxyPoint:
    """Convert a page-frame pixel position into image-normalized coordinates.

    Clamps to [0, 1]^2; positions more than 1 pixel outside the image
    rectangle raise OutsideImage instead of being silently clamped.
    """
    px, py = page_xy
    ix, iy = image_position
    if not (ix - 1.0 <= px <= ix + image_width + 1.0 and iy - 1.0 <= py <= iy + image_height + 1.0):
        raise OutsideImage(
            f"({px}, {py}) outside image at ({ix}, {iy}) size {image_width}x{image_height}"
        )
    x = min(1.0, max(0.0, (px - ix) / image_width))
    y = min(1.0, max(0.0, (py - iy) / image_height))
    return ProxyPoint(x, y)
