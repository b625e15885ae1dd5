"""Annotation collection service: assignments, event ingestion, finalization.

Every assignment owns an append-only JSON Lines event log; finalized records
are a pure function of (hit definition, worker hash, event log), so replaying
a log through a fresh service reproduces the records byte for byte. Ingestion
is idempotent: an event is identified by (page_idx, t, payload hash) and
duplicates are dropped without changing the high-water mark. Trace events are
rate-capped per image slot; events for submitted pages or closed assignments
are refused.

Worker identities are anonymized at the door: only a 16-hex-char truncation
of a keyed hash ever reaches storage, and the key stays with the service.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

from .errors import (
    ClosedAssignment,
    MalformedRecord,
    NonMonotoneTimestamp,
    PageAlreadySubmitted,
    UnknownAssignment,
)
from .hits import BrowsingHit, TaggingHit, load_hit, save_hit
from .records import (
    CocoRecord,
    IconAction,
    ImageNetRecord,
    TracePoint,
    serialize_record,
)

BROWSING_EVENT_KINDS = ("page_open", "trace", "click", "submit")
TAGGING_EVENT_KINDS = ("page_open", "trace", "action", "category", "keyboard", "submit")

MAX_TRACE_EVENTS_PER_SLOT_PER_SECOND = 60


def hash_worker_id(worker_id: str, key: bytes) -> str:
    """Non-reversible worker anonymization: 16 hex chars of a keyed hash."""
    return hmac.new(key, worker_id.encode("utf-8"), hashlib.sha256).hexdigest()[:16]


def completion_code(assignment_id: str, key: bytes) -> str:
    return hmac.new(key, f"completion:{assignment_id}".encode("utf-8"), hashlib.sha256).hexdigest()[
        :20
    ]


def event_key(event: Mapping[str, Any]) -> str:
    """Identity of an event for idempotent ingestion: page, time, payload hash."""
    canonical = json.dumps(event, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass
class SessionLog:
    """Ordered per-assignment event stream with completion state."""

    assignment_id: str
    events: list[dict] = field(default_factory=list)
    submitted_pages: set[int] = field(default_factory=set)
    closed: bool = False

    def page_events(self, page_idx: int) -> list[dict]:
        selected = [e for e in self.events if e["page_idx"] == page_idx]
        selected.sort(key=lambda e: e["t"])
        return selected


class _AssignmentState:
    def __init__(self, hit: BrowsingHit | TaggingHit, worker_hash: str):
        self.hit = hit
        self.worker_hash = worker_hash
        self.log = SessionLog(assignment_id=hit.assignment_id)
        self.seen: set[str] = set()
        self.page_hwm: dict[int, int] = {}
        self.trace_buckets: dict[tuple[int, int, int], int] = {}
        self.accepted = 0
        self.code_issued = False
        self.lock = threading.Lock()


def _require_int(event: Mapping, key: str) -> int:
    value = event.get(key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise MalformedRecord(f"event.{key}", "expected integer")
    return value


def _require_unit(event: Mapping, key: str, strict: bool) -> float:
    value = event.get(key)
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise MalformedRecord(f"event.{key}", "expected number")
    value = float(value)
    if not 0.0 <= value <= 1.0:
        if strict:
            raise MalformedRecord(f"event.{key}", f"{value} outside [0, 1]")
        value = min(1.0, max(0.0, value))
    return value


class AnnotationService:
    """Stateful collection back end over a data directory."""

    def __init__(self, data_dir, *, secret: bytes = b"abkit-dev-secret", strict: bool = True):
        self.data_dir = Path(data_dir)
        self.secret = secret
        self.strict = strict
        self._states: dict[str, _AssignmentState] = {}
        self._registry_lock = threading.Lock()
        (self.data_dir / "assignments").mkdir(parents=True, exist_ok=True)
        self._load_existing()

    # -- assignment lifecycle ------------------------------------------------

    def _assignment_dir(self, assignment_id: str) -> Path:
        return self.data_dir / "assignments" / assignment_id

    def _load_existing(self) -> None:
        for hit_path in sorted(self.data_dir.glob("assignments/*/hit.json")):
            hit = load_hit(hit_path)
            meta_path = hit_path.parent / "meta.json"
            worker_hash = ""
            if meta_path.exists():
                worker_hash = json.loads(meta_path.read_text())["worker_hash"]
            state = _AssignmentState(hit, worker_hash)
            events_path = hit_path.parent / "events.jsonl"
            if events_path.exists():
                with events_path.open("r", encoding="utf-8") as fh:
                    for line in fh:
                        if line.strip():
                            self._absorb(state, json.loads(line), persist=False)
            self._states[hit.assignment_id] = state

    def register_hit(self, hit: BrowsingHit | TaggingHit, worker_id: str = "") -> None:
        """Create the assignment directory and open the assignment."""
        with self._registry_lock:
            if hit.assignment_id in self._states:
                raise ValueError(f"assignment {hit.assignment_id!r} already registered")
            adir = self._assignment_dir(hit.assignment_id)
            adir.mkdir(parents=True, exist_ok=True)
            save_hit(adir / "hit.json", hit)
            worker_hash = hash_worker_id(worker_id, self.secret) if worker_id else ""
            (adir / "meta.json").write_text(
                json.dumps({"worker_hash": worker_hash}, sort_keys=True) + "\n"
            )
            self._states[hit.assignment_id] = _AssignmentState(hit, worker_hash)

    def assign_worker(self, assignment_id: str, worker_id: str) -> str:
        """Bind a worker to an open assignment; returns the stored hash."""
        state = self._state(assignment_id)
        with state.lock:
            state.worker_hash = hash_worker_id(worker_id, self.secret)
            (self._assignment_dir(assignment_id) / "meta.json").write_text(
                json.dumps({"worker_hash": state.worker_hash}, sort_keys=True) + "\n"
            )
        return state.worker_hash

    def _state(self, assignment_id: str) -> _AssignmentState:
        try:
            return self._states[assignment_id]
        except KeyError:
            raise UnknownAssignment(assignment_id) from None

    def hit(self, assignment_id: str) -> BrowsingHit | TaggingHit:
        return self._state(assignment_id).hit

    def session_log(self, assignment_id: str) -> SessionLog:
        return self._state(assignment_id).log

    def assignment_ids(self) -> list[str]:
        return sorted(self._states)

    # -- event ingestion -----------------------------------------------------

    def _event_kinds(self, state: _AssignmentState) -> tuple[str, ...]:
        return (
            BROWSING_EVENT_KINDS if isinstance(state.hit, BrowsingHit) else TAGGING_EVENT_KINDS
        )

    def _normalize_event(self, state: _AssignmentState, event: Mapping[str, Any]) -> dict:
        kind = event.get("kind")
        if kind not in self._event_kinds(state):
            raise MalformedRecord("event.kind", f"unknown kind {kind!r}")
        page_idx = _require_int(event, "page_idx")
        if not 0 <= page_idx < len(state.hit.pages):
            raise MalformedRecord("event.page_idx", f"{page_idx} out of range")
        out: dict[str, Any] = {"page_idx": page_idx, "t": _require_int(event, "t"), "kind": kind}
        if out["t"] < 0:
            raise MalformedRecord("event.t", "negative timestamp")
        if kind in ("trace", "click"):
            out["x"] = _require_unit(event, "x", self.strict)
            out["y"] = _require_unit(event, "y", self.strict)
            if isinstance(state.hit, BrowsingHit):
                slot = _require_int(event, "slot")
                if not 0 <= slot < len(state.hit.pages[page_idx].slots):
                    raise MalformedRecord("event.slot", f"{slot} out of range")
                out["slot"] = slot
        elif kind == "action":
            action = event.get("action")
            if action not in ("add", "move", "remove"):
                raise MalformedRecord("event.action", f"unknown action {action!r}")
            category = event.get("category")
            if not isinstance(category, str) or not category:
                raise MalformedRecord("event.category", "expected non-empty string")
            out.update(
                action=action,
                category=category,
                x=_require_unit(event, "x", self.strict),
                y=_require_unit(event, "y", self.strict),
            )
        elif kind == "category":
            superclass = event.get("superclass")
            if not isinstance(superclass, str) or not superclass:
                raise MalformedRecord("event.superclass", "expected non-empty string")
            out["superclass"] = superclass
        elif kind == "submit":
            out["payload"] = dict(event.get("payload") or {})
        if self.strict:
            known = set(out) | {"payload"}
            unknown = [k for k in event if k not in known]
            if unknown:
                raise MalformedRecord(f"event.{unknown[0]}", "unknown field in strict mode")
        return out

    def _absorb(self, state: _AssignmentState, event: dict, *, persist: bool) -> bool:
        """Apply one normalized event to in-memory state; returns accepted?"""
        key = event_key(event)
        if key in state.seen:
            return False
        page_idx = event["page_idx"]
        if event["kind"] == "trace":
            bucket = (page_idx, event.get("slot", 0), event["t"] // 1000)
            if state.trace_buckets.get(bucket, 0) >= MAX_TRACE_EVENTS_PER_SLOT_PER_SECOND:
                return False
            state.trace_buckets[bucket] = state.trace_buckets.get(bucket, 0) + 1
        hwm = state.page_hwm.get(page_idx, 0)
        if event["t"] < hwm:
            raise NonMonotoneTimestamp(
                f"event at t={event['t']} precedes page {page_idx} high-water mark {hwm}"
            )
        state.page_hwm[page_idx] = event["t"]
        state.seen.add(key)
        state.log.events.append(event)
        state.accepted += 1
        if event["kind"] == "submit":
            state.log.submitted_pages.add(page_idx)
        if persist:
            with (self._assignment_dir(state.hit.assignment_id) / "events.jsonl").open(
                "a", encoding="utf-8"
            ) as fh:
                fh.write(json.dumps(event, sort_keys=True, separators=(",", ":")) + "\n")
        return True

    def ingest_events(self, assignment_id: str, events: Iterable[Mapping[str, Any]]) -> dict:
        """Append a batch; duplicates are dropped. Returns the acknowledgment.

        Raises ClosedAssignment for events aimed at a submitted page or a
        closed assignment, NonMonotoneTimestamp when a genuinely new event
        moves backwards on its page.
        """
        state = self._state(assignment_id)
        with state.lock:
            if state.log.closed:
                raise ClosedAssignment(assignment_id)
            accepted = 0
            for raw in events:
                event = self._normalize_event(state, raw)
                if event["page_idx"] in state.log.submitted_pages:
                    if event_key(event) in state.seen:
                        continue  # harmless duplicate of an already-stored event
                    raise ClosedAssignment(
                        f"page {event['page_idx']} of {assignment_id} already submitted"
                    )
                accepted += self._absorb(state, event, persist=True)
            return {"accepted": accepted, "high_water_mark": state.accepted}

    # -- finalization ----------------------------------------------------------

    def finalize_page(
        self, assignment_id: str, page_idx: int, submission: Mapping[str, Any] | None = None
    ) -> list[ImageNetRecord | CocoRecord]:
        """Build and persist the page's byproduct records from the session log.

        The submit marker (with its payload) joins the event log first, so the
        log alone reproduces the records on replay.
        """
        state = self._state(assignment_id)
        with state.lock:
            if state.log.closed:
                raise ClosedAssignment(assignment_id)
            if page_idx in state.log.submitted_pages:
                raise PageAlreadySubmitted(f"page {page_idx} of {assignment_id}")
            submit_event = self._normalize_event(
                state,
                {
                    "kind": "submit",
                    "page_idx": page_idx,
                    "t": state.page_hwm.get(page_idx, 0),
                    "payload": dict(submission or {}),
                },
            )
            self._absorb(state, submit_event, persist=True)
            records = build_page_records(
                state.hit, state.worker_hash, state.log.page_events(page_idx), page_idx,
                emit_empty=not self.strict,
            )
            for record in records:
                record.validate()
            path = self._assignment_dir(assignment_id) / "records.jsonl"
            with path.open("ab") as fh:
                for record in records:
                    fh.write(serialize_record(record) + b"\n")
            return records

    def rebuild_records(self, assignment_id: str) -> bytes:
        """Recompute all records of an assignment from its event log alone."""
        state = self._state(assignment_id)
        out = b""
        for page_idx in sorted(state.log.submitted_pages):
            records = build_page_records(
                state.hit, state.worker_hash, state.log.page_events(page_idx), page_idx,
                emit_empty=not self.strict,
            )
            out += b"".join(serialize_record(r) + b"\n" for r in records)
        return out

    def records_bytes(self, assignment_id: str) -> bytes:
        path = self._assignment_dir(assignment_id) / "records.jsonl"
        return path.read_bytes() if path.exists() else b""

    # -- completion codes ------------------------------------------------------

    def issue_completion_code(self, assignment_id: str) -> str:
        state = self._state(assignment_id)
        with state.lock:
            if not state.log.submitted_pages:
                raise ClosedAssignment(f"{assignment_id}: no pages submitted yet")
            state.code_issued = True
            return completion_code(assignment_id, self.secret)

    def verify_completion_code(self, assignment_id: str, code: str) -> bool:
        if assignment_id not in self._states:
            raise UnknownAssignment(assignment_id)
        return hmac.compare_digest(completion_code(assignment_id, self.secret), code)

    def close_assignment(self, assignment_id: str) -> None:
        state = self._state(assignment_id)
        with state.lock:
            state.log.closed = True


# ---------------------------------------------------------------------------
# Record construction (pure)


def build_page_records(
    hit: BrowsingHit | TaggingHit,
    worker_hash: str,
    events: list[dict],
    page_idx: int,
    *,
    emit_empty: bool = False,
) -> list[ImageNetRecord | CocoRecord]:
    """Deterministically derive a page's records from its ordered events."""
    if isinstance(hit, BrowsingHit):
        return _browsing_records(hit, worker_hash, events, page_idx, emit_empty)
    return _tagging_records(hit, worker_hash, events, page_idx)


def _browsing_records(
    hit: BrowsingHit, worker_hash: str, events: list[dict], page_idx: int, emit_empty: bool
) -> list[ImageNetRecord]:
    page = hit.pages[page_idx]
    by_slot: dict[int, dict[str, list]] = {}
    page_opened = False
    for event in events:
        if event["kind"] == "page_open":
            page_opened = True
        if event["kind"] not in ("trace", "click"):
            continue
        slot_events = by_slot.setdefault(event["slot"], {"trace": [], "click": []})
        slot_events[event["kind"]].append(TracePoint(event["x"], event["y"], event["t"]))
    records = []
    slot_ids = sorted(by_slot)
    if emit_empty and page_opened:
        slot_ids = list(range(len(page.slots)))
    for slot_idx in slot_ids:
        slot = page.slots[slot_idx]
        data = by_slot.get(slot_idx, {"trace": [], "click": []})
        clicks = tuple(data["click"])
        records.append(
            ImageNetRecord(
                image_id=slot.image_id,
                class_id=hit.class_id,
                selected=len(clicks) % 2 == 1,
                selectedRecord=clicks,
                mouseTracking=tuple(data["trace"]),
                imagePosition=slot.position,
                imageWidth=slot.width,
                imageHeight=slot.height,
                worker_id=worker_hash,
                assignment_id=hit.assignment_id,
                page_idx=page_idx,
            )
        )
    return records


def _tagging_records(
    hit: TaggingHit, worker_hash: str, events: list[dict], page_idx: int
) -> list[CocoRecord]:
    page = hit.pages[page_idx]
    actions, traces, categories = [], [], []
    using_keyboard = False
    time_spent = 0
    for event in events:
        t = event["t"]
        time_spent = max(time_spent, t)
        if event["kind"] == "action":
            actions.append(
                IconAction(event["action"], event["category"], TracePoint(event["x"], event["y"], t))
            )
        elif event["kind"] == "trace":
            traces.append(TracePoint(event["x"], event["y"], t))
        elif event["kind"] == "category":
            categories.append((event["superclass"], t))
        elif event["kind"] == "keyboard":
            using_keyboard = True
        elif event["kind"] == "submit":
            payload = event.get("payload") or {}
            if isinstance(payload.get("timeSpent"), int):
                time_spent = max(time_spent, payload["timeSpent"])
    if not actions and not traces and not categories:
        return []
    return [
        CocoRecord(
            image_id=page.image_id,
            actionHistories=tuple(actions),
            mouseTracking=tuple(traces),
            categoryHistories=tuple(categories),
            usingKeyboard=using_keyboard,
            timeSpent=time_spent,
            page_idx=page_idx,
            assignment_id=hit.assignment_id,
            worker_id=worker_hash,
        )
    ]
