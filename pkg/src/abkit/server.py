"""HTTP front door for the annotation service."""

from __future__ import annotations

from typing import Any

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .errors import (
    AbkitError,
    ClosedAssignment,
    MalformedRecord,
    NonMonotoneTimestamp,
    PageAlreadySubmitted,
    UnknownAssignment,
)
from .hits import BrowsingHit
from .service import AnnotationService

_STATUS = {
    UnknownAssignment: 404,
    ClosedAssignment: 409,
    PageAlreadySubmitted: 409,
    NonMonotoneTimestamp: 409,
    MalformedRecord: 400,
}


class EventBatch(BaseModel):
    events: list[dict] = Field(default_factory=list)


class OpenRequest(BaseModel):
    worker_id: str


class SubmitRequest(BaseModel):
    payload: dict[str, Any] = Field(default_factory=dict)


def page_payload(service: AnnotationService, assignment_id: str, page_idx: int) -> dict:
    hit = service.hit(assignment_id)
    if not 0 <= page_idx < len(hit.pages):
        raise UnknownAssignment(f"{assignment_id} has no page {page_idx}")
    if isinstance(hit, BrowsingHit):
        page = hit.pages[page_idx]
        return {
            "kind": "browsing",
            "assignment_id": assignment_id,
            "page_idx": page_idx,
            "class_id": hit.class_id,
            "instruction": f"Select all the images showing {hit.class_id}; "
            "click on the object itself.",
            "slots": [
                {
                    "slot": i,
                    "image_id": s.image_id,
                    "position": {"x": s.position[0], "y": s.position[1]},
                    "width": s.width,
                    "height": s.height,
                }
                for i, s in enumerate(page.slots)
            ],
        }
    page = hit.pages[page_idx]
    return {
        "kind": "tagging",
        "assignment_id": assignment_id,
        "page_idx": page_idx,
        "image_id": page.image_id,
    }


def make_app(service: AnnotationService) -> FastAPI:
    app = FastAPI(title="abkit annotation service")
    # the UI may be statically hosted on another local origin
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(AbkitError)
    async def domain_error(_request: Request, exc: AbkitError):
        status = next((code for t, code in _STATUS.items() if isinstance(exc, t)), 400)
        return JSONResponse({"detail": str(exc)}, status_code=status)

    @app.get("/hit/{assignment_id}/page/{page_idx}")
    def get_page(assignment_id: str, page_idx: int):
        return page_payload(service, assignment_id, page_idx)

    @app.post("/hit/{assignment_id}/open")
    def open_assignment(assignment_id: str, request: OpenRequest):
        service.assign_worker(assignment_id, request.worker_id)
        hit = service.hit(assignment_id)
        return {
            "assignment_id": assignment_id,
            "kind": "browsing" if isinstance(hit, BrowsingHit) else "tagging",
            "pages": len(hit.pages),
        }

    @app.post("/hit/{assignment_id}/events")
    def post_events(assignment_id: str, batch: EventBatch):
        return service.ingest_events(assignment_id, batch.events)

    @app.post("/hit/{assignment_id}/page/{page_idx}/submit")
    def submit_page(assignment_id: str, page_idx: int, request: SubmitRequest):
        records = service.finalize_page(assignment_id, page_idx, request.payload)
        return {"records": len(records)}

    @app.get("/hit/{assignment_id}/code")
    def get_code(assignment_id: str):
        return {"code": service.issue_completion_code(assignment_id)}

    return app
