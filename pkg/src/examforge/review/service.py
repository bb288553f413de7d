"""HTTP review service.

JSON API consumed by the dashboard frontend and by scripts:

- ``GET  /api/queue?status=pending&page=1&page_size=20``
- ``GET  /api/items/{id}``
- ``POST /api/items/{id}/decision``  body ``{action, payload?, version}``
- ``GET  /api/stats``
- ``POST /api/export``
- ``GET  /healthz``

409 for decision races, 422 for validation failures, 404 for unknown items.
Reviewer identity comes from a bearer token mapped to a reviewer id in
config; with no token map configured, callers are ``anonymous``. Images are
served from a static mount at ``/images``, the dashboard bundle at ``/``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping, Sequence

from fastapi import Depends, FastAPI, HTTPException, Query, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from ..corpus import Sample, sample_to_record, write_corpus
from .store import ConflictError, ReviewStore, ValidationFailed


class DecisionBody(BaseModel):
    action: str
    payload: dict[str, Any] | None = None
    version: int | None = None


class ExportBody(BaseModel):
    out_path: str | None = None


def _item_view(item, *, full: bool = False) -> dict[str, Any]:
    sample = item.sample
    view: dict[str, Any] = {
        "id": sample.id,
        "topic": sample.topic_id(),
        "flags": list(item.flags),
        "status": item.status,
        "version": item.version,
    }
    if full:
        view["sample"] = sample_to_record(sample)
        view["image_urls"] = [f"/images/{ref}" for ref in sample.image_refs]
        view["decision_log"] = [entry.to_record() for entry in item.decision_log]
        if item.working is not None:
            view["working"] = sample_to_record(item.working)
    return view


def create_app(
    store: ReviewStore,
    base_corpus: Sequence[Sample],
    *,
    image_root: str | Path | None = None,
    static_dir: str | Path | None = None,
    reviewer_tokens: Mapping[str, str] | None = None,
    export_path: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="examforge review service")
    corpus = list(base_corpus)

    def reviewer_id(request: Request) -> str:
        auth = request.headers.get("authorization", "")
        token = auth.removeprefix("Bearer ").strip() if auth.startswith("Bearer ") else ""
        if reviewer_tokens:
            if token not in reviewer_tokens:
                raise HTTPException(status_code=401, detail="unknown reviewer token")
            return reviewer_tokens[token]
        return token or "anonymous"

    @app.get("/healthz")
    def healthz() -> dict[str, str]:
        return {"status": "ok"}

    @app.get("/api/queue")
    def queue(
        status: str | None = Query(default=None),
        page: int = Query(default=1, ge=1),
        page_size: int = Query(default=20, ge=1, le=500),
    ) -> dict[str, Any]:
        try:
            items = store.items(status=status)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        total = len(items)
        pages = max(1, -(-total // page_size))
        start = (page - 1) * page_size
        return {
            "items": [_item_view(item) for item in items[start : start + page_size]],
            "total": total,
            "page": page,
            "pages": pages,
            "page_size": page_size,
        }

    @app.get("/api/items/{item_id}")
    def get_item(item_id: str) -> dict[str, Any]:
        try:
            return _item_view(store.get(item_id), full=True)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown item {item_id!r}")

    @app.post("/api/items/{item_id}/decision")
    def post_decision(
        item_id: str, body: DecisionBody, reviewer: str = Depends(reviewer_id)
    ) -> dict[str, Any]:
        try:
            item = store.decide(
                item_id,
                body.action,
                reviewer,
                payload=body.payload,
                version=body.version,
            )
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown item {item_id!r}")
        except ConflictError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except ValidationFailed as exc:
            raise HTTPException(
                status_code=422,
                detail=[{"rule": rule, "message": message} for rule, message in exc.violations],
            )
        return _item_view(item, full=True)

    @app.get("/api/stats")
    def stats() -> dict[str, Any]:
        return store.stats().to_record()

    @app.post("/api/export")
    def export(body: ExportBody | None = None) -> dict[str, Any]:
        from .store import export_reviewed

        out = (body.out_path if body else None) or export_path
        samples, queue_stats = export_reviewed(store, corpus)
        result: dict[str, Any] = {
            "count": len(samples),
            "stats": queue_stats.to_record(),
        }
        if out is not None:
            write_corpus(samples, out)
            result["out_path"] = str(out)
        return result

    @app.exception_handler(Exception)
    async def unhandled(request: Request, exc: Exception) -> JSONResponse:  # pragma: no cover
        return JSONResponse(status_code=500, content={"detail": str(exc)})

    if image_root is not None and Path(image_root).is_dir():
        app.mount("/images", StaticFiles(directory=str(image_root)), name="images")
    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="frontend")
    return app


def serve(
    store: ReviewStore,
    base_corpus: Sequence[Sample],
    *,
    host: str = "127.0.0.1",
    port: int = 8321,
    **app_kwargs: Any,
) -> None:
    import uvicorn

    app = create_app(store, base_corpus, **app_kwargs)
    uvicorn.run(app, host=host, port=port, log_level="warning")
