"""HTTP API consumed by the operator console."""

from __future__ import annotations

from typing import Any

from fastapi import FastAPI, Header, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from ..errors import (
    IllegalTransition,
    NotFound,
    PolicyViolation,
    VidsleuthError,
)
from .core import SleuthService


class StartRunRequest(BaseModel):
    video_id: str
    theme: str | None = None
    run_bender: bool = True


class RegenerateRequest(BaseModel):
    target_comment_id: str | None = None


class PostRequest(BaseModel):
    dry_run: bool = False
    strip_urls: bool | None = None


def create_app(service: SleuthService) -> FastAPI:
    app = FastAPI(title="vidsleuth", version="0.1.0")

    @app.exception_handler(NotFound)
    async def not_found(request: Any, exc: NotFound) -> JSONResponse:
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.exception_handler(IllegalTransition)
    async def conflict(request: Any, exc: IllegalTransition) -> JSONResponse:
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.exception_handler(PolicyViolation)
    async def policy(request: Any, exc: PolicyViolation) -> JSONResponse:
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.exception_handler(ValueError)
    async def bad_request(request: Any, exc: ValueError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(VidsleuthError)
    async def internal(request: Any, exc: VidsleuthError) -> JSONResponse:
        return JSONResponse(status_code=500, content={"detail": str(exc)})

    @app.post("/runs", status_code=202)
    def start_run(
        body: StartRunRequest, idempotency_key: str | None = Header(default=None)
    ) -> dict[str, Any]:
        return service.idempotent(
            idempotency_key,
            lambda: {
                "run_id": service.start_run(
                    body.video_id, body.theme, run_bender=body.run_bender
                )
            },
        )

    @app.get("/runs")
    def list_runs() -> list[dict[str, Any]]:
        return service.list_runs()

    @app.get("/runs/{run_id}")
    def get_run(run_id: str) -> dict[str, Any]:
        return service.get_run(run_id)

    @app.get("/runs/{run_id}/report")
    def get_report(run_id: str, format: str = "md") -> Response:
        content, media_type = service.report(run_id, format)
        return Response(content=content, media_type=media_type)

    @app.get("/runs/{run_id}/drafts")
    def get_drafts(run_id: str) -> list[dict[str, Any]]:
        return service.drafts(run_id)

    @app.post("/drafts/{draft_id}/regenerate")
    def regenerate(
        draft_id: str,
        body: RegenerateRequest | None = None,
        idempotency_key: str | None = Header(default=None),
    ) -> dict[str, Any]:
        target = body.target_comment_id if body else None
        return service.idempotent(
            idempotency_key,
            lambda: service.regenerate(draft_id, target_comment_id=target),
        )

    @app.post("/drafts/{draft_id}/approve")
    def approve(
        draft_id: str, idempotency_key: str | None = Header(default=None)
    ) -> dict[str, Any]:
        return service.idempotent(idempotency_key, lambda: service.approve(draft_id))

    @app.post("/drafts/{draft_id}/post")
    def post_draft(
        draft_id: str,
        body: PostRequest | None = None,
        idempotency_key: str | None = Header(default=None),
    ) -> dict[str, Any]:
        body = body or PostRequest()
        return service.idempotent(
            idempotency_key,
            lambda: service.post_draft(
                draft_id, dry_run=body.dry_run, strip_urls=body.strip_urls
            ),
        )

    @app.get("/queue")
    def queue_view() -> dict[str, Any]:
        return service.queue_view()

    return app
