"""HTTP JSON API for running annotation campaigns.

Thin FastAPI shell over annotation.Campaign: session start, task issue,
gated submission, QC reporting, JSONL export, and static serving of the
image corpus and the browser UI bundle. The server clock is authoritative
for every gate; an injected clock makes the gates testable.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Callable

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse, RedirectResponse
from fastapi.staticfiles import StaticFiles

from .annotation import (
    AuthError,
    Campaign,
    CampaignConfig,
    ConflictError,
    GateError,
)
from .core import ValidationError, judgment_to_json, rating_to_json


class AnnotationService:
    """Holds campaigns plus the session -> campaign routing table."""

    def __init__(
        self,
        configs: list[CampaignConfig],
        clock_ms: Callable[[], int] | None = None,
        log_dir: str | Path | None = None,
    ):
        self.campaigns: dict[str, Campaign] = {}
        for config in configs:
            log_path = (
                Path(log_dir) / f"{config.campaign_id}.log.jsonl" if log_dir else None
            )
            self.campaigns[config.campaign_id] = Campaign(
                config, clock_ms=clock_ms, log_path=log_path
            )
        self.session_campaign: dict[str, str] = {}
        for campaign in self.campaigns.values():
            for session_id in campaign.sessions:
                self.session_campaign[session_id] = campaign.config.campaign_id

    @classmethod
    def from_config_file(cls, path: str | Path, **kwargs) -> "AnnotationService":
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
        configs = [CampaignConfig.from_json(c) for c in obj["campaigns"]]
        return cls(configs, **kwargs)

    def campaign(self, campaign_id: str) -> Campaign:
        if campaign_id not in self.campaigns:
            raise AuthError(f"unknown campaign {campaign_id!r}")
        return self.campaigns[campaign_id]

    def campaign_for_session(self, session_id: str) -> Campaign:
        if session_id not in self.session_campaign:
            raise AuthError(f"unknown session {session_id!r}")
        return self.campaigns[self.session_campaign[session_id]]


def create_app(
    service: AnnotationService,
    image_root: str | Path | None = None,
    ui_root: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="annotation service")

    @app.exception_handler(AuthError)
    async def _auth(request: Request, exc: AuthError):
        return JSONResponse(status_code=401, content={"error": str(exc)})

    @app.exception_handler(GateError)
    async def _gate(request: Request, exc: GateError):
        return JSONResponse(
            status_code=425,
            content={"error": str(exc), "retry_after_ms": exc.retry_after_ms},
        )

    @app.exception_handler(ConflictError)
    async def _conflict(request: Request, exc: ConflictError):
        return JSONResponse(status_code=409, content={"error": str(exc)})

    @app.exception_handler(ValidationError)
    async def _validation(request: Request, exc: ValidationError):
        return JSONResponse(status_code=422, content={"error": str(exc)})

    @app.post("/session")
    async def start_session(body: dict):
        campaign = service.campaign(str(body.get("campaign", "")))
        session = campaign.start_session(str(body.get("annotator", "")))
        service.session_campaign[session.session_id] = campaign.config.campaign_id
        return {
            "session_id": session.session_id,
            "phase": session.phase,
            "guidelines_min_ms": campaign.config.guidelines_min_ms,
            "dimensions": list(campaign.config.dimensions),
            "category": campaign.config.category,
        }

    @app.get("/session/{session_id}/task")
    async def next_task(session_id: str):
        campaign = service.campaign_for_session(session_id)
        task = campaign.next_task(session_id)
        if task is None:
            return {"status": "complete"}
        return {"status": "task", "task": task.client_view()}

    @app.post("/session/{session_id}/submit")
    async def submit(session_id: str, body: dict):
        campaign = service.campaign_for_session(session_id)
        record = campaign.submit(
            session_id, str(body.get("task_id", "")), body.get("response", {})
        )
        return {"accepted": True, "task_id": record.task_id}

    @app.get("/campaign/{campaign_id}/qc")
    async def qc(campaign_id: str):
        return service.campaign(campaign_id).qc_report()

    @app.get("/campaign/{campaign_id}/export")
    async def export(campaign_id: str):
        ratings, judgments = service.campaign(campaign_id).export_records()
        lines = [json.dumps(rating_to_json(r), sort_keys=True) for r in ratings]
        lines += [json.dumps(judgment_to_json(j), sort_keys=True) for j in judgments]
        return PlainTextResponse("\n".join(lines) + ("\n" if lines else ""),
                                 media_type="application/x-ndjson")

    if image_root:
        app.mount("/images", StaticFiles(directory=str(image_root)), name="images")
    if ui_root and Path(ui_root).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_root), html=True), name="ui")

        @app.get("/")
        async def index():
            return RedirectResponse(url="/ui/")

    return app


def serve(
    config_path: str | Path,
    host: str = "127.0.0.1",
    port: int = 8000,
    log_dir: str | Path | None = None,
    image_root: str | Path | None = None,
    ui_root: str | Path | None = None,
) -> None:
    import uvicorn

    service = AnnotationService.from_config_file(config_path, log_dir=log_dir)
    app = create_app(service, image_root=image_root, ui_root=ui_root)
    uvicorn.run(app, host=host, port=port)
