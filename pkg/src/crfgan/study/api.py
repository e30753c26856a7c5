"""HTTP adapter for the study service: /v1 JSON endpoints.

Blinding is enforced one layer down in :class:`StudyService`; this module
only shapes requests and responses and maps domain errors to status codes.
"""

from __future__ import annotations

import base64
from typing import Optional

from fastapi import Body, FastAPI, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from ..errors import (
    ConflictError,
    ExpiredError,
    NotFoundError,
    StudyError,
    ValidationError,
)
from .service import StudyService

_STATUS = (
    (NotFoundError, 404),
    (ConflictError, 409),
    (ExpiredError, 410),
    (ValidationError, 422),
)


def _require(payload: dict, key: str):
    if key not in payload:
        raise ValidationError(f"missing field {key!r}")
    return payload[key]


def create_app(service: Optional[StudyService] = None,
               static_dir: Optional[str] = None) -> FastAPI:
    service = service or StudyService()
    app = FastAPI(title="crfgan study service", docs_url=None, redoc_url=None)
    app.state.service = service
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"],
        allow_methods=["*"], allow_headers=["*"],
    )

    def _handler(status):
        def handle(request, exc):
            return JSONResponse(status_code=status,
                                content={"detail": str(exc)})
        return handle

    for exc_type, status in _STATUS:
        app.add_exception_handler(exc_type, _handler(status))
    app.add_exception_handler(StudyError, _handler(400))

    @app.get("/v1/healthz")
    def healthz():
        return {"ok": True}

    @app.post("/v1/studies", status_code=201)
    def create_study(payload: dict = Body(...)):
        name = _require(payload, "name")
        defs = []
        for d in _require(payload, "pairs"):
            items = {}
            for side in ("item_a", "item_b"):
                item = _require(d, side)
                png = base64.b64decode(_require(item, "png_b64"))
                items[side] = {
                    "image_id": service.add_image(png),
                    "provenance": _require(item, "provenance"),
                }
            defs.append({"section": _require(d, "section"),
                         "plane": _require(d, "plane"),
                         "slice_index": _require(d, "slice_index"),
                         "item_a": items["item_a"],
                         "item_b": items["item_b"]})
        study = service.create_study(name, defs)
        counts = study.section_counts
        return {"study_id": study.study_id,
                "pairs": len(study.pairs),
                "sections": {"1": counts[1], "2": counts[2]}}

    @app.post("/v1/studies/{study_id}/sessions", status_code=201)
    def create_session(study_id: str, payload: dict = Body(...)):
        sess = service.create_session(study_id,
                                      _require(payload, "rater_id"),
                                      seed=payload.get("seed"))
        return {"session_id": sess.session_id,
                "total_pairs": len(sess.schedule),
                "expires_at": sess.expires_at}

    @app.get("/v1/sessions/{session_id}/next")
    def next_pair(session_id: str):
        out = service.next_pair(session_id)
        if not out["done"]:
            for side in ("left", "right"):
                png = service.image_png(out.pop(f"{side}_image_id"))
                out[f"{side}_png_b64"] = base64.b64encode(png).decode("ascii")
        return out

    @app.post("/v1/sessions/{session_id}/votes")
    def submit_vote(session_id: str, payload: dict = Body(...)):
        return service.submit_vote(session_id,
                                   _require(payload, "pair_id"),
                                   _require(payload, "side"),
                                   likert=payload.get("likert"))

    @app.get("/v1/studies/{study_id}/report")
    def report(study_id: str):
        return service.report(study_id)

    @app.get("/v1/images/{image_id}")
    def image(image_id: str):
        return Response(content=service.image_png(image_id),
                        media_type="image/png")

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=static_dir, html=True),
                  name="ui")

    return app
