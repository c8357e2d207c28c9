"""HTTP+JSON API over the session engine.

Endpoints (schemas in ``docs/api.md``; field names are stable):

    GET  /classes
    POST /sessions                      {"class", "lambda1"?, "lambda2"?}
    POST /sessions/{id}/strokes         {"polylines", "canvas", "category"}
    POST /sessions/{id}/select          {"part_id", "gallery_token"}
    PUT  /sessions/{id}/view            {"direction"}
    GET  /sessions/{id}/shadow          -> PNG
    GET  /sessions/{id}/model           -> OBJ text
    GET  /sessions/{id}/gallery/{part_id}/thumb -> PNG
"""

from __future__ import annotations

import io

import numpy as np
from fastapi import FastAPI, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse
from PIL import Image
from pydantic import BaseModel, Field

from .errors import PartSketchError, SessionError
from .session import DesignSession, SessionEngine


class CreateSessionRequest(BaseModel):
    class_name: str = Field(alias="class")
    lambda1: float | None = None
    lambda2: float | None = None

    model_config = {"populate_by_name": True}


class CanvasSpec(BaseModel):
    width: int
    height: int


class StrokesRequest(BaseModel):
    polylines: list[list[tuple[float, float]]]
    canvas: CanvasSpec
    category: str


class SelectRequest(BaseModel):
    part_id: str
    gallery_token: str


class ViewRequest(BaseModel):
    direction: tuple[float, float, float]


def _png(gray: np.ndarray) -> Response:
    buf = io.BytesIO()
    Image.fromarray(gray, mode="L").save(buf, format="PNG")
    return Response(content=buf.getvalue(), media_type="image/png")


def _view_payload(session: DesignSession) -> dict:
    return {
        "direction": session.view.direction.tolist(),
        "up": session.view.up.tolist(),
    }


def _gallery_payload(session: DesignSession) -> dict:
    return {
        "gallery_token": session.gallery_token,
        "entries": [
            {
                "part_id": e.part_id,
                "score": e.score,
                "breakdown": {
                    "sketch": e.breakdown[0],
                    "detail": e.breakdown[1],
                    "overall": e.breakdown[2],
                },
                "origin": e.origin,
                "thumb_url": f"/sessions/{session.id}/gallery/{e.part_id}/thumb",
            }
            for e in session.gallery
        ],
    }


def create_app(engine: SessionEngine) -> FastAPI:
    app = FastAPI(title="partsketch", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(SessionError)
    async def _session_error(request, exc: SessionError):
        message = str(exc)
        status = 404 if "unknown session" in message else 409 if "stale" in message else 400
        return JSONResponse(status_code=status, content={"error": message})

    @app.exception_handler(PartSketchError)
    async def _engine_error(request, exc: PartSketchError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.get("/classes")
    def classes():
        return {"classes": engine.db.classes(), "categories": engine.index.categories()}

    @app.post("/sessions")
    def create_session(req: CreateSessionRequest):
        session = engine.create_session(req.class_name, req.lambda1, req.lambda2)
        return {
            "session_id": session.id,
            "class": session.class_name,
            "lambda1": session.lambda1,
            "lambda2": session.lambda2,
            "view": _view_payload(session),
            "canvas_size": engine.cfg.image_size,
            "shadow_url": f"/sessions/{session.id}/shadow",
        }

    @app.post("/sessions/{session_id}/strokes")
    def submit_strokes(session_id: str, req: StrokesRequest):
        session = engine.session(session_id)
        with engine.lock(session_id):
            polylines = [np.asarray(p, dtype=np.float64) for p in req.polylines]
            engine.submit_strokes(session, polylines, req.canvas.width, req.category)
        return _gallery_payload(session)

    @app.post("/sessions/{session_id}/select")
    def select_part(session_id: str, req: SelectRequest):
        session = engine.session(session_id)
        with engine.lock(session_id):
            result = engine.select_part(session, req.part_id, req.gallery_token)
        result["model_url"] = f"/sessions/{session_id}/model"
        return result

    @app.put("/sessions/{session_id}/view")
    def set_view(session_id: str, req: ViewRequest):
        session = engine.session(session_id)
        with engine.lock(session_id):
            engine.set_view(session, np.asarray(req.direction, dtype=np.float64))
        return {"view": _view_payload(session), "shadow_url": f"/sessions/{session_id}/shadow"}

    @app.get("/sessions/{session_id}/shadow")
    def shadow(session_id: str):
        session = engine.session(session_id)
        with engine.lock(session_id):
            return _png(engine.shadow(session))

    @app.get("/sessions/{session_id}/model")
    def model(session_id: str):
        session = engine.session(session_id)
        with engine.lock(session_id):
            return PlainTextResponse(engine.export_obj(session), media_type="text/plain")

    @app.get("/sessions/{session_id}/gallery/{part_id}/thumb")
    def thumb(session_id: str, part_id: str):
        session = engine.session(session_id)
        entry = next((e for e in session.gallery if e.part_id == part_id), None)
        view_id = entry.view_id if entry else 0
        return _png(engine.thumbnail(part_id, view_id))

    return app


__all__ = ["create_app"]
