"""HTTP facade: session lifecycle, SSE event streaming, artifact fetches.

Sessions advance on a worker pool; the POST endpoints validate and append
synchronously (so wrong-state calls get their 409 immediately) and resume
the pipeline in the background. Mutating endpoints honor an Idempotency-Key
header: a retry with the same key replays the recorded response.
"""

from __future__ import annotations

import base64
import json
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .errors import StateError, StorageError, UnknownElementError, UnknownSessionError, ValidationError
from .orchestrator import FeedbackResponse, SessionRunner
from .persistence import EventKind
from .session import (
    ClarificationAnswer,
    CreativityLevel,
    GenerationRequest,
    SessionState,
    new_session_id,
)

logger = logging.getLogger(__name__)

SSE_POLL_SECONDS = 0.1


class CreateSessionBody(BaseModel):
    prompt: str
    creativity: str | None = None
    interactive: bool = False
    ref_image_b64: str | None = None


class AnswerItem(BaseModel):
    element: str
    answer: str


class ClarificationsBody(BaseModel):
    answers: list[AnswerItem]


class FeedbackBody(BaseModel):
    text: str | None = None
    accept: bool | None = None
    regenerate: bool | None = None
    mask_b64: str | None = None


def session_summary(runner: SessionRunner, state: SessionState) -> dict:
    records = runner.log.read(state.id)
    last_overall = state.turns[-1].evaluation.overall if state.turns else None
    return {
        "id": state.id,
        "status": state.status.value,
        "prompt_excerpt": state.request.prompt[:80],
        "turn_count": len(state.turns),
        "last_overall": last_overall,
        "created_ts": records[0].ts,
    }


def create_app(
    runner: SessionRunner,
    *,
    cors_origins: tuple[str, ...] = ("*",),
    frontend_dir: str | Path | None = None,
    max_workers: int = 16,
) -> FastAPI:
    app = FastAPI(title="genloop", version="0.1.0")
    app.state.runner = runner
    executor = ThreadPoolExecutor(max_workers=max_workers, thread_name_prefix="genloop-session")
    idempotency_cache: dict[tuple[str, str], tuple[int, dict]] = {}
    idempotency_lock = threading.Lock()

    if cors_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(cors_origins),
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.exception_handler(RequestValidationError)
    async def _schema_violation(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    def _advance_in_background(session_id: str) -> None:
        def work() -> None:
            try:
                runner.advance(session_id)
            except Exception:  # noqa: BLE001 - background failures land in the event log
                logger.exception("session %s: background advance failed", session_id)

        executor.submit(work)

    def _idempotent(request: Request, key_scope: str, produce):
        key = request.headers.get("Idempotency-Key")
        if key is None:
            return produce()
        cache_key = (key_scope, key)
        with idempotency_lock:
            hit = idempotency_cache.get(cache_key)
        if hit is not None:
            status, body = hit
            return JSONResponse(status_code=status, content=body)
        response = produce()
        with idempotency_lock:
            idempotency_cache[cache_key] = (response.status_code, json.loads(bytes(response.body)))
        return response

    # -- sessions -------------------------------------------------------------

    @app.post("/api/sessions", status_code=201)
    def create_session(body: CreateSessionBody, request: Request):
        def produce():
            session_id = new_session_id()
            reference = None
            if body.ref_image_b64:
                try:
                    image = base64.b64decode(body.ref_image_b64)
                except Exception as exc:  # noqa: BLE001
                    raise ValidationError(f"ref_image_b64 is not valid base64: {exc}") from exc
                reference = runner.artifacts.store(image, session_id=session_id).hash
            creativity = runner.config.creativity_default
            if body.creativity:
                try:
                    creativity = CreativityLevel(body.creativity.upper())
                except ValueError:
                    raise ValidationError(f"unknown creativity level {body.creativity!r}") from None
            gen_request = GenerationRequest(
                prompt=body.prompt,
                reference_image=reference,
                creativity_level=creativity,
                interactive=body.interactive,
            )
            state = runner.create(gen_request, session_id=session_id)
            _advance_in_background(state.id)
            return JSONResponse(status_code=201, content={"session_id": state.id})

        return _idempotent(request, "create", produce)

    @app.get("/api/sessions")
    def list_sessions():
        summaries = []
        for session_id in runner.log.session_ids():
            try:
                summaries.append(session_summary(runner, runner.state(session_id)))
            except UnknownSessionError:
                continue
        return summaries

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        return runner.state(session_id).to_dict()

    @app.post("/api/sessions/{session_id}/clarifications", status_code=202)
    def post_clarifications(session_id: str, body: ClarificationsBody, request: Request):
        def produce():
            answers = [ClarificationAnswer(element=a.element, answer=a.answer) for a in body.answers]
            runner.accept_answers(session_id, answers)
            _advance_in_background(session_id)
            return JSONResponse(status_code=202, content={"session_id": session_id, "status": "accepted"})

        return _idempotent(request, f"clarify:{session_id}", produce)

    @app.post("/api/sessions/{session_id}/feedback", status_code=202)
    def post_feedback(session_id: str, body: FeedbackBody, request: Request):
        def produce():
            mask = None
            if body.mask_b64:
                try:
                    mask = base64.b64decode(body.mask_b64)
                except Exception as exc:  # noqa: BLE001
                    raise ValidationError(f"mask_b64 is not valid base64: {exc}") from exc
            feedback = FeedbackResponse(
                text=body.text,
                accept=bool(body.accept),
                regenerate=bool(body.regenerate),
                mask=mask,
            )
            runner.accept_feedback(session_id, feedback)
            _advance_in_background(session_id)
            return JSONResponse(status_code=202, content={"session_id": session_id, "status": "accepted"})

        return _idempotent(request, f"feedback:{session_id}", produce)

    # -- event stream -----------------------------------------------------------

    @app.get("/api/sessions/{session_id}/events")
    def stream_events(session_id: str):
        runner.state(session_id)  # 404 for unknown sessions before streaming

        def generate():
            last_seq = 0
            turns_seen = 0
            while True:
                for record in runner.log.read_from(session_id, last_seq):
                    last_seq = record.seq
                    data = json.dumps(record.to_dict(), ensure_ascii=True)
                    yield f"id: {record.seq}\nevent: {record.kind.value}\ndata: {data}\n\n"
                    if record.kind is EventKind.EVAL:
                        turns_seen += 1
                    if record.kind is EventKind.DONE:
                        return
                    # an ERROR after >=1 turn is followed by a fallback DONE;
                    # with no turns it is terminal
                    if record.kind is EventKind.ERROR and turns_seen == 0:
                        return
                time.sleep(SSE_POLL_SECONDS)

        return StreamingResponse(generate(), media_type="text/event-stream")

    # -- artifacts ----------------------------------------------------------------

    @app.get("/api/artifacts/{artifact_hash}")
    def get_artifact(artifact_hash: str):
        data = runner.artifacts.load(artifact_hash)
        return Response(content=data, media_type="image/png")

    # -- error mapping ---------------------------------------------------------------

    @app.exception_handler(UnknownSessionError)
    async def _unknown_session(request: Request, exc: UnknownSessionError):
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.exception_handler(StorageError)
    async def _unknown_artifact(request: Request, exc: StorageError):
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.exception_handler(StateError)
    async def _wrong_state(request: Request, exc: StateError):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.exception_handler(UnknownElementError)
    async def _unknown_element(request: Request, exc: UnknownElementError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(ValidationError)
    async def _domain_validation(request: Request, exc: ValidationError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    if frontend_dir and Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(frontend_dir), html=True), name="frontend")

    return app
