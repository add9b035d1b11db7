"""HTTP surface over sessions: create, feed events, inspect, download the log.

Endpoints (JSON in, JSON out; errors are {code, message, detail}):

    POST /sessions                      -> {"session_id": ...}
    POST /sessions/{id}/events          -> transition response
    GET  /sessions/{id}/prompt          -> {"prompt": ... | null}
    GET  /sessions/{id}/metrics         -> running metrics
    GET  /sessions/{id}/log             -> raw JSONL (text/plain)
    GET  /sessions/{id}/explanation     -> {"explanation": ... | null}

Each session's handler is exclusive (the session lock serializes concurrent
requests); different sessions proceed independently.
"""

import uuid
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse

from .errors import ConfigError, ProtocolError, RejectedInput
from .session import Session, new_session_from_config
from .store import JsonlStore


class SessionManager:
    def __init__(self, log_dir):
        self.log_dir = Path(log_dir)
        self.log_dir.mkdir(parents=True, exist_ok=True)
        self.sessions: dict[str, Session] = {}

    def create(self, doc: dict) -> Session:
        session_id = uuid.uuid4().hex
        sink = JsonlStore(self.log_dir / f"{session_id}.jsonl", wall_clock=True)
        session = new_session_from_config(session_id, doc, sink=sink)
        self.sessions[session_id] = session
        return session

    def get(self, session_id: str) -> Session | None:
        return self.sessions.get(session_id)


def _error(status: int, code: str, message: str, detail=None) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"code": code, "message": message, "detail": detail},
    )


def create_app(log_dir, ui_dir=None) -> FastAPI:
    app = FastAPI(title="colabel session service")
    manager = SessionManager(log_dir)
    app.state.manager = manager

    @app.exception_handler(RequestValidationError)
    async def _body_error(request: Request, exc: RequestValidationError):
        return _error(400, "invalid_request", "request body failed validation", exc.errors())

    @app.exception_handler(ConfigError)
    async def _config_error(request: Request, exc: ConfigError):
        return _error(400, "invalid_config", exc.message, {"field": exc.field})

    @app.exception_handler(RejectedInput)
    async def _rejected(request: Request, exc: RejectedInput):
        return _error(400, "rejected_input", str(exc))

    @app.exception_handler(ProtocolError)
    async def _protocol(request: Request, exc: ProtocolError):
        return _error(409, "protocol_error", str(exc))

    @app.post("/sessions")
    def create_session(doc: dict):
        session = manager.create(doc)
        return {"session_id": session.id}

    def _session_or_none(session_id: str) -> Session | None:
        return manager.get(session_id)

    @app.post("/sessions/{session_id}/events")
    def post_event(session_id: str, event: dict):
        session = _session_or_none(session_id)
        if session is None:
            return _error(404, "unknown_session", f"no session {session_id!r}")
        return session.handle_event(event)

    @app.get("/sessions/{session_id}/prompt")
    def get_prompt(session_id: str):
        session = _session_or_none(session_id)
        if session is None:
            return _error(404, "unknown_session", f"no session {session_id!r}")
        return {"prompt": session.prompt_view()}

    @app.get("/sessions/{session_id}/metrics")
    def get_metrics(session_id: str):
        session = _session_or_none(session_id)
        if session is None:
            return _error(404, "unknown_session", f"no session {session_id!r}")
        return session.metrics_view()

    @app.get("/sessions/{session_id}/explanation")
    def get_explanation(session_id: str):
        session = _session_or_none(session_id)
        if session is None:
            return _error(404, "unknown_session", f"no session {session_id!r}")
        return {"explanation": session.last_explanation}

    @app.get("/sessions/{session_id}/log")
    def get_log(session_id: str):
        session = _session_or_none(session_id)
        if session is None:
            return _error(404, "unknown_session", f"no session {session_id!r}")
        path = manager.log_dir / f"{session_id}.jsonl"
        return PlainTextResponse(path.read_text(encoding="utf-8"))

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
