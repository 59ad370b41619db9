"""JSON-over-HTTP service for the full workflow.

Endpoints cover corpus upload, asynchronous grouping+training with job
polling, group browsing with filter/snippets, seed expansion, per-row
validation, re-expansion, and saving/exporting validated sets.  All
project mutations serialize per project; long jobs run on a single
background worker thread and never block reads, which always see the last
completed state.
"""

from __future__ import annotations

import json
import queue
import threading
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import __version__
from .contexts import ContextType
from .errors import (
    ConflictError,
    FormatError,
    IngestError,
    InputError,
    ModeError,
    NotFoundError,
    RestoreError,
    TermsetError,
    TrainingError,
)
from .expansion import dumps_payload
from .project import (
    DEFAULT_CONTEXTS,
    GroupSettings,
    Project,
    TrainSettings,
    atomic_write,
)


@dataclass
class ServiceConfig:
    data_root: str = "data"
    port: int = 8000
    host: str = "127.0.0.1"
    ui_dir: str | None = None
    train_defaults: dict = field(default_factory=dict)


def load_service_config(
    path: str | Path | None = None, **overrides
) -> ServiceConfig:
    """Config file (JSON) plus keyword overrides; overrides win."""
    values: dict = {}
    if path is not None:
        try:
            values = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise FormatError(f"cannot read config {path}: {exc}") from exc
    config = ServiceConfig()
    for source in (values, overrides):
        for key, value in source.items():
            if value is None:
                continue
            if not hasattr(config, key):
                raise InputError(f"unknown config field {key!r}")
            setattr(config, key, value)
    return config


class ProjectRegistry:
    """Open projects by id, creating or restoring them once per process."""

    def __init__(self, data_root: str | Path):
        self.data_root = Path(data_root)
        self._projects: dict[str, Project] = {}
        self._lock = threading.Lock()

    def create(self, name: str) -> Project:
        with self._lock:
            project = Project.create(self.data_root, name)
            self._projects[project.id] = project
            return project

    def get(self, pid: str) -> Project:
        with self._lock:
            if pid in self._projects:
                return self._projects[pid]
            root = self.data_root / "projects" / pid
            if not (root / "project.json").exists():
                raise NotFoundError(f"no project {pid!r}")
            project = Project.open(root)
            self._projects[pid] = project
            return project

    def list(self) -> list[dict]:
        rows = []
        directory = self.data_root / "projects"
        if directory.exists():
            for root in sorted(directory.iterdir()):
                meta_path = root / "project.json"
                if not meta_path.is_file():
                    continue
                try:
                    meta = json.loads(meta_path.read_text(encoding="utf-8"))
                except (OSError, json.JSONDecodeError):
                    continue
                rows.append({"id": meta.get("id", root.name),
                             "name": meta.get("name", root.name)})
        return rows


class JobWorker:
    """Single background thread running jobs in arrival (FIFO) order."""

    def __init__(self) -> None:
        self._queue: queue.Queue = queue.Queue()
        self._thread: threading.Thread | None = None

    def start(self) -> None:
        self._thread = threading.Thread(target=self._loop, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        if self._thread is not None:
            self._queue.put(None)
            self._thread.join(timeout=30)
            self._thread = None

    def submit(self, project: Project, jid: str, fn) -> None:
        self._queue.put((project, jid, fn))

    def _loop(self) -> None:
        while True:
            item = self._queue.get()
            if item is None:
                return
            project, jid, fn = item
            project.update_job(jid, state="running")
            try:
                message = fn()
                project.update_job(
                    jid, state="done", progress=1.0, message=message or ""
                )
            except TermsetError as exc:
                project.update_job(jid, state="failed", message=str(exc))
            except Exception as exc:  # pragma: no cover - defensive
                project.update_job(
                    jid, state="failed", message=f"internal error: {exc}"
                )


# ---------------------------------------------------------------------------
# Request bodies
# ---------------------------------------------------------------------------


class CreateProjectBody(BaseModel):
    name: str = Field(min_length=1)


class TrainBody(BaseModel):
    contexts: list[str] | None = None
    train_config: dict | None = None
    group_config: dict | None = None


class ExpandBody(BaseModel):
    category: str = Field(min_length=1)
    seed_ids: list[int] = Field(min_length=1)
    k: int = Field(default=50, ge=0)
    pool_size: int = Field(default=500, ge=0)


class ValidateBody(BaseModel):
    group_id: int
    completed: bool


class ReexpandBody(BaseModel):
    accepted_ids: list[int] = Field(default_factory=list)


# ---------------------------------------------------------------------------
# Application factory
# ---------------------------------------------------------------------------

_ERROR_STATUS: list[tuple[type[TermsetError], int, str]] = [
    (NotFoundError, 404, "not_found"),
    (ConflictError, 409, "conflict"),
    (RestoreError, 500, "restore_error"),
    (FormatError, 400, "bad_format"),
    (IngestError, 400, "bad_input"),
    (ModeError, 400, "bad_mode"),
    (TrainingError, 400, "training_error"),
    (InputError, 400, "bad_input"),
    (TermsetError, 400, "error"),
]


def _json_payload(payload: dict) -> Response:
    """Exact-byte JSON response (same serializer as the CLI)."""
    return Response(
        content=dumps_payload(payload), media_type="application/json"
    )


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    registry = ProjectRegistry(config.data_root)
    worker = JobWorker()

    @asynccontextmanager
    async def lifespan(_: FastAPI):
        worker.start()
        yield
        worker.stop()

    app = FastAPI(title="termset", version=__version__, lifespan=lifespan)

    for exc_type, status, code in _ERROR_STATUS:
        def _make(status: int, code: str):
            async def handler(_: Request, exc: TermsetError) -> JSONResponse:
                return JSONResponse(
                    status_code=status,
                    content={"code": code, "message": str(exc)},
                )
            return handler

        app.add_exception_handler(exc_type, _make(status, code))

    @app.exception_handler(RequestValidationError)
    async def validation_handler(_: Request, exc: RequestValidationError):
        errors = exc.errors()
        first = errors[0] if errors else {}
        field_path = ".".join(
            str(p)
            for p in first.get("loc", [])
            if p not in ("body", "query", "path", "header")
        )
        body = {
            "code": "bad_request",
            "message": first.get("msg", "invalid request"),
        }
        if field_path:
            body["field"] = field_path
        return JSONResponse(status_code=400, content=body)

    # -- projects ---------------------------------------------------------

    @app.get("/status")
    def status() -> dict:
        return {"service": "termset", "version": __version__}

    @app.post("/projects", status_code=201)
    def create_project(body: CreateProjectBody) -> dict:
        project = registry.create(body.name)
        return {"id": project.id, "name": project.name}

    @app.get("/projects")
    def list_projects() -> dict:
        return {"projects": registry.list()}

    @app.get("/projects/{pid}")
    def get_project(pid: str) -> dict:
        return registry.get(pid).describe()

    # -- corpus + jobs ----------------------------------------------------

    @app.post("/projects/{pid}/corpus", status_code=202)
    async def upload_corpus(pid: str, request: Request) -> dict:
        project = registry.get(pid)
        data = await request.body()
        fmt = request.headers.get("x-corpus-format")
        if fmt is None:
            ctype = request.headers.get("content-type", "")
            fmt = "conllu" if "conllu" in ctype else "text"
        if fmt not in ("text", "conllu"):
            raise InputError(f"unknown corpus format {fmt!r}")
        if not data:
            raise InputError("empty corpus body")
        ext = "conllu" if fmt == "conllu" else "txt"
        atomic_write(project.root / "corpus" / f"raw.{ext}", data)
        job = project.new_job("ingest")

        def run() -> str:
            info = project.ingest(data, fmt)
            return (
                f"{info['sentences']} sentences from "
                f"{info['documents']} document(s)"
            )

        worker.submit(project, job["id"], run)
        return job

    @app.post("/projects/{pid}/train", status_code=202)
    def train_project(pid: str, body: TrainBody) -> dict:
        project = registry.get(pid)
        if not project.meta.get("corpus"):
            raise ConflictError("ingest a corpus before training")
        names = body.contexts or [c.value for c in DEFAULT_CONTEXTS]
        try:
            contexts = [ContextType(n) for n in names]
        except ValueError:
            valid = ", ".join(c.value for c in ContextType)
            raise InputError(
                f"unknown context type in {names}; valid: {valid}"
            ) from None
        if ContextType.DEPENDENCY in contexts and not project.meta["corpus"].get(
            "parsed"
        ):
            raise ConflictError(
                "dependency contexts need a parsed (CoNLL-U) corpus"
            )
        merged = dict(config.train_defaults)
        merged.update(body.train_config or {})
        train_settings = TrainSettings.from_dict(merged)
        group_settings = GroupSettings.from_dict(body.group_config)
        job = project.new_job("train")

        def run() -> str:
            def progress(fraction: float, message: str) -> None:
                project.update_job(
                    job["id"], progress=round(fraction, 4), message=message
                )

            outcome = project.run_training(
                contexts, train_settings, group_settings, progress
            )
            note = f"{outcome['groups']} groups; trained " + ",".join(
                outcome["trained"]
            )
            if outcome["skipped"]:
                note += "; skipped " + ",".join(outcome["skipped"])
            return note

        worker.submit(project, job["id"], run)
        return job

    @app.get("/projects/{pid}/jobs/{jid}")
    def get_job(pid: str, jid: str) -> dict:
        return registry.get(pid).get_job(jid)

    @app.get("/projects/{pid}/jobs")
    def list_jobs(pid: str) -> dict:
        return {"jobs": registry.get(pid).jobs()}

    # -- groups -----------------------------------------------------------

    @app.get("/projects/{pid}/groups")
    def get_groups(
        pid: str,
        filter: str = "",
        offset: int = Query(default=0, ge=0),
        limit: int = Query(default=50, ge=0, le=1000),
    ) -> dict:
        return registry.get(pid).groups_payload(filter, offset, limit)

    @app.get("/projects/{pid}/groups/{gid}/snippets")
    def get_snippets(
        pid: str, gid: int, max_n: int = Query(default=10, ge=1, le=100)
    ) -> dict:
        return registry.get(pid).snippets_payload(gid, max_n)

    # -- expansion sessions ----------------------------------------------

    @app.post("/projects/{pid}/expand")
    def expand(pid: str, body: ExpandBody) -> Response:
        payload = registry.get(pid).expand_session(
            body.category, body.seed_ids, body.k, body.pool_size
        )
        return _json_payload(payload)

    @app.get("/projects/{pid}/sessions")
    def list_sessions(pid: str) -> dict:
        return registry.get(pid).sessions_payload()

    @app.get("/projects/{pid}/sessions/{sid}")
    def get_session(pid: str, sid: str) -> Response:
        return _json_payload(registry.get(pid).session_payload(sid))

    @app.post("/projects/{pid}/sessions/{sid}/validate")
    def validate(pid: str, sid: str, body: ValidateBody) -> Response:
        payload = registry.get(pid).validate_session(
            sid, body.group_id, body.completed
        )
        return _json_payload(payload)

    @app.post("/projects/{pid}/sessions/{sid}/reexpand")
    def reexpand(pid: str, sid: str, body: ReexpandBody) -> Response:
        payload = registry.get(pid).reexpand_session(sid, body.accepted_ids)
        return _json_payload(payload)

    @app.post("/projects/{pid}/sessions/{sid}/save")
    def save_session(pid: str, sid: str) -> dict:
        return registry.get(pid).save_session(sid)

    @app.get("/projects/{pid}/sessions/{sid}/export.csv")
    def export_csv(pid: str, sid: str) -> PlainTextResponse:
        project = registry.get(pid)
        csv_text = project.export_csv(sid)
        return PlainTextResponse(
            csv_text,
            media_type="text/csv",
            headers={
                "Content-Disposition": f'attachment; filename="{sid}.csv"'
            },
        )

    # -- static UI --------------------------------------------------------

    ui_dir = Path(config.ui_dir) if config.ui_dir else None
    if ui_dir is not None and ui_dir.is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    else:
        @app.get("/")
        def root() -> dict:
            return {"service": "termset", "version": __version__}

    return app


def run(config: ServiceConfig) -> None:
    """Blocking server start (used by the `serve` command)."""
    import uvicorn

    uvicorn.run(create_app(config), host=config.host, port=config.port)
