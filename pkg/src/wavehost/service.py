"""HTTP control plane for the model manager and job engine.

Every non-2xx response body is exactly one ApiError object:
``{"code": <machine token>, "message": <human text>, "details"?: ...}``.
Success bodies are the documented shapes. Uploaded audio lives in a
TTL/LRU-capped in-memory store; installs run as tracked tasks through the
engine's job table so the UI can poll progress; job resources are
immutable once terminal.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel
from starlette.exceptions import HTTPException as StarletteHTTPException

from .audio import LabelTrack, WavCodecError, Waveform, decode_wav, encode_wav, render_labels
from .contract import EffectType, MetadataError, metadata_to_document
from .engine import Engine, EngineConfig, JobNotFoundError, JobNotReadyError, JobRecord
from .hub import (
    HubClient,
    HubError,
    NotInstalledError,
    RepoNotFoundError,
    curated,
    parse_repo_id,
)

DEFAULT_AUDIO_TTL_S = 3600.0
DEFAULT_AUDIO_BUDGET_BYTES = 512 * 1024 * 1024

_TYPE_ALIASES = {"effect": EffectType.WAVEFORM_TO_WAVEFORM, "analyzer": EffectType.WAVEFORM_TO_LABELS}


@dataclass
class ServiceConfig:
    hub_url: str | None = None
    cache_root: str | Path | None = None
    curated_path: str | Path | None = None
    ui_dir: str | Path | None = None
    audio_ttl_s: float = DEFAULT_AUDIO_TTL_S
    audio_budget_bytes: int = DEFAULT_AUDIO_BUDGET_BYTES
    workers: int = 1
    cors_origins: tuple[str, ...] = ("*",)


class ApiException(Exception):
    def __init__(self, status: int, code: str, message: str, details=None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.details = details


class AudioStore:
    """Uploaded waveforms, expiring after a TTL and LRU-capped by byte budget."""

    def __init__(self, ttl_s: float, budget_bytes: int, clock=time.monotonic):
        self._ttl_s = ttl_s
        self._budget = budget_bytes
        self._clock = clock
        self._lock = threading.Lock()
        self._entries: dict[str, list] = {}  # id -> [waveform, nbytes, expires_at, last_used]

    def put(self, w: Waveform) -> str:
        audio_id = uuid.uuid4().hex[:12]
        now = self._clock()
        with self._lock:
            self._purge(now)
            self._entries[audio_id] = [w, w.samples.nbytes, now + self._ttl_s, now]
            self._evict_over_budget()
        return audio_id

    def get(self, audio_id: str) -> Waveform:
        now = self._clock()
        with self._lock:
            entry = self._entries.get(audio_id)
            if entry is None or entry[2] <= now:
                self._entries.pop(audio_id, None)
                raise KeyError(audio_id)
            entry[3] = now
            return entry[0]

    def __contains__(self, audio_id: str) -> bool:
        try:
            self.get(audio_id)
            return True
        except KeyError:
            return False

    def _purge(self, now: float) -> None:
        expired = [k for k, e in self._entries.items() if e[2] <= now]
        for k in expired:
            del self._entries[k]

    def _evict_over_budget(self) -> None:
        total = sum(e[1] for e in self._entries.values())
        while total > self._budget and len(self._entries) > 1:
            oldest = min(self._entries, key=lambda k: self._entries[k][3])
            total -= self._entries[oldest][1]
            del self._entries[oldest]


class InstallRequest(BaseModel):
    repo_id: str
    revision: str | None = None


class JobRequest(BaseModel):
    repo_id: str
    audio_id: str


def _package_summary(package) -> dict:
    return {
        "repo_id": str(package.repo_id),
        "revision": package.revision,
        "sha256": package.sha256,
        "installed_at": package.installed_at,
        "metadata": metadata_to_document(package.metadata),
    }


def _job_json(record: JobRecord) -> dict:
    outputs = []
    if record.state == "done":
        for i, item in enumerate(record.outputs):
            if isinstance(item, Waveform):
                outputs.append(
                    {
                        "type": "audio",
                        "index": i,
                        "url": f"/api/jobs/{record.id}/outputs/{i}",
                        "duration_s": item.duration_s,
                        "sample_rate": item.sample_rate,
                    }
                )
            elif isinstance(item, LabelTrack):
                outputs.append(
                    {"type": "labels", "url": f"/api/jobs/{record.id}/labels", "spans": len(item)}
                )
            else:
                outputs.append({"type": "installed", "repo_id": str(item)})
    return {
        "id": record.id,
        "kind": record.kind,
        "repo_id": record.repo_ref,
        "audio_id": record.audio_ref,
        "state": record.state,
        "progress": record.progress,
        "error": record.error,
        "warnings": record.warnings,
        "outputs": outputs,
    }


def _hub_error(e: HubError) -> ApiException:
    if isinstance(e, RepoNotFoundError):
        return ApiException(404, "repo_not_found", str(e))
    code = "hub_unreachable" if e.retryable else "hub_error"
    return ApiException(502, code, str(e))


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    hub = HubClient(config.hub_url, config.cache_root)
    store = AudioStore(config.audio_ttl_s, config.audio_budget_bytes)
    engine = Engine(
        hub=hub, config=EngineConfig(workers=config.workers), audio_resolver=store.get
    )

    app = FastAPI(title="wavehost manager", version="0.1.0")
    app.state.hub = hub
    app.state.engine = engine
    app.state.audio_store = store
    install_tracker: dict[str, str] = {}  # repo id -> last install task id
    tracker_lock = threading.Lock()

    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(config.cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ApiException)
    async def handle_api_exception(request: Request, exc: ApiException):
        body = {"code": exc.code, "message": exc.message}
        if exc.details is not None:
            body["details"] = exc.details
        return JSONResponse(body, status_code=exc.status)

    @app.exception_handler(RequestValidationError)
    async def handle_validation(request: Request, exc: RequestValidationError):
        return JSONResponse(
            {"code": "bad_request", "message": "malformed request", "details": exc.errors()},
            status_code=400,
        )

    @app.exception_handler(StarletteHTTPException)
    async def handle_routing_errors(request: Request, exc: StarletteHTTPException):
        # default router 404/405s must also wear the ApiError shape
        code = {404: "not_found", 405: "method_not_allowed"}.get(exc.status_code, "http_error")
        return JSONResponse({"code": code, "message": str(exc.detail)}, status_code=exc.status_code)

    @app.exception_handler(Exception)
    async def handle_unexpected(request: Request, exc: Exception):
        return JSONResponse({"code": "internal", "message": str(exc)}, status_code=500)

    # -- models ------------------------------------------------------------

    @app.get("/api/models")
    def list_models():
        return [_package_summary(p) for p in hub.list_installed()]

    @app.get("/api/models/curated")
    def curated_models():
        if config.curated_path is None:
            return []
        try:
            manifest = curated(config.curated_path)
        except Exception as e:
            raise ApiException(500, "curated_manifest_invalid", str(e)) from e
        rows = []
        for entry in manifest.entries:
            installed = hub.is_installed(entry.repo_id)
            rows.append(
                {
                    "repo_id": str(entry.repo_id),
                    "note": entry.note,
                    "pinned_revision": entry.pinned_revision,
                    "installed": installed,
                    "metadata": metadata_to_document(hub.get_installed(entry.repo_id).metadata)
                    if installed
                    else None,
                }
            )
        return rows

    @app.get("/api/hub/search")
    def hub_search(type: str | None = None):
        type_filter = None
        if type is not None:
            if type not in _TYPE_ALIASES:
                raise ApiException(400, "bad_type", f"type must be one of {sorted(_TYPE_ALIASES)}")
            type_filter = _TYPE_ALIASES[type]
        try:
            cards = hub.search(type_filter=type_filter)
        except HubError as e:
            raise _hub_error(e) from e
        return [
            {
                "repo_id": str(card.repo_id),
                "tags": list(card.tags),
                "files": list(card.files),
                "effect_type": card.effect_type.value if card.effect_type else None,
                "short_description": card.metadata.short_description if card.metadata else None,
            }
            for card in cards
        ]

    @app.post("/api/models/install", status_code=202)
    def install_model(body: InstallRequest):
        try:
            rid = parse_repo_id(body.repo_id)
        except ValueError as e:
            raise ApiException(400, "bad_repo_id", str(e)) from e
        revision = body.revision or "main"

        with tracker_lock:
            task_id = install_tracker.get(str(rid))
            if task_id is not None:
                try:
                    running = engine.job_status(task_id)
                    if running.state in ("queued", "running"):
                        return {"task_id": task_id, "repo_id": str(rid)}
                except JobNotFoundError:
                    pass

        try:  # preflight so obvious failures surface on the POST itself
            hub.fetch_metadata(rid, revision)
        except HubError as e:
            raise _hub_error(e) from e
        except MetadataError as e:
            raise ApiException(422, "metadata_invalid", str(e)) from e

        def work(progress):
            package = hub.install(rid, revision)
            progress(1.0)
            return [str(package.repo_id)], []

        record = engine.submit_task("install", str(rid), work)
        with tracker_lock:
            install_tracker[str(rid)] = record.id
        return {"task_id": record.id, "repo_id": str(rid)}

    @app.delete("/api/models/{namespace}/{name}", status_code=204)
    def delete_model(namespace: str, name: str):
        try:
            hub.uninstall(f"{namespace}/{name}")
        except ValueError as e:
            raise ApiException(400, "bad_repo_id", str(e)) from e
        except NotInstalledError as e:
            raise ApiException(404, "not_installed", str(e)) from e
        return Response(status_code=204)

    # -- audio ---------------------------------------------------------------

    @app.post("/api/audio")
    async def upload_audio(file: UploadFile):
        data = await file.read()
        try:
            w = decode_wav(data)
        except WavCodecError as e:
            raise ApiException(400, "bad_wav", str(e)) from e
        audio_id = store.put(w)
        return {
            "audio_id": audio_id,
            "duration_s": w.duration_s,
            "channels": w.channels,
            "sample_rate": w.sample_rate,
        }

    # -- jobs -----------------------------------------------------------------

    @app.post("/api/jobs", status_code=202)
    def submit_job(body: JobRequest):
        try:
            engine.resolve_model(body.repo_id)
        except (NotInstalledError, ValueError) as e:
            raise ApiException(404, "model_not_installed", str(e)) from e
        if body.audio_id not in store:
            raise ApiException(404, "audio_not_found", f"no uploaded audio {body.audio_id!r}")
        record = engine.submit_job(body.repo_id, body.audio_id)
        return {"job_id": record.id}

    @app.get("/api/jobs/{job_id}")
    def job_status(job_id: str):
        try:
            return _job_json(engine.job_status(job_id))
        except JobNotFoundError as e:
            raise ApiException(404, "job_not_found", str(e)) from e

    def _job_outputs(job_id: str) -> list:
        try:
            return engine.job_outputs(job_id)
        except JobNotFoundError as e:
            raise ApiException(404, "job_not_found", str(e)) from e
        except JobNotReadyError as e:
            code = "job_failed" if e.state == "failed" else "job_not_done"
            raise ApiException(409, code, str(e)) from e

    @app.get("/api/jobs/{job_id}/outputs/{index}")
    def job_output_track(job_id: str, index: int):
        outputs = _job_outputs(job_id)
        if index < 0 or index >= len(outputs):
            raise ApiException(404, "output_not_found", f"job has {len(outputs)} outputs")
        item = outputs[index]
        if not isinstance(item, Waveform):
            raise ApiException(404, "not_audio", "this output is not an audio track")
        return Response(content=encode_wav(item, "float32"), media_type="audio/wav")

    @app.get("/api/jobs/{job_id}/labels")
    def job_labels(job_id: str):
        outputs = _job_outputs(job_id)
        tracks = [o for o in outputs if isinstance(o, LabelTrack)]
        if not tracks:
            raise ApiException(404, "no_labels", "this job produced no label track")
        return PlainTextResponse(render_labels(tracks[0]))

    # static UI bundle, when built (mounted last so /api keeps precedence)
    ui_dir = Path(config.ui_dir) if config.ui_dir else None
    if ui_dir and ui_dir.is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
