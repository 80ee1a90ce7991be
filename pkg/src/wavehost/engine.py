"""Effect engine: channel policy, resampling, forward pass, validation, jobs.

The pipelines are pure functions over immutable inputs: a waveform goes in,
new mono tracks (effects) or a label track (analyzers) come out; the input
is never modified and results always pass contract validation before they
exist as tracks. :class:`Engine` adds model-reference resolution (builtin
or installed package) and an asynchronous job queue with snapshot-readable
:class:`JobRecord` state.
"""

from __future__ import annotations

import dataclasses
import logging
import os
import queue
import shlex
import sys
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .audio import LabelEntry, LabelTrack, Waveform, mixdown, resample
from .backends import (
    AudioResponse,
    BackendRef,
    BuiltinBackend,
    LabelsResponse,
    SidecarBackend,
    builtin_metadata,
    forward,
    is_builtin_ref,
    parse_builtin_ref,
)
from .backends.refserver import MODEL_FILE_NAME, sniff_builtin_blob
from .contract import (
    ContractViolation,
    EffectType,
    ModelMetadata,
    validate_analysis_output,
    validate_w2w_output,
)
from .errors import WavehostError
from .hub import HubClient, ModelPackage, NotInstalledError

log = logging.getLogger(__name__)

SIDECAR_CMD_ENV_VAR = "WAVEHOST_SIDECAR_CMD"
DEFAULT_SIDECAR_CMD = ("wavehost-sidecar", "serve")
REFSERVER_CMD = (sys.executable, "-m", "wavehost.backends.refserver")

ProgressFn = Callable[[float], None]


class JobNotFoundError(WavehostError):
    pass


class JobNotReadyError(WavehostError):
    """Outputs requested from a job that is not done; carries the job state."""

    def __init__(self, state: str, message: str):
        super().__init__(message)
        self.state = state


@dataclass
class EngineConfig:
    workers: int = 1
    forward_timeout_s: float = 300.0
    block_processing: bool = False
    block_s: float = 10.0
    crossfade_s: float = 0.5
    sidecar_command: tuple[str, ...] = ()

    def resolved_sidecar_command(self) -> tuple[str, ...]:
        if self.sidecar_command:
            return self.sidecar_command
        env = os.environ.get(SIDECAR_CMD_ENV_VAR)
        if env:
            return tuple(shlex.split(env))
        return DEFAULT_SIDECAR_CMD


def backend_for_model_dir(model_dir, config: EngineConfig) -> SidecarBackend:
    """Sidecar backend for a model directory: builtin-marker blobs run on the
    bundled reference sidecar, opaque blobs on the configured external one."""
    model_dir = Path(model_dir)
    kind = sniff_builtin_blob(model_dir / MODEL_FILE_NAME)
    launch = REFSERVER_CMD if kind else config.resolved_sidecar_command()
    return SidecarBackend(launch_spec=tuple(launch), model_dir=model_dir)


@dataclass(frozen=True)
class ResolvedModel:
    """A runnable model reference: backend plus (possibly rate-following) metadata."""

    ref: str
    backend: BackendRef
    metadata: ModelMetadata | None = None  # None: builtin adopts the input rate

    def metadata_for(self, sample_rate: int) -> ModelMetadata:
        if self.metadata is not None:
            return self.metadata
        assert isinstance(self.backend, BuiltinBackend)
        return builtin_metadata(self.backend.kind, sample_rate)


# --- pipelines ---------------------------------------------------------------


def _prepare_input(meta: ModelMetadata, w: Waveform) -> Waveform:
    work = w if meta.multichannel else mixdown(w)
    return resample(work, meta.sample_rate)


def apply_effect(
    meta: ModelMetadata,
    backend: BackendRef,
    w: Waveform,
    *,
    config: EngineConfig | None = None,
    progress: ProgressFn | None = None,
) -> list[Waveform]:
    """Run a waveform-to-waveform model; returns mono tracks at w's rate.

    Pipeline: mixdown (unless the model declares multichannel) -> resample
    to the model rate -> forward -> output contract validation -> one mono
    track per output row -> resample back. Track order preserves row order.
    """
    if meta.effect_type is not EffectType.WAVEFORM_TO_WAVEFORM:
        raise ValueError(f"apply_effect needs a waveform-to-waveform model, got {meta.effect_type}")
    config = config or EngineConfig()
    model_in = _prepare_input(meta, w)

    block_frames = int(round(config.block_s * meta.sample_rate))
    if config.block_processing and model_in.frames > block_frames:
        validated = _forward_blocked(meta, backend, model_in.samples, config, progress)
    else:
        response = forward(backend, meta, model_in.samples, timeout_s=config.forward_timeout_s)
        if not isinstance(response, AudioResponse):
            raise ContractViolation(
                "wrong_response_kind", "model produced labels but metadata declares an effect"
            )
        validated = validate_w2w_output(model_in.channels, model_in.frames, response.samples)
        if progress is not None:
            progress(1.0)

    tracks = [Waveform(row[np.newaxis, :], meta.sample_rate) for row in validated]
    return [resample(track, w.sample_rate) for track in tracks]


def _forward_blocked(
    meta: ModelMetadata,
    backend: BackendRef,
    samples: np.ndarray,
    config: EngineConfig,
    progress: ProgressFn | None,
) -> np.ndarray:
    """Block-wise forward with linear-crossfade overlap-add stitching.

    Requires length-preserving models: each block's output must match its
    input length, and the row count must agree across blocks.
    """
    rate = meta.sample_rate
    block = int(round(config.block_s * rate))
    overlap = int(round(config.crossfade_s * rate))
    if block <= 0 or overlap < 0 or overlap >= block:
        raise ValueError(
            f"invalid block configuration: block={config.block_s}s overlap={config.crossfade_s}s"
        )
    n = samples.shape[1]
    hop = block - overlap
    starts = list(range(0, max(n - overlap, 1), hop))

    out = None
    up_ramp = np.linspace(0.0, 1.0, overlap, endpoint=False, dtype=np.float64)
    for i, s in enumerate(starts):
        e = min(s + block, n)
        response = forward(backend, meta, samples[:, s:e], timeout_s=config.forward_timeout_s)
        if not isinstance(response, AudioResponse):
            raise ContractViolation(
                "wrong_response_kind", "model produced labels but metadata declares an effect"
            )
        part = validate_w2w_output(samples.shape[0], e - s, response.samples).astype(np.float64)
        if part.shape[1] != e - s:
            raise ContractViolation(
                "block_length_mismatch",
                f"block {i}: output length {part.shape[1]} != input length {e - s}; "
                "length-changing models cannot run in block mode",
            )
        if out is None:
            out = np.zeros((part.shape[0], n), dtype=np.float64)
        elif part.shape[0] != out.shape[0]:
            raise ContractViolation(
                "block_rows_mismatch",
                f"block {i}: {part.shape[0]} output rows, earlier blocks produced {out.shape[0]}",
            )
        window = np.ones(e - s, dtype=np.float64)
        if i > 0 and overlap:
            window[:overlap] = up_ramp
        if e < n and overlap:
            window[-overlap:] = 1.0 - up_ramp
        out[:, s:e] += part * window
        if progress is not None:
            progress((i + 1) / len(starts))
    assert out is not None
    return out.astype(np.float32)


def run_analysis(
    meta: ModelMetadata,
    backend: BackendRef,
    w: Waveform,
    *,
    config: EngineConfig | None = None,
) -> tuple[LabelTrack, list[str]]:
    """Run a waveform-to-labels model; returns (label track, clamp warnings).

    Timestamps are seconds relative to the start of the processed selection,
    so they survive the resampling round trip untouched.
    """
    if meta.effect_type is not EffectType.WAVEFORM_TO_LABELS:
        raise ValueError(f"run_analysis needs a waveform-to-labels model, got {meta.effect_type}")
    config = config or EngineConfig()
    model_in = _prepare_input(meta, w)
    response = forward(backend, meta, model_in.samples, timeout_s=config.forward_timeout_s)
    if not isinstance(response, LabelsResponse):
        raise ContractViolation(
            "wrong_response_kind", "model produced audio but metadata declares an analyzer"
        )
    normalized, warnings = validate_analysis_output(meta, response.output, w.duration_s)
    entries = tuple(
        LabelEntry(float(start), float(stop), meta.labels[int(idx)])
        for idx, (start, stop) in zip(normalized.class_indexes, normalized.timestamps)
    )
    return LabelTrack(entries), warnings


# --- job queue -----------------------------------------------------------------

_TERMINAL_STATES = ("done", "failed")


@dataclass
class JobRecord:
    """Asynchronous execution state; read through snapshots only."""

    id: str
    kind: str  # "run" | "install"
    repo_ref: str
    audio_ref: str | None = None
    state: str = "queued"  # queued -> running -> done | failed
    progress: float = 0.0
    outputs: list = field(default_factory=list)
    error: str | None = None
    warnings: list[str] = field(default_factory=list)

    def snapshot(self) -> "JobRecord":
        return dataclasses.replace(
            self, outputs=list(self.outputs), warnings=list(self.warnings)
        )


class Engine:
    """Model resolution plus a worker-thread job queue.

    Jobs go queued -> running -> done|failed; progress never decreases;
    outputs are immutable once terminal. A single worker (the default)
    serializes model runs; more workers run jobs in parallel.
    """

    def __init__(
        self,
        hub: HubClient | None = None,
        config: EngineConfig | None = None,
        audio_resolver: Callable[[str], Waveform] | None = None,
    ):
        self.hub = hub
        self.config = config or EngineConfig()
        self._audio_resolver = audio_resolver
        self._jobs: dict[str, JobRecord] = {}
        self._lock = threading.RLock()
        self._queue: queue.Queue = queue.Queue()
        self._workers = [
            threading.Thread(target=self._worker_loop, daemon=True, name=f"wavehost-worker-{i}")
            for i in range(max(1, self.config.workers))
        ]
        for worker in self._workers:
            worker.start()

    # -- model resolution --------------------------------------------------

    def resolve_model(self, ref: str) -> ResolvedModel:
        """Resolve ``builtin/<kind>`` or an installed repo id to a backend."""
        if is_builtin_ref(ref):
            return ResolvedModel(ref=ref, backend=BuiltinBackend(parse_builtin_ref(ref)))
        if self.hub is None:
            raise NotInstalledError(f"model not installed: {ref} (no hub configured)")
        package = self.hub.get_installed(ref)
        return ResolvedModel(
            ref=ref, backend=self._package_backend(package), metadata=package.metadata
        )

    def _package_backend(self, package: ModelPackage) -> SidecarBackend:
        return backend_for_model_dir(package.directory, self.config)

    # -- synchronous execution ----------------------------------------------

    def apply_effect(self, ref: str, w: Waveform, progress: ProgressFn | None = None) -> list[Waveform]:
        resolved = self.resolve_model(ref)
        meta = resolved.metadata_for(w.sample_rate)
        return apply_effect(meta, resolved.backend, w, config=self.config, progress=progress)

    def run_analysis(self, ref: str, w: Waveform) -> tuple[LabelTrack, list[str]]:
        resolved = self.resolve_model(ref)
        meta = resolved.metadata_for(w.sample_rate)
        return run_analysis(meta, resolved.backend, w, config=self.config)

    # -- async jobs ------------------------------------------------------------

    def submit_job(self, repo_ref: str, audio_ref: str) -> JobRecord:
        """Enqueue a model run; returns immediately (state queued, or failed
        right away when the model is not installed)."""
        record = self._new_record("run", repo_ref, audio_ref)
        try:
            resolved = self.resolve_model(repo_ref)
        except (NotInstalledError, ValueError) as e:
            return self._fail_immediately(record, str(e))

        def work(progress: ProgressFn) -> tuple[list, list[str]]:
            w = self._resolve_audio(audio_ref)
            meta = resolved.metadata_for(w.sample_rate)
            if meta.effect_type is EffectType.WAVEFORM_TO_WAVEFORM:
                tracks = apply_effect(
                    meta, resolved.backend, w, config=self.config, progress=progress
                )
                return list(tracks), []
            track, warnings = run_analysis(meta, resolved.backend, w, config=self.config)
            return [track], warnings

        snapshot = record.snapshot()  # before the worker can touch the record
        self._enqueue(record, work)
        return snapshot

    def submit_task(
        self,
        kind: str,
        repo_ref: str,
        work: Callable[[ProgressFn], tuple[list, list[str]]],
    ) -> JobRecord:
        """Enqueue arbitrary tracked work (the service uses this for installs)."""
        record = self._new_record(kind, repo_ref, None)
        snapshot = record.snapshot()
        self._enqueue(record, work)
        return snapshot

    def job_status(self, job_id: str) -> JobRecord:
        with self._lock:
            record = self._jobs.get(job_id)
            if record is None:
                raise JobNotFoundError(f"no such job: {job_id}")
            return record.snapshot()

    def job_outputs(self, job_id: str) -> list:
        record = self.job_status(job_id)
        if record.state == "failed":
            raise JobNotReadyError("failed", record.error or "job failed")
        if record.state != "done":
            raise JobNotReadyError(record.state, f"job is still {record.state}")
        return record.outputs

    def list_jobs(self) -> list[JobRecord]:
        with self._lock:
            return [r.snapshot() for r in self._jobs.values()]

    def shutdown(self, wait: bool = True) -> None:
        for _ in self._workers:
            self._queue.put(None)
        if wait:
            for worker in self._workers:
                worker.join(timeout=10)

    # -- internals ----------------------------------------------------------

    def _resolve_audio(self, audio_ref: str) -> Waveform:
        if self._audio_resolver is None:
            raise WavehostError("engine has no audio resolver configured")
        try:
            return self._audio_resolver(audio_ref)
        except LookupError:
            raise WavehostError(f"audio not found: {audio_ref}") from None

    def _new_record(self, kind: str, repo_ref: str, audio_ref: str | None) -> JobRecord:
        record = JobRecord(id=uuid.uuid4().hex[:12], kind=kind, repo_ref=repo_ref, audio_ref=audio_ref)
        with self._lock:
            self._jobs[record.id] = record
        return record

    def _fail_immediately(self, record: JobRecord, message: str) -> JobRecord:
        with self._lock:
            record.state = "failed"
            record.error = message
            return record.snapshot()

    def _enqueue(self, record: JobRecord, work) -> None:
        self._queue.put((record.id, work))

    def _set_progress(self, job_id: str, fraction: float) -> None:
        with self._lock:
            record = self._jobs[job_id]
            record.progress = min(1.0, max(record.progress, float(fraction)))

    def _worker_loop(self) -> None:
        while True:
            item = self._queue.get()
            if item is None:
                return
            job_id, work = item
            with self._lock:
                record = self._jobs[job_id]
                if record.state != "queued":  # cancelled or already failed
                    continue
                record.state = "running"
            try:
                outputs, warnings = work(lambda f: self._set_progress(job_id, f))
                with self._lock:
                    record.outputs = list(outputs)
                    record.warnings = list(warnings)
                    record.progress = 1.0
                    record.state = "done"
            except Exception as e:
                log.warning("job %s failed: %s", job_id, e)
                with self._lock:
                    record.error = str(e)
                    record.state = "failed"
