"""Client side of a sidecar process: spawn, handshake, forward, close.

A session owns one child process speaking ADLP on its stdin/stdout. The
session is strictly sequential — one forward in flight — and becomes
unusable after any transport-level failure (timeout, EOF, protocol
violation). Model-reported errors (an ``error`` frame) leave the session
alive; the sidecar contract says it keeps serving after them.
"""

from __future__ import annotations

import logging
import os
import select
import subprocess
import threading
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from ..contract import EffectType, ModelMetadata
from ..errors import WavehostError
from . import adlp

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT_S = 300.0
_CLOSE_GRACE_S = 5.0


class SidecarError(WavehostError):
    """Sidecar spawn, handshake, or transport failure."""


class SidecarTimeout(SidecarError):
    """The sidecar did not answer within the configured timeout."""


class SessionClosed(SidecarError):
    """Use of a session after it died or was closed."""


class ForwardError(WavehostError):
    """The model itself reported an error frame; the session stays usable."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


class _DeadlinePipe:
    """Pipe ends with non-blocking fds; reads and writes honor a deadline."""

    def __init__(self, readable, writable):
        self._rfd = readable.fileno()
        self._wfd = writable.fileno()
        os.set_blocking(self._rfd, False)
        os.set_blocking(self._wfd, False)
        self.deadline: float | None = None

    def _remaining(self) -> float | None:
        if self.deadline is None:
            return None
        remaining = self.deadline - time.monotonic()
        if remaining <= 0:
            raise SidecarTimeout("sidecar did not respond before the deadline")
        return remaining

    def read(self, n: int) -> bytes:
        ready, _, _ = select.select([self._rfd], [], [], self._remaining())
        if not ready:
            raise SidecarTimeout("sidecar did not respond before the deadline")
        return os.read(self._rfd, n)  # b"" means EOF; adlp reports it

    def write(self, data: bytes) -> int:
        view = memoryview(data)
        while view:
            _, ready, _ = select.select([], [self._wfd], [], self._remaining())
            if not ready:
                raise SidecarTimeout("sidecar stopped accepting input before the deadline")
            view = view[os.write(self._wfd, view) :]
        return len(data)

    def flush(self) -> None:
        pass


class SidecarSession:
    """A live sidecar hosting one model directory.

    ``launch_spec`` is the executable plus arguments; the model directory
    path is appended as the final argument. The sidecar must speak ADLP on
    stdio and log on stderr.
    """

    def __init__(
        self,
        launch_spec: Sequence[str],
        model_dir: str | Path,
        *,
        expected: ModelMetadata | None = None,
        timeout_s: float = DEFAULT_TIMEOUT_S,
    ):
        self.timeout_s = timeout_s
        self._lock = threading.Lock()
        self._dead = False
        argv = [*launch_spec, str(model_dir)]
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=None,  # sidecar logs pass through to our stderr
                bufsize=0,
            )
        except OSError as e:
            raise SidecarError(f"cannot launch sidecar {argv[0]!r}: {e}") from e
        self._pipe = _DeadlinePipe(self._proc.stdout, self._proc.stdin)

        try:
            self._pipe.deadline = time.monotonic() + self.timeout_s
            adlp.write_frame(self._pipe, {"op": "hello"})
            header, _ = self._read_reply()
        except (SidecarError, adlp.ProtocolError, OSError) as e:
            self._kill()
            raise SidecarError(f"handshake failed: {e}") from e
        if header.get("op") != "hello":
            self._kill()
            raise SidecarError(f"handshake failed: expected hello, got {header.get('op')!r}")
        try:
            self.effect_type = EffectType(header.get("effect_type"))
        except ValueError:
            self._kill()
            raise SidecarError(
                f"handshake reported unknown effect_type {header.get('effect_type')!r}"
            ) from None
        self.sample_rate = header.get("sample_rate")
        if not isinstance(self.sample_rate, int) or self.sample_rate <= 0:
            self._kill()
            raise SidecarError(f"handshake reported bad sample_rate {self.sample_rate!r}")

        if expected is not None:
            if self.effect_type is not expected.effect_type or self.sample_rate != expected.sample_rate:
                self._kill()
                raise SidecarError(
                    "handshake mismatch: sidecar reports "
                    f"({self.effect_type.value}, {self.sample_rate} Hz) but metadata declares "
                    f"({expected.effect_type.value}, {expected.sample_rate} Hz)"
                )

    def _read_reply(self) -> tuple[dict, bytes]:
        self._pipe.deadline = time.monotonic() + self.timeout_s
        try:
            return adlp.read_frame(self._pipe)
        finally:
            self._pipe.deadline = None

    def forward(self, samples: np.ndarray):
        """Run one forward pass; returns a float32 array or AnalysisOutput."""
        if self._dead:
            raise SessionClosed("session is no longer usable")
        if not self._lock.acquire(blocking=False):
            raise RuntimeError("a forward is already in flight on this session")
        try:
            samples = np.asarray(samples, dtype=np.float32)
            if samples.ndim != 2 or samples.shape[1] < 1:
                raise ValueError(f"forward expects (channels, frames) with frames >= 1, got {samples.shape}")
            try:
                self._pipe.deadline = time.monotonic() + self.timeout_s
                adlp.write_frame(
                    self._pipe, adlp.audio_header("forward", samples), adlp.audio_payload(samples)
                )
                header, payload = self._read_reply()
            except (adlp.ProtocolError, SidecarTimeout) as e:
                self._mark_dead()
                raise SidecarError(f"forward failed: {e}") from e
            except OSError as e:
                self._mark_dead()
                raise SidecarError(f"sidecar pipe broke: {e}") from e

            op = header.get("op")
            if op == "error":
                raise ForwardError(
                    str(header.get("code", "model_error")), str(header.get("message", ""))
                )
            if op != "result":
                self._mark_dead()
                raise SidecarError(f"expected result frame, got op {op!r}")
            try:
                if header.get("kind") == "labels":
                    return adlp.labels_from_frame(header)
                return adlp.audio_from_frame(header, payload)
            except adlp.ProtocolError as e:
                self._mark_dead()
                raise SidecarError(f"malformed result frame: {e}") from e
        finally:
            self._lock.release()

    def _mark_dead(self):
        self._dead = True
        self._kill()

    def _kill(self):
        try:
            self._proc.kill()
            self._proc.wait(timeout=_CLOSE_GRACE_S)
        except (OSError, subprocess.TimeoutExpired):  # pragma: no cover
            pass

    def close(self):
        """Terminate the sidecar: close stdin (EOF), then kill if it lingers."""
        self._dead = True
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=_CLOSE_GRACE_S)
            except subprocess.TimeoutExpired:
                log.warning("sidecar ignored EOF; killing pid %d", self._proc.pid)
                self._kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
