"""ADLP framing: the length-prefixed IPC protocol between host and sidecar.

Every message is::

    4 bytes  ASCII magic "ADLP"
    4 bytes  little-endian unsigned header length H
    H bytes  UTF-8 JSON header
    N bytes  raw payload, N taken from the header's "payload_bytes" (default 0)

Header field ``op`` is one of hello, forward, result, error. Audio payloads
describe themselves with ``shape`` [channels, frames], ``dtype`` "f32le" and
``layout`` "channel_major"; analyzer results carry ``class_indexes`` and
``timestamps`` inside the header with no binary payload.

The reader never trusts the peer: every length is bounded, every read is
exact, and any deviation raises :class:`ProtocolError` with a stable code.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from ..contract import AnalysisOutput
from ..errors import WavehostError

MAGIC = b"ADLP"
OPS = ("hello", "forward", "result", "error")

MAX_HEADER_BYTES = 16 * 1024 * 1024
MAX_PAYLOAD_BYTES = 2 * 1024 * 1024 * 1024  # 2 GiB hard cap

AUDIO_DTYPE = "f32le"
AUDIO_LAYOUT = "channel_major"


class ProtocolError(WavehostError):
    """A frame that violates ADLP; ``code`` is a stable machine token."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


def _read_exact(stream, n: int, what: str) -> bytes:
    """Read exactly n bytes or raise; a clean EOF before any byte is 'eof'."""
    chunks = []
    got = 0
    while got < n:
        chunk = stream.read(n - got)
        if not chunk:
            if got == 0 and what == "magic":
                raise ProtocolError("eof", "stream closed at frame boundary")
            raise ProtocolError("truncated", f"stream ended inside {what} ({got}/{n} bytes)")
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks)


def read_frame(stream) -> tuple[dict, bytes]:
    """Read one frame; returns (header, payload). Raises ProtocolError."""
    magic = _read_exact(stream, 4, "magic")
    if magic != MAGIC:
        raise ProtocolError("bad_magic", f"expected {MAGIC!r}, got {magic!r}")
    (header_len,) = struct.unpack("<I", _read_exact(stream, 4, "header length"))
    if header_len == 0:
        raise ProtocolError("bad_header", "zero-length header")
    if header_len > MAX_HEADER_BYTES:
        raise ProtocolError("header_too_large", f"{header_len} bytes")
    header_bytes = _read_exact(stream, header_len, "header")
    try:
        header = json.loads(header_bytes.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ProtocolError("bad_header", f"header is not UTF-8 JSON: {e}") from None
    if not isinstance(header, dict):
        raise ProtocolError("bad_header", "header must be a JSON object")
    op = header.get("op")
    if op not in OPS:
        raise ProtocolError("bad_header", f"unknown op {op!r}")

    payload_bytes = header.get("payload_bytes", 0)
    if isinstance(payload_bytes, bool) or not isinstance(payload_bytes, int) or payload_bytes < 0:
        raise ProtocolError("bad_header", f"invalid payload_bytes {payload_bytes!r}")
    if payload_bytes > MAX_PAYLOAD_BYTES:
        raise ProtocolError("payload_too_large", f"{payload_bytes} bytes")
    payload = _read_exact(stream, payload_bytes, "payload") if payload_bytes else b""
    return header, payload


def write_frame(stream, header: dict, payload: bytes = b"") -> None:
    """Write one frame; fills in payload_bytes from the payload."""
    header = dict(header)
    if payload:
        header["payload_bytes"] = len(payload)
    header_bytes = json.dumps(header, separators=(",", ":")).encode("utf-8")
    stream.write(MAGIC + struct.pack("<I", len(header_bytes)) + header_bytes + payload)
    stream.flush()


# --- audio and label payload helpers ------------------------------------------


def audio_header(op: str, samples: np.ndarray) -> dict:
    channels, frames = samples.shape
    return {
        "op": op,
        "kind": "audio",
        "shape": [int(channels), int(frames)],
        "dtype": AUDIO_DTYPE,
        "layout": AUDIO_LAYOUT,
    }


def audio_payload(samples: np.ndarray) -> bytes:
    return np.ascontiguousarray(samples, dtype="<f4").tobytes()


def audio_from_frame(header: dict, payload: bytes) -> np.ndarray:
    """Decode an audio frame's payload into a float32 (channels, frames) array."""
    shape = header.get("shape")
    if (
        not isinstance(shape, list)
        or len(shape) != 2
        or not all(isinstance(v, int) and not isinstance(v, bool) and v >= 0 for v in shape)
    ):
        raise ProtocolError("bad_header", f"invalid audio shape {shape!r}")
    if header.get("dtype") != AUDIO_DTYPE:
        raise ProtocolError("bad_header", f"unsupported dtype {header.get('dtype')!r}")
    if header.get("layout") != AUDIO_LAYOUT:
        raise ProtocolError("bad_header", f"unsupported layout {header.get('layout')!r}")
    channels, frames = shape
    expected = channels * frames * 4
    if len(payload) != expected:
        raise ProtocolError(
            "payload_mismatch", f"shape {shape} needs {expected} bytes, got {len(payload)}"
        )
    return np.frombuffer(payload, dtype="<f4").reshape(channels, frames).astype(np.float32)


def labels_header(op: str, output: AnalysisOutput) -> dict:
    return {
        "op": op,
        "kind": "labels",
        "class_indexes": [int(i) for i in output.class_indexes],
        "timestamps": [[float(s), float(e)] for s, e in output.timestamps],
    }


def labels_from_frame(header: dict) -> AnalysisOutput:
    """Decode an analyzer result header into an AnalysisOutput."""
    indexes = header.get("class_indexes")
    stamps = header.get("timestamps")
    if not isinstance(indexes, list) or not all(
        isinstance(i, int) and not isinstance(i, bool) for i in indexes
    ):
        raise ProtocolError("bad_header", "class_indexes must be a list of integers")
    if not isinstance(stamps, list) or not all(
        isinstance(row, list)
        and len(row) == 2
        and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in row)
        for row in stamps
    ):
        raise ProtocolError("bad_header", "timestamps must be a list of [start, stop] pairs")
    return AnalysisOutput(
        np.asarray(indexes, dtype=np.int64),
        np.asarray(stamps, dtype=np.float64).reshape(len(stamps), 2),
    )
