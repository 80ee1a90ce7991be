"""ADLP framing, server side.

Wire format: 4-byte ASCII magic "ADLP", 4-byte little-endian unsigned
header length, that many bytes of UTF-8 JSON header, then exactly
``payload_bytes`` (a header field, default 0) of raw payload. Audio
payloads are float32 little-endian, channel-major, with ``shape``
[channels, frames] in the header; analyzer results ride entirely in the
header as ``class_indexes`` and ``timestamps``.
"""

from __future__ import annotations

import json
import struct

import numpy as np

MAGIC = b"ADLP"
MAX_HEADER_BYTES = 16 * 1024 * 1024
MAX_PAYLOAD_BYTES = 2 * 1024 * 1024 * 1024


class FrameError(Exception):
    """A frame this server cannot parse; ``code`` is a stable token."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


class StreamClosed(Exception):
    """Clean EOF at a frame boundary: time to exit."""


def _read_exact(stream, n: int, what: str) -> bytes:
    chunks = []
    got = 0
    while got < n:
        chunk = stream.read(n - got)
        if not chunk:
            if got == 0 and what == "magic":
                raise StreamClosed()
            raise FrameError("truncated", f"stream ended inside {what}")
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks)


def read_frame(stream) -> tuple[dict, bytes]:
    magic = _read_exact(stream, 4, "magic")
    if magic != MAGIC:
        raise FrameError("bad_magic", f"expected {MAGIC!r}, got {magic!r}")
    (header_len,) = struct.unpack("<I", _read_exact(stream, 4, "header length"))
    if not 0 < header_len <= MAX_HEADER_BYTES:
        raise FrameError("bad_header", f"header length {header_len} out of range")
    try:
        header = json.loads(_read_exact(stream, header_len, "header").decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FrameError("bad_header", f"header is not UTF-8 JSON: {e}") from None
    if not isinstance(header, dict) or not isinstance(header.get("op"), str):
        raise FrameError("bad_header", "header must be an object with an op")
    payload_bytes = header.get("payload_bytes", 0)
    if not isinstance(payload_bytes, int) or isinstance(payload_bytes, bool) or payload_bytes < 0:
        raise FrameError("bad_header", f"invalid payload_bytes {payload_bytes!r}")
    if payload_bytes > MAX_PAYLOAD_BYTES:
        raise FrameError("payload_too_large", f"{payload_bytes} bytes")
    payload = _read_exact(stream, payload_bytes, "payload") if payload_bytes else b""
    return header, payload


def write_frame(stream, header: dict, payload: bytes = b"") -> None:
    header = dict(header)
    if payload:
        header["payload_bytes"] = len(payload)
    body = json.dumps(header, separators=(",", ":")).encode("utf-8")
    stream.write(MAGIC + struct.pack("<I", len(body)) + body + payload)
    stream.flush()


def decode_audio(header: dict, payload: bytes) -> np.ndarray:
    shape = header.get("shape")
    if (
        not isinstance(shape, list)
        or len(shape) != 2
        or not all(isinstance(v, int) and not isinstance(v, bool) and v >= 0 for v in shape)
    ):
        raise FrameError("bad_header", f"invalid audio shape {shape!r}")
    if header.get("dtype") != "f32le" or header.get("layout") != "channel_major":
        raise FrameError("bad_header", "audio frames must be f32le channel_major")
    channels, frames = shape
    if len(payload) != channels * frames * 4:
        raise FrameError("payload_mismatch", f"payload does not match shape {shape}")
    return np.frombuffer(payload, dtype="<f4").reshape(channels, frames)


def audio_result(samples: np.ndarray) -> tuple[dict, bytes]:
    samples = np.ascontiguousarray(samples, dtype="<f4")
    header = {
        "op": "result",
        "kind": "audio",
        "shape": [int(samples.shape[0]), int(samples.shape[1])],
        "dtype": "f32le",
        "layout": "channel_major",
    }
    return header, samples.tobytes()


def labels_result(class_indexes, timestamps) -> dict:
    return {
        "op": "result",
        "kind": "labels",
        "class_indexes": [int(i) for i in class_indexes],
        "timestamps": [[float(s), float(e)] for s, e in timestamps],
    }


def error_frame(code: str, message: str) -> dict:
    return {"op": "error", "code": code, "message": message}
