"""Audio primitives: WAV codec, sample-rate conversion, mixdown, label tracks.

The universal audio value is :class:`Waveform` — float32 samples shaped
(channels, frames) in the nominal range [-1, 1] plus a sample rate. WAV
support covers RIFF/WAVE with PCM16, PCM24 and float32 payloads, 1-32
channels. Label tracks serialize to TAB-separated text with 6-decimal
second timestamps, one entry per line.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np
from scipy.signal import firwin, resample_poly

from .errors import WavehostError

MAX_CHANNELS = 32

# Resampler design: polyphase windowed-sinc, Kaiser window. 64 taps per
# phase minimum; cutoff at 0.9 of the lower Nyquist.
_TAPS_PER_PHASE = 64
_KAISER_BETA = 8.6
_CUTOFF_FRACTION = 0.9


class WavCodecError(WavehostError):
    """Malformed, unsupported, or unencodable WAV content."""


class LabelFormatError(WavehostError):
    """Label-track text that does not follow the start/end/label line format."""


@dataclass(frozen=True, eq=False)
class Waveform:
    """Immutable multichannel audio buffer.

    samples: float32 array, shape (channels, frames), all values finite.
    sample_rate: Hz, positive integer.
    """

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float32)
        if samples.ndim != 2:
            raise ValueError(f"samples must be 2-D (channels, frames), got shape {samples.shape}")
        channels, frames = samples.shape
        if channels < 1:
            raise ValueError("waveform needs at least one channel")
        if frames < 1:
            raise ValueError("waveform needs at least one frame")
        if not np.isfinite(samples).all():
            raise ValueError("waveform samples must be finite (no NaN/Inf)")
        rate = self.sample_rate
        if isinstance(rate, bool) or not isinstance(rate, (int, np.integer)) or rate <= 0:
            raise ValueError(f"sample_rate must be a positive integer, got {rate!r}")
        samples = np.ascontiguousarray(samples)
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(rate))

    @property
    def channels(self) -> int:
        return self.samples.shape[0]

    @property
    def frames(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.frames / self.sample_rate

    def __eq__(self, other) -> bool:
        if not isinstance(other, Waveform):
            return NotImplemented
        return self.sample_rate == other.sample_rate and np.array_equal(
            self.samples, other.samples
        )

    def __repr__(self) -> str:
        return f"Waveform(channels={self.channels}, frames={self.frames}, sample_rate={self.sample_rate})"


@dataclass(frozen=True)
class LabelEntry:
    """One labeled span: [start_s, end_s] in seconds plus the label text."""

    start_s: float
    end_s: float
    label: str

    def __post_init__(self):
        start, end = float(self.start_s), float(self.end_s)
        if not (math.isfinite(start) and math.isfinite(end)):
            raise ValueError("label times must be finite")
        if start < 0:
            raise ValueError(f"label start must be >= 0, got {start}")
        if start > end:
            raise ValueError(f"label start {start} is after end {end}")
        object.__setattr__(self, "start_s", start)
        object.__setattr__(self, "end_s", end)


@dataclass(frozen=True)
class LabelTrack:
    """Ordered list of label entries, sorted by (start, end, label)."""

    entries: tuple[LabelEntry, ...] = ()

    def __post_init__(self):
        ordered = tuple(
            sorted(self.entries, key=lambda e: (e.start_s, e.end_s, e.label))
        )
        object.__setattr__(self, "entries", ordered)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


# --- WAV codec -------------------------------------------------------------

_FMT_PCM = 1
_FMT_FLOAT = 3
_FMT_EXTENSIBLE = 0xFFFE


def decode_wav(data: bytes) -> Waveform:
    """Decode RIFF/WAVE bytes (PCM16, PCM24 or float32) into a Waveform.

    Integer PCM is scaled to [-1, 1] by dividing by 2^(bits-1).
    """
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise WavCodecError("not a RIFF/WAVE container")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body = pos + 8
        if chunk_id == b"fmt ":
            if chunk_size < 16 or body + 16 > len(data):
                raise WavCodecError("malformed fmt chunk")
            fmt = struct.unpack_from("<HHIIHH", data, body)
            if fmt[0] == _FMT_EXTENSIBLE:
                # format code lives in the first 2 bytes of the SubFormat GUID
                if chunk_size < 40 or body + 26 > len(data):
                    raise WavCodecError("malformed extensible fmt chunk")
                (sub_format,) = struct.unpack_from("<H", data, body + 24)
                fmt = (sub_format,) + fmt[1:]
        elif chunk_id == b"data":
            if body + chunk_size > len(data):
                raise WavCodecError("truncated data chunk")
            payload = data[body : body + chunk_size]
        pos = body + chunk_size + (chunk_size & 1)  # chunks are word-aligned

    if fmt is None:
        raise WavCodecError("missing fmt chunk")
    if payload is None:
        raise WavCodecError("missing data chunk")

    audio_format, channels, sample_rate, _byte_rate, block_align, bits = fmt
    if audio_format not in (_FMT_PCM, _FMT_FLOAT):
        raise WavCodecError(f"unsupported codec tag {audio_format} (compressed audio?)")
    if channels < 1 or channels > MAX_CHANNELS:
        raise WavCodecError(f"unsupported channel count {channels}")
    if sample_rate <= 0:
        raise WavCodecError(f"invalid sample rate {sample_rate}")
    if audio_format == _FMT_PCM and bits not in (16, 24):
        raise WavCodecError(f"unsupported PCM bit depth {bits}")
    if audio_format == _FMT_FLOAT and bits != 32:
        raise WavCodecError(f"unsupported float bit depth {bits}")

    bytes_per_sample = bits // 8
    if block_align != bytes_per_sample * channels:
        raise WavCodecError(
            f"block alignment {block_align} does not match {channels} x {bytes_per_sample} bytes"
        )
    if len(payload) % (bytes_per_sample * channels):
        raise WavCodecError("truncated data chunk: partial frame")
    frames = len(payload) // (bytes_per_sample * channels)
    if frames == 0:
        raise WavCodecError("data chunk holds zero frames")

    if audio_format == _FMT_FLOAT:
        flat = np.frombuffer(payload, dtype="<f4").astype(np.float32)
        if not np.isfinite(flat).all():
            raise WavCodecError("float WAV contains non-finite samples")
    elif bits == 16:
        flat = np.frombuffer(payload, dtype="<i2").astype(np.float32) / 32768.0
    else:  # PCM24
        raw = np.frombuffer(payload, dtype=np.uint8).reshape(-1, 3).astype(np.int32)
        ints = raw[:, 0] | (raw[:, 1] << 8) | (raw[:, 2] << 16)
        ints = np.where(ints >= 1 << 23, ints - (1 << 24), ints)
        flat = (ints / float(1 << 23)).astype(np.float32)

    samples = flat.reshape(frames, channels).T
    return Waveform(samples, int(sample_rate))


def encode_wav(w: Waveform, depth: str = "float32") -> bytes:
    """Encode a Waveform to RIFF/WAVE bytes at the given depth.

    depth "float32" is lossless (bit-exact round trip); "pcm16" clamps to
    [-1, 1] and rounds half away from zero.
    """
    if depth not in ("pcm16", "float32"):
        raise ValueError(f"depth must be 'pcm16' or 'float32', got {depth!r}")
    if w.channels > MAX_CHANNELS:
        raise WavCodecError(f"cannot encode {w.channels} channels (max {MAX_CHANNELS})")

    interleaved = np.ascontiguousarray(w.samples.T)
    if depth == "pcm16":
        scaled = np.clip(interleaved.astype(np.float64), -1.0, 1.0) * 32768.0
        rounded = np.copysign(np.floor(np.abs(scaled) + 0.5), scaled)
        frames_bytes = np.clip(rounded, -32768, 32767).astype("<i2").tobytes()
        bits, format_tag = 16, _FMT_PCM
    else:
        frames_bytes = interleaved.astype("<f4", copy=False).tobytes()
        bits, format_tag = 32, _FMT_FLOAT

    bytes_per_frame = w.channels * bits // 8
    fact = b""
    if format_tag == _FMT_FLOAT:
        fact = b"fact" + struct.pack("<II", 4, w.frames)
    riff_size = 4 + (8 + 16) + len(fact) + 8 + len(frames_bytes)
    if riff_size > 0xFFFFFFFF - 8:
        raise WavCodecError("audio too long for a 32-bit RIFF container")

    header = b"".join(
        [
            b"RIFF",
            struct.pack("<I", riff_size),
            b"WAVE",
            b"fmt ",
            struct.pack(
                "<IHHIIHH",
                16,
                format_tag,
                w.channels,
                w.sample_rate,
                w.sample_rate * bytes_per_frame,
                bytes_per_frame,
                bits,
            ),
            fact,
            b"data",
            struct.pack("<I", len(frames_bytes)),
        ]
    )
    return header + frames_bytes


# --- Rate conversion and mixdown --------------------------------------------


def resample(w: Waveform, target_rate: int) -> Waveform:
    """Band-limited sample-rate conversion; identity when rates already match.

    Output frame count is ceil(frames * target / source), channels converted
    independently.
    """
    if isinstance(target_rate, bool) or not isinstance(target_rate, (int, np.integer)):
        raise ValueError(f"target_rate must be an integer, got {target_rate!r}")
    if target_rate <= 0:
        raise ValueError(f"target_rate must be positive, got {target_rate}")
    if int(target_rate) == w.sample_rate:
        return w

    g = math.gcd(w.sample_rate, int(target_rate))
    up = int(target_rate) // g
    down = w.sample_rate // g
    taps = _TAPS_PER_PHASE * max(up, down) + 1
    cutoff = _CUTOFF_FRACTION / max(up, down)  # relative to the upsampled Nyquist
    h = firwin(taps, cutoff, window=("kaiser", _KAISER_BETA))
    out = resample_poly(w.samples.astype(np.float64), up, down, axis=1, window=h)
    return Waveform(out.astype(np.float32), int(target_rate))


def mixdown(w: Waveform) -> Waveform:
    """Collapse to mono by arithmetic channel mean; mono input is returned as-is."""
    if w.channels == 1:
        return w
    mono = w.samples.mean(axis=0, dtype=np.float64).astype(np.float32)
    return Waveform(mono[np.newaxis, :], w.sample_rate)


# --- Label track text format -------------------------------------------------


def render_labels(track: LabelTrack) -> str:
    """Serialize a label track: one "start<TAB>end<TAB>label" line per entry.

    Times carry exactly 6 decimal places; lines end with LF.
    """
    return "".join(
        f"{e.start_s:.6f}\t{e.end_s:.6f}\t{e.label}\n" for e in track.entries
    )


def parse_labels(text: str) -> LabelTrack:
    """Parse label-track text produced by :func:`render_labels`."""
    lines = text.split("\n")  # LF is the only line terminator; labels may hold CR etc.
    if lines and lines[-1] == "":
        lines.pop()
    entries = []
    for lineno, line in enumerate(lines, start=1):
        parts = line.split("\t", 2)
        if len(parts) != 3:
            raise LabelFormatError(
                f"line {lineno}: expected start<TAB>end<TAB>label, got {line!r}"
            )
        try:
            start, end = float(parts[0]), float(parts[1])
        except ValueError:
            raise LabelFormatError(f"line {lineno}: non-numeric time") from None
        if not (math.isfinite(start) and math.isfinite(end)):
            raise LabelFormatError(f"line {lineno}: non-finite time")
        if start < 0:
            raise LabelFormatError(f"line {lineno}: negative start time")
        if start > end:
            raise LabelFormatError(f"line {lineno}: start {start} is after end {end}")
        entries.append(LabelEntry(start, end, parts[2]))
    return LabelTrack(tuple(entries))
