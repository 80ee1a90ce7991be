"""Model metadata schema and the two forward-pass output contracts.

A model is either an effect (waveform in, one or more waveforms out) or an
analyzer (waveform in, labeled time spans out). Contributors declare the
model's type, sample rate, labels and descriptions in a ``metadata.json``
document; the host validates that document and every forward-pass output
against the contracts here before anything reaches a track.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import WavehostError

MAX_OUTPUT_TRACKS = 16
DOMAINS = ("speech", "music", "environmental", "other")
SHORT_DESCRIPTION_MAX = 200

# Tolerance for analyzer stop times overshooting the selection duration;
# frame-hop arithmetic commonly overshoots by under one hop.
STOP_OVERSHOOT_TOLERANCE_S = 1e-3

METADATA_FILE_NAME = "metadata.json"


class EffectType(Enum):
    WAVEFORM_TO_WAVEFORM = "waveform-to-waveform"
    WAVEFORM_TO_LABELS = "waveform-to-labels"


class MetadataError(WavehostError):
    """Invalid model metadata; ``path`` names the offending key."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class ContractViolation(WavehostError):
    """A forward-pass output that breaks the model I/O contract."""

    def __init__(self, code: str, message: str, row: int | None = None):
        detail = f"{code}: {message}" if row is None else f"{code} (row {row}): {message}"
        super().__init__(detail)
        self.code = code
        self.row = row


@dataclass(frozen=True)
class ModelMetadata:
    """Contributor-declared model description.

    ``labels`` must be non-empty exactly when the model is an analyzer.
    Unknown document keys are preserved in ``extra`` but never interpreted.
    """

    name: str
    effect_type: EffectType
    sample_rate: int
    short_description: str
    long_description: str = ""
    domains: tuple[str, ...] = ()
    tags: tuple[str, ...] = ()
    labels: tuple[str, ...] = ()
    multichannel: bool = False
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "domains", tuple(self.domains))
        object.__setattr__(self, "tags", tuple(self.tags))
        object.__setattr__(self, "labels", tuple(self.labels))
        if isinstance(self.sample_rate, bool) or not isinstance(
            self.sample_rate, (int, np.integer)
        ):
            raise MetadataError("sample_rate", f"must be an integer, got {self.sample_rate!r}")
        if self.sample_rate <= 0:
            raise MetadataError("sample_rate", f"must be positive, got {self.sample_rate}")
        object.__setattr__(self, "sample_rate", int(self.sample_rate))
        if not isinstance(self.effect_type, EffectType):
            raise MetadataError("effect_type", f"unknown effect type {self.effect_type!r}")
        if not self.short_description:
            raise MetadataError("short_description", "must be non-empty")
        if len(self.short_description) > SHORT_DESCRIPTION_MAX:
            raise MetadataError(
                "short_description",
                f"{len(self.short_description)} chars exceeds the {SHORT_DESCRIPTION_MAX}-char limit",
            )
        for i, domain in enumerate(self.domains):
            if domain not in DOMAINS:
                raise MetadataError(
                    f"domains[{i}]", f"{domain!r} is not one of {', '.join(DOMAINS)}"
                )
        if len(set(self.domains)) != len(self.domains):
            raise MetadataError("domains", "contains duplicates")
        if len(set(self.tags)) != len(self.tags):
            raise MetadataError("tags", "contains duplicates")
        is_analyzer = self.effect_type is EffectType.WAVEFORM_TO_LABELS
        if is_analyzer and not self.labels:
            raise MetadataError("labels", "required and non-empty for waveform-to-labels models")
        if not is_analyzer and self.labels:
            raise MetadataError("labels", "only waveform-to-labels models declare labels")


@dataclass(frozen=True, eq=False)
class AnalysisOutput:
    """Analyzer result: per-timestep class indexes plus (start, stop) seconds.

    The container is deliberately permissive about shapes so that invalid
    model outputs can be represented; :func:`validate_analysis_output`
    enforces the contract.
    """

    class_indexes: np.ndarray
    timestamps: np.ndarray

    def __post_init__(self):
        indexes = np.atleast_1d(np.asarray(self.class_indexes, dtype=np.int64))
        stamps = np.asarray(self.timestamps, dtype=np.float64)
        if stamps.size == 0 and stamps.ndim <= 2:
            stamps = stamps.reshape(0, 2)
        indexes.setflags(write=False)
        stamps.setflags(write=False)
        object.__setattr__(self, "class_indexes", indexes)
        object.__setattr__(self, "timestamps", stamps)

    def __eq__(self, other) -> bool:
        if not isinstance(other, AnalysisOutput):
            return NotImplemented
        return np.array_equal(self.class_indexes, other.class_indexes) and np.array_equal(
            self.timestamps, other.timestamps
        )

    def __len__(self) -> int:
        return int(self.class_indexes.shape[0])


# --- metadata.json parsing ----------------------------------------------------


def _expect_str(value, path: str) -> str:
    if not isinstance(value, str):
        raise MetadataError(path, f"expected a string, got {type(value).__name__}")
    return value


def _expect_str_list(value, path: str) -> tuple[str, ...]:
    if not isinstance(value, list):
        raise MetadataError(path, f"expected a list, got {type(value).__name__}")
    for i, item in enumerate(value):
        if not isinstance(item, str):
            raise MetadataError(f"{path}[{i}]", f"expected a string, got {type(item).__name__}")
    return tuple(value)


_KNOWN_KEYS = {
    "name",
    "effect_type",
    "sample_rate",
    "short_description",
    "long_description",
    "domains",
    "tags",
    "labels",
    "multichannel",
}


def parse_metadata(text: str) -> ModelMetadata:
    """Parse and validate a ``metadata.json`` document.

    Unknown keys are preserved (in ``extra``) but ignored; ``multichannel``
    defaults to false. Raises :class:`MetadataError` naming the offending
    key path on any violation.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise MetadataError("$", f"not well-formed JSON: {e}") from None
    if not isinstance(doc, dict):
        raise MetadataError("$", f"expected a JSON object, got {type(doc).__name__}")

    for key in ("name", "effect_type", "sample_rate", "short_description"):
        if key not in doc:
            raise MetadataError(key, "required key is missing")

    raw_type = _expect_str(doc["effect_type"], "effect_type")
    try:
        effect_type = EffectType(raw_type)
    except ValueError:
        allowed = ", ".join(t.value for t in EffectType)
        raise MetadataError("effect_type", f"{raw_type!r} is not one of: {allowed}") from None

    sample_rate = doc["sample_rate"]
    if isinstance(sample_rate, bool) or not isinstance(sample_rate, int):
        raise MetadataError("sample_rate", f"expected an integer, got {sample_rate!r}")

    multichannel = doc.get("multichannel", False)
    if not isinstance(multichannel, bool):
        raise MetadataError("multichannel", f"expected a boolean, got {multichannel!r}")

    return ModelMetadata(
        name=_expect_str(doc["name"], "name"),
        effect_type=effect_type,
        sample_rate=sample_rate,
        short_description=_expect_str(doc["short_description"], "short_description"),
        long_description=_expect_str(doc.get("long_description", ""), "long_description"),
        domains=_expect_str_list(doc.get("domains", []), "domains"),
        tags=_expect_str_list(doc.get("tags", []), "tags"),
        labels=_expect_str_list(doc.get("labels", []), "labels"),
        multichannel=multichannel,
        extra={k: v for k, v in doc.items() if k not in _KNOWN_KEYS},
    )


def metadata_to_document(meta: ModelMetadata) -> dict:
    """Plain-JSON view of metadata (known keys only), for API responses."""
    doc = {
        "name": meta.name,
        "effect_type": meta.effect_type.value,
        "sample_rate": meta.sample_rate,
        "short_description": meta.short_description,
        "long_description": meta.long_description,
        "domains": list(meta.domains),
        "tags": list(meta.tags),
        "multichannel": meta.multichannel,
    }
    if meta.labels:
        doc["labels"] = list(meta.labels)
    return doc


# --- forward-pass output contracts ---------------------------------------------


def validate_w2w_output(in_channels: int, in_frames: int, out) -> np.ndarray:
    """Validate a waveform-to-waveform output and return it as float32.

    Accepts a rank-2 array with 1..MAX_OUTPUT_TRACKS rows, at least one
    column, and only finite values. The frame count may differ from the
    input's (generative models may change length). Raises
    :class:`ContractViolation` with a distinct code per rule.
    """
    arr = np.asarray(out)
    if arr.ndim != 2:
        raise ContractViolation(
            "bad_output_rank",
            f"expected rank 2 (num_output_channels, num_samples), got rank {arr.ndim} "
            f"for input ({in_channels}, {in_frames})",
        )
    rows, cols = arr.shape
    if rows < 1 or cols < 1:
        raise ContractViolation("empty_output", f"output shape {arr.shape} has a zero dimension")
    if rows > MAX_OUTPUT_TRACKS:
        raise ContractViolation(
            "too_many_tracks", f"{rows} output tracks exceeds the limit of {MAX_OUTPUT_TRACKS}"
        )
    if not np.issubdtype(arr.dtype, np.floating) and not np.issubdtype(arr.dtype, np.integer):
        raise ContractViolation("bad_dtype", f"output dtype {arr.dtype} is not numeric")
    if not np.isfinite(arr).all():
        raise ContractViolation("non_finite", "output contains NaN or Inf samples")
    return arr.astype(np.float32)


def validate_analysis_output(
    meta: ModelMetadata, out: AnalysisOutput, duration_s: float
) -> tuple[AnalysisOutput, list[str]]:
    """Validate and normalize an analyzer output against its metadata.

    Returns the output sorted by (start, stop, index) plus any clamp
    warnings. Spans whose stop overshoots ``duration_s`` by more than 1 ms
    are clamped to the duration (warning, not error). Everything else —
    length mismatch, out-of-range index, negative start, start after stop —
    raises :class:`ContractViolation` carrying the offending row.
    """
    if meta.effect_type is not EffectType.WAVEFORM_TO_LABELS:
        raise ValueError("validate_analysis_output requires waveform-to-labels metadata")

    indexes = out.class_indexes
    stamps = out.timestamps
    if indexes.ndim != 1:
        raise ContractViolation(
            "bad_output_rank", f"class indexes must be rank 1, got rank {indexes.ndim}"
        )
    if stamps.ndim != 2 or (stamps.shape[0] > 0 and stamps.shape[1] != 2):
        raise ContractViolation(
            "bad_output_rank",
            f"timestamps must have shape (num_timesteps, 2), got {stamps.shape}",
        )
    if indexes.shape[0] != stamps.shape[0]:
        raise ContractViolation(
            "length_mismatch",
            f"{indexes.shape[0]} class indexes vs {stamps.shape[0]} timestamp rows",
        )

    n = indexes.shape[0]
    if n == 0:
        empty = AnalysisOutput(np.zeros(0, dtype=np.int64), np.zeros((0, 2)))
        return empty, []

    if not np.isfinite(stamps).all():
        raise ContractViolation("non_finite", "timestamps contain NaN or Inf")

    n_labels = len(meta.labels)
    warnings: list[str] = []
    stamps = np.array(stamps, dtype=np.float64)  # writable copy for clamping
    for i in range(n):
        idx = int(indexes[i])
        start, stop = float(stamps[i, 0]), float(stamps[i, 1])
        if idx < 0 or idx >= n_labels:
            raise ContractViolation(
                "index_range", f"class index {idx} outside 0..{n_labels - 1}", row=i
            )
        if start < 0:
            raise ContractViolation("negative_start", f"start {start} is negative", row=i)
        if start > stop:
            raise ContractViolation("start_after_stop", f"start {start} > stop {stop}", row=i)
        if stop > duration_s + STOP_OVERSHOOT_TOLERANCE_S:
            warnings.append(f"row {i}: stop {stop:.6f}s clamped to duration {duration_s:.6f}s")
            stamps[i, 1] = duration_s
            if start > duration_s:
                stamps[i, 0] = duration_s

    order = np.lexsort((indexes, stamps[:, 1], stamps[:, 0]))
    normalized = AnalysisOutput(indexes[order], stamps[order])
    return normalized, warnings
