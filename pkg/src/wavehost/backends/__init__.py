"""Uniform forward-pass interface over builtin models and sidecar processes.

A backend is either :class:`BuiltinBackend` (in-process, deterministic,
used for tests and demos) or :class:`SidecarBackend` (an external process
hosting a serialized model, reached over the ADLP stdio protocol).
:func:`forward` runs one pass and returns an :class:`AudioResponse` or a
:class:`LabelsResponse`; contract validation of the response belongs to
the caller (the effect engine).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..contract import AnalysisOutput, EffectType, ModelMetadata
from .builtins import (
    BUILTIN_KINDS,
    BUILTIN_NAMESPACE,
    builtin_metadata,
    is_builtin_ref,
    parse_builtin_ref,
    run_builtin,
)
from .sidecar import DEFAULT_TIMEOUT_S, ForwardError, SessionClosed, SidecarError, SidecarSession, SidecarTimeout


@dataclass(frozen=True)
class BuiltinBackend:
    kind: str


@dataclass(frozen=True)
class SidecarBackend:
    launch_spec: tuple[str, ...]
    model_dir: Path


BackendRef = BuiltinBackend | SidecarBackend


@dataclass(frozen=True)
class AudioResponse:
    samples: np.ndarray  # (num_output_channels, num_samples) float32


@dataclass(frozen=True)
class LabelsResponse:
    output: AnalysisOutput


ForwardResponse = AudioResponse | LabelsResponse


def forward(
    backend: BackendRef,
    meta: ModelMetadata,
    samples: np.ndarray,
    *,
    timeout_s: float = DEFAULT_TIMEOUT_S,
) -> ForwardResponse:
    """One forward pass of ``samples`` (channels x frames at meta.sample_rate)."""
    samples = np.asarray(samples, dtype=np.float32)
    if samples.ndim != 2 or samples.shape[1] < 1:
        raise ValueError(f"forward expects (channels, frames) with frames >= 1, got {samples.shape}")

    if isinstance(backend, BuiltinBackend):
        result = run_builtin(backend.kind, samples, meta.sample_rate)
        if isinstance(result, AnalysisOutput):
            return LabelsResponse(result)
        return AudioResponse(result)

    with SidecarSession(
        backend.launch_spec, backend.model_dir, expected=meta, timeout_s=timeout_s
    ) as session:
        result = session.forward(samples)
    if isinstance(result, AnalysisOutput):
        return LabelsResponse(result)
    return AudioResponse(result)


__all__ = [
    "AudioResponse",
    "BackendRef",
    "BuiltinBackend",
    "BUILTIN_KINDS",
    "BUILTIN_NAMESPACE",
    "DEFAULT_TIMEOUT_S",
    "ForwardError",
    "ForwardResponse",
    "LabelsResponse",
    "SessionClosed",
    "SidecarBackend",
    "SidecarError",
    "SidecarSession",
    "SidecarTimeout",
    "builtin_metadata",
    "forward",
    "is_builtin_ref",
    "parse_builtin_ref",
    "run_builtin",
]
