"""Deterministic built-in reference models.

Four kinds, addressable as ``builtin/<kind>`` anywhere a repo id is
accepted: passthrough and gain_half (waveform-to-waveform, any channel
count), band_split (mono in, low band + residual out — the source
separation stand-in) and energy_labeler (mono in, silence/sound spans
out). All are pure functions; same input gives bit-identical output.

Builtins are rate-following: their effective metadata adopts the incoming
sample rate, so no resampling happens around them.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import firwin

from ..contract import AnalysisOutput, EffectType, ModelMetadata

BUILTIN_NAMESPACE = "builtin"

SPLIT_CUTOFF_HZ = 1000.0
SPLIT_TAPS = 255
LABELER_HOP = 1024
LABELER_THRESHOLD = 0.01
LABELER_LABELS = ("silence", "sound")


def passthrough(samples: np.ndarray) -> np.ndarray:
    return np.asarray(samples, dtype=np.float32)


def gain_half(samples: np.ndarray) -> np.ndarray:
    return (np.asarray(samples, dtype=np.float32) * np.float32(0.5)).astype(np.float32)


def band_split(samples: np.ndarray, sample_rate: int) -> np.ndarray:
    """Split mono audio into (lowpass, residual) rows that sum back to the input.

    Linear-phase windowed-sinc lowpass at 1 kHz (clamped to 0.45x rate for
    very low rates), reflection-padded at the edges; the residual is the
    sample-wise complement.
    """
    x = np.asarray(samples, dtype=np.float32)
    if x.ndim != 2 or x.shape[0] != 1:
        raise ValueError(f"band_split expects mono (1, frames), got shape {x.shape}")
    mono = x[0].astype(np.float64)
    cutoff = min(SPLIT_CUTOFF_HZ, 0.45 * sample_rate)
    h = firwin(SPLIT_TAPS, cutoff, fs=sample_rate)
    pad = (SPLIT_TAPS - 1) // 2
    padded = np.pad(mono, pad, mode="reflect") if mono.size > 1 else np.repeat(mono, 2 * pad + 1)
    low = np.convolve(padded, h, mode="valid").astype(np.float32)
    residual = (x[0] - low).astype(np.float32)
    return np.stack([low, residual])


def energy_labeler(samples: np.ndarray, sample_rate: int) -> AnalysisOutput:
    """Per-hop RMS thresholding into merged silence/sound spans.

    Non-overlapping hops of LABELER_HOP samples (final partial hop
    included); a hop is "sound" iff its RMS >= LABELER_THRESHOLD; adjacent
    equal-class hops merge into one span. Timestamps are hop boundaries in
    seconds from the start of the input.
    """
    x = np.asarray(samples, dtype=np.float32)
    if x.ndim != 2 or x.shape[0] != 1:
        raise ValueError(f"energy_labeler expects mono (1, frames), got shape {x.shape}")
    mono = x[0].astype(np.float64)
    n = mono.size
    starts = np.arange(0, n, LABELER_HOP)
    sums = np.add.reduceat(mono**2, starts)
    lengths = np.diff(np.append(starts, n))
    rms = np.sqrt(sums / lengths)
    # threshold is inclusive at float32 precision (inputs are float32)
    classes = (rms.astype(np.float32) >= np.float32(LABELER_THRESHOLD)).astype(np.int64)

    change = np.flatnonzero(np.diff(classes)) + 1
    span_starts = np.concatenate(([0], change))
    span_ends = np.concatenate((change, [classes.size]))
    timestamps = np.stack(
        [
            starts[span_starts] / sample_rate,
            np.minimum(span_ends * LABELER_HOP, n) / sample_rate,
        ],
        axis=1,
    )
    return AnalysisOutput(classes[span_starts], timestamps)


BUILTIN_KINDS = ("passthrough", "gain_half", "band_split", "energy_labeler")

_DESCRIPTIONS = {
    "passthrough": "Returns the input unchanged.",
    "gain_half": "Halves every sample.",
    "band_split": "Splits mono audio into a 1 kHz low band and its residual.",
    "energy_labeler": "Labels spans as silence or sound by per-hop RMS.",
}


def is_builtin_ref(ref: str) -> bool:
    return ref.startswith(BUILTIN_NAMESPACE + "/")


def parse_builtin_ref(ref: str) -> str:
    """Return the builtin kind named by a ``builtin/<kind>`` reference."""
    if not is_builtin_ref(ref):
        raise ValueError(f"{ref!r} is not in the {BUILTIN_NAMESPACE}/ namespace")
    kind = ref.split("/", 1)[1]
    if kind not in BUILTIN_KINDS:
        raise ValueError(f"unknown builtin {kind!r}; available: {', '.join(BUILTIN_KINDS)}")
    return kind


def builtin_metadata(kind: str, sample_rate: int) -> ModelMetadata:
    """Metadata for a builtin at the rate it will run at."""
    if kind not in BUILTIN_KINDS:
        raise ValueError(f"unknown builtin {kind!r}")
    is_labeler = kind == "energy_labeler"
    return ModelMetadata(
        name=f"{BUILTIN_NAMESPACE}/{kind}",
        effect_type=EffectType.WAVEFORM_TO_LABELS if is_labeler else EffectType.WAVEFORM_TO_WAVEFORM,
        sample_rate=sample_rate,
        short_description=_DESCRIPTIONS[kind],
        tags=("builtin",),
        labels=LABELER_LABELS if is_labeler else (),
    )


def run_builtin(kind: str, samples: np.ndarray, sample_rate: int):
    """Forward pass of a builtin; returns an array (effects) or AnalysisOutput."""
    if kind == "passthrough":
        return passthrough(samples)
    if kind == "gain_half":
        return gain_half(samples)
    if kind == "band_split":
        return band_split(samples, sample_rate)
    if kind == "energy_labeler":
        return energy_labeler(samples, sample_rate)
    raise ValueError(f"unknown builtin {kind!r}")
