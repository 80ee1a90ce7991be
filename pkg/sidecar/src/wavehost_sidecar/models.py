"""Fixture models: tiny deterministic torchscript graphs plus their metadata.

Three repositories cover the whole contract surface: gain-half (1 -> 1
channel effect), stereo-echo (1 -> 2 channels, 100 ms delay on the second
row) and threshold-labeler (silence/sound spans by per-hop RMS). Weights
are constants, so regeneration is reproducible; metadata is written with
sorted keys so the bytes are identical run to run.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import List, Tuple

import torch

MODEL_FILE_NAME = "model.pt"
METADATA_FILE_NAME = "metadata.json"

FIXTURE_SAMPLE_RATE = 16000
ECHO_DELAY_S = 0.1
LABELER_HOP = 1024
LABELER_THRESHOLD = 0.01


class GainHalf(torch.nn.Module):
    """Waveform-to-waveform: halves every sample, any channel count."""

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x * 0.5


class StereoEcho(torch.nn.Module):
    """Waveform-to-waveform, mono in, two rows out: identity and a delayed copy."""

    def __init__(self, delay_samples: int):
        super().__init__()
        self.delay_samples = delay_samples

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        mono = x[0]
        n = mono.shape[0]
        delayed = torch.zeros_like(mono)
        if n > self.delay_samples:
            delayed[self.delay_samples :] = mono[: n - self.delay_samples]
        return torch.stack([mono, delayed])


class ThresholdLabeler(torch.nn.Module):
    """Waveform-to-labels: per-hop RMS thresholding, adjacent spans merged.

    Output is the contract tuple: class indexes with shape (num_timesteps,)
    and start/stop second timestamps with shape (num_timesteps, 2).
    """

    def __init__(self, sample_rate: int, hop: int, threshold: float):
        super().__init__()
        self.sample_rate = sample_rate
        self.hop = hop
        self.threshold = threshold

    def forward(self, x: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        mono = x[0]
        n = mono.shape[0]
        classes: List[int] = []
        start = 0
        while start < n:
            end = min(start + self.hop, n)
            seg = mono[start:end]
            rms = torch.sqrt(torch.mean(seg * seg))
            classes.append(1 if bool(rms >= self.threshold) else 0)
            start = end

        span_classes: List[int] = []
        span_starts: List[float] = []
        span_stops: List[float] = []
        i = 0
        while i < len(classes):
            j = i
            while j + 1 < len(classes) and classes[j + 1] == classes[i]:
                j += 1
            span_classes.append(classes[i])
            span_starts.append(float(i * self.hop) / float(self.sample_rate))
            span_stops.append(float(min((j + 1) * self.hop, n)) / float(self.sample_rate))
            i = j + 1

        indexes = torch.tensor(span_classes, dtype=torch.long)
        timestamps = torch.stack(
            [torch.tensor(span_starts), torch.tensor(span_stops)], dim=1
        )
        return (indexes, timestamps)


def _metadata(name: str, effect_type: str, short: str, long_desc: str, **extra) -> dict:
    doc = {
        "name": name,
        "effect_type": effect_type,
        "sample_rate": FIXTURE_SAMPLE_RATE,
        "short_description": short,
        "long_description": long_desc,
        "domains": ["other"],
        "tags": ["fixture", "test"],
        "multichannel": False,
    }
    doc.update(extra)
    return doc


FIXTURES = {
    "gain-half": (
        lambda: GainHalf(),
        _metadata(
            "gain-half",
            "waveform-to-waveform",
            "Halves the amplitude of the input.",
            "Reference effect fixture: output is exactly 0.5x the input samples.",
        ),
    ),
    "stereo-echo": (
        lambda: StereoEcho(int(ECHO_DELAY_S * FIXTURE_SAMPLE_RATE)),
        _metadata(
            "stereo-echo",
            "waveform-to-waveform",
            "Splits mono input into identity and 100 ms delayed rows.",
            "Reference effect fixture: writes two tracks, the second delayed by 0.1 s.",
        ),
    ),
    "threshold-labeler": (
        lambda: ThresholdLabeler(FIXTURE_SAMPLE_RATE, LABELER_HOP, LABELER_THRESHOLD),
        _metadata(
            "threshold-labeler",
            "waveform-to-labels",
            "Labels spans as silence or sound by per-hop RMS.",
            "Reference analyzer fixture: 1024-sample hops, RMS threshold 0.01, merged spans.",
            labels=["silence", "sound"],
        ),
    ),
}


def make_fixtures(out_dir: str | Path) -> list[Path]:
    """Write the three fixture repos under out_dir; returns their paths."""
    out_dir = Path(out_dir)
    written = []
    for name, (build, metadata) in FIXTURES.items():
        repo_dir = out_dir / name
        repo_dir.mkdir(parents=True, exist_ok=True)
        scripted = torch.jit.script(build())
        scripted.save(str(repo_dir / MODEL_FILE_NAME))
        (repo_dir / METADATA_FILE_NAME).write_text(
            json.dumps(metadata, indent=2, sort_keys=True) + "\n", "utf-8"
        )
        written.append(repo_dir)
    return written
