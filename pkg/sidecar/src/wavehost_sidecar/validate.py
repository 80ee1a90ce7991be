"""Contributor check: does a model directory satisfy the publishing contract?

Checks the metadata document rules, loads the serialized graph, runs a
one-second dummy forward pass, and verifies the output shapes. Each rule
yields one PASS/FAIL report line; any failure makes the directory
unpublishable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .models import METADATA_FILE_NAME, MODEL_FILE_NAME
from .server import MAX_OUTPUT_TRACKS, _check_audio_output, _check_labels_output
from . import protocol

DOMAINS = ("speech", "music", "environmental", "other")
EFFECT_TYPES = ("waveform-to-waveform", "waveform-to-labels")
SHORT_DESCRIPTION_MAX = 200


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}" + (f": {self.detail}" if self.detail else "")


def _check_metadata(doc) -> list[Check]:
    checks = []
    problems = []
    if not isinstance(doc, dict):
        return [Check("metadata", False, "metadata.json must be a JSON object")]

    for key in ("name", "effect_type", "sample_rate", "short_description"):
        if key not in doc:
            problems.append(f"missing required key {key!r}")

    effect_type = doc.get("effect_type")
    if "effect_type" in doc and effect_type not in EFFECT_TYPES:
        problems.append(f"effect_type must be one of {EFFECT_TYPES}, got {effect_type!r}")

    rate = doc.get("sample_rate")
    if "sample_rate" in doc and (not isinstance(rate, int) or isinstance(rate, bool) or rate <= 0):
        problems.append(f"sample_rate must be a positive integer, got {rate!r}")

    short = doc.get("short_description")
    if "short_description" in doc:
        if not isinstance(short, str) or not short:
            problems.append("short_description must be a non-empty string")
        elif len(short) > SHORT_DESCRIPTION_MAX:
            problems.append(f"short_description exceeds {SHORT_DESCRIPTION_MAX} chars")

    labels = doc.get("labels")
    if effect_type == "waveform-to-labels":
        if not isinstance(labels, list) or not labels:
            problems.append("labels: required and non-empty for waveform-to-labels models")
    elif labels:
        problems.append("labels: only waveform-to-labels models declare labels")

    for key in ("tags", "domains"):
        values = doc.get(key, [])
        if not isinstance(values, list):
            problems.append(f"{key} must be a list")
        elif len(set(map(str, values))) != len(values):
            problems.append(f"{key} contains duplicates")
    for i, domain in enumerate(doc.get("domains", []) if isinstance(doc.get("domains"), list) else []):
        if domain not in DOMAINS:
            problems.append(f"domains[{i}]: {domain!r} is not one of {DOMAINS}")

    if problems:
        checks.append(Check("metadata", False, "; ".join(problems)))
    else:
        checks.append(Check("metadata", True, f"{effect_type} @ {rate} Hz"))
    return checks


def validate(model_dir: str | Path) -> list[Check]:
    model_dir = Path(model_dir)
    checks: list[Check] = []

    metadata_path = model_dir / METADATA_FILE_NAME
    try:
        doc = json.loads(metadata_path.read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        return [Check("metadata", False, f"cannot read {metadata_path.name}: {e}")]
    checks.extend(_check_metadata(doc))
    if not checks[-1].passed:
        return checks

    model_path = model_dir / MODEL_FILE_NAME
    try:
        graph = torch.jit.load(str(model_path), map_location="cpu")
        graph.eval()
        checks.append(Check("model_loads", True, model_path.name))
    except (OSError, RuntimeError, ValueError) as e:
        checks.append(Check("model_loads", False, str(e)))
        return checks

    rate = doc["sample_rate"]
    dummy = torch.zeros((1, rate), dtype=torch.float32)  # 1 s of silence
    try:
        with torch.no_grad():
            result = graph(dummy)
        checks.append(Check("forward", True, "1 s dummy input processed"))
    except Exception as e:
        checks.append(Check("forward", False, str(e)))
        return checks

    try:
        if doc["effect_type"] == "waveform-to-labels":
            indexes, stamps = _check_labels_output(result)
            n_labels = len(doc["labels"])
            for row, idx in enumerate(indexes):
                if idx < 0 or idx >= n_labels:
                    raise protocol.FrameError(
                        "index_range", f"row {row}: class index {int(idx)} outside 0..{n_labels - 1}"
                    )
            for row, (start, stop) in enumerate(stamps):
                if start < 0 or start > stop:
                    raise protocol.FrameError(
                        "bad_timestamps", f"row {row}: start/stop ({start}, {stop}) out of order"
                    )
            detail = f"tuple of ({len(indexes)},) indexes and ({len(stamps)}, 2) timestamps"
        else:
            out = _check_audio_output(result)
            detail = f"audio output {out.shape[0]} x {out.shape[1]}, max {MAX_OUTPUT_TRACKS} rows"
        checks.append(Check("output_contract", True, detail))
    except protocol.FrameError as e:
        checks.append(Check("output_contract", False, str(e)))
    return checks
