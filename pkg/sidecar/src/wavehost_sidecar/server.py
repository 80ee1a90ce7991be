"""ADLP server: host one serialized model directory on stdin/stdout.

Answers the hello handshake from the local metadata, runs forward passes
through the loaded graph, and checks output shapes against the model
contract before replying. Model exceptions become error frames and the
loop keeps serving; only EOF (or a load failure) ends the process. Logs
go to stderr — stdout carries nothing but ADLP frames.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np
import torch

from . import protocol
from .models import METADATA_FILE_NAME, MODEL_FILE_NAME

MAX_OUTPUT_TRACKS = 16


class HostedModel:
    """A loaded torchscript graph plus the metadata it was published with."""

    def __init__(self, model_dir: str | Path):
        model_dir = Path(model_dir)
        with open(model_dir / METADATA_FILE_NAME, "r", encoding="utf-8") as f:
            self.metadata = json.load(f)
        if not isinstance(self.metadata, dict):
            raise ValueError("metadata.json must be a JSON object")
        self.effect_type = str(self.metadata.get("effect_type", ""))
        if self.effect_type not in ("waveform-to-waveform", "waveform-to-labels"):
            raise ValueError(f"unsupported effect_type {self.effect_type!r}")
        self.sample_rate = self.metadata.get("sample_rate")
        if not isinstance(self.sample_rate, int) or self.sample_rate <= 0:
            raise ValueError(f"invalid sample_rate {self.sample_rate!r}")
        self.graph = torch.jit.load(str(model_dir / MODEL_FILE_NAME), map_location="cpu")
        self.graph.eval()

    @property
    def is_analyzer(self) -> bool:
        return self.effect_type == "waveform-to-labels"

    def forward(self, samples: np.ndarray):
        # np.array copies: frombuffer-backed inputs are read-only, torch wants writable
        with torch.no_grad():
            return self.graph(torch.from_numpy(np.array(samples, dtype=np.float32)))


def _check_audio_output(result) -> np.ndarray:
    if not isinstance(result, torch.Tensor):
        raise protocol.FrameError("bad_output_type", f"expected a tensor, got {type(result).__name__}")
    if result.dim() != 2:
        raise protocol.FrameError(
            "bad_output_rank", f"expected rank 2 (channels, samples), got rank {result.dim()}"
        )
    rows, cols = result.shape
    if rows < 1 or cols < 1:
        raise protocol.FrameError("empty_output", f"output shape {tuple(result.shape)}")
    if rows > MAX_OUTPUT_TRACKS:
        raise protocol.FrameError("too_many_tracks", f"{rows} rows exceeds {MAX_OUTPUT_TRACKS}")
    out = result.detach().cpu().to(torch.float32).numpy()
    if not np.isfinite(out).all():
        raise protocol.FrameError("non_finite", "output contains NaN or Inf")
    return out


def _check_labels_output(result) -> tuple[np.ndarray, np.ndarray]:
    if not isinstance(result, tuple) or len(result) != 2:
        raise protocol.FrameError(
            "bad_output_type", "analyzer must return a (class_indexes, timestamps) tuple"
        )
    indexes, stamps = result
    if not isinstance(indexes, torch.Tensor) or not isinstance(stamps, torch.Tensor):
        raise protocol.FrameError("bad_output_type", "analyzer tuple members must be tensors")
    if indexes.dim() != 1:
        raise protocol.FrameError(
            "bad_output_rank", f"class indexes must be rank 1, got rank {indexes.dim()}"
        )
    if stamps.dim() != 2 or (stamps.shape[0] > 0 and stamps.shape[1] != 2):
        raise protocol.FrameError(
            "bad_output_rank", f"timestamps must be (num_timesteps, 2), got {tuple(stamps.shape)}"
        )
    if indexes.shape[0] != stamps.shape[0]:
        raise protocol.FrameError(
            "length_mismatch",
            f"{int(indexes.shape[0])} class indexes vs {int(stamps.shape[0])} timestamp rows",
        )
    return indexes.cpu().numpy(), stamps.cpu().to(torch.float64).numpy()


def serve(model_dir: str | Path, stdin=None, stdout=None) -> int:
    stdin = stdin or sys.stdin.buffer
    stdout = stdout or sys.stdout.buffer

    try:
        model = HostedModel(model_dir)
    except Exception as e:
        print(f"wavehost-sidecar: cannot load {model_dir}: {e}", file=sys.stderr)
        try:
            protocol.write_frame(stdout, protocol.error_frame("load_failed", str(e)))
        except OSError:
            pass
        return 1

    while True:
        try:
            header, payload = protocol.read_frame(stdin)
        except protocol.StreamClosed:
            return 0
        except protocol.FrameError as e:
            try:
                protocol.write_frame(stdout, protocol.error_frame(e.code, str(e)))
            except OSError:
                return 1
            continue

        op = header.get("op")
        try:
            if op == "hello":
                protocol.write_frame(
                    stdout,
                    {
                        "op": "hello",
                        "effect_type": model.effect_type,
                        "sample_rate": model.sample_rate,
                    },
                )
            elif op == "forward":
                samples = protocol.decode_audio(header, payload)
                result = model.forward(samples)
                if model.is_analyzer:
                    indexes, stamps = _check_labels_output(result)
                    protocol.write_frame(stdout, protocol.labels_result(indexes, stamps))
                else:
                    out = _check_audio_output(result)
                    result_header, result_payload = protocol.audio_result(out)
                    protocol.write_frame(stdout, result_header, result_payload)
            else:
                protocol.write_frame(
                    stdout, protocol.error_frame("bad_op", f"unexpected op {op!r}")
                )
        except protocol.FrameError as e:
            protocol.write_frame(stdout, protocol.error_frame(e.code, str(e)))
        except BrokenPipeError:
            return 0
        except Exception as e:  # a misbehaving model must not kill the loop
            print(f"wavehost-sidecar: forward failed: {e}", file=sys.stderr)
            protocol.write_frame(stdout, protocol.error_frame("model_error", str(e)))
