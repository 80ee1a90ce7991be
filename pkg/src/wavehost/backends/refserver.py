"""Reference sidecar: serves builtin-marker model blobs over ADLP on stdio.

A marker blob is a text file whose first line is ``wavehost-builtin:<kind>``.
Packages carrying one run fully offline with no ML runtime installed; the
fixture hub serves such packages so the install→run lifecycle is testable
end to end. Launch contract: ``python -m wavehost.backends.refserver
<model_dir>`` — ADLP on stdin/stdout, logs on stderr.
"""

from __future__ import annotations

import sys
from pathlib import Path

from ..contract import EffectType, ModelMetadata, parse_metadata
from . import adlp
from .builtins import BUILTIN_KINDS, run_builtin

BUILTIN_BLOB_PREFIX = b"wavehost-builtin:"
MODEL_FILE_NAME = "model.pt"


def make_builtin_blob(kind: str) -> bytes:
    """Bytes of a marker blob naming a builtin kind."""
    if kind not in BUILTIN_KINDS:
        raise ValueError(f"unknown builtin {kind!r}")
    return BUILTIN_BLOB_PREFIX + kind.encode("ascii") + b"\n"


def sniff_builtin_blob(path: str | Path) -> str | None:
    """Return the builtin kind a blob file names, or None for opaque blobs."""
    try:
        with open(path, "rb") as f:
            head = f.read(64)
    except OSError:
        return None
    if not head.startswith(BUILTIN_BLOB_PREFIX):
        return None
    kind = head[len(BUILTIN_BLOB_PREFIX) :].split(b"\n", 1)[0].decode("ascii", "replace")
    return kind if kind in BUILTIN_KINDS else None


def serve(model_dir: str | Path, stdin=None, stdout=None) -> int:
    """Serve one model directory until EOF. Returns a process exit code."""
    stdin = stdin or sys.stdin.buffer
    stdout = stdout or sys.stdout.buffer
    model_dir = Path(model_dir)

    try:
        meta = parse_metadata((model_dir / "metadata.json").read_text("utf-8"))
        kind = sniff_builtin_blob(model_dir / MODEL_FILE_NAME)
        if kind is None:
            raise ValueError(f"{model_dir / MODEL_FILE_NAME} is not a builtin-marker blob")
    except Exception as e:
        print(f"refserver: cannot load model: {e}", file=sys.stderr)
        try:
            adlp.write_frame(stdout, {"op": "error", "code": "load_failed", "message": str(e)})
        except OSError:
            pass
        return 1

    while True:
        try:
            header, payload = adlp.read_frame(stdin)
        except adlp.ProtocolError as e:
            if e.code == "eof":
                return 0
            try:
                adlp.write_frame(stdout, {"op": "error", "code": e.code, "message": str(e)})
            except OSError:
                return 1
            continue

        op = header.get("op")
        try:
            if op == "hello":
                adlp.write_frame(
                    stdout,
                    {
                        "op": "hello",
                        "effect_type": meta.effect_type.value,
                        "sample_rate": meta.sample_rate,
                    },
                )
            elif op == "forward":
                samples = adlp.audio_from_frame(header, payload)
                result = run_builtin(kind, samples, meta.sample_rate)
                if meta.effect_type is EffectType.WAVEFORM_TO_LABELS:
                    adlp.write_frame(stdout, adlp.labels_header("result", result))
                else:
                    adlp.write_frame(
                        stdout, adlp.audio_header("result", result), adlp.audio_payload(result)
                    )
            else:
                adlp.write_frame(
                    stdout, {"op": "error", "code": "bad_op", "message": f"unexpected op {op!r}"}
                )
        except adlp.ProtocolError as e:
            adlp.write_frame(stdout, {"op": "error", "code": e.code, "message": str(e)})
        except BrokenPipeError:
            return 0
        except Exception as e:  # model errors must not kill the loop
            print(f"refserver: forward failed: {e}", file=sys.stderr)
            adlp.write_frame(stdout, {"op": "error", "code": "model_error", "message": str(e)})


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        print("usage: python -m wavehost.backends.refserver <model_dir>", file=sys.stderr)
        return 2
    return serve(argv[0])


if __name__ == "__main__":
    sys.exit(main())
