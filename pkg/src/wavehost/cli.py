"""Command-line front door: discovery, install, model runs, contributor checks.

Subcommands mirror the end-user flows (search, install, uninstall, list,
info, apply, analyze) plus the contributor check (validate-model) and the
control service (serve). Exit codes: 0 success, 1 domain error, 2 usage
error. With --json every command emits exactly one JSON document on
stdout, success or failure; human-readable errors always go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .audio import WavCodecError, Waveform, decode_wav, encode_wav, render_labels
from .backends import AudioResponse, LabelsResponse, SidecarSession, forward
from .contract import (
    METADATA_FILE_NAME,
    ContractViolation,
    EffectType,
    MetadataError,
    metadata_to_document,
    parse_metadata,
    validate_analysis_output,
    validate_w2w_output,
)
from .engine import Engine, EngineConfig, backend_for_model_dir
from .errors import WavehostError
from .hub import (
    CACHE_ENV_VAR,
    HUB_ENV_VAR,
    HubClient,
    HubError,
    NotInstalledError,
    RepoNotFoundError,
    parse_repo_id,
)

_TYPE_ALIASES = {"effect": EffectType.WAVEFORM_TO_WAVEFORM, "analyzer": EffectType.WAVEFORM_TO_LABELS}


def _error_code(exc: Exception) -> str:
    if isinstance(exc, MetadataError):
        return "metadata_invalid"
    if isinstance(exc, RepoNotFoundError):
        return "repo_not_found"
    if isinstance(exc, HubError):
        return "hub_unreachable" if exc.retryable else "hub_error"
    if isinstance(exc, NotInstalledError):
        return "not_installed"
    if isinstance(exc, ContractViolation):
        return exc.code
    if isinstance(exc, WavCodecError):
        return "bad_wav"
    if isinstance(exc, FileExistsError):
        return "would_overwrite"
    if isinstance(exc, FileNotFoundError):
        return "file_not_found"
    return "error"


def _package_summary(package) -> dict:
    return {
        "repo_id": str(package.repo_id),
        "revision": package.revision,
        "sha256": package.sha256,
        "installed_at": package.installed_at,
        "metadata": metadata_to_document(package.metadata),
    }


def _hub_client(args) -> HubClient:
    return HubClient(args.hub_url, args.cache_root)


def _engine(args) -> Engine:
    return Engine(hub=_hub_client(args), config=EngineConfig())


def _load_waveform(path: str) -> Waveform:
    return decode_wav(Path(path).read_bytes())


# --- subcommand handlers: return (exit_code, json_payload, human_text) ---------


def _cmd_search(args):
    client = _hub_client(args)
    cards = client.search(type_filter=_TYPE_ALIASES[args.type] if args.type else None)
    rows = []
    lines = []
    for card in cards:
        effect_type = card.effect_type.value if card.effect_type else None
        rows.append(
            {
                "repo_id": str(card.repo_id),
                "tags": list(card.tags),
                "files": list(card.files),
                "effect_type": effect_type,
                "short_description": card.metadata.short_description if card.metadata else None,
            }
        )
        suffix = f"  [{effect_type}]" if effect_type else ""
        lines.append(f"{card.repo_id}{suffix}  tags: {', '.join(card.tags)}")
    if not lines:
        lines = ["no models found"]
    return 0, {"ok": True, "models": rows}, "\n".join(lines)


def _cmd_install(args):
    print(f"installing {args.repo_id} ...", file=sys.stderr)
    package = _hub_client(args).install(args.repo_id, args.revision)
    payload = {"ok": True, **_package_summary(package)}
    human = f"installed {package.repo_id}@{package.revision} (sha256 {package.sha256[:12]})"
    return 0, payload, human


def _cmd_uninstall(args):
    _hub_client(args).uninstall(args.repo_id)
    return 0, {"ok": True, "repo_id": args.repo_id}, f"uninstalled {args.repo_id}"


def _cmd_list(args):
    packages = _hub_client(args).list_installed()
    rows = [_package_summary(p) for p in packages]
    lines = [
        f"{p.repo_id}  [{p.metadata.effect_type.value}]  {p.metadata.short_description}"
        for p in packages
    ] or ["no models installed"]
    return 0, {"ok": True, "models": rows}, "\n".join(lines)


def _cmd_info(args):
    package = _hub_client(args).get_installed(args.repo_id)
    meta = package.metadata
    lines = [
        f"repo:       {package.repo_id}",
        f"revision:   {package.revision}",
        f"sha256:     {package.sha256}",
        f"installed:  {package.installed_at}",
        f"type:       {meta.effect_type.value}",
        f"rate:       {meta.sample_rate} Hz",
        f"about:      {meta.short_description}",
    ]
    if meta.labels:
        lines.append(f"labels:     {', '.join(meta.labels)}")
    return 0, {"ok": True, "model": _package_summary(package)}, "\n".join(lines)


def _prepare_output_paths(paths: list[Path], force: bool) -> None:
    if not force:
        existing = [str(p) for p in paths if p.exists()]
        if existing:
            raise FileExistsError(
                f"refusing to overwrite {', '.join(existing)} (use --force)"
            )


def _cmd_apply(args):
    w = _load_waveform(args.input)
    print(
        f"applying {args.model} to {w.duration_s:.1f} s of audio ...", file=sys.stderr
    )
    engine = _engine(args)
    tracks = engine.apply_effect(args.model, w)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [out_dir / f"track_{i:02d}.wav" for i in range(len(tracks))]
    _prepare_output_paths(paths, args.force)
    for path, track in zip(paths, tracks):
        path.write_bytes(encode_wav(track, "float32"))
    human = "\n".join(str(p) for p in paths)
    return 0, {"ok": True, "tracks": [str(p) for p in paths]}, human


def _cmd_analyze(args):
    w = _load_waveform(args.input)
    print(
        f"analyzing {w.duration_s:.1f} s of audio with {args.model} ...", file=sys.stderr
    )
    engine = _engine(args)
    track, warnings = engine.run_analysis(args.model, w)
    out_path = Path(args.out)
    _prepare_output_paths([out_path], args.force)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(render_labels(track), "utf-8")
    for warning in warnings:
        print(f"warning: {warning}", file=sys.stderr)
    payload = {"ok": True, "labels_file": str(out_path), "spans": len(track), "warnings": warnings}
    return 0, payload, f"{out_path} ({len(track)} spans)"


def _cmd_validate_model(args):
    checks = _validate_model_dir(Path(args.model_dir))
    ok = all(passed for _, passed, _ in checks)
    lines = [
        f"{'PASS' if passed else 'FAIL'}  {name}" + (f": {detail}" if detail else "")
        for name, passed, detail in checks
    ]
    lines.append("model is valid" if ok else "model failed validation")
    payload = {
        "ok": ok,
        "checks": [{"name": n, "passed": p, "detail": d} for n, p, d in checks],
    }
    return (0 if ok else 1), payload, "\n".join(lines)


def _validate_model_dir(model_dir: Path) -> list[tuple[str, bool, str]]:
    """Contributor checks: metadata, blob, handshake, dummy forward, contracts."""
    checks: list[tuple[str, bool, str]] = []

    metadata_path = model_dir / METADATA_FILE_NAME
    try:
        meta = parse_metadata(metadata_path.read_text("utf-8"))
        checks.append(("metadata", True, f"{meta.effect_type.value} @ {meta.sample_rate} Hz"))
    except (OSError, MetadataError) as e:
        checks.append(("metadata", False, str(e)))
        return checks

    backend = backend_for_model_dir(model_dir, EngineConfig())
    blob = model_dir / "model.pt"
    if blob.is_file():
        checks.append(("model_file", True, blob.name))
    else:
        checks.append(("model_file", False, f"{blob} is missing"))
        return checks

    try:
        session = SidecarSession(backend.launch_spec, model_dir, expected=meta, timeout_s=60)
    except WavehostError as e:
        checks.append(("handshake", False, str(e)))
        return checks
    checks.append(("handshake", True, "effect type and sample rate match metadata"))

    try:
        dummy = np.zeros((1, meta.sample_rate), dtype=np.float32)  # 1 s of silence
        result = session.forward(dummy)
        checks.append(("forward", True, "1 s dummy input processed"))
    except WavehostError as e:
        checks.append(("forward", False, str(e)))
        return checks
    finally:
        session.close()

    try:
        if meta.effect_type is EffectType.WAVEFORM_TO_LABELS:
            from .contract import AnalysisOutput

            if not isinstance(result, AnalysisOutput):
                raise ContractViolation("wrong_response_kind", "analyzer returned audio")
            validate_analysis_output(meta, result, 1.0)
        else:
            if isinstance(result, np.ndarray):
                validate_w2w_output(1, meta.sample_rate, result)
            else:
                raise ContractViolation("wrong_response_kind", "effect returned labels")
        checks.append(("output_contract", True, "output satisfies the model contract"))
    except ContractViolation as e:
        checks.append(("output_contract", False, str(e)))
    return checks


def _cmd_serve(args):
    import uvicorn

    from .service import ServiceConfig, create_app

    ui_dir = args.ui_dir
    if ui_dir is None and Path("frontend/dist").is_dir():
        ui_dir = "frontend/dist"
    config = ServiceConfig(
        hub_url=args.hub_url,
        cache_root=args.cache_root,
        curated_path=args.curated,
        ui_dir=ui_dir,
    )
    app = create_app(config)
    print(f"serving on http://127.0.0.1:{args.port}", file=sys.stderr)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0, {"ok": True}, ""


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit one JSON document on stdout")
    common.add_argument(
        "--hub-url", default=None, help=f"hub base URL (or ${HUB_ENV_VAR})"
    )
    common.add_argument(
        "--cache-root", default=None, help=f"model cache directory (or ${CACHE_ENV_VAR})"
    )

    parser = argparse.ArgumentParser(
        prog="wavehost",
        description="Host and model manager for deep-learning audio effects and analyzers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("search", parents=[common], help="list tagged models on the hub")
    p.add_argument("--type", choices=sorted(_TYPE_ALIASES), default=None)
    p.set_defaults(handler=_cmd_search)

    p = sub.add_parser("install", parents=[common], help="install a model by repo id")
    p.add_argument("repo_id")
    p.add_argument("--revision", default=None)
    p.set_defaults(handler=_cmd_install)

    p = sub.add_parser("uninstall", parents=[common], help="remove an installed model")
    p.add_argument("repo_id")
    p.set_defaults(handler=_cmd_uninstall)

    p = sub.add_parser("list", parents=[common], help="list installed models")
    p.set_defaults(handler=_cmd_list)

    p = sub.add_parser("info", parents=[common], help="show an installed model")
    p.add_argument("repo_id")
    p.set_defaults(handler=_cmd_info)

    p = sub.add_parser("apply", parents=[common], help="run an effect, write new tracks")
    p.add_argument("model", help="repo id or builtin/<kind>")
    p.add_argument("input", help="input WAV file")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--force", action="store_true", help="overwrite existing outputs")
    p.set_defaults(handler=_cmd_apply)

    p = sub.add_parser("analyze", parents=[common], help="run an analyzer, write a label file")
    p.add_argument("model", help="repo id or builtin/<kind>")
    p.add_argument("input", help="input WAV file")
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true", help="overwrite an existing output")
    p.set_defaults(handler=_cmd_analyze)

    p = sub.add_parser(
        "validate-model", parents=[common], help="contributor check for a model directory"
    )
    p.add_argument("model_dir")
    p.set_defaults(handler=_cmd_validate_model)

    p = sub.add_parser("serve", parents=[common], help="start the HTTP control service")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--curated", default=None, help="path to a curated manifest")
    p.add_argument("--ui-dir", default=None, help="static UI bundle to serve at /")
    p.set_defaults(handler=_cmd_serve)

    return parser


def run_command(argv: list[str]) -> int:
    """Parse and run one command; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        code = e.code if isinstance(e.code, int) else 2
        if code != 0 and "--json" in argv:
            print(json.dumps({"ok": False, "error": {"code": "usage", "message": "invalid arguments"}}))
        return code

    try:
        exit_code, payload, human = args.handler(args)
    except (WavehostError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        if args.json:
            print(json.dumps({"ok": False, "error": {"code": _error_code(e), "message": str(e)}}))
        return 1

    if args.json:
        print(json.dumps(payload))
    elif human:
        print(human)
    return exit_code


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
