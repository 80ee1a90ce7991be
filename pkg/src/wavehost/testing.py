"""Test fixtures: an in-process hub server and fixture model directories.

:class:`FixtureHub` emulates the hub wire subset the client speaks —
``GET /api/models?filter=<tag>`` returning ``[{id, tags, files}]`` and
``GET /{ns}/{name}/resolve/{rev}/{filename}`` returning raw bytes — on a
local port, with request logging and fault injection for error-path tests.

Fixture model repositories carry builtin-marker blobs (see
``wavehost.backends.refserver``) so installed packages run with no ML
runtime and no network.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .backends.builtins import LABELER_LABELS
from .backends.refserver import MODEL_FILE_NAME, make_builtin_blob
from .contract import METADATA_FILE_NAME

DEFAULT_TAG = "audacity"


def builtin_repo_files(kind: str, metadata: dict | None = None) -> dict[str, bytes]:
    """Files of a fixture repo whose blob routes to a builtin backend."""
    is_labeler = kind == "energy_labeler"
    doc = {
        "name": kind.replace("_", "-"),
        "effect_type": "waveform-to-labels" if is_labeler else "waveform-to-waveform",
        "sample_rate": 16000,
        "short_description": f"Fixture model backed by builtin/{kind}.",
        "domains": ["other"],
        "tags": ["fixture"],
    }
    if is_labeler:
        doc["labels"] = list(LABELER_LABELS)
    if metadata:
        doc.update(metadata)
        doc = {k: v for k, v in doc.items() if v is not None}
    return {
        METADATA_FILE_NAME: json.dumps(doc, indent=2).encode("utf-8"),
        MODEL_FILE_NAME: make_builtin_blob(kind),
    }


def write_model_dir(directory: str | Path, kind: str, metadata: dict | None = None) -> Path:
    """Materialize a fixture model directory on disk; returns its path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, data in builtin_repo_files(kind, metadata).items():
        (directory / name).write_bytes(data)
    return directory


class _Repo:
    def __init__(self, tags: list[str], files: dict[str, bytes]):
        self.tags = list(tags)
        self.files = dict(files)


class FixtureHub:
    """Local hub server. Use as a context manager or call start()/stop()."""

    def __init__(self):
        self._repos: dict[str, _Repo] = {}
        self._server: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None
        self._fail_next: list[int] = []  # HTTP statuses to serve before real answers
        self.request_log: list[str] = []
        self._lock = threading.Lock()

    # -- content ----------------------------------------------------------

    def add_repo(self, repo_id: str, tags: list[str], files: dict[str, bytes]) -> None:
        self._repos[repo_id] = _Repo(tags, files)

    def add_builtin_repo(
        self,
        repo_id: str,
        kind: str,
        *,
        tags: list[str] | None = None,
        metadata: dict | None = None,
    ) -> None:
        self.add_repo(
            repo_id,
            [DEFAULT_TAG] if tags is None else tags,
            builtin_repo_files(kind, metadata),
        )

    def fail_next(self, status: int = 500, times: int = 1) -> None:
        """Serve the next ``times`` requests with the given HTTP status."""
        with self._lock:
            self._fail_next.extend([status] * times)

    def requests_matching(self, fragment: str) -> int:
        with self._lock:
            return sum(fragment in line for line in self.request_log)

    # -- lifecycle ----------------------------------------------------------

    def start(self) -> str:
        hub = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):  # keep test output quiet
                pass

            def do_GET(self):
                with hub._lock:
                    hub.request_log.append(self.path)
                    forced = hub._fail_next.pop(0) if hub._fail_next else None
                if forced is not None:
                    self.send_error(forced)
                    return

                parsed = urlparse(self.path)
                parts = [p for p in parsed.path.split("/") if p]
                if parsed.path == "/api/models":
                    tag = parse_qs(parsed.query).get("filter", [None])[0]
                    cards = [
                        {"id": rid, "tags": repo.tags, "files": sorted(repo.files)}
                        for rid, repo in sorted(hub._repos.items())
                        if tag is None or tag in repo.tags
                    ]
                    body = json.dumps(cards).encode("utf-8")
                    self.send_response(200)
                    self.send_header("Content-Type", "application/json")
                    self.send_header("Content-Length", str(len(body)))
                    self.end_headers()
                    self.wfile.write(body)
                elif len(parts) == 5 and parts[2] == "resolve":
                    repo = hub._repos.get(f"{parts[0]}/{parts[1]}")
                    blob = repo.files.get(parts[4]) if repo else None
                    if blob is None:
                        self.send_error(404)
                        return
                    self.send_response(200)
                    self.send_header("Content-Type", "application/octet-stream")
                    self.send_header("Content-Length", str(len(blob)))
                    self.end_headers()
                    self.wfile.write(blob)
                else:
                    self.send_error(404)

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self.base_url

    @property
    def base_url(self) -> str:
        assert self._server is not None, "hub not started"
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def stop(self) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._server = None

    def __enter__(self) -> "FixtureHub":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.stop()
