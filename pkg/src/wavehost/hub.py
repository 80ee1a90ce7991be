"""Hub client: discover tagged model repositories, install, and manage them.

The wire subset is two GETs — ``{base}/api/models?filter=<tag>`` listing
``{id, tags, files}`` cards, and ``{base}/{ns}/{name}/resolve/{rev}/{file}``
returning raw bytes. Installs are atomic (staged, then renamed into the
cache), integrity-pinned by sha256, serialized per repo with an on-disk
lock, and idempotent per revision. Installed packages never need the
network again.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import shutil
import time
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import requests
from filelock import FileLock

from .contract import (
    METADATA_FILE_NAME,
    EffectType,
    MetadataError,
    ModelMetadata,
    parse_metadata,
)
from .errors import WavehostError

log = logging.getLogger(__name__)

DEFAULT_TAG = "audacity"
DEFAULT_REVISION = "main"
DEFAULT_MODEL_FILE = "model.pt"
DEFAULT_HUB_URL = "https://huggingface.co"
MANIFEST_FILE_NAME = "manifest.json"

CACHE_ENV_VAR = "WAVEHOST_CACHE_DIR"
HUB_ENV_VAR = "WAVEHOST_HUB_URL"

METADATA_CACHE_TTL_S = 600.0

_REPO_PART = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


class HubError(WavehostError):
    """Hub interaction failure; ``retryable`` separates transient from permanent."""

    def __init__(self, message: str, *, retryable: bool):
        super().__init__(message)
        self.retryable = retryable


class RepoNotFoundError(HubError):
    def __init__(self, message: str):
        super().__init__(message, retryable=False)


class NotInstalledError(WavehostError):
    """The repo is not in the local cache."""


class IntegrityError(WavehostError):
    """Downloaded content does not match the pinned digest."""


class CuratedManifestError(WavehostError):
    """Unreadable or invalid curated manifest document."""


@dataclass(frozen=True)
class RepoId:
    namespace: str
    name: str

    def __str__(self) -> str:
        return f"{self.namespace}/{self.name}"


def parse_repo_id(text: str) -> RepoId:
    """Parse canonical "namespace/name" (e.g. hugggof/ConvTasNet-Vocals)."""
    parts = text.split("/")
    if len(parts) != 2:
        raise ValueError(f"repo id must be namespace/name with exactly one slash, got {text!r}")
    namespace, name = parts
    for part in (namespace, name):
        if not _REPO_PART.match(part):
            raise ValueError(f"invalid repo id component {part!r} in {text!r}")
    return RepoId(namespace, name)


@dataclass(frozen=True)
class ModelCard:
    repo_id: RepoId
    tags: tuple[str, ...]
    files: tuple[str, ...]
    effect_type: EffectType | None = None
    metadata: ModelMetadata | None = None


@dataclass(frozen=True)
class ModelPackage:
    repo_id: RepoId
    revision: str
    metadata: ModelMetadata
    model_file: Path
    sha256: str
    installed_at: str
    source_url: str = ""

    @property
    def directory(self) -> Path:
        return self.model_file.parent


@dataclass(frozen=True)
class CuratedEntry:
    repo_id: RepoId
    note: str = ""
    pinned_revision: str | None = None


@dataclass(frozen=True)
class CuratedManifest:
    entries: tuple[CuratedEntry, ...]


def default_cache_root() -> Path:
    env = os.environ.get(CACHE_ENV_VAR)
    if env:
        return Path(env)
    xdg = os.environ.get("XDG_CACHE_HOME")
    base = Path(xdg) if xdg else Path.home() / ".cache"
    return base / "wavehost"


def curated(manifest_path: str | Path) -> CuratedManifest:
    """Parse a curated manifest: a JSON array of {repo_id, pinned_revision?, note?}."""
    try:
        doc = json.loads(Path(manifest_path).read_text("utf-8"))
    except OSError as e:
        raise CuratedManifestError(f"cannot read manifest: {e}") from e
    except json.JSONDecodeError as e:
        raise CuratedManifestError(f"manifest is not valid JSON: {e}") from e
    if not isinstance(doc, list):
        raise CuratedManifestError("manifest must be a JSON array of entries")
    entries = []
    seen = set()
    for i, item in enumerate(doc):
        if not isinstance(item, dict) or "repo_id" not in item:
            raise CuratedManifestError(f"entry {i} must be an object with a repo_id")
        try:
            rid = parse_repo_id(str(item["repo_id"]))
        except ValueError as e:
            raise CuratedManifestError(f"entry {i}: {e}") from None
        if str(rid) in seen:
            raise CuratedManifestError(f"duplicate repo_id {rid}")
        seen.add(str(rid))
        pinned = item.get("pinned_revision")
        entries.append(
            CuratedEntry(
                repo_id=rid,
                note=str(item.get("note", "")),
                pinned_revision=str(pinned) if pinned is not None else None,
            )
        )
    return CuratedManifest(tuple(entries))


class HubClient:
    """Talks to one hub and owns one local cache of installed packages."""

    def __init__(
        self,
        base_url: str | None = None,
        cache_root: str | Path | None = None,
        *,
        required_tag: str = DEFAULT_TAG,
        request_timeout_s: float = 30.0,
    ):
        self.base_url = (base_url or os.environ.get(HUB_ENV_VAR) or DEFAULT_HUB_URL).rstrip("/")
        self.cache_root = Path(cache_root) if cache_root else default_cache_root()
        self.required_tag = required_tag
        self.request_timeout_s = request_timeout_s
        self._session = requests.Session()
        self._metadata_cache: dict[str, tuple[float, ModelMetadata | None]] = {}

    # -- wire helpers -------------------------------------------------------

    def _resolve_url(self, rid: RepoId, revision: str, filename: str) -> str:
        return f"{self.base_url}/{rid.namespace}/{rid.name}/resolve/{revision}/{filename}"

    def _get(self, url: str, **kwargs) -> requests.Response:
        try:
            response = self._session.get(url, timeout=self.request_timeout_s, **kwargs)
        except requests.RequestException as e:
            raise HubError(f"hub unreachable at {self.base_url}: {e}", retryable=True) from e
        if response.status_code >= 500:
            raise HubError(
                f"hub server error {response.status_code} for {url}", retryable=True
            )
        return response

    def _fetch_file(self, rid: RepoId, revision: str, filename: str) -> bytes:
        response = self._get(self._resolve_url(rid, revision, filename))
        if response.status_code == 404:
            raise RepoNotFoundError(f"{rid}: no {filename} at revision {revision!r} on the hub")
        if response.status_code != 200:
            raise HubError(
                f"hub returned {response.status_code} for {rid}/{filename}", retryable=False
            )
        return response.content

    # -- discovery ----------------------------------------------------------

    def search(self, type_filter: EffectType | None = None) -> list[ModelCard]:
        """Repos carrying the required tag; optionally filtered by effect type.

        With a type filter, each card's metadata is fetched (cached for 10
        minutes) and cards with missing or invalid metadata are excluded.
        """
        response = self._get(f"{self.base_url}/api/models", params={"filter": self.required_tag})
        if response.status_code != 200:
            raise HubError(f"hub search returned {response.status_code}", retryable=False)
        try:
            raw = response.json()
            assert isinstance(raw, list)
            items = [(str(r["id"]), list(r.get("tags", [])), list(r.get("files", []))) for r in raw]
        except (ValueError, AssertionError, KeyError, TypeError) as e:
            raise HubError(f"malformed hub response: {e}", retryable=False) from e

        cards = []
        for repo_id_text, tags, files in items:
            if self.required_tag not in tags:
                continue  # never surface an untagged card, whatever the hub claims
            try:
                rid = parse_repo_id(repo_id_text)
            except ValueError:
                log.warning("skipping hub card with invalid id %r", repo_id_text)
                continue
            card = ModelCard(rid, tuple(tags), tuple(files))
            if type_filter is not None:
                meta = self._cached_metadata(rid)
                if meta is None or meta.effect_type is not type_filter:
                    continue
                card = ModelCard(rid, tuple(tags), tuple(files), meta.effect_type, meta)
            cards.append(card)
        return cards

    def _cached_metadata(self, rid: RepoId) -> ModelMetadata | None:
        key = str(rid)
        now = time.monotonic()
        hit = self._metadata_cache.get(key)
        if hit is not None and hit[0] > now:
            return hit[1]
        try:
            meta = parse_metadata(
                self._fetch_file(rid, DEFAULT_REVISION, METADATA_FILE_NAME).decode("utf-8")
            )
        except (RepoNotFoundError, MetadataError, UnicodeDecodeError) as e:
            log.warning("metadata unavailable for %s: %s", rid, e)
            meta = None
        self._metadata_cache[key] = (now + METADATA_CACHE_TTL_S, meta)
        return meta

    def fetch_metadata(self, rid: RepoId, revision: str = DEFAULT_REVISION) -> ModelMetadata:
        """Uncached metadata fetch + validation (install preflight)."""
        return parse_metadata(self._fetch_file(rid, revision, METADATA_FILE_NAME).decode("utf-8"))

    # -- install / manage -----------------------------------------------------

    def _package_dir(self, rid: RepoId) -> Path:
        return self.cache_root / "models" / rid.namespace / rid.name

    def _lock_for(self, rid: RepoId) -> FileLock:
        locks = self.cache_root / "locks"
        locks.mkdir(parents=True, exist_ok=True)
        return FileLock(locks / f"{rid.namespace}__{rid.name}.lock")

    def install(
        self,
        repo_id: str | RepoId,
        revision: str | None = None,
        *,
        model_file_name: str = DEFAULT_MODEL_FILE,
        force: bool = False,
    ) -> ModelPackage:
        """Download, validate and atomically cache a model package.

        Re-installing an already-present revision is a no-op returning the
        existing package. Nothing is written unless every step succeeds.
        """
        rid = parse_repo_id(repo_id) if isinstance(repo_id, str) else repo_id
        revision = revision or DEFAULT_REVISION
        final_dir = self._package_dir(rid)

        with self._lock_for(rid):
            existing = self._load_package(final_dir) if final_dir.exists() else None
            if existing is not None and existing.revision == revision and not force:
                return existing

            metadata_text = self._fetch_file(rid, revision, METADATA_FILE_NAME).decode("utf-8")
            metadata = parse_metadata(metadata_text)  # aborts install before any write
            blob = self._fetch_file(rid, revision, model_file_name)
            digest = hashlib.sha256(blob).hexdigest()
            if existing is not None and existing.revision == revision and existing.sha256 != digest:
                raise IntegrityError(
                    f"{rid}@{revision}: fresh download digest {digest} does not match "
                    f"pinned {existing.sha256}"
                )

            manifest = {
                "repo_id": str(rid),
                "revision": revision,
                "sha256": digest,
                "model_file": model_file_name,
                "source_url": self._resolve_url(rid, revision, model_file_name),
                "installed_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            }

            staging = self.cache_root / "staging" / uuid.uuid4().hex
            staging.mkdir(parents=True)
            try:
                (staging / model_file_name).write_bytes(blob)
                (staging / METADATA_FILE_NAME).write_text(metadata_text, "utf-8")
                (staging / MANIFEST_FILE_NAME).write_text(json.dumps(manifest, indent=2), "utf-8")
                final_dir.parent.mkdir(parents=True, exist_ok=True)
                if final_dir.exists():
                    shutil.rmtree(final_dir)
                os.replace(staging, final_dir)
            finally:
                if staging.exists():
                    shutil.rmtree(staging, ignore_errors=True)

        package = self._load_package(final_dir)
        assert package is not None
        log.info("installed %s@%s (%s)", rid, revision, digest[:12])
        return package

    def _load_package(self, directory: Path) -> ModelPackage | None:
        try:
            manifest = json.loads((directory / MANIFEST_FILE_NAME).read_text("utf-8"))
            metadata = parse_metadata((directory / METADATA_FILE_NAME).read_text("utf-8"))
            model_file = directory / manifest["model_file"]
            if not model_file.is_file():
                raise FileNotFoundError(f"model blob {model_file} missing")
            return ModelPackage(
                repo_id=parse_repo_id(manifest["repo_id"]),
                revision=str(manifest["revision"]),
                metadata=metadata,
                model_file=model_file,
                sha256=str(manifest["sha256"]),
                installed_at=str(manifest["installed_at"]),
                source_url=str(manifest.get("source_url", "")),
            )
        except (OSError, ValueError, KeyError, MetadataError) as e:
            log.warning("corrupted package at %s: %s", directory, e)
            return None

    def list_installed(self) -> list[ModelPackage]:
        """Scan the cache; corrupted entries are skipped and logged."""
        models = self.cache_root / "models"
        packages = []
        if models.is_dir():
            for ns_dir in sorted(p for p in models.iterdir() if p.is_dir()):
                for repo_dir in sorted(p for p in ns_dir.iterdir() if p.is_dir()):
                    package = self._load_package(repo_dir)
                    if package is not None:
                        packages.append(package)
        return packages

    def get_installed(self, repo_id: str | RepoId) -> ModelPackage:
        rid = parse_repo_id(repo_id) if isinstance(repo_id, str) else repo_id
        directory = self._package_dir(rid)
        package = self._load_package(directory) if directory.exists() else None
        if package is None:
            raise NotInstalledError(f"model not installed: {rid}")
        return package

    def is_installed(self, repo_id: str | RepoId) -> bool:
        try:
            self.get_installed(repo_id)
            return True
        except NotInstalledError:
            return False

    def uninstall(self, repo_id: str | RepoId) -> None:
        rid = parse_repo_id(repo_id) if isinstance(repo_id, str) else repo_id
        directory = self._package_dir(rid)
        with self._lock_for(rid):
            if not directory.exists():
                raise NotInstalledError(f"model not installed: {rid}")
            shutil.rmtree(directory)

    def verify(self, repo_id: str | RepoId) -> ModelPackage:
        """Re-hash the stored blob against the manifest digest."""
        package = self.get_installed(repo_id)
        digest = hashlib.sha256(package.model_file.read_bytes()).hexdigest()
        if digest != package.sha256:
            raise IntegrityError(
                f"{package.repo_id}: blob digest {digest} does not match manifest {package.sha256}"
            )
        return package
