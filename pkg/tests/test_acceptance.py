"""Acceptance suite: every release criterion at its stated tolerance.

Each test is one criterion; the terminal summary prints a pass/fail line
per criterion (see conftest). The whole suite runs against builtin
backends and the fixture hub only — no external sidecar, no real network.
"""

import hashlib
import io
import json
import math
import struct
import time

import numpy as np
import pytest

from wavehost.audio import Waveform, decode_wav, encode_wav, mixdown, resample
from wavehost.backends import BuiltinBackend, adlp, builtin_metadata
from wavehost.backends.builtins import LABELER_HOP, LABELER_THRESHOLD, energy_labeler
from wavehost.contract import (
    MAX_OUTPUT_TRACKS,
    AnalysisOutput,
    ContractViolation,
    EffectType,
    ModelMetadata,
    validate_analysis_output,
    validate_w2w_output,
)
from wavehost.engine import Engine, EngineConfig, apply_effect
from wavehost.hub import HubClient
from wavehost.testing import FixtureHub, builtin_repo_files

RNG_SEED = 20260809


def analyzer_meta(n_labels=4):
    return ModelMetadata(
        name="synthetic-analyzer",
        effect_type=EffectType.WAVEFORM_TO_LABELS,
        sample_rate=16000,
        short_description="synthetic",
        labels=tuple(f"class{i}" for i in range(n_labels)),
    )


def test_contract_enforcement_property():
    """Validators accept >=1000 conforming and reject >=1000 single-rule-violating
    outputs per contract, with zero misclassifications."""
    rng = np.random.default_rng(RNG_SEED)
    accepted = rejected = 0

    # waveform-to-waveform: conforming
    for _ in range(1000):
        rows = int(rng.integers(1, MAX_OUTPUT_TRACKS + 1))
        cols = int(rng.integers(1, 300))
        out = rng.uniform(-2, 2, size=(rows, cols))
        validate_w2w_output(2, cols, out)
        accepted += 1

    # waveform-to-waveform: one broken rule each
    w2w_mutations = ("rank", "zero_rows", "zero_cols", "too_many", "non_finite")
    for i in range(1000):
        rows = int(rng.integers(1, MAX_OUTPUT_TRACKS + 1))
        cols = int(rng.integers(1, 300))
        good = rng.uniform(-2, 2, size=(rows, cols))
        kind = w2w_mutations[i % len(w2w_mutations)]
        if kind == "rank":
            bad = good[0] if rng.integers(2) else good[np.newaxis]
        elif kind == "zero_rows":
            bad = good[:0]
        elif kind == "zero_cols":
            bad = good[:, :0]
        elif kind == "too_many":
            bad = np.zeros((MAX_OUTPUT_TRACKS + int(rng.integers(1, 5)), cols))
        else:
            bad = good.copy()
            bad[int(rng.integers(rows)), int(rng.integers(cols))] = (
                np.nan if rng.integers(2) else np.inf
            )
        with pytest.raises(ContractViolation):
            validate_w2w_output(2, cols, bad)
        rejected += 1

    # waveform-to-labels: conforming
    meta = analyzer_meta()
    duration = 8.0
    for _ in range(1000):
        t = int(rng.integers(1, 16))
        starts = np.sort(rng.uniform(0, duration, size=t))
        stops = np.minimum(starts + rng.uniform(0, 2.0, size=t), duration)
        out = AnalysisOutput(
            rng.integers(0, len(meta.labels), size=t), np.stack([starts, stops], axis=1)
        )
        normalized, _ = validate_analysis_output(meta, out, duration)
        assert len(normalized) == t
        accepted += 1

    # waveform-to-labels: one broken rule each
    labels_mutations = ("length", "index_high", "index_low", "neg_start", "start_after_stop")
    for i in range(1000):
        t = int(rng.integers(1, 16))
        starts = np.sort(rng.uniform(0, duration, size=t))
        stops = np.minimum(starts + rng.uniform(0, 2.0, size=t), duration)
        indexes = rng.integers(0, len(meta.labels), size=t)
        stamps = np.stack([starts, stops], axis=1)
        row = int(rng.integers(t))
        kind = labels_mutations[i % len(labels_mutations)]
        if kind == "length":
            bad = AnalysisOutput(np.append(indexes, 0), stamps)
        elif kind == "index_high":
            indexes[row] = len(meta.labels) + int(rng.integers(0, 3))
            bad = AnalysisOutput(indexes, stamps)
        elif kind == "index_low":
            indexes[row] = -1 - int(rng.integers(0, 3))
            bad = AnalysisOutput(indexes, stamps)
        elif kind == "neg_start":
            stamps[row, 0] = -float(rng.uniform(0.001, 1.0))
            bad = AnalysisOutput(indexes, stamps)
        else:
            stamps[row] = [stamps[row, 1] + float(rng.uniform(0.001, 1.0)), stamps[row, 0]]
            bad = AnalysisOutput(indexes, stamps)
        with pytest.raises(ContractViolation):
            validate_analysis_output(meta, bad, duration)
        rejected += 1

    assert accepted == 2000 and rejected == 2000


def test_audio_round_trip():
    """float32 encode-decode is bit-exact on 50 random fixtures; PCM16
    round-trip error is at most 2^-15 per sample."""
    rng = np.random.default_rng(RNG_SEED + 1)
    for _ in range(50):
        channels = int(rng.integers(1, 5))
        frames = int(rng.integers(1, 5000))
        rate = int(rng.choice([8000, 16000, 22050, 44100, 48000]))
        w = Waveform(rng.uniform(-1, 1, size=(channels, frames)).astype(np.float32), rate)

        assert decode_wav(encode_wav(w, "float32")) == w  # bit-exact

        back = decode_wav(encode_wav(w, "pcm16"))
        assert np.abs(back.samples - w.samples).max() <= 2.0**-15


def test_resampler_quality():
    """440 Hz sine, 44100 -> 16000: DFT peak within 1 bin of 440 Hz, SNR >= 60 dB
    excluding 10 ms edges; equal-rate resample is bit-exact."""
    rate_in, rate_out = 44100, 16000
    t = np.arange(rate_in) / rate_in
    w = Waveform(np.sin(2 * np.pi * 440 * t).astype(np.float32)[np.newaxis], rate_in)

    out = resample(w, rate_out)
    edge = int(0.010 * rate_out)
    y = out.samples[0].astype(np.float64)[edge:-edge]

    spectrum = np.abs(np.fft.rfft(y))
    bin_hz = rate_out / y.size
    assert abs(spectrum.argmax() * bin_hz - 440.0) <= bin_hz

    tt = (np.arange(out.frames) / rate_out)[edge:-edge]
    basis = np.stack([np.sin(2 * np.pi * 440 * tt), np.cos(2 * np.pi * 440 * tt)], axis=1)
    coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
    fit = basis @ coef
    snr_db = 10 * np.log10(np.mean(fit**2) / np.mean((y - fit) ** 2))
    assert snr_db >= 60.0

    same = resample(w, rate_in)
    assert same is w  # identity, bit-exact by construction


def test_separation_standin_band_split_pipeline():
    """builtin/band_split through the full apply_effect pipeline at equal rates:
    two tracks whose sum differs from the mixed-down input by <= 1e-6."""
    rate = 16000
    rng = np.random.default_rng(RNG_SEED + 2)
    stereo = rng.uniform(-0.9, 0.9, size=(2, rate)).astype(np.float32)
    w = Waveform(stereo, rate)

    meta = builtin_metadata("band_split", rate)
    tracks = apply_effect(meta, BuiltinBackend("band_split"), w)
    assert len(tracks) == 2
    assert all(track.sample_rate == rate for track in tracks)

    reference = mixdown(w).samples[0]
    total = tracks[0].samples[0] + tracks[1].samples[0]
    assert np.abs(total - reference).max() <= 1e-6


def test_analyzer_matches_rms_oracle():
    """builtin/energy_labeler matches an independent brute-force per-hop RMS
    oracle exactly; boundaries within one 1024-sample hop."""
    rate = 16000
    t = np.arange(rate) / rate
    x = np.concatenate([np.zeros(rate), np.sin(2 * np.pi * 440 * t)]).astype(np.float32)

    # brute-force oracle, written against the stated rule only
    spans = []
    hop = 0
    while hop * LABELER_HOP < x.size:
        seg = x[hop * LABELER_HOP : (hop + 1) * LABELER_HOP]
        rms = math.sqrt(sum(float(v) ** 2 for v in seg) / len(seg))
        cls = 1 if np.float32(rms) >= np.float32(LABELER_THRESHOLD) else 0
        start = hop * LABELER_HOP / rate
        end = min((hop + 1) * LABELER_HOP, x.size) / rate
        if spans and spans[-1][2] == cls:
            spans[-1] = (spans[-1][0], end, cls)
        else:
            spans.append((start, end, cls))
        hop += 1

    out = energy_labeler(x[np.newaxis], rate)
    assert [int(c) for c in out.class_indexes] == [cls for _, _, cls in spans]
    np.testing.assert_allclose(out.timestamps, [(s, e) for s, e, _ in spans], atol=0)
    assert len(out) == 2
    assert abs(out.timestamps[0, 1] - 1.0) <= LABELER_HOP / rate  # boundary within one hop


def test_hub_lifecycle_with_offline_run(tmp_path):
    """Search returns only tagged repos; install writes an atomic cache entry
    whose sha256 matches an independently computed digest; list/uninstall
    round-trips; an installed model runs with networking disabled."""
    with FixtureHub() as hub:
        hub.add_builtin_repo("builtinfixtures/gain-half", "gain_half")
        hub.add_builtin_repo("builtinfixtures/band-split", "band_split")
        hub.add_builtin_repo("acme/labeler", "energy_labeler")
        hub.add_repo("acme/untagged", ["unrelated"], builtin_repo_files("gain_half"))

        client = HubClient(hub.base_url, tmp_path / "cache")

        cards = client.search()
        assert {str(c.repo_id) for c in cards} == {
            "builtinfixtures/gain-half",
            "builtinfixtures/band-split",
            "acme/labeler",
        }
        assert all("audacity" in c.tags for c in cards)

        served_blob = builtin_repo_files("gain_half")["model.pt"]
        independent_digest = hashlib.sha256(served_blob).hexdigest()
        package = client.install("builtinfixtures/gain-half")
        assert package.sha256 == independent_digest
        manifest = json.loads((package.directory / "manifest.json").read_text())
        assert manifest["sha256"] == independent_digest
        assert hashlib.sha256(package.model_file.read_bytes()).hexdigest() == independent_digest
        staging = client.cache_root / "staging"
        assert not staging.exists() or list(staging.iterdir()) == []

        client.install("acme/labeler")
        assert {str(p.repo_id) for p in client.list_installed()} == {
            "builtinfixtures/gain-half",
            "acme/labeler",
        }
        client.uninstall("acme/labeler")
        assert {str(p.repo_id) for p in client.list_installed()} == {
            "builtinfixtures/gain-half"
        }

    # hub context closed: networking is gone.
    rate = 16000
    rng = np.random.default_rng(RNG_SEED + 3)
    w = Waveform(rng.uniform(-1, 1, size=(1, rate)).astype(np.float32), rate)
    engine = Engine(hub=client, config=EngineConfig())
    try:
        tracks = engine.apply_effect("builtinfixtures/gain-half", w)
    finally:
        engine.shutdown(wait=False)
    assert len(tracks) == 1
    np.testing.assert_allclose(tracks[0].samples, 0.5 * w.samples, atol=1e-6)


def test_throughput_at_paper_scale():
    """builtin/passthrough over 210 s of 44.1 kHz mono audio completes
    decode -> pipeline -> encode in under 10 s."""
    rate, seconds = 44100, 210
    t = np.arange(rate * seconds, dtype=np.float64) / rate
    source = Waveform((0.5 * np.sin(2 * np.pi * 440 * t)).astype(np.float32)[np.newaxis], rate)
    del t
    input_bytes = encode_wav(source, "float32")
    assert source.frames == 9_261_000

    started = time.perf_counter()
    w = decode_wav(input_bytes)
    meta = builtin_metadata("passthrough", w.sample_rate)
    tracks = apply_effect(meta, BuiltinBackend("passthrough"), w)
    output_bytes = encode_wav(tracks[0], "float32")
    elapsed = time.perf_counter() - started

    assert len(tracks) == 1
    assert tracks[0] == w
    assert len(output_bytes) > 4 * 9_000_000
    assert elapsed < 10.0, f"end-to-end took {elapsed:.2f} s"


def test_protocol_robustness_fuzz():
    """10,000 random/truncated ADLP frames produce typed protocol errors only:
    no crash, no hang."""
    rng = np.random.default_rng(RNG_SEED + 4)
    parsed = errors = 0
    started = time.monotonic()
    for i in range(10_000):
        raw = _fuzz_frame(rng, i)
        stream = io.BytesIO(raw)
        try:
            header, payload = adlp.read_frame(stream)
            if header.get("kind") == "labels":
                adlp.labels_from_frame(header)
            elif "shape" in header:
                adlp.audio_from_frame(header, payload)
            parsed += 1
        except adlp.ProtocolError:
            errors += 1
        # anything else would propagate and fail the test
    assert parsed + errors == 10_000
    assert errors > 0  # the corpus does contain garbage
    assert time.monotonic() - started < 60.0


def _fuzz_frame(rng, i):
    strategy = i % 5
    if strategy == 0:  # pure noise
        return rng.bytes(int(rng.integers(0, 128)))
    header = {
        "op": str(rng.choice(["hello", "forward", "result", "error", "noise", 7])),
        "payload_bytes": int(rng.integers(-16, 256)),
        "kind": str(rng.choice(["audio", "labels", "other"])),
        "shape": [int(v) for v in rng.integers(-4, 64, size=int(rng.integers(0, 4)))],
        "dtype": str(rng.choice(["f32le", "f64le", "i16"])),
        "layout": str(rng.choice(["channel_major", "frame_major"])),
        "class_indexes": [int(v) for v in rng.integers(-4, 8, size=int(rng.integers(0, 6)))],
        "timestamps": [
            [float(rng.uniform(-2, 5)), float(rng.uniform(-2, 5))]
            for _ in range(int(rng.integers(0, 6)))
        ],
    }
    body = json.dumps(header).encode()
    if strategy == 1:  # lying header length
        return b"ADLP" + struct.pack("<I", int(rng.integers(0, 2 * len(body)))) + body
    if strategy == 2:  # corrupted magic
        return rng.bytes(4) + struct.pack("<I", len(body)) + body
    frame = b"ADLP" + struct.pack("<I", len(body)) + body + rng.bytes(int(rng.integers(0, 256)))
    if strategy == 3:  # truncation at a random point
        return frame[: int(rng.integers(0, len(frame) + 1))]
    return frame  # well-formed framing, random semantics
