"""Fixture generation: determinism and model behavior."""

import numpy as np
import pytest
import torch

from wavehost_sidecar.models import (
    FIXTURE_SAMPLE_RATE,
    FIXTURES,
    LABELER_HOP,
    make_fixtures,
)


@pytest.fixture(scope="module")
def fixture_dirs(tmp_path_factory):
    out = tmp_path_factory.mktemp("fixtures")
    return {p.name: p for p in make_fixtures(out)}


def test_writes_three_repos(fixture_dirs):
    assert set(fixture_dirs) == {"gain-half", "stereo-echo", "threshold-labeler"}
    for repo in fixture_dirs.values():
        assert (repo / "model.pt").is_file()
        assert (repo / "metadata.json").is_file()


def test_gain_half_metadata(fixture_dirs):
    import json

    doc = json.loads((fixture_dirs["gain-half"] / "metadata.json").read_text())
    assert doc["effect_type"] == "waveform-to-waveform"
    assert doc["sample_rate"] == 16000


def test_gain_half_halves(fixture_dirs):
    graph = torch.jit.load(str(fixture_dirs["gain-half"] / "model.pt"))
    x = torch.rand(2, 500) * 2 - 1
    assert torch.equal(graph(x), x * 0.5)


def test_stereo_echo_impulse_delay(fixture_dirs):
    graph = torch.jit.load(str(fixture_dirs["stereo-echo"] / "model.pt"))
    n = FIXTURE_SAMPLE_RATE
    impulse = torch.zeros(1, n)
    impulse[0, 0] = 1.0
    out = graph(impulse)
    assert out.shape == (2, n)
    assert out[0, 0] == 1.0
    assert int(out[1].argmax()) == 1600  # 0.1 s at 16 kHz
    assert out[1, :1600].abs().max() == 0.0


def test_stereo_echo_short_input(fixture_dirs):
    graph = torch.jit.load(str(fixture_dirs["stereo-echo"] / "model.pt"))
    out = graph(torch.ones(1, 100))
    assert out.shape == (2, 100)
    assert out[1].abs().max() == 0.0  # shorter than the delay: all silence


def test_threshold_labeler_tuple_contract(fixture_dirs):
    graph = torch.jit.load(str(fixture_dirs["threshold-labeler"] / "model.pt"))
    rate = FIXTURE_SAMPLE_RATE
    t = torch.arange(rate, dtype=torch.float32) / rate
    x = torch.cat([torch.zeros(rate), torch.sin(2 * torch.pi * 440 * t)]).unsqueeze(0)
    indexes, stamps = graph(x)
    assert indexes.dtype == torch.long
    assert indexes.dim() == 1
    assert stamps.shape == (indexes.shape[0], 2)
    assert indexes.tolist() == [0, 1]
    assert abs(float(stamps[0, 1]) - 1.0) <= LABELER_HOP / rate


def test_regeneration_is_deterministic(tmp_path):
    first = {p.name: p for p in make_fixtures(tmp_path / "a")}
    second = {p.name: p for p in make_fixtures(tmp_path / "b")}

    for name in FIXTURES:
        meta_a = (first[name] / "metadata.json").read_bytes()
        meta_b = (second[name] / "metadata.json").read_bytes()
        assert meta_a == meta_b  # byte-identical metadata

        graph_a = torch.jit.load(str(first[name] / "model.pt"))
        graph_b = torch.jit.load(str(second[name] / "model.pt"))
        torch.manual_seed(0)
        x = torch.rand(1, 4096) * 2 - 1
        out_a, out_b = graph_a(x), graph_b(x)
        if isinstance(out_a, tuple):
            for a, b in zip(out_a, out_b):
                assert torch.allclose(a, b, atol=1e-7)
        else:
            assert torch.allclose(out_a, out_b, atol=1e-7)
