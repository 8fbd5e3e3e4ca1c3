"""Cross-component round trips: exporter output consumed by the compressor.

These tests require the ``xfam`` package (the consumer of the .attn wire
format and the /v1/attention endpoint) to be installed alongside.
"""

import socket
import threading
import time

import numpy as np
import pytest

xfam = pytest.importorskip("xfam")

from attnexport.dumpfmt import write_dump
from attnexport.export import collect_lookahead_attention, reduce_per_step
from attnexport.models import build_toy_model
from attnexport.service import create_app


@pytest.fixture(scope="module")
def toy_model():
    return build_toy_model(seed=0)


PROMPT = "the cat sat on the mat and then walked away to find a warm spot near the window"


def draft_ids(text: str) -> tuple[int, ...]:
    return tuple(text.encode("utf-8"))


class TestDumpRoundTrip:
    def test_primary_reader_parses_exporter_dump(self, toy_model, tmp_path):
        ids = draft_ids(PROMPT)
        tensor = collect_lookahead_attention(toy_model, ids, n_lookahead=2)
        path = tmp_path / "toy.attn"
        write_dump(path, tensor)
        attn = xfam.read_dump(path)
        assert attn.values.shape == (2, 2, 2, len(ids))
        np.testing.assert_array_equal(attn.values, tensor)

    def test_reduced_and_full_importance_identical(self, toy_model, tmp_path):
        ids = draft_ids(PROMPT)
        full = collect_lookahead_attention(toy_model, ids, n_lookahead=2)
        reduced = reduce_per_step(full)
        full_path = tmp_path / "full.attn"
        reduced_path = tmp_path / "reduced.attn"
        write_dump(full_path, full)
        write_dump(reduced_path, reduced)
        imp_full = xfam.aggregate_max_mean(xfam.read_dump(full_path))
        imp_reduced = xfam.aggregate_max_mean(xfam.read_dump(reduced_path))
        np.testing.assert_array_equal(imp_full, imp_reduced)

    def test_compress_end_to_end_at_half_keep(self, toy_model, tmp_path):
        ids = draft_ids(PROMPT)
        tensor = collect_lookahead_attention(toy_model, ids, n_lookahead=2)
        path = tmp_path / "toy.attn"
        write_dump(path, tensor)

        config = xfam.CompressionConfig(
            n_lookahead=2,
            chunk_size=8,
            pooling_kernel=5,
            keep=xfam.KeepRateSpec.fraction(0.5),
        )
        out = xfam.compress(
            PROMPT,
            config,
            xfam.FileProvider(str(path)),
            xfam.ByteTokenizer(),
            xfam.WhitespaceTokenizer(),
        )
        assert 0 < out.achieved_keep_rate <= 1.0
        assert out.position_ids == tuple(range(len(out.target_token_ids)))
        # kept text is a byte-level subsequence of the prompt
        pos = 0
        for segment in out.text.split(config.delimiter):
            found = PROMPT.find(segment, pos)
            assert found >= 0
            pos = found + len(segment)


@pytest.fixture(scope="module")
def live_server(toy_model):
    import uvicorn

    with socket.socket() as probe:
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]
    app = create_app(model=toy_model)
    server = uvicorn.Server(
        uvicorn.Config(app, host="127.0.0.1", port=port, log_level="warning")
    )
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 15
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("attention server did not start")
        time.sleep(0.05)
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5)


class TestHTTPProvider:
    def test_http_provider_round_trip(self, toy_model, live_server):
        ids = draft_ids("hello attention service")
        provider = xfam.HTTPProvider(live_server, draft_model_id="toy", reduction="full")
        req = xfam.AttentionRequest(ids, n_lookahead=2, reduction="full")
        served = provider.provide(req)
        local = collect_lookahead_attention(toy_model, ids, n_lookahead=2)
        np.testing.assert_array_equal(served.values, local)

    def test_compress_through_http_provider(self, live_server):
        provider = xfam.HTTPProvider(
            live_server, draft_model_id="toy", reduction="per-step-reduced"
        )
        config = xfam.CompressionConfig(
            n_lookahead=2,
            chunk_size=8,
            pooling_kernel=5,
            keep=xfam.KeepRateSpec.fraction(0.5),
        )
        out = xfam.compress(
            PROMPT, config, provider, xfam.ByteTokenizer(), xfam.WhitespaceTokenizer()
        )
        assert 0 < out.achieved_keep_rate <= 1.0
