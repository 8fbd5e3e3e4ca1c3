"""Keep-rate arithmetic and the end-to-end compression chain."""

import numpy as np
import pytest

from xfam.bench import find_token_span
from xfam.errors import (
    EmptySelectionError,
    InvalidConfigError,
    InvalidInputError,
    TransportError,
)
from xfam.pipeline import (
    CompressedPrompt,
    CompressionConfig,
    KeepRateSpec,
    assign_position_ids,
    compress,
    compute_keep_rate,
)
from xfam.providers import AttentionProvider, SyntheticProvider
from xfam.tokenizers import ByteTokenizer, WhitespaceTokenizer

from corpus import needle_sample, plain_sample
from reference import is_byte_subsequence


class TestKeepRateSpec:
    def test_exactly_one_mode(self):
        with pytest.raises(InvalidConfigError):
            KeepRateSpec(rho=0.5, target_tokens=100)
        with pytest.raises(InvalidConfigError):
            KeepRateSpec()

    def test_fraction_bounds(self):
        with pytest.raises(InvalidConfigError):
            KeepRateSpec.fraction(0.0)
        with pytest.raises(InvalidConfigError):
            KeepRateSpec.fraction(1.2)

    @pytest.mark.parametrize(
        "requested,block,expected",
        [(16384, 4096, 16384), (16000, 4096, 16384), (2048, 4096, 4096), (8000, 4096, 8192)],
    )
    def test_alignment_to_block_multiples(self, requested, block, expected):
        spec = KeepRateSpec.target_length(requested, block_align=block)
        aligned = spec.aligned_target()
        assert aligned == expected
        assert aligned % block == 0

    def test_alignment_disabled(self):
        assert KeepRateSpec.target_length(16000, block_align=None).aligned_target() == 16000


class TestComputeKeepRate:
    def test_code_debug_thirty_percent(self):
        spec = KeepRateSpec.target_length(33000, block_align=None)
        assert compute_keep_rate(110000, spec) == 0.30

    def test_ruler_twelve_point_five_percent(self):
        spec = KeepRateSpec.target_length(16000, block_align=None)
        assert compute_keep_rate(128000, spec) == 0.125

    def test_clamps_to_one_when_nothing_to_compress(self):
        spec = KeepRateSpec.target_length(5000, block_align=None)
        assert compute_keep_rate(4000, spec) == 1.0

    def test_fraction_passthrough(self):
        assert compute_keep_rate(1000, KeepRateSpec.fraction(0.25)) == 0.25

    def test_zero_target_len_rejected(self):
        with pytest.raises(InvalidInputError):
            compute_keep_rate(0, KeepRateSpec.fraction(0.5))


class TestAssignPositionIds:
    def test_empty(self):
        assert assign_position_ids(()) == ()

    def test_three(self):
        assert assign_position_ids((7, 8, 9)) == (0, 1, 2)

    def test_max_is_len_minus_one(self):
        ids = tuple(range(57))
        pos = assign_position_ids(ids)
        assert max(pos) == 56 and pos == tuple(range(57))


def word_config(rho, **kw):
    return CompressionConfig(keep=KeepRateSpec.fraction(rho), **kw)


class TestCompress:
    def test_full_keep_is_byte_identical(self):
        rng = np.random.default_rng(0)
        text = plain_sample(rng, 400)
        out = compress(
            text, word_config(1.0), SyntheticProvider(), WhitespaceTokenizer(), WhitespaceTokenizer()
        )
        assert out.text == text
        assert out.achieved_keep_rate == 1.0
        assert out.stats.delimiter_count == 0
        assert len(out.target_token_ids) == out.stats.target_tokens_original
        assert out.position_ids == tuple(range(len(out.target_token_ids)))

    def test_empty_prompt_rejected(self):
        with pytest.raises(InvalidInputError):
            compress("", word_config(0.5), SyntheticProvider(), WhitespaceTokenizer(), WhitespaceTokenizer())

    def test_short_prompt_returned_unchanged(self):
        out = compress(
            "only four words here",
            word_config(0.1),
            SyntheticProvider(),
            WhitespaceTokenizer(),
            WhitespaceTokenizer(),
        )
        assert out.text == "only four words here"
        assert out.achieved_keep_rate == 1.0

    def test_needle_survives_aggressive_compression(self):
        draft = WhitespaceTokenizer()
        retained = 0
        trials = 20
        for i in range(trials):
            rng = np.random.default_rng(1000 + i)
            text, needle, _ = needle_sample(rng, 1500)
            enc = draft.encode_with_offsets(text)
            start = text.encode("utf-8").find(needle.encode("utf-8"))
            span = find_token_span(enc, start, start + len(needle.encode("utf-8")))
            provider = SyntheticProvider(seed=i, needle_token_spans=(span,))
            out = compress(text, word_config(0.125), provider, draft, WhitespaceTokenizer())
            retained += needle in out.text
        assert retained == trials

    def test_cross_tokenizer_target_length_within_slack(self):
        draft = WhitespaceTokenizer()
        target = ByteTokenizer()
        rng = np.random.default_rng(7)
        text = plain_sample(rng, 1600)
        target_len = target.count_tokens(text)
        requested = round(0.5 * target_len)
        cfg = CompressionConfig(keep=KeepRateSpec.target_length(requested, block_align=None))
        out = compress(text, cfg, SyntheticProvider(seed=7), draft, target)
        assert abs(out.stats.target_tokens_compressed - requested) <= 0.1 * requested

    def test_deterministic(self):
        rng = np.random.default_rng(11)
        text = plain_sample(rng, 900)
        def run():
            return compress(
                text,
                word_config(0.3),
                SyntheticProvider(seed=3),
                WhitespaceTokenizer(),
                WhitespaceTokenizer(),
            )
        a, b = run(), run()
        assert a.text == b.text
        assert a.target_token_ids == b.target_token_ids
        assert a.draft_spans == b.draft_spans

    def test_delimiter_stripped_output_is_subsequence(self):
        rng = np.random.default_rng(13)
        text = plain_sample(rng, 800)
        out = compress(
            text, word_config(0.25), SyntheticProvider(seed=5), WhitespaceTokenizer(), ByteTokenizer()
        )
        segments = [seg.encode("utf-8") for seg in out.text.split("[...]")]
        assert is_byte_subsequence(segments, text.encode("utf-8"))

    def test_spans_sorted_disjoint(self):
        rng = np.random.default_rng(17)
        text = plain_sample(rng, 700)
        out = compress(
            text, word_config(0.4), SyntheticProvider(seed=2), WhitespaceTokenizer(), WhitespaceTokenizer()
        )
        spans = out.draft_spans.spans
        assert all(a < b for a, b in spans)
        assert all(spans[i][1] < spans[i + 1][0] for i in range(len(spans) - 1))

    def test_provider_errors_propagate(self):
        class Down(AttentionProvider):
            def provide(self, req):
                raise TransportError("no route", attempts=3)

        rng = np.random.default_rng(19)
        with pytest.raises(TransportError):
            compress(
                plain_sample(rng, 200),
                word_config(0.5),
                Down(),
                WhitespaceTokenizer(),
                WhitespaceTokenizer(),
            )

    def test_tiny_keep_rate_on_long_prompt_is_empty_selection(self):
        rng = np.random.default_rng(23)
        text = plain_sample(rng, 120)
        with pytest.raises(EmptySelectionError):
            compress(
                text,
                CompressionConfig(
                    chunk_size=4,
                    forced_tail_tokens=0,
                    keep=KeepRateSpec.fraction(0.001),
                ),
                SyntheticProvider(),
                WhitespaceTokenizer(),
                WhitespaceTokenizer(),
            )

    def test_question_at_end_kept_by_forced_tail(self):
        rng = np.random.default_rng(29)
        text, _, question = needle_sample(rng, 1200)
        out = compress(
            text,
            word_config(0.125),
            SyntheticProvider(seed=1),
            WhitespaceTokenizer(),
            WhitespaceTokenizer(),
        )
        assert question in out.text

    def test_reduced_and_full_providers_agree(self):
        rng = np.random.default_rng(31)
        text = plain_sample(rng, 600)
        full = compress(
            text, word_config(0.3), SyntheticProvider(seed=12, reduction="full"),
            WhitespaceTokenizer(), WhitespaceTokenizer(),
        )
        reduced = compress(
            text, word_config(0.3), SyntheticProvider(seed=12, reduction="per-step-reduced"),
            WhitespaceTokenizer(), WhitespaceTokenizer(),
        )
        assert full.text == reduced.text
        assert full.draft_spans == reduced.draft_spans

    def test_bos_pinned_outside_selection(self):
        draft = WhitespaceTokenizer(add_bos=True)
        rng = np.random.default_rng(37)
        text = plain_sample(rng, 500)
        out = compress(
            text, word_config(0.3), SyntheticProvider(seed=4), draft, WhitespaceTokenizer()
        )
        # spans are absolute draft-token indices; position 0 is the BOS
        assert all(start >= 1 for start, _ in out.draft_spans.spans)
        segments = [seg.encode("utf-8") for seg in out.text.split("[...]")]
        assert is_byte_subsequence(segments, text.encode("utf-8"))

    def test_target_length_mode_holds_compressed_len_fixed(self):
        draft = WhitespaceTokenizer()
        target = WhitespaceTokenizer()
        cfg = CompressionConfig(keep=KeepRateSpec.target_length(256, block_align=None))
        lengths = []
        rhos = []
        for i, n_words in enumerate((900, 1300, 1800)):
            rng = np.random.default_rng(100 + i)
            text = plain_sample(rng, n_words)
            out = compress(text, cfg, SyntheticProvider(seed=i), draft, target)
            lengths.append(out.stats.target_tokens_compressed)
            rhos.append(out.stats.rho_requested)
        assert len(set(rhos)) == len(rhos)  # per-sample rho varies with length
        for length in lengths:
            assert abs(length - 256) <= 0.15 * 256
