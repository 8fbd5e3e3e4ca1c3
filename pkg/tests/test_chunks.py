"""Partitioning, chunk scoring, budgeted selection, and span merging."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xfam.chunks import (
    SelectedSpans,
    merge_adjacent,
    partition,
    score_chunks,
    select_top_k,
)
from xfam.errors import (
    BudgetClampWarning,
    EmptySelectionError,
    InvalidConfigError,
    InvalidInputError,
)

from reference import naive_chunk_means, naive_select


class TestPartition:
    def test_exact_tiling(self):
        assert partition(96, 32) == [(0, 32), (32, 64), (64, 96)]

    def test_ragged_tail(self):
        assert partition(100, 32) == [(0, 32), (32, 64), (64, 96), (96, 100)]

    def test_shorter_than_one_chunk(self):
        assert partition(5, 32) == [(0, 5)]

    def test_zero_chunk_size_rejected(self):
        with pytest.raises(InvalidConfigError):
            partition(10, 0)


class TestScoreChunks:
    def test_two_chunk_means(self):
        scored = score_chunks(np.array([1.0, 1.0, 2.0, 2.0]), [(0, 2), (2, 4)])
        assert [c.score for c in scored] == [1.0, 2.0]

    def test_constant_scores(self):
        scored = score_chunks(np.full(10, 0.7), partition(10, 3))
        assert all(abs(c.score - 0.7) < 1e-12 for c in scored)

    def test_matches_naive_means(self):
        rng = np.random.default_rng(21)
        for _ in range(25):
            seq_len = int(rng.integers(1, 513))
            chunk = int(rng.integers(1, 64))
            scores = rng.random(seq_len)
            ranges = partition(seq_len, chunk)
            got = [c.score for c in score_chunks(scores, ranges)]
            want = naive_chunk_means(scores.tolist(), ranges)
            np.testing.assert_allclose(got, want, atol=1e-9)

    def test_out_of_range_rejected(self):
        with pytest.raises(InvalidInputError):
            score_chunks(np.ones(4), [(0, 5)])


def scored_chunks(scores, chunk_size):
    scores = np.asarray(scores, dtype=float)
    seq_len = scores.shape[0]
    return score_chunks(scores, partition(seq_len, chunk_size))


class TestSelectTopK:
    def test_equal_scores_tie_break_to_lower_index(self):
        chunks = scored_chunks(np.full(128, 0.5), 32)
        assert select_top_k(chunks, 64) == {0, 1}

    def test_top_two_by_score(self):
        scores = np.repeat([0.1, 0.9, 0.5, 0.8], 32)
        assert select_top_k(scored_chunks(scores, 32), 64) == {1, 3}

    def test_forced_tail_consumes_budget(self):
        scores = np.repeat([0.9, 0.8, 0.1, 0.0], 32)
        assert select_top_k(scored_chunks(scores, 32), 64, forced_tail_tokens=32) == {0, 3}

    def test_budget_above_seq_len_clamps_with_warning(self):
        chunks = scored_chunks(np.ones(64), 32)
        with pytest.warns(BudgetClampWarning):
            assert select_top_k(chunks, 100) == {0, 1}

    def test_zero_budget_rejected(self):
        with pytest.raises(InvalidConfigError):
            select_top_k(scored_chunks(np.ones(64), 32), 0)

    def test_matches_naive_selection(self):
        rng = np.random.default_rng(33)
        for _ in range(50):
            seq_len = int(rng.integers(4, 257))
            chunk = int(rng.integers(2, 48))
            scores = rng.random(seq_len)
            budget = int(rng.integers(1, seq_len + 1))
            tail = int(rng.integers(0, budget + 1))
            ranges = partition(seq_len, chunk)
            got = select_top_k(scored_chunks(scores, chunk), budget, tail)
            want = naive_select(
                naive_chunk_means(scores.tolist(), ranges), ranges, budget, tail
            )
            assert got == want

    def test_kept_token_bounds(self):
        rng = np.random.default_rng(44)
        for _ in range(50):
            seq_len = int(rng.integers(4, 300))
            chunk = int(rng.integers(1, 40))
            budget = int(rng.integers(1, seq_len + 1))
            chunks = scored_chunks(rng.random(seq_len), chunk)
            selected = select_top_k(chunks, budget)
            kept = sum(chunks[i].end - chunks[i].start for i in selected)
            assert min(budget, seq_len) <= kept <= budget + chunk - 1

    @given(st.data())
    @settings(max_examples=60, deadline=None)
    def test_raising_a_selected_score_never_evicts_it(self, data):
        n_chunks = data.draw(st.integers(2, 10))
        scores = data.draw(
            st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=n_chunks, max_size=n_chunks)
        )
        chunk = 4
        expanded = np.repeat(scores, chunk)
        budget = data.draw(st.integers(1, n_chunks * chunk))
        chunks = scored_chunks(expanded, chunk)
        selected = select_top_k(chunks, budget)
        victim = data.draw(st.sampled_from(sorted(selected)))
        boosted = list(scores)
        boosted[victim] += data.draw(st.floats(0.0, 2.0, allow_nan=False))
        reselected = select_top_k(scored_chunks(np.repeat(boosted, chunk), chunk), budget)
        assert victim in reselected

    @given(
        scale=st.floats(1e-3, 1e3, allow_nan=False),
        seed=st.integers(0, 10_000),
    )
    @settings(max_examples=40, deadline=None)
    def test_positive_scaling_keeps_selection(self, scale, seed):
        rng = np.random.default_rng(seed)
        scores = rng.random(96)
        budget = int(rng.integers(1, 97))
        base = select_top_k(scored_chunks(scores, 16), budget)
        scaled = select_top_k(scored_chunks(scores * scale, 16), budget)
        assert base == scaled

    def test_nested_across_budgets(self):
        rng = np.random.default_rng(55)
        scores = rng.random(256)
        chunks = scored_chunks(scores, 32)
        previous = set()
        for budget in range(8, 257, 8):
            current = select_top_k(chunks, budget)
            assert previous <= current
            previous = current


class TestMergeAdjacent:
    def test_merges_run_and_keeps_gap(self):
        ranges = partition(128, 32)
        spans = merge_adjacent({0, 1, 3}, ranges)
        assert spans.spans == ((0, 64), (96, 128))
        assert spans.kept_tokens == 96

    def test_singleton(self):
        assert merge_adjacent({2}, partition(128, 32)).spans == ((64, 96),)

    def test_all_chunks_become_one_span(self):
        ranges = partition(100, 32)
        assert merge_adjacent(set(range(len(ranges))), ranges).spans == ((0, 100),)

    def test_empty_selection_rejected(self):
        with pytest.raises(EmptySelectionError):
            merge_adjacent(set(), partition(64, 32))

    def test_token_order_preserved(self):
        rng = np.random.default_rng(66)
        for _ in range(30):
            seq_len = int(rng.integers(8, 200))
            chunk = int(rng.integers(1, 33))
            ranges = partition(seq_len, chunk)
            picked = {
                int(i) for i in rng.choice(len(ranges), size=rng.integers(1, len(ranges) + 1), replace=False)
            }
            spans = merge_adjacent(picked, ranges)
            flat = [t for a, b in spans.spans for t in range(a, b)]
            assert flat == sorted(flat)
            assert spans.kept_tokens == len(flat)

    def test_spans_validation(self):
        with pytest.raises(InvalidInputError):
            SelectedSpans(((0, 4), (4, 8)))  # adjacent, should have been merged
        with pytest.raises(InvalidInputError):
            SelectedSpans(((4, 4),))
