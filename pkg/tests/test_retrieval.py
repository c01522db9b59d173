import itertools
import math
from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from faqforge.embeddings import EmbeddingTable
from faqforge.errors import EmptyBag, EmptyIndex
from faqforge.faq_index import TranslatedEntry, TranslatedFaq
from faqforge.preprocess import TokenSequence
from faqforge.retrieval import (
    DistanceCache,
    Query,
    canonical_keywords,
    combined_distance,
    rank,
    token_levenshtein,
    wmd,
)


def bfs_edit_distance(a, b, alphabet):
    """Oracle: breadth-first search over single-token edits.

    Some optimal edit path keeps intermediate lengths within max(|a|, |b|),
    so capping the explored length bounds the state space without changing
    the distance.
    """
    cap = max(len(a), len(b)) + 1
    start, goal = tuple(a), tuple(b)
    seen = {start}
    frontier = deque([(start, 0)])
    while frontier:
        state, dist = frontier.popleft()
        if state == goal:
            return dist
        neighbors = []
        for i in range(len(state)):
            neighbors.append(state[:i] + state[i + 1 :])  # delete
            for sym in alphabet:
                if sym != state[i]:
                    neighbors.append(state[:i] + (sym,) + state[i + 1 :])  # substitute
        if len(state) < cap:
            for i in range(len(state) + 1):
                for sym in alphabet:
                    neighbors.append(state[:i] + (sym,) + state[i:])  # insert
        for nxt in neighbors:
            if nxt not in seen:
                seen.add(nxt)
                frontier.append((nxt, dist + 1))
    raise AssertionError("BFS exhausted without reaching the goal")


def enumerate_wmd(vec_a, vec_b):
    """Oracle: replicate bags to a common count and enumerate all assignments."""
    m, n = len(vec_a), len(vec_b)
    lcm = math.lcm(m, n)
    left = [vec_a[i // (lcm // m)] for i in range(lcm)]
    right = [vec_b[j // (lcm // n)] for j in range(lcm)]
    best = math.inf
    for perm in itertools.permutations(range(lcm)):
        cost = sum(np.linalg.norm(left[i] - right[perm[i]]) for i in range(lcm))
        best = min(best, cost / lcm)
    return best


def unit(v):
    v = np.asarray(v, dtype=np.float32)
    return v / np.linalg.norm(v)


def as_unit64(v):
    """The float64 renormalization wmd applies to stored float32 vectors."""
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


def table_from(vectors):
    dim = len(next(iter(vectors.values())))
    return EmbeddingTable(
        dim=dim, vectors={k: np.asarray(v, dtype=np.float32) for k, v in vectors.items()},
        oov_policy="skip",
    )


class TestTokenLevenshtein:
    def test_identical(self):
        assert token_levenshtein(["dropbox", "security"], ["dropbox", "security"]) == 0

    def test_single_substitution(self):
        assert token_levenshtein(["dropbox", "security"], ["dropbox", "threat"]) == 1

    def test_shift_by_one(self):
        assert token_levenshtein(["a", "b", "c"], ["b", "c", "d"]) == 2

    def test_empty_sides(self):
        assert token_levenshtein([], ["x", "y"]) == 2
        assert token_levenshtein(["x"], []) == 1
        assert token_levenshtein([], []) == 0

    def test_exhaustive_against_bfs_oracle(self):
        alphabet = ("a", "b")
        seqs = [
            seq
            for length in range(0, 5)
            for seq in itertools.product(alphabet, repeat=length)
        ]
        for a in seqs:
            for b in seqs:
                assert token_levenshtein(a, b) == bfs_edit_distance(a, b, alphabet)

    tokens = st.lists(st.sampled_from(["a", "b", "c"]), max_size=4)

    @given(tokens, tokens, tokens)
    def test_metric_properties(self, a, b, c):
        assert token_levenshtein(a, a) == 0
        assert token_levenshtein(a, b) == token_levenshtein(b, a)
        assert token_levenshtein(a, c) <= token_levenshtein(a, b) + token_levenshtein(b, c)
        if a != b:
            assert token_levenshtein(a, b) > 0


class TestWmd:
    def test_identical_bags_zero(self):
        table = table_from({"x": unit([1, 2]), "y": unit([3, -1])})
        assert wmd(["x", "y"], ["x", "y"], table) == pytest.approx(0.0, abs=1e-12)

    def test_single_word_bags(self):
        table = table_from({"u": [1.0, 0.0], "v": [0.0, 1.0]})
        assert wmd(["u"], ["v"], table) == pytest.approx(math.sqrt(2.0))

    def test_two_by_two_matches_plan_enumeration(self):
        vectors = {
            "a": unit([1, 0, 0]),
            "b": unit([0, 1, 0]),
            "c": unit([1, 1, 0]),
            "d": unit([0, 0, 1]),
        }
        table = table_from(vectors)
        got = wmd(["a", "b"], ["c", "d"], table)
        expected = enumerate_wmd(
            [as_unit64(vectors["a"]), as_unit64(vectors["b"])],
            [as_unit64(vectors["c"]), as_unit64(vectors["d"])],
        )
        assert got == pytest.approx(expected, abs=1e-9)

    def test_small_bags_match_enumeration_oracle(self):
        rng = np.random.default_rng(7)
        for trial in range(30):
            m, n = int(rng.integers(1, 4)), int(rng.integers(1, 4))
            names_a = [f"a{i}" for i in range(m)]
            names_b = [f"b{j}" for j in range(n)]
            vectors = {
                name: unit(rng.standard_normal(4)) for name in names_a + names_b
            }
            table = table_from(vectors)
            got = wmd(names_a, names_b, table)
            expected = enumerate_wmd(
                [as_unit64(vectors[n_]) for n_ in names_a],
                [as_unit64(vectors[n_]) for n_ in names_b],
            )
            assert got == pytest.approx(expected, abs=1e-9), f"trial {trial}"

    def test_symmetry_and_self_distance(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            names = [f"w{i}" for i in range(4)]
            table = table_from({n: unit(rng.standard_normal(5)) for n in names})
            a, b = names[:2], names[1:]
            assert wmd(a, b, table) == pytest.approx(wmd(b, a, table), abs=1e-9)
            assert wmd(a, a, table) == pytest.approx(0.0, abs=1e-12)

    def test_centroid_lower_bound(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            m, n = int(rng.integers(1, 5)), int(rng.integers(1, 5))
            names_a = [f"a{i}" for i in range(m)]
            names_b = [f"b{j}" for j in range(n)]
            vectors = {name: unit(rng.standard_normal(6)) for name in names_a + names_b}
            table = table_from(vectors)
            centroid_gap = np.linalg.norm(
                np.mean([as_unit64(vectors[x]) for x in names_a], axis=0)
                - np.mean([as_unit64(vectors[x]) for x in names_b], axis=0)
            )
            assert wmd(names_a, names_b, table) >= centroid_gap - 1e-9

    def test_empty_bag_raises(self):
        table = table_from({"x": [1.0, 0.0]})
        with pytest.raises(EmptyBag):
            wmd(["unknown"], ["x"], table)


class TestCombinedDistance:
    def test_identical_sequences_zero(self, hash_table):
        assert combined_distance(["a", "b"], ["b", "a"], hash_table) == 0.0

    def test_orthogonal_singletons(self):
        table = table_from({"x": [1.0, 0.0], "y": [0.0, 1.0]})
        got = combined_distance(["x"], ["y"], table)
        assert got == pytest.approx(0.5 * (math.sqrt(2) / 2) + 0.5 * 1.0)

    def test_empty_rules(self):
        table = table_from({"a": [1.0, 0.0], "b": [0.0, 1.0]})
        assert combined_distance([], [], table) == 0.0
        assert combined_distance([], ["a", "b"], table) == 1.0
        assert combined_distance(["a"], [], table) == 1.0

    def test_all_oov_side_scores_by_edit_distance_only(self):
        # an in-vocab empty side vs an all-OOV side: both bags are empty after
        # skipping, so only the edit-distance half contributes
        table = table_from({"a": [1.0, 0.0]})
        assert combined_distance([], ["zz", "qq"], table) == 0.5

    def test_identical_oov_sequences(self):
        table = table_from({"x": [1.0, 0.0]})
        # every token OOV under skip: both bags empty, sequences identical
        assert combined_distance(["q", "z"], ["q", "z"], table) == 0.0

    words = st.lists(st.sampled_from([f"w{i}" for i in range(8)]), max_size=6)

    @settings(max_examples=60)
    @given(words, words)
    def test_bounded_and_symmetric(self, a, b):
        table = EmbeddingTable(dim=8, vectors={}, oov_policy="hash-random")
        d = combined_distance(a, b, table)
        assert 0.0 <= d <= 1.0
        assert d == pytest.approx(combined_distance(b, a, table), abs=1e-12)


def toy_index():
    entries = [
        TranslatedEntry(0, "q0", canonical_keywords(["dropbox", "security"]), "a0"),
        TranslatedEntry(1, "q1", canonical_keywords(["gmail", "conversation"]), "a1"),
        TranslatedEntry(2, "q2", canonical_keywords(["dropbox", "security"]), "a2"),
        TranslatedEntry(3, "q3", canonical_keywords(["spotify", "playlist"]), "a3"),
    ]
    return TranslatedFaq(tuples=tuple(entries), model_fingerprint="test")


def make_query(keywords):
    return Query(
        raw_text=" ".join(keywords),
        tokens=TokenSequence(tokens=tuple(keywords)),
        predicted_keywords=canonical_keywords(keywords),
    )


class TestRank:
    def test_exact_match_first_and_tie_break(self, hash_table):
        result = rank(make_query(["dropbox", "security"]), toy_index(), hash_table)
        assert result.entry_ids()[:2] == [0, 2]  # distance 0, tie by entry id
        assert result.items[0].distance == 0.0
        dists = [it.distance for it in result.items]
        assert dists == sorted(dists)

    def test_top_k_truncation(self, hash_table):
        result = rank(make_query(["dropbox"]), toy_index(), hash_table, top_k=2)
        assert len(result) == 2

    def test_keyword_order_invariance(self, hash_table):
        a = rank(make_query(["security", "dropbox"]), toy_index(), hash_table)
        b = rank(make_query(["dropbox", "security"]), toy_index(), hash_table)
        assert a == b

    def test_empty_index_raises(self, hash_table):
        with pytest.raises(EmptyIndex):
            rank(make_query(["x"]), TranslatedFaq(tuples=(), model_fingerprint="t"), hash_table)

    def test_cache_consistent(self, hash_table):
        cache = DistanceCache(hash_table)
        q = make_query(["dropbox", "security"])
        assert rank(q, toy_index(), hash_table, cache=cache) == rank(q, toy_index(), hash_table)
