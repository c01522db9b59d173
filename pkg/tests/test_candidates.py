import numpy as np
import pytest

from faqforge.candidates import (
    CandidateClassifier,
    ClassifierConfig,
    pair_features,
    rank_guided,
    select_candidates,
    train_classifier,
)
from faqforge.corpus import DatasetSplit, build_relevance_matrix
from faqforge.embeddings import EmbeddingTable
from faqforge.errors import NoNegatives, NoPositives
from faqforge.faq_index import TranslatedEntry, TranslatedFaq
from faqforge.preprocess import TokenSequence, preprocess
from faqforge.retrieval import Query, canonical_keywords, rank

from conftest import DROPBOX_CLUSTER, GMAIL_CLUSTER, collection_from_clusters


def table_from(vectors):
    dim = len(next(iter(vectors.values())))
    return EmbeddingTable(
        dim=dim,
        vectors={k: np.asarray(v, dtype=np.float32) for k, v in vectors.items()},
        oov_policy="skip",
    )


def small_config(**overrides):
    base = dict(units=32, dense_units=16, dropout=0.1, batch_size=8, epochs=80, seed=3)
    base.update(overrides)
    return ClassifierConfig(**base)


@pytest.fixture(scope="module")
def toy_table():
    return EmbeddingTable(dim=16, vectors={}, oov_policy="hash-random")


@pytest.fixture(scope="module")
def toy_classifier(toy_table):
    collection = collection_from_clusters([DROPBOX_CLUSTER[:3], GMAIL_CLUSTER[:3]])
    matrix = build_relevance_matrix(collection)
    split = DatasetSplit(0, frozenset(range(collection.n)), frozenset())
    clf = train_classifier(
        collection, matrix, split, toy_table, seed=3, config=small_config()
    )
    return clf, collection, matrix, split


class TestPairFeatures:
    def test_identical_questions(self):
        table = table_from({"secure": [1.0, 0.2], "dropbox": [0.1, 0.9]})
        seq = TokenSequence(("secure", "dropbox"))
        f = pair_features(seq, seq, table)
        assert (f.entity_overlap, f.levenshtein_norm) == (1.0, 0.0)
        assert f.embedding_similarity == pytest.approx(1.0, abs=1e-6)

    def test_disjoint_questions(self, toy_table):
        f = pair_features(
            TokenSequence(("alpha", "beta")), TokenSequence(("gamma", "delta")), toy_table
        )
        assert f.entity_overlap == 0.0
        assert f.levenshtein_norm == 1.0

    def test_gas_tank_example(self):
        table = table_from(
            {
                "gas": [1.0, 0.0, 0.0],
                "fuel": [0.9, 0.1, 0.0],
                "tank": [0.0, 1.0, 0.0],
            }
        )
        q1, q2 = TokenSequence(("gas", "tank")), TokenSequence(("fuel", "tank"))
        f = pair_features(q1, q2, table)
        assert f.entity_overlap == pytest.approx(1.0 / 3.0)
        assert f.levenshtein_norm == pytest.approx(0.5)
        mean1 = (table.vectors["gas"] + table.vectors["tank"]) / 2
        mean2 = (table.vectors["fuel"] + table.vectors["tank"]) / 2
        expected = float(
            np.dot(mean1, mean2) / (np.linalg.norm(mean1) * np.linalg.norm(mean2))
        )
        assert f.embedding_similarity == pytest.approx(expected, abs=1e-6)

    def test_oov_sides_give_zero_cosine(self):
        table = table_from({"known": [1.0, 0.0]})
        f = pair_features(TokenSequence(("mystery",)), TokenSequence(("known",)), table)
        assert f.embedding_similarity == 0.0

    def test_empty_sequences(self, toy_table):
        f = pair_features(TokenSequence(()), TokenSequence(()), toy_table)
        assert (f.entity_overlap, f.levenshtein_norm, f.embedding_similarity) == (1.0, 0.0, 0.0)


class TestTrainClassifier:
    def test_overfits_toy_corpus(self, toy_classifier, toy_table):
        clf, collection, matrix, split = toy_classifier
        tokens = {
            e.entry_id: preprocess(e.question_text) for e in collection.entries
        }
        pairs, labels = [], []
        ids = sorted(split.train_ids)
        for i in range(len(ids)):
            for j in range(i + 1, len(ids)):
                pairs.append((tokens[ids[i]], tokens[ids[j]]))
                labels.append(int(matrix.m[ids[i], ids[j]]))
        probs = clf.score_pairs(pairs, toy_table)
        accuracy = np.mean((probs >= 0.5).astype(int) == np.array(labels))
        assert accuracy == 1.0

    def test_distribution_is_normalized(self, toy_classifier, toy_table):
        clf, collection, *_ = toy_classifier
        q1 = preprocess(collection.entry(0).question_text)
        q2 = preprocess(collection.entry(4).question_text)
        p_not, p_yes = clf.pair_distribution(q1, q2, toy_table)
        assert 0.0 <= p_yes <= 1.0
        assert p_not + p_yes == pytest.approx(1.0, abs=1e-6)

    def test_scoring_deterministic(self, toy_classifier, toy_table):
        clf, collection, *_ = toy_classifier
        pair = (
            preprocess(collection.entry(0).question_text),
            preprocess(collection.entry(1).question_text),
        )
        a = clf.score_pairs([pair], toy_table)
        b = clf.score_pairs([pair], toy_table)
        assert a.tobytes() == b.tobytes()

    def test_single_thread_has_no_negatives(self, toy_table):
        collection = collection_from_clusters([DROPBOX_CLUSTER])
        matrix = build_relevance_matrix(collection)
        split = DatasetSplit(0, frozenset(range(collection.n)), frozenset())
        with pytest.raises(NoNegatives):
            train_classifier(collection, matrix, split, toy_table, seed=0, config=small_config())

    def test_singleton_threads_have_no_positives(self, toy_table):
        collection = collection_from_clusters([["alpha question"], ["beta question"]])
        matrix = build_relevance_matrix(collection)
        split = DatasetSplit(0, frozenset(range(collection.n)), frozenset())
        with pytest.raises(NoPositives):
            train_classifier(collection, matrix, split, toy_table, seed=0, config=small_config())

    def test_checkpoint_roundtrip(self, toy_classifier, toy_table, tmp_path):
        clf, collection, *_ = toy_classifier
        path = tmp_path / "clf.ckpt"
        clf.save(path)
        loaded = CandidateClassifier.load(path)
        assert loaded.fingerprint() == clf.fingerprint()
        pair = (
            preprocess(collection.entry(0).question_text),
            preprocess(collection.entry(3).question_text),
        )
        assert loaded.score_pairs([pair], toy_table).tobytes() == clf.score_pairs(
            [pair], toy_table
        ).tobytes()


def make_query(text, keywords):
    return Query(
        raw_text=text,
        tokens=preprocess(text),
        predicted_keywords=canonical_keywords(keywords),
    )


class TestSelectCandidates:
    def test_k_limit_holds(self, toy_classifier, toy_table):
        clf, collection, *_ = toy_classifier
        query = make_query(DROPBOX_CLUSTER[1], ["dropbox", "security"])
        for k in (1, 2, 20):
            cs = select_candidates(clf, query, collection, k=k, table=toy_table)
            if not cs.fallback:
                assert len(cs.members) <= k

    def test_impossible_threshold_falls_back(self, toy_classifier, toy_table):
        clf, collection, *_ = toy_classifier
        query = make_query(DROPBOX_CLUSTER[1], ["dropbox"])
        cs = select_candidates(
            clf, query, collection, k=3, prob_threshold=1.0, table=toy_table
        )
        assert cs.fallback
        assert len(cs.members) == collection.n

    def test_overfit_classifier_selects_own_thread(self, toy_classifier, toy_table):
        clf, collection, *_ = toy_classifier
        query = make_query(DROPBOX_CLUSTER[2], ["dropbox", "security"])
        cs = select_candidates(clf, query, collection, k=20, table=toy_table)
        thread0 = set(collection.thread_members(0))
        assert thread0 <= cs.member_ids()

    def test_members_pass_threshold(self, toy_classifier, toy_table):
        clf, collection, *_ = toy_classifier
        query = make_query(GMAIL_CLUSTER[1], ["gmail"])
        cs = select_candidates(clf, query, collection, k=20, prob_threshold=0.5, table=toy_table)
        if not cs.fallback:
            assert all(p >= 0.5 for _, p in cs.members)


def guided_index():
    return TranslatedFaq(
        tuples=(
            TranslatedEntry(0, "secure data on dropbox", ("dropbox", "security"), "a0"),
            TranslatedEntry(1, "dropbox threats", ("dropbox", "security"), "a1"),
            TranslatedEntry(2, "split gmail conversation", ("conversation", "gmail"), "a2"),
            TranslatedEntry(3, "share spotify playlist", ("playlist", "spotify"), "a3"),
        ),
        model_fingerprint="stub",
    )


class _StubClassifier:
    """Scripted pair scores keyed by index position."""

    def __init__(self, probs):
        self.probs = np.asarray(probs, dtype=np.float64)
        self.calls = 0

    def score_pairs(self, pairs, table, batch_size=512):
        self.calls += 1
        return self.probs[: len(pairs)]


class TestRankGuided:
    def test_always_accept_equals_unguided(self, toy_table):
        index = guided_index()
        query = make_query("is my data safe on dropbox", ["dropbox", "security"])
        stub = _StubClassifier([0.9, 0.9, 0.9, 0.9])
        guided = rank_guided(
            query, index, stub, toy_table, k=len(index.tuples), prob_threshold=0.0
        )
        unguided = rank(query, index, toy_table)
        assert guided == unguided

    def test_non_candidates_appended_by_probability(self, toy_table):
        index = guided_index()
        query = make_query("splitting a conversation", ["conversation", "gmail"])
        stub = _StubClassifier([0.2, 0.4, 0.9, 0.1])
        guided = rank_guided(query, index, stub, toy_table, k=1, prob_threshold=0.5)
        # candidate prefix: only entry 2; tail ordered by probability desc: 1, 0, 3
        assert guided.entry_ids() == [2, 1, 0, 3]

    def test_excluded_thread_lands_in_tail(self, toy_table):
        index = guided_index()
        query = make_query("secure dropbox", ["dropbox", "security"])
        stub = _StubClassifier([0.1, 0.2, 0.9, 0.8])  # classifier wrongly rejects thread 0
        guided = rank_guided(query, index, stub, toy_table, k=2, prob_threshold=0.5)
        assert guided.entry_ids()[:2] == [2, 3]
        assert set(guided.entry_ids()[2:]) == {0, 1}

    def test_fallback_reduces_to_unguided(self, toy_table):
        index = guided_index()
        query = make_query("secure dropbox", ["dropbox", "security"])
        stub = _StubClassifier([0.1, 0.1, 0.1, 0.1])
        guided = rank_guided(query, index, stub, toy_table, k=2, prob_threshold=0.99)
        assert guided == rank(query, index, toy_table)
