import io

import pytest

from faqforge import corpus, synthetic
from faqforge.candidates import ClassifierConfig
from faqforge.corpus import split_folds
from faqforge.evaluation import (
    ExperimentConfig,
    build_fold,
    make_query,
    render_table,
    run_experiment,
)
from faqforge.retrieval import rank
from faqforge.seq2seq import Seq2SeqConfig


@pytest.fixture(scope="module")
def toy_world():
    threads = synthetic.generate_threads(seed=23, threads=4)
    collection = corpus.load_faq(
        io.StringIO(synthetic.threads_to_json(threads)), format="stackfaq"
    )
    table = synthetic.generate_embeddings(seed=23)
    config = ExperimentConfig(
        folds=2,
        seed=23,
        algorithms=("tis2s", "gtis2s"),
        s2s=Seq2SeqConfig(encoder_units=64, epochs=60, batch_size=16, decoder_embed_dim=16),
        classifier=ClassifierConfig(units=32, dense_units=16, epochs=30, batch_size=16),
    )
    return collection, table, config


@pytest.fixture(scope="module")
def toy_result(toy_world):
    collection, table, config = toy_world
    return run_experiment(collection, table, config)


def test_report_structure(toy_world, toy_result):
    _, _, config = toy_world
    assert set(toy_result.per_fold) == {"tis2s", "gtis2s"}
    for algo, reports in toy_result.per_fold.items():
        assert len(reports) == config.folds
        for r in reports:
            assert 0.0 <= r.map <= 1.0
            assert set(r.p_at_k) == {2, 5}
            assert len(r.per_query) == 8  # 4 threads x 2 held-out per fold
    agg = toy_result.aggregate()
    assert agg["tis2s"]["folds"] == 2


def test_deterministic_reports(toy_world, toy_result):
    collection, table, config = toy_world
    again = run_experiment(collection, table, config)
    assert again.to_json() == toy_result.to_json()


def test_render_table_contains_algorithms(toy_result):
    text = render_table(toy_result)
    assert "tis2s" in text and "gtis2s" in text and "MAP" in text


def test_overfit_train_queries_reach_perfect_p1(toy_world):
    collection, table, config = toy_world
    split = split_folds(collection, config.train_frac, config.folds, config.seed)[0]
    artifacts = build_fold(collection, table, config, split)
    sub = artifacts.sub_collection
    hits = 0
    for entry in sub.entries:
        query = make_query(entry.question_text, artifacts.model, table)
        top = rank(query, artifacts.index, table, top_k=1).items[0]
        hits += sub.entry(top.entry_id).thread_id == entry.thread_id
    assert hits == sub.n  # P@1 == 1.0 over training-paraphrase queries


def test_paraphrase_limit_shrinks_training_collection(toy_world):
    collection, table, config = toy_world
    limited = ExperimentConfig(**{**config.__dict__, "max_train_paraphrases": 2})
    split = split_folds(collection, config.train_frac, config.folds, config.seed)[0]
    artifacts = build_fold(collection, table, limited, split)
    per_thread = {}
    for e in artifacts.sub_collection.entries:
        per_thread[e.thread_id] = per_thread.get(e.thread_id, 0) + 1
    assert all(count == 3 for count in per_thread.values())  # original + 2


def test_guided_and_unguided_share_result_universe(toy_world, toy_result):
    for algo, reports in toy_result.per_fold.items():
        for r in reports:
            for row in r.per_query:
                assert 0.0 <= row["ap"] <= 1.0
                assert 0.0 <= row["p_at_2"] <= 1.0
