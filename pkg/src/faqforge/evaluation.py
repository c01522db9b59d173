"""MAP / P@k metrics and the cross-validation experiment runner.

The runner reproduces the evaluation protocol end to end: per fold it trains
keywords, the translation model, and (for the guided variant) the pair
classifier on the train split only, indexes the train entries, and evaluates
every held-out paraphrase as a query. A test query's relevant set is its
whole thread as present in the index; the query's own held-out pair is never
indexed.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from .candidates import ClassifierConfig, rank_guided, train_classifier
from .corpus import (
    DatasetSplit,
    FaqCollection,
    build_relevance_matrix,
    split_folds,
    subset,
)
from .embeddings import EmbeddingTable
from .errors import EmptyRelevantSet
from .faq_index import translate_faq
from .keywords import compute_tfidf, extract_keywords, group_questions
from .preprocess import PreprocessResources, preprocess
from .retrieval import DistanceCache, Query, canonical_keywords, rank
from .seq2seq import Seq2SeqConfig, build_training_set, train

TIS2S = "tis2s"
GTIS2S = "gtis2s"

# Published comparison constants for the report table (not re-implemented).
REFERENCE_BASELINES = {
    "cnn-rank": {"map": 0.74, "p_at_5": 0.62},
    "tsu-bert": {"map": 0.897, "p_at_5": 0.776},
    "bert": {"map": 0.614, "p_at_5": 0.583},
    "roberta": {"map": 0.712, "p_at_5": 0.796},
    "sbert": {"map": 0.686, "p_at_5": 0.774},
}


def average_precision(ranked: Sequence[int], relevant: set[int]) -> float:
    """Mean of precision at each relevant hit position."""
    if not relevant:
        raise EmptyRelevantSet("relevant set is empty")
    missing = relevant - set(ranked)
    if missing:
        raise ValueError(f"ranking does not contain relevant ids {sorted(missing)}")
    hits = 0
    precisions = []
    for pos, eid in enumerate(ranked, start=1):
        if eid in relevant:
            hits += 1
            precisions.append(hits / pos)
    return float(sum(precisions) / len(relevant))


def precision_at_k(ranked: Sequence[int], relevant: set[int], k: int) -> float:
    """Fraction of the top-k results that are relevant."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return len([eid for eid in ranked[:k] if eid in relevant]) / k


@dataclass(frozen=True)
class ExperimentConfig:
    tau: float = 0.15
    folds: int = 5
    train_frac: float = 0.8
    seed: int = 0
    candidate_k: int = 20
    prob_threshold: float = 0.5
    algorithms: tuple[str, ...] = (TIS2S, GTIS2S)
    p_at_ks: tuple[int, ...] = (2, 5)
    max_train_paraphrases: int | None = None
    s2s: Seq2SeqConfig = field(default_factory=Seq2SeqConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)

    def snapshot(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class MetricsReport:
    """Per-fold metrics for one algorithm, plus the producing configuration."""

    algorithm: str
    fold_index: int
    map: float
    p_at_k: dict[int, float]
    per_query: tuple[dict, ...]
    config_snapshot: dict


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    per_fold: dict[str, tuple[MetricsReport, ...]]

    def aggregate(self) -> dict[str, dict]:
        out = {}
        for algo, reports in self.per_fold.items():
            out[algo] = {
                "map": float(np.mean([r.map for r in reports])),
                "p_at_k": {
                    k: float(np.mean([r.p_at_k[k] for r in reports]))
                    for k in self.config.p_at_ks
                },
                "folds": len(reports),
            }
        return out

    def to_json(self) -> str:
        payload = {
            "config": self.config.snapshot(),
            "aggregate": self.aggregate(),
            "per_fold": {
                algo: [
                    {
                        "fold_index": r.fold_index,
                        "map": r.map,
                        "p_at_k": {str(k): v for k, v in r.p_at_k.items()},
                        "per_query": list(r.per_query),
                    }
                    for r in reports
                ]
                for algo, reports in self.per_fold.items()
            },
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def render_table(result: ExperimentResult, include_baselines: bool = True) -> str:
    """Plain-text results table in the familiar approaches/MAP/P@5 layout."""
    agg = result.aggregate()
    rows = []
    if include_baselines:
        for name, vals in REFERENCE_BASELINES.items():
            rows.append((f"{name} (reported)", vals["map"], vals["p_at_5"]))
    for algo in result.per_fold:
        p5 = agg[algo]["p_at_k"].get(5)
        rows.append((algo, agg[algo]["map"], p5))
    width = max(len(r[0]) for r in rows)
    lines = [f"{'approach'.ljust(width)}  {'MAP':>6}  {'P@5':>6}"]
    lines.append("-" * (width + 16))
    for name, m, p5 in rows:
        p5_txt = f"{p5:.3f}" if p5 is not None else "   - "
        lines.append(f"{name.ljust(width)}  {m:6.3f}  {p5_txt:>6}")
    return "\n".join(lines) + "\n"


def _limit_paraphrases(
    collection: FaqCollection,
    split: DatasetSplit,
    limit: int,
    rng: np.random.Generator,
) -> set[int]:
    """Train ids reduced to the original plus `limit` paraphrases per thread."""
    keep: set[int] = set()
    by_thread: dict[int, list[int]] = {}
    for eid in sorted(split.train_ids):
        e = collection.entry(eid)
        if not e.is_paraphrase:
            keep.add(eid)
        else:
            by_thread.setdefault(e.thread_id, []).append(eid)
    for tid in sorted(by_thread):
        paras = by_thread[tid]
        order = rng.permutation(len(paras))
        keep.update(paras[i] for i in order[:limit])
    return keep


@dataclass
class FoldArtifacts:
    """Everything trained for one fold, reusable across query evaluations."""

    sub_collection: FaqCollection
    kept_ids: tuple[int, ...]
    model: object
    index: object
    classifier: object | None
    entry_tokens: list
    cache: DistanceCache


def build_fold(
    collection: FaqCollection,
    table: EmbeddingTable,
    config: ExperimentConfig,
    split: DatasetSplit,
    resources: PreprocessResources | None = None,
    need_classifier: bool | None = None,
) -> FoldArtifacts:
    """Train all per-fold artifacts on the (possibly paraphrase-limited) train set."""
    fold = split.fold_index
    train_ids: set[int] = set(split.train_ids)
    if config.max_train_paraphrases is not None:
        rng = np.random.default_rng(config.seed + 5000 + fold)
        train_ids = _limit_paraphrases(collection, split, config.max_train_paraphrases, rng)

    sub, kept = subset(collection, train_ids)
    matrix = build_relevance_matrix(sub)
    groups = group_questions(matrix, sub, resources)
    tfidf = compute_tfidf(groups)
    keyword_sets = extract_keywords(tfidf, config.tau)

    all_train = DatasetSplit(
        fold_index=fold,
        train_ids=frozenset(e.entry_id for e in sub.entries),
        test_ids=frozenset(),
    )
    examples = build_training_set(sub, groups, keyword_sets, all_train, resources)
    s2s_cfg = replace(config.s2s, seed=config.seed + fold)
    model = train(s2s_cfg, examples, table)
    index = translate_faq(model, sub, table, resources)

    if need_classifier is None:
        need_classifier = GTIS2S in config.algorithms
    classifier = None
    if need_classifier:
        clf_cfg = replace(config.classifier, seed=config.seed + 1000 + fold)
        classifier = train_classifier(
            sub, matrix, all_train, table, clf_cfg.seed, config=clf_cfg, resources=resources
        )

    entry_tokens = [
        preprocess(e.question_text, resources, source_entry_id=e.entry_id) for e in sub.entries
    ]
    return FoldArtifacts(
        sub_collection=sub,
        kept_ids=kept,
        model=model,
        index=index,
        classifier=classifier,
        entry_tokens=entry_tokens,
        cache=DistanceCache(table),
    )


def make_query(
    raw_text: str,
    model,
    table: EmbeddingTable,
    resources: PreprocessResources | None = None,
) -> Query:
    tokens = preprocess(raw_text, resources)
    predicted = model.predict(tokens, table)
    return Query(
        raw_text=raw_text, tokens=tokens, predicted_keywords=canonical_keywords(predicted)
    )


def evaluate_fold(
    collection: FaqCollection,
    table: EmbeddingTable,
    config: ExperimentConfig,
    split: DatasetSplit,
    artifacts: FoldArtifacts,
    resources: PreprocessResources | None = None,
) -> dict[str, MetricsReport]:
    """Score every held-out query of one fold under each requested algorithm."""
    sub = artifacts.sub_collection
    relevant_by_thread: dict[int, set[int]] = {}
    for e in sub.entries:
        relevant_by_thread.setdefault(e.thread_id, set()).add(e.entry_id)

    test_ids = sorted(split.test_ids)
    test_tokens = [
        preprocess(collection.entry(eid).question_text, resources, source_entry_id=eid)
        for eid in test_ids
    ]
    predictions = artifacts.model.predict_batch(test_tokens, table)

    per_algo_rows: dict[str, list[dict]] = {algo: [] for algo in config.algorithms}
    for eid, tokens, predicted in zip(test_ids, test_tokens, predictions):
        entry = collection.entry(eid)
        relevant = relevant_by_thread.get(entry.thread_id)
        if not relevant:
            raise EmptyRelevantSet(f"thread {entry.thread_id} has no indexed entries")
        query = Query(
            raw_text=entry.question_text,
            tokens=tokens,
            predicted_keywords=canonical_keywords(predicted),
        )
        for algo in config.algorithms:
            if algo == TIS2S:
                ranked = rank(query, artifacts.index, table, cache=artifacts.cache)
            elif algo == GTIS2S:
                ranked = rank_guided(
                    query,
                    artifacts.index,
                    artifacts.classifier,
                    table,
                    k=config.candidate_k,
                    prob_threshold=config.prob_threshold,
                    entry_tokens=artifacts.entry_tokens,
                    cache=artifacts.cache,
                )
            else:
                raise ValueError(f"unknown algorithm {algo!r}")
            ids = ranked.entry_ids()
            row = {
                "query_entry_id": eid,
                "ap": average_precision(ids, relevant),
            }
            for k in config.p_at_ks:
                row[f"p_at_{k}"] = precision_at_k(ids, relevant, k)
            per_algo_rows[algo].append(row)

    reports = {}
    snapshot = config.snapshot()
    for algo, rows in per_algo_rows.items():
        reports[algo] = MetricsReport(
            algorithm=algo,
            fold_index=split.fold_index,
            map=float(np.mean([r["ap"] for r in rows])),
            p_at_k={
                k: float(np.mean([r[f"p_at_{k}"] for r in rows])) for k in config.p_at_ks
            },
            per_query=tuple(rows),
            config_snapshot=snapshot,
        )
    return reports


def run_experiment(
    collection: FaqCollection,
    table: EmbeddingTable,
    config: ExperimentConfig,
    resources: PreprocessResources | None = None,
    splits: Sequence[DatasetSplit] | None = None,
) -> ExperimentResult:
    """Full cross-validation protocol; deterministic given config and seed."""
    if splits is None:
        splits = split_folds(collection, config.train_frac, config.folds, config.seed)
    per_fold: dict[str, list[MetricsReport]] = {algo: [] for algo in config.algorithms}
    for split in splits:
        artifacts = build_fold(collection, table, config, split, resources)
        fold_reports = evaluate_fold(collection, table, config, split, artifacts, resources)
        for algo, report in fold_reports.items():
            per_fold[algo].append(report)
    return ExperimentResult(
        config=config,
        per_fold={algo: tuple(reports) for algo, reports in per_fold.items()},
    )
