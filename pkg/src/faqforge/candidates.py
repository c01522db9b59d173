"""Question-pair relevance learning and guided candidate selection.

A gated recurrent unit reads the two questions' embedded token sequences
(separated by a zero vector); its final state is joined with three surface
similarity scalars (content-token Jaccard, normalized token edit distance,
mean-embedding cosine) in a dense layer ending in a two-class softmax.
Retrieval is then restricted to the top-k entries the classifier accepts.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
from torch import nn
from torch.nn.utils.rnn import pack_padded_sequence

from . import artifacts
from .corpus import DatasetSplit, FaqCollection, RelevanceMatrix
from .embeddings import EmbeddingTable
from .errors import EmptyIndex, NoNegatives, NonFiniteLoss, NoPositives
from .faq_index import TranslatedFaq
from .preprocess import PreprocessResources, TokenSequence, preprocess
from .retrieval import (
    DistanceCache,
    Query,
    RankedItem,
    RankedResult,
    canonical_keywords,
    token_levenshtein,
)

N_PAIR_FEATURES = 3


@dataclass(frozen=True)
class PairFeatures:
    entity_overlap: float
    levenshtein_norm: float
    embedding_similarity: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.entity_overlap, self.levenshtein_norm, self.embedding_similarity],
            dtype=np.float32,
        )


@dataclass(frozen=True)
class ClassifierConfig:
    units: int = 1024
    dense_units: int = 512
    dropout: float = 0.5
    batch_size: int = 32
    epochs: int = 30
    learning_rate: float = 1e-3
    dtype: str = "float32"
    seed: int = 0

    def __post_init__(self):
        if self.units <= 0 or self.dense_units <= 0:
            raise ValueError("unit counts must be positive")
        if not (0.0 <= self.dropout < 1.0):
            raise ValueError(f"dropout must lie in [0, 1), got {self.dropout}")

    @property
    def torch_dtype(self) -> torch.dtype:
        return {"float32": torch.float32, "float64": torch.float64}[self.dtype]


@dataclass(frozen=True)
class CandidateSet:
    """Entries accepted for a query, or the full collection under fallback."""

    query_text: str
    members: tuple[tuple[int, float], ...]  # (entry_id, relevant-probability)
    k: int
    prob_threshold: float
    fallback: bool

    def member_ids(self) -> set[int]:
        return {eid for eid, _ in self.members}


def _mean_embedding(tokens: Sequence[str], table: EmbeddingTable) -> np.ndarray | None:
    vecs = [v for t in tokens if (v := table.embed(t, policy="skip")) is not None]
    if not vecs:
        return None
    return np.mean(np.stack(vecs), axis=0)


def _features_from_parts(
    a_tokens: tuple[str, ...],
    a_mean: np.ndarray | None,
    b_tokens: tuple[str, ...],
    b_mean: np.ndarray | None,
) -> PairFeatures:
    a_set, b_set = set(a_tokens), set(b_tokens)
    union = a_set | b_set
    overlap = 1.0 if not union else len(a_set & b_set) / len(union)

    longest = max(len(a_tokens), len(b_tokens))
    lev = 0.0 if longest == 0 else token_levenshtein(a_tokens, b_tokens) / longest

    if a_mean is None or b_mean is None:
        cosine = 0.0
    else:
        denom = float(np.linalg.norm(a_mean) * np.linalg.norm(b_mean))
        cosine = 0.0 if denom == 0.0 else float(np.dot(a_mean, b_mean) / denom)
    return PairFeatures(entity_overlap=overlap, levenshtein_norm=lev, embedding_similarity=cosine)


def pair_features(q1: TokenSequence, q2: TokenSequence, table: EmbeddingTable) -> PairFeatures:
    """Surface similarity scalars between two preprocessed questions."""
    return _features_from_parts(
        q1.tokens,
        _mean_embedding(q1.tokens, table),
        q2.tokens,
        _mean_embedding(q2.tokens, table),
    )


class _PairNet(nn.Module):
    """Shared GRU encodes each question; the state pair plus the scalar
    features feed the dense layer."""

    def __init__(self, input_dim: int, config: ClassifierConfig):
        super().__init__()
        self.gru = nn.GRU(input_dim, config.units, batch_first=True)
        self.dense = nn.Linear(2 * config.units + N_PAIR_FEATURES, config.dense_units)
        self.drop = nn.Dropout(config.dropout)
        self.out = nn.Linear(config.dense_units, 2)

    def _encode(self, inputs: torch.Tensor, lengths: torch.Tensor) -> torch.Tensor:
        packed = pack_padded_sequence(
            inputs, lengths.cpu(), batch_first=True, enforce_sorted=False
        )
        _, h = self.gru(packed)
        return h.squeeze(0)

    def forward(
        self,
        inputs_a: torch.Tensor,
        lengths_a: torch.Tensor,
        inputs_b: torch.Tensor,
        lengths_b: torch.Tensor,
        feats: torch.Tensor,
    ):
        state = torch.cat(
            [self._encode(inputs_a, lengths_a), self._encode(inputs_b, lengths_b), feats],
            dim=1,
        )
        return self.out(self.drop(torch.relu(self.dense(state))))


class CandidateClassifier:
    """A trained question-pair relevance classifier."""

    def __init__(
        self,
        net: _PairNet,
        config: ClassifierConfig,
        input_dim: int,
        loss_history: tuple[float, ...] = (),
    ):
        self.net = net
        self.config = config
        self.input_dim = input_dim
        self.loss_history = loss_history
        self.net.eval()

    def score_pairs(
        self,
        pairs: Sequence[tuple[TokenSequence, TokenSequence]],
        table: EmbeddingTable,
        batch_size: int = 512,
    ) -> np.ndarray:
        """Relevant-probability per pair; deterministic (dropout off)."""
        self.net.eval()
        probs = np.empty(len(pairs), dtype=np.float64)
        with torch.no_grad():
            for lo in range(0, len(pairs), batch_size):
                chunk = pairs[lo : lo + batch_size]
                batch = _pair_batch(chunk, table, self.input_dim, self.config)
                logits = self.net(*batch)
                probs[lo : lo + len(chunk)] = torch.softmax(logits, dim=1)[:, 1].numpy()
        return probs

    def pair_distribution(
        self, q1: TokenSequence, q2: TokenSequence, table: EmbeddingTable
    ) -> tuple[float, float]:
        """(not-relevant, relevant) probabilities for one pair."""
        p = float(self.score_pairs([(q1, q2)], table)[0])
        return (1.0 - p, p)

    def _meta(self) -> dict:
        return {
            "format": "faqforge-checkpoint",
            "kind": "pair-classifier",
            "config": asdict(self.config),
            "input_dim": self.input_dim,
            "loss_history": list(self.loss_history),
            "byte_order": "little",
        }

    def _tensors(self) -> dict[str, np.ndarray]:
        return {name: t.detach().numpy().copy() for name, t in self.net.state_dict().items()}

    def fingerprint(self) -> str:
        return artifacts.archive_fingerprint(self._meta(), self._tensors())

    def save(self, path: str | Path) -> None:
        artifacts.save_archive(path, self._meta(), self._tensors())

    @classmethod
    def load(cls, path: str | Path) -> "CandidateClassifier":
        meta, tensors = artifacts.load_archive(path)
        if meta.get("kind") != "pair-classifier":
            raise ValueError(f"not a pair-classifier checkpoint: {path}")
        config = ClassifierConfig(**meta["config"])
        net = _PairNet(meta["input_dim"], config).to(config.torch_dtype)
        net.load_state_dict({k: torch.from_numpy(v) for k, v in tensors.items()})
        return cls(
            net=net,
            config=config,
            input_dim=meta["input_dim"],
            loss_history=tuple(meta["loss_history"]),
        )


def _embed_side(
    seqs: Sequence[TokenSequence],
    table: EmbeddingTable,
    dim: int,
    dtype: torch.dtype,
):
    """Pad one side's embedded sequences; empty questions become one zero step."""
    arrays = []
    for seq in seqs:
        rows = [table.embed(t) for t in seq.tokens]
        if not rows:
            rows = [np.zeros(dim, dtype=np.float32)]
        arrays.append(np.stack(rows))
    lengths = torch.tensor([a.shape[0] for a in arrays], dtype=torch.long)
    batch = np.zeros((len(arrays), int(lengths.max()), dim), dtype=np.float32)
    for i, a in enumerate(arrays):
        batch[i, : a.shape[0]] = a
    return torch.from_numpy(batch).to(dtype), lengths


def _pair_batch(
    pairs: Sequence[tuple[TokenSequence, TokenSequence]],
    table: EmbeddingTable,
    dim: int,
    config: ClassifierConfig,
):
    inputs_a, lengths_a = _embed_side([a for a, _ in pairs], table, dim, config.torch_dtype)
    inputs_b, lengths_b = _embed_side([b for _, b in pairs], table, dim, config.torch_dtype)
    feats = np.stack([pair_features(a, b, table).as_array() for a, b in pairs])
    feat_t = torch.from_numpy(feats).to(config.torch_dtype)
    return inputs_a, lengths_a, inputs_b, lengths_b, feat_t


def _training_pairs(
    collection: FaqCollection,
    matrix: RelevanceMatrix,
    train_ids: Sequence[int],
    rng: np.random.Generator,
) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """All relevant unordered train pairs plus 1:1 uniformly sampled negatives."""
    ids = sorted(train_ids)
    positives = [
        (ids[i], ids[j])
        for i in range(len(ids))
        for j in range(i + 1, len(ids))
        if matrix.m[ids[i], ids[j]]
    ]
    if not positives:
        raise NoPositives("no relevant pair in the training split")

    threads = {collection.entry(i).thread_id for i in ids}
    if len(threads) < 2:
        raise NoNegatives("training split covers a single thread")

    negatives: set[tuple[int, int]] = set()
    max_attempts = 200 * len(positives)
    attempts = 0
    while len(negatives) < len(positives) and attempts < max_attempts:
        attempts += 1
        i, j = rng.integers(0, len(ids)), rng.integers(0, len(ids))
        a, b = ids[min(i, j)], ids[max(i, j)]
        if a == b or matrix.m[a, b]:
            continue
        negatives.add((a, b))
    if not negatives:
        raise NoNegatives("could not sample any non-relevant pair")
    return positives, sorted(negatives)


def train_classifier(
    collection: FaqCollection,
    matrix: RelevanceMatrix,
    split: DatasetSplit,
    table: EmbeddingTable,
    seed: int,
    config: ClassifierConfig | None = None,
    resources: PreprocessResources | None = None,
) -> CandidateClassifier:
    """Fit the binary relevance classifier on the split's train pairs."""
    cfg = config if config is not None else ClassifierConfig(seed=seed)
    if cfg.seed != seed:
        cfg = ClassifierConfig(**{**asdict(cfg), "seed": seed})

    rng = np.random.default_rng(seed)
    positives, negatives = _training_pairs(collection, matrix, sorted(split.train_ids), rng)

    tokens = {
        eid: preprocess(collection.entry(eid).question_text, resources, source_entry_id=eid)
        for eid in split.train_ids
    }
    data = [(tokens[a], tokens[b], 1) for a, b in positives]
    data += [(tokens[a], tokens[b], 0) for a, b in negatives]

    torch.manual_seed(seed)
    net = _PairNet(table.dim, cfg).to(cfg.torch_dtype)
    optimizer = torch.optim.Adam(net.parameters(), lr=cfg.learning_rate)

    history: list[float] = []
    for _ in range(cfg.epochs):
        net.train()
        order = rng.permutation(len(data))
        epoch_losses = []
        for lo in range(0, len(order), cfg.batch_size):
            chunk = [data[i] for i in order[lo : lo + cfg.batch_size]]
            batch = _pair_batch([(a, b) for a, b, _ in chunk], table, table.dim, cfg)
            labels = torch.tensor([y for _, _, y in chunk], dtype=torch.long)
            optimizer.zero_grad()
            loss = nn.functional.cross_entropy(net(*batch), labels)
            if not torch.isfinite(loss):
                raise NonFiniteLoss(f"classifier loss diverged at epoch {len(history)}")
            loss.backward()
            optimizer.step()
            epoch_losses.append(float(loss.detach()))
        history.append(float(np.mean(epoch_losses)))
    net.eval()
    return CandidateClassifier(
        net=net, config=cfg, input_dim=table.dim, loss_history=tuple(history)
    )


def _entry_probabilities(
    classifier: CandidateClassifier,
    query_tokens: TokenSequence,
    entry_tokens: Sequence[TokenSequence],
    table: EmbeddingTable,
) -> np.ndarray:
    return classifier.score_pairs([(query_tokens, et) for et in entry_tokens], table)


def select_candidates(
    classifier: CandidateClassifier,
    query: Query,
    collection: FaqCollection,
    k: int = 20,
    prob_threshold: float = 0.5,
    table: EmbeddingTable | None = None,
    resources: PreprocessResources | None = None,
    entry_tokens: Sequence[TokenSequence] | None = None,
) -> CandidateSet:
    """Top-k entries with relevant-probability >= threshold for the query.

    Falls back to the full collection (flag set) when nothing passes.
    """
    if table is None:
        raise ValueError("an embedding table is required to score candidates")
    if entry_tokens is None:
        entry_tokens = [
            preprocess(e.question_text, resources, source_entry_id=e.entry_id)
            for e in collection.entries
        ]
    probs = _entry_probabilities(classifier, query.tokens, entry_tokens, table)
    accepted = [(eid, float(p)) for eid, p in enumerate(probs) if p >= prob_threshold]
    if not accepted:
        members = tuple((eid, float(p)) for eid, p in enumerate(probs))
        return CandidateSet(
            query_text=query.raw_text,
            members=members,
            k=k,
            prob_threshold=prob_threshold,
            fallback=True,
        )
    accepted.sort(key=lambda t: (-t[1], t[0]))
    return CandidateSet(
        query_text=query.raw_text,
        members=tuple(accepted[:k]),
        k=k,
        prob_threshold=prob_threshold,
        fallback=False,
    )


def rank_guided(
    query: Query,
    index: TranslatedFaq,
    classifier: CandidateClassifier,
    table: EmbeddingTable,
    k: int = 20,
    prob_threshold: float = 0.5,
    resources: PreprocessResources | None = None,
    entry_tokens: Sequence[TokenSequence] | None = None,
    cache: DistanceCache | None = None,
) -> RankedResult:
    """Rank candidate entries by combined distance, then append the rest.

    Non-candidates follow the ranked candidates ordered by descending
    classifier probability (entry-id tie-break) so full-collection metrics
    stay well-defined.
    """
    if not index.tuples:
        raise EmptyIndex("cannot rank against an empty index")
    if entry_tokens is None:
        entry_tokens = [
            preprocess(t.question, resources, source_entry_id=t.entry_id) for t in index.tuples
        ]
    if cache is None:
        cache = DistanceCache(table)

    probs = _entry_probabilities(classifier, query.tokens, entry_tokens, table)
    accepted = [(i, float(p)) for i, p in enumerate(probs) if p >= prob_threshold]
    if accepted:
        accepted.sort(key=lambda t: (-t[1], index.tuples[t[0]].entry_id))
        candidate_pos = {i for i, _ in accepted[:k]}
    else:
        candidate_pos = set(range(len(index.tuples)))  # fallback: full collection

    qk = canonical_keywords(query.predicted_keywords)
    head, tail = [], []
    for pos, tup in enumerate(index.tuples):
        d = cache.distance(qk, tup.keywords)
        item = RankedItem(
            entry_id=tup.entry_id, distance=d, question=tup.question, answer=tup.answer
        )
        if pos in candidate_pos:
            head.append((d, tup.entry_id, item))
        else:
            tail.append((-float(probs[pos]), tup.entry_id, item))
    head.sort(key=lambda t: (t[0], t[1]))
    tail.sort(key=lambda t: (t[0], t[1]))
    return RankedResult(items=tuple(it for _, _, it in head) + tuple(it for _, _, it in tail))
