"""Ranking translated FAQ entries by averaged transport and edit distance.

Keyword sequences are compared as bags of significant words: an exact word
mover's distance over unit-normalized embeddings plus a token-level
Levenshtein distance, each normalized into [0, 1] before averaging. Ranking
is therefore invariant to keyword order by construction (sequences are
canonicalized on entry).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .embeddings import EmbeddingTable
from .errors import EmptyBag, EmptyIndex
from .faq_index import TranslatedFaq
from .preprocess import TokenSequence


@dataclass(frozen=True)
class Query:
    """A user question with its predicted, canonicalized keyword sequence."""

    raw_text: str
    tokens: TokenSequence
    predicted_keywords: tuple[str, ...]


@dataclass(frozen=True)
class RankedItem:
    entry_id: int
    distance: float
    question: str
    answer: str


@dataclass(frozen=True)
class RankedResult:
    """QA pairs ordered by combined distance (ascending, entry-id tie-break).

    Unguided rankings are non-decreasing in distance throughout; guided
    rankings restrict that guarantee to the candidate prefix.
    """

    items: tuple[RankedItem, ...]

    def __len__(self) -> int:
        return len(self.items)

    def entry_ids(self) -> list[int]:
        return [it.entry_id for it in self.items]


def canonical_keywords(seq: Sequence[str]) -> tuple[str, ...]:
    """Sorted, deduplicated form used for all keyword comparisons."""
    return tuple(sorted(set(seq)))


def token_levenshtein(a: Sequence[str], b: Sequence[str]) -> int:
    """Minimum insert/delete/substitute edits between token sequences."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, tok_a in enumerate(a, start=1):
        cur = [i]
        for j, tok_b in enumerate(b, start=1):
            cost = 0 if tok_a == tok_b else 1
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost))
        prev = cur
    return prev[-1]


def _unit_vectors(bag: Sequence[str], table: EmbeddingTable) -> np.ndarray:
    """Resolve a bag to unit-normalized vectors, skipping OOV tokens."""
    rows = []
    for token in bag:
        vec = table.embed(token, policy="skip")
        if vec is None:
            continue
        v64 = np.asarray(vec, dtype=np.float64)
        norm = np.linalg.norm(v64)
        if norm == 0.0:
            continue
        rows.append(v64 / norm)
    if not rows:
        return np.zeros((0, table.dim))
    return np.stack(rows)


def wmd(a: Sequence[str], b: Sequence[str], table: EmbeddingTable) -> float:
    """Exact optimal-transport cost between uniform-weight word bags.

    Ground distance is Euclidean between unit vectors. Uniform marginals with
    rational masses 1/m and 1/n are solved exactly by replicating each side to
    lcm(m, n) unit items and taking the optimal assignment, so no LP tolerance
    is involved.
    """
    va, vb = _unit_vectors(a, table), _unit_vectors(b, table)
    m, n = va.shape[0], vb.shape[0]
    if m == 0 or n == 0:
        raise EmptyBag(f"bag sizes after OOV skipping: {m} and {n}")
    diff = va[:, None, :] - vb[None, :, :]
    cost = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    lcm = math.lcm(m, n)
    big = np.repeat(np.repeat(cost, lcm // m, axis=0), lcm // n, axis=1)
    rows, cols = linear_sum_assignment(big)
    return float(big[rows, cols].sum() / lcm)


def combined_distance(
    query_keywords: Sequence[str],
    entry_keywords: Sequence[str],
    table: EmbeddingTable,
) -> float:
    """0.5 * (wmd / 2) + 0.5 * (edit distance / max length), in [0, 1].

    Unit-norm vectors bound the transport cost by 2 and the edit distance by
    the longer length, so both components lie in [0, 1]. Degenerate rule: if
    either bag is empty after OOV skipping the transport component is 1,
    unless both are empty, in which case it is 0.
    """
    qk = canonical_keywords(query_keywords)
    ek = canonical_keywords(entry_keywords)

    if not qk and not ek:
        return 0.0

    lev = token_levenshtein(qk, ek) / max(len(qk), len(ek))

    try:
        transport = wmd(qk, ek, table) / 2.0
    except EmptyBag:
        va, vb = _unit_vectors(qk, table), _unit_vectors(ek, table)
        transport = 0.0 if (va.shape[0] == 0 and vb.shape[0] == 0) else 1.0
    return 0.5 * transport + 0.5 * lev


class DistanceCache:
    """Memo for combined_distance over canonical keyword-tuple pairs."""

    def __init__(self, table: EmbeddingTable):
        self.table = table
        self._memo: dict[tuple[tuple[str, ...], tuple[str, ...]], float] = {}

    def distance(self, qk: tuple[str, ...], ek: tuple[str, ...]) -> float:
        key = (qk, ek)
        hit = self._memo.get(key)
        if hit is None:
            hit = combined_distance(qk, ek, self.table)
            self._memo[key] = hit
            self._memo[(ek, qk)] = hit
        return hit


def rank(
    query: Query,
    index: TranslatedFaq,
    table: EmbeddingTable,
    top_k: int | None = None,
    cache: DistanceCache | None = None,
) -> RankedResult:
    """Score every indexed entry against the query's keyword sequence.

    Ascending by combined distance, ties broken by entry id; truncated to
    top_k when given.
    """
    if not index.tuples:
        raise EmptyIndex("cannot rank against an empty index")
    if cache is None:
        cache = DistanceCache(table)
    qk = canonical_keywords(query.predicted_keywords)
    scored = [
        (cache.distance(qk, tup.keywords), tup.entry_id, tup)
        for tup in index.tuples
    ]
    scored.sort(key=lambda t: (t[0], t[1]))
    if top_k is not None:
        scored = scored[:top_k]
    return RankedResult(
        items=tuple(
            RankedItem(entry_id=tup.entry_id, distance=d, question=tup.question, answer=tup.answer)
            for d, _, tup in scored
        )
    )


def ranked_result_json(result: RankedResult) -> list[dict]:
    return [
        {
            "entry_id": it.entry_id,
            "distance": it.distance,
            "question": it.question,
            "answer": it.answer,
        }
        for it in result.items
    ]
