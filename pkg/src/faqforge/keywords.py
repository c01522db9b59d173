"""Question grouping and thresholded TF-IDF intent-keyword extraction.

Groups are the connected components of the relevance graph; each group's
document is the concatenation of its members' preprocessed questions. The
TF-IDF variant is length-normalized term frequency times log10 inverse group
frequency, max-scaled per group into [0, 1] so thresholds are comparable
across groups.
"""

from __future__ import annotations

import json
import math
import warnings
from collections import Counter
from dataclasses import dataclass

from .corpus import FaqCollection, RelevanceMatrix
from .errors import EmptyDocument, DegenerateCollectionWarning
from .preprocess import PreprocessResources, preprocess


@dataclass(frozen=True)
class QuestionGroup:
    """A relevance-connected set of questions and its token document."""

    group_id: int
    member_ids: frozenset[int]
    document: tuple[str, ...]


@dataclass(frozen=True)
class KeywordSet:
    """Alphabetically sorted intent keywords of one group at threshold tau."""

    group_id: int
    tau: float
    keywords: tuple[str, ...]


@dataclass(frozen=True)
class TfidfTable:
    """Per-group token scores, max-normalized into [0, 1]."""

    per_group: dict[int, dict[str, float]]

    def score(self, group_id: int, token: str) -> float:
        return self.per_group[group_id].get(token, 0.0)

    @property
    def group_ids(self) -> list[int]:
        return sorted(self.per_group)


def group_questions(
    matrix: RelevanceMatrix,
    collection: FaqCollection,
    resources: PreprocessResources | None = None,
) -> list[QuestionGroup]:
    """Connected components of the relevance graph, ordered by smallest member."""
    n = matrix.n
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    rows, cols = matrix.m.nonzero()
    for i, j in zip(rows.tolist(), cols.tolist()):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    components: dict[int, list[int]] = {}
    for i in range(n):
        components.setdefault(find(i), []).append(i)

    groups = []
    for gid, root in enumerate(sorted(components)):
        members = components[root]
        document: list[str] = []
        for mid in members:
            document.extend(preprocess(collection.entry(mid).question_text, resources).tokens)
        groups.append(
            QuestionGroup(group_id=gid, member_ids=frozenset(members), document=tuple(document))
        )
    return groups


def compute_tfidf(groups: list[QuestionGroup]) -> TfidfTable:
    """Score every token of every group document.

    score(g, w) = (count(w in g) / |g|) * log10(N / df(w)), then each group's
    scores are divided by the group max so the top token scores 1.0. A token
    present in all groups has IDF zero, hence score zero everywhere.
    """
    if not groups:
        raise ValueError("need at least one group")
    for g in groups:
        if not g.document:
            raise EmptyDocument(f"group {g.group_id} has an empty document")

    n_groups = len(groups)
    if n_groups == 1:
        warnings.warn(
            "single-group collection: all IDF values are zero",
            DegenerateCollectionWarning,
            stacklevel=2,
        )

    df: Counter[str] = Counter()
    for g in groups:
        df.update(set(g.document))

    per_group: dict[int, dict[str, float]] = {}
    for g in groups:
        counts = Counter(g.document)
        total = len(g.document)
        raw = {
            token: (count / total) * math.log10(n_groups / df[token])
            for token, count in counts.items()
        }
        top = max(raw.values())
        if top > 0.0:
            raw = {token: score / top for token, score in raw.items()}
        per_group[g.group_id] = raw
    return TfidfTable(per_group=per_group)


def extract_keywords(table: TfidfTable, tau: float) -> list[KeywordSet]:
    """Per group: all positively-scored tokens with score >= tau, sorted.

    A group whose thresholded set would be empty receives its single
    top-scoring token instead (alphabetical tie-break), so every group always
    has a non-empty training target.
    """
    if tau < 0.0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    out = []
    for gid in table.group_ids:
        scores = table.per_group[gid]
        kept = sorted(t for t, s in scores.items() if s > 0.0 and s >= tau)
        if not kept:
            top = max(scores.values())
            kept = [min(t for t, s in scores.items() if s == top)]
        out.append(KeywordSet(group_id=gid, tau=tau, keywords=tuple(kept)))
    return out


def export_keywords_jsonl(keyword_sets: list[KeywordSet]) -> str:
    lines = [
        json.dumps(
            {"group_id": ks.group_id, "tau": ks.tau, "keywords": list(ks.keywords)},
            sort_keys=True,
        )
        for ks in keyword_sets
    ]
    return "\n".join(lines) + "\n"


def load_keywords_jsonl(text: str) -> list[KeywordSet]:
    out = []
    for line in text.splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        out.append(
            KeywordSet(
                group_id=int(rec["group_id"]),
                tau=float(rec["tau"]),
                keywords=tuple(rec["keywords"]),
            )
        )
    return out
