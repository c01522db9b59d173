"""The translated FAQ index: one (question, keywords, answer) tuple per entry.

Predicted keyword sequences are canonicalized (sorted, deduplicated) at index
time so downstream ranking is order-invariant by construction. The index is
persisted as JSONL with a header record carrying the producing model's
fingerprint for staleness detection.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import TYPE_CHECKING

from .corpus import FaqCollection
from .errors import MalformedRecord
from .preprocess import PreprocessResources, preprocess

if TYPE_CHECKING:
    from .embeddings import EmbeddingTable
    from .seq2seq import Seq2SeqModel


@dataclass(frozen=True)
class TranslatedEntry:
    entry_id: int
    question: str
    keywords: tuple[str, ...]
    answer: str


@dataclass(frozen=True)
class TranslatedFaq:
    """Ordered translated tuples plus the fingerprint of the producing model."""

    tuples: tuple[TranslatedEntry, ...]
    model_fingerprint: str

    @property
    def n(self) -> int:
        return len(self.tuples)


def translate_faq(
    model: "Seq2SeqModel",
    collection: FaqCollection,
    table: "EmbeddingTable",
    resources: PreprocessResources | None = None,
) -> TranslatedFaq:
    """Predict the keyword sequence of every question in the collection.

    Questions and answers are carried verbatim; answers never participate in
    translation.
    """
    from .retrieval import canonical_keywords

    token_seqs = [
        preprocess(e.question_text, resources, source_entry_id=e.entry_id)
        for e in collection.entries
    ]
    predictions = model.predict_batch(token_seqs, table)
    tuples = tuple(
        TranslatedEntry(
            entry_id=e.entry_id,
            question=e.question_text,
            keywords=canonical_keywords(pred),
            answer=e.answer_text,
        )
        for e, pred in zip(collection.entries, predictions)
    )
    return TranslatedFaq(tuples=tuples, model_fingerprint=model.fingerprint())


def index_to_jsonl(index: TranslatedFaq) -> str:
    lines = [json.dumps({"model_fingerprint": index.model_fingerprint}, sort_keys=True)]
    for t in index.tuples:
        lines.append(
            json.dumps(
                {
                    "entry_id": t.entry_id,
                    "question": t.question,
                    "keywords": list(t.keywords),
                    "answer": t.answer,
                },
                sort_keys=True,
                ensure_ascii=False,
            )
        )
    return "\n".join(lines) + "\n"


def index_from_jsonl(text: str) -> TranslatedFaq:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise MalformedRecord("empty index file")
    header = json.loads(lines[0])
    if "model_fingerprint" not in header:
        raise MalformedRecord("index file missing fingerprint header", 1)
    tuples = []
    for line_no, line in enumerate(lines[1:], start=2):
        rec = json.loads(line)
        try:
            tuples.append(
                TranslatedEntry(
                    entry_id=int(rec["entry_id"]),
                    question=str(rec["question"]),
                    keywords=tuple(rec["keywords"]),
                    answer=str(rec["answer"]),
                )
            )
        except KeyError as exc:
            raise MalformedRecord(f"index record missing field {exc}", line_no) from exc
    return TranslatedFaq(tuples=tuple(tuples), model_fingerprint=header["model_fingerprint"])
