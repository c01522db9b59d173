"""FAQ corpus ingestion, relevance annotations, and train/test splits.

The canonical on-disk format is JSONL: one object per line with keys
``thread_id``, ``question``, ``answer``, ``is_paraphrase``. An adapter
converts thread-structured dataset dumps (one object per thread with the
original question, its answer, and a list of paraphrases) into the same
canonical collection.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable

import numpy as np

from .errors import (
    DuplicateOriginal,
    EmptyCorpus,
    InsufficientParaphrases,
    InvalidFraction,
    MalformedRecord,
    MissingOriginal,
)

REQUIRED_FIELDS = ("thread_id", "question", "answer", "is_paraphrase")


@dataclass(frozen=True)
class FaqEntry:
    """One question-answer pair with thread membership."""

    entry_id: int
    thread_id: int
    question_text: str
    answer_text: str
    is_paraphrase: bool


@dataclass(frozen=True)
class FaqCollection:
    """An ordered, validated collection of FAQ entries."""

    entries: tuple[FaqEntry, ...]

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def thread_count(self) -> int:
        return len({e.thread_id for e in self.entries})

    def entry(self, entry_id: int) -> FaqEntry:
        return self.entries[entry_id]

    def thread_members(self, thread_id: int) -> tuple[int, ...]:
        return tuple(e.entry_id for e in self.entries if e.thread_id == thread_id)


@dataclass(frozen=True)
class RelevanceMatrix:
    """Binary n-by-n annotation; 1 marks same-thread (relevant) pairs."""

    m: np.ndarray

    @property
    def n(self) -> int:
        return self.m.shape[0]


@dataclass(frozen=True)
class DatasetSplit:
    """One cross-validation fold: disjoint train/test entry-id sets."""

    fold_index: int
    train_ids: frozenset[int]
    test_ids: frozenset[int]


def _build_collection(raw: list[tuple[int, str, str, bool, int | None]]) -> FaqCollection:
    """Validate raw (thread, question, answer, is_paraphrase, line) tuples.

    Thread ids are remapped to a dense 0..T-1 range in first-seen order so
    the collection invariant holds regardless of source numbering.
    """
    if not raw:
        raise EmptyCorpus("no entries in corpus source")

    thread_map: dict[int, int] = {}
    entries: list[FaqEntry] = []
    for thread_raw, question, answer, is_para, line in raw:
        if not question.strip():
            raise MalformedRecord("empty question text", line)
        if thread_raw not in thread_map:
            thread_map[thread_raw] = len(thread_map)
        entries.append(
            FaqEntry(
                entry_id=len(entries),
                thread_id=thread_map[thread_raw],
                question_text=question,
                answer_text=answer,
                is_paraphrase=bool(is_para),
            )
        )

    originals: dict[int, int] = {}
    for e in entries:
        if not e.is_paraphrase:
            if e.thread_id in originals:
                raise DuplicateOriginal(
                    f"thread {e.thread_id} has two non-paraphrase entries "
                    f"(entries {originals[e.thread_id]} and {e.entry_id})"
                )
            originals[e.thread_id] = e.entry_id
    missing = set(thread_map.values()) - set(originals)
    if missing:
        raise MissingOriginal(f"threads without an original question: {sorted(missing)}")

    return FaqCollection(entries=tuple(entries))


def load_faq(source: IO[str], format: str = "jsonl") -> FaqCollection:
    """Read a corpus from a text stream in the given format.

    ``jsonl`` is the canonical format. ``stackfaq`` accepts a JSON document
    holding a list of thread objects with keys ``question``, ``answer``,
    ``paraphrases``; it is the adapter target for thread-structured dataset
    dumps.
    """
    if format == "jsonl":
        raw = []
        for line_no, line in enumerate(source, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(f"invalid JSON ({exc.msg})", line_no) from exc
            missing = [f for f in REQUIRED_FIELDS if f not in rec]
            if missing:
                raise MalformedRecord(f"missing fields {missing}", line_no)
            raw.append(
                (
                    int(rec["thread_id"]),
                    str(rec["question"]),
                    str(rec["answer"]),
                    bool(rec["is_paraphrase"]),
                    line_no,
                )
            )
        return _build_collection(raw)

    if format == "stackfaq":
        try:
            threads = json.load(source)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(f"invalid JSON ({exc.msg})") from exc
        if not isinstance(threads, list):
            raise MalformedRecord("expected a top-level list of thread objects")
        raw = []
        for tid, thread in enumerate(threads):
            for key in ("question", "answer", "paraphrases"):
                if key not in thread:
                    raise MalformedRecord(f"thread {tid} missing field {key!r}")
            raw.append((tid, str(thread["question"]), str(thread["answer"]), False, None))
            for para in thread["paraphrases"]:
                raw.append((tid, str(para), str(thread["answer"]), True, None))
        return _build_collection(raw)

    raise ValueError(f"unsupported corpus format: {format!r}")


def load_stackfaq_dir(dataset_dir: str | Path) -> FaqCollection:
    """Adapter entry point: read ``threads.json`` from a dataset directory."""
    path = Path(dataset_dir) / "threads.json"
    with open(path, encoding="utf-8") as fh:
        return load_faq(fh, format="stackfaq")


def serialize(collection: FaqCollection) -> str:
    """Render a collection in the canonical JSONL format."""
    lines = []
    for e in collection.entries:
        lines.append(
            json.dumps(
                {
                    "thread_id": e.thread_id,
                    "question": e.question_text,
                    "answer": e.answer_text,
                    "is_paraphrase": e.is_paraphrase,
                },
                sort_keys=True,
                ensure_ascii=False,
            )
        )
    return "\n".join(lines) + "\n"


def build_relevance_matrix(collection: FaqCollection) -> RelevanceMatrix:
    """Derive the binary relevance matrix from thread membership.

    The diagonal is 1: an entry is trivially relevant to itself.
    """
    threads = np.array([e.thread_id for e in collection.entries])
    m = (threads[:, None] == threads[None, :]).astype(np.int8)
    return RelevanceMatrix(m=m)


def split_folds(
    collection: FaqCollection,
    train_frac: float,
    folds: int,
    seed: int,
) -> list[DatasetSplit]:
    """Partition paraphrases into per-fold held-out test sets.

    The original question of every thread always stays in train. The
    per-thread test quota is ``max(1, floor((1 - train_frac) * thread_size))``;
    folds hold out disjoint paraphrase subsets as far as thread size allows
    (cycling when ``folds * quota`` exceeds the paraphrase count).
    """
    if not (0.0 < train_frac < 1.0):
        raise InvalidFraction(f"train_frac must lie in (0, 1), got {train_frac}")
    if folds < 1:
        raise ValueError(f"folds must be >= 1, got {folds}")

    rng = np.random.default_rng(seed)
    by_thread: dict[int, list[FaqEntry]] = {}
    for e in collection.entries:
        by_thread.setdefault(e.thread_id, []).append(e)

    plans: dict[int, tuple[list[int], int]] = {}
    for tid in sorted(by_thread):
        members = by_thread[tid]
        paraphrases = [e.entry_id for e in members if e.is_paraphrase]
        quota = max(1, int((1.0 - train_frac) * len(members)))
        if len(paraphrases) < quota:
            raise InsufficientParaphrases(
                f"thread {tid} has {len(paraphrases)} paraphrases but needs "
                f"{quota} per-fold test entries"
            )
        order = [paraphrases[i] for i in rng.permutation(len(paraphrases))]
        plans[tid] = (order, quota)

    all_ids = frozenset(e.entry_id for e in collection.entries)
    splits = []
    for f in range(folds):
        test: set[int] = set()
        for order, quota in plans.values():
            for i in range(quota):
                test.add(order[(f * quota + i) % len(order)])
        splits.append(
            DatasetSplit(fold_index=f, train_ids=frozenset(all_ids - test), test_ids=frozenset(test))
        )
    return splits


def subset(collection: FaqCollection, keep_ids: Iterable[int]) -> tuple[FaqCollection, tuple[int, ...]]:
    """Re-index the kept entries densely, preserving entry order and threads.

    Returns the sub-collection and the original entry id for each new id.
    Every thread must survive the subset (the callers keep originals in
    train), so thread ids stay contiguous without remapping.
    """
    keep = sorted(set(keep_ids))
    old_threads = {e.thread_id for e in collection.entries}
    new_entries = []
    for new_id, old_id in enumerate(keep):
        e = collection.entries[old_id]
        new_entries.append(
            FaqEntry(
                entry_id=new_id,
                thread_id=e.thread_id,
                question_text=e.question_text,
                answer_text=e.answer_text,
                is_paraphrase=e.is_paraphrase,
            )
        )
    kept_threads = {e.thread_id for e in new_entries}
    if kept_threads != old_threads:
        raise ValueError("subset must retain at least one entry per thread")
    return FaqCollection(entries=tuple(new_entries)), tuple(keep)
