"""Question text normalization: tokenization, stopword removal, lemmatization.

Stopwords and the lemma lexicon ship as versioned data files so output is
bit-reproducible across environments. Tokenization splits on whitespace and
strips leading/trailing punctuation; unknown words lemmatize to themselves.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources as importlib_resources
from pathlib import Path
from typing import Mapping

_PUNCT = string.punctuation + "…—–‘’“”´`¡¿"


@dataclass(frozen=True)
class TokenSequence:
    """Ordered lowercase lemmas of one question."""

    tokens: tuple[str, ...]
    source_entry_id: int | None = None

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)


@dataclass(frozen=True)
class PreprocessResources:
    """Loaded stopword list and surface-to-lemma lexicon."""

    stopwords: frozenset[str]
    lemmas: Mapping[str, str]


def _read_stopwords(text: str) -> frozenset[str]:
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


def _read_lemmas(text: str) -> dict[str, str]:
    lemmas: dict[str, str] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        surface, lemma = line.split("\t")
        lemmas[surface] = lemma
    return lemmas


def load_resources(
    stopwords_path: str | Path | None = None,
    lemmas_path: str | Path | None = None,
) -> PreprocessResources:
    """Load resources from explicit paths, falling back to the shipped files."""
    if stopwords_path is None:
        stop_text = importlib_resources.files("faqforge.data").joinpath("stopwords.txt").read_text("utf-8")
    else:
        stop_text = Path(stopwords_path).read_text("utf-8")
    if lemmas_path is None:
        lemma_text = importlib_resources.files("faqforge.data").joinpath("lemmas.tsv").read_text("utf-8")
    else:
        lemma_text = Path(lemmas_path).read_text("utf-8")
    return PreprocessResources(stopwords=_read_stopwords(stop_text), lemmas=_read_lemmas(lemma_text))


@lru_cache(maxsize=1)
def default_resources() -> PreprocessResources:
    return load_resources()


def preprocess(
    text: str,
    resources: PreprocessResources | None = None,
    source_entry_id: int | None = None,
) -> TokenSequence:
    """Lowercase, strip punctuation, drop stopwords, and lemmatize.

    Deterministic; empty output is valid (fully-stopword input). A lemma that
    lands on a stopword is dropped as well, which keeps the output stopword-free
    and the operation idempotent regardless of lexicon content.
    """
    res = resources if resources is not None else default_resources()
    out: list[str] = []
    for raw in text.lower().split():
        token = raw.strip(_PUNCT)
        if not token or token in res.stopwords:
            continue
        lemma = res.lemmas.get(token, token)
        if not lemma or lemma in res.stopwords:
            continue
        out.append(lemma)
    return TokenSequence(tokens=tuple(out), source_entry_id=source_entry_id)
