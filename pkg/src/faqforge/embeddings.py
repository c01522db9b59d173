"""Pre-trained word-vector loading with a defined out-of-vocabulary policy.

Supports the standard word2vec binary format (header line ``<vocab> <dim>``,
then per word: token bytes, a space, and ``dim`` little-endian float32 values)
and a plain-text variant (token plus space-separated floats per line).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import IO, Iterable, Literal

import numpy as np

from .errors import BadHeader, TruncatedStream

OovPolicy = Literal["zero", "hash-random", "skip"]


def hash_random_vector(token: str, dim: int) -> np.ndarray:
    """Unit vector seeded deterministically by the token's bytes."""
    digest = hashlib.sha256(token.encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    v = rng.standard_normal(dim)
    norm = np.linalg.norm(v)
    if norm == 0.0:  # astronomically unlikely; keep lookup total anyway
        v[0] = 1.0
        norm = 1.0
    return (v / norm).astype(np.float32)


@dataclass
class EmbeddingTable:
    """Immutable token -> vector map with a total lookup under zero/hash-random."""

    dim: int
    vectors: dict[str, np.ndarray]
    oov_policy: OovPolicy = "hash-random"
    _oov_cache: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def __contains__(self, token: str) -> bool:
        return token in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)

    def embed(self, token: str, policy: OovPolicy | None = None) -> np.ndarray | None:
        """Look up a token; OOV handling per the table's (or given) policy.

        ``skip`` returns None for OOV tokens; the other policies never do.
        """
        vec = self.vectors.get(token)
        if vec is not None:
            return vec
        pol = policy if policy is not None else self.oov_policy
        if pol == "zero":
            return np.zeros(self.dim, dtype=np.float32)
        if pol == "hash-random":
            cached = self._oov_cache.get(token)
            if cached is None:
                cached = hash_random_vector(token, self.dim)
                self._oov_cache[token] = cached
            return cached
        if pol == "skip":
            return None
        raise ValueError(f"unknown OOV policy: {pol!r}")


def _read_header(stream: IO[bytes]) -> tuple[int, int]:
    line = b""
    while not line.endswith(b"\n"):
        ch = stream.read(1)
        if not ch:
            raise BadHeader("stream ended before header newline")
        line += ch
        if len(line) > 128:
            raise BadHeader("header line too long")
    parts = line.split()
    if len(parts) != 2:
        raise BadHeader(f"expected '<vocab_size> <dim>', got {line!r}")
    try:
        vocab_size, dim = int(parts[0]), int(parts[1])
    except ValueError as exc:
        raise BadHeader(f"non-integer header fields in {line!r}") from exc
    if vocab_size < 0 or dim <= 0:
        raise BadHeader(f"invalid header values {vocab_size} {dim}")
    return vocab_size, dim


def load_word2vec_binary(
    stream: IO[bytes],
    vocab_filter: Iterable[str] | None = None,
    oov_policy: OovPolicy = "hash-random",
) -> EmbeddingTable:
    """Read a word2vec binary stream, optionally keeping only filtered tokens."""
    vocab_size, dim = _read_header(stream)
    keep = set(vocab_filter) if vocab_filter is not None else None
    vectors: dict[str, np.ndarray] = {}
    vec_bytes = 4 * dim
    for _ in range(vocab_size):
        token_raw = b""
        while True:
            ch = stream.read(1)
            if not ch:
                raise TruncatedStream(
                    f"stream ended after {len(vectors)} of {vocab_size} promised vectors"
                )
            if ch == b" ":
                break
            token_raw += ch
        payload = stream.read(vec_bytes)
        if len(payload) < vec_bytes:
            raise TruncatedStream(
                f"vector payload truncated after {len(vectors)} of {vocab_size} vectors"
            )
        token = token_raw.lstrip(b"\n").decode("utf-8")
        if keep is None or token in keep:
            vectors[token] = np.frombuffer(payload, dtype="<f4").copy()
    return EmbeddingTable(dim=dim, vectors=vectors, oov_policy=oov_policy)


def load_word2vec_text(
    stream: IO[str],
    vocab_filter: Iterable[str] | None = None,
    oov_policy: OovPolicy = "hash-random",
) -> EmbeddingTable:
    """Read the plain-text variant: one ``token v1 v2 ... vd`` line per word."""
    keep = set(vocab_filter) if vocab_filter is not None else None
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    for line_no, line in enumerate(stream, start=1):
        parts = line.rstrip("\n").split(" ")
        if len(parts) < 2:
            if not line.strip():
                continue
            raise BadHeader(f"line {line_no}: expected token and floats")
        if line_no == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
            continue  # optional "<vocab> <dim>" header line
        token = parts[0]
        vec = np.asarray([float(x) for x in parts[1:]], dtype=np.float32)
        if dim is None:
            dim = vec.shape[0]
        elif vec.shape[0] != dim:
            raise TruncatedStream(f"line {line_no}: expected {dim} floats, got {vec.shape[0]}")
        if keep is None or token in keep:
            vectors[token] = vec
    if dim is None:
        raise BadHeader("no vectors in text stream")
    return EmbeddingTable(dim=dim, vectors=vectors, oov_policy=oov_policy)


def write_word2vec_binary(table: EmbeddingTable, stream: IO[bytes]) -> None:
    """Write the table in the standard binary format (round-trips bit-exactly)."""
    stream.write(f"{len(table.vectors)} {table.dim}\n".encode("utf-8"))
    for token in table.vectors:
        stream.write(token.encode("utf-8") + b" ")
        stream.write(np.ascontiguousarray(table.vectors[token], dtype="<f4").tobytes())
        stream.write(b"\n")
