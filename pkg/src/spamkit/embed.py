"""Fixed-dimension sentence embedding providers.

Real contextual embeddings are computed offline and served from a lookup
file; the hashed character-n-gram provider is a deterministic fallback so
the full pipeline runs with no external model at all.  Every provider is
immutable and returns bitwise-identical vectors for identical text.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidDimension, IoFailure, MissingEmbedding
from .corpus import Corpus


class EmbeddingProvider:
    """Capability contract: a fixed `dim` and a deterministic `embed`."""

    dim: int

    def embed(self, text: str) -> np.ndarray:
        raise NotImplementedError


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n").replace("\r", "\\r")


def _unescape(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        c = text[i]
        if c == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            out.append({"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}.get(nxt, "\\" + nxt))
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


@dataclass(frozen=True)
class FileBackedProvider(EmbeddingProvider):
    """Exact-text lookup into a precomputed embeddings file."""

    path: str
    dim: int
    _table: dict[str, np.ndarray]

    def embed(self, text: str) -> np.ndarray:
        vec = self._table.get(text)
        if vec is None:
            raise MissingEmbedding(f"no embedding stored for text {text!r}")
        return vec


def file_backed_provider(path: str) -> FileBackedProvider:
    """Load an embeddings file: `dim <N>` header, then `text<TAB>v1,v2,...` lines.

    Tabs, newlines, and backslashes inside the text key are backslash-escaped.
    """
    try:
        with open(path, encoding="utf-8") as f:
            header = f.readline().strip()
            parts = header.split()
            if len(parts) != 2 or parts[0] != "dim" or not parts[1].isdigit():
                raise DimensionMismatch(f"{path}: first line must be 'dim <N>', got {header!r}")
            dim = int(parts[1])
            table: dict[str, np.ndarray] = {}
            for lineno, line in enumerate(f, start=2):
                line = line.rstrip("\n")
                if not line:
                    continue
                key, _, values = line.rpartition("\t")
                vec = np.array([float(v) for v in values.split(",")], dtype=np.float64)
                if vec.shape[0] != dim:
                    raise DimensionMismatch(
                        f"{path} line {lineno}: vector of length {vec.shape[0]}, expected {dim}"
                    )
                vec.setflags(write=False)
                table[_unescape(key)] = vec
    except OSError as exc:
        raise IoFailure(f"cannot read embeddings file {path}: {exc}") from exc
    return FileBackedProvider(path=path, dim=dim, _table=table)


def write_embeddings_file(path: str, dim: int, entries: dict[str, np.ndarray]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"dim {dim}\n")
        for text, vec in entries.items():
            f.write(_escape(text) + "\t" + ",".join(repr(float(v)) for v in vec) + "\n")


@dataclass(frozen=True)
class HashedNgramProvider(EmbeddingProvider):
    """Seeded hash of character 3-grams, L2-normalized.

    Trailing/leading whitespace is trimmed before hashing, so texts that
    differ only in surrounding whitespace embed identically.  Texts shorter
    than 3 characters hash as a single gram.  Empty text maps to the zero
    vector; in the astronomically unlikely event that gram contributions
    cancel exactly, the whole text falls back to one unit bucket.
    """

    dim: int
    seed: int

    def _bucket(self, gram: str) -> tuple[int, float]:
        digest = hashlib.blake2b(
            gram.encode("utf-8"), digest_size=8, key=str(self.seed).encode("ascii")
        ).digest()
        h = int.from_bytes(digest, "big")
        return h % self.dim, 1.0 if (h >> 63) & 1 else -1.0

    def embed(self, text: str) -> np.ndarray:
        text = text.strip().lower()
        vec = np.zeros(self.dim, dtype=np.float64)
        if not text:
            return vec
        grams = [text[i : i + 3] for i in range(len(text) - 2)] if len(text) >= 3 else [text]
        for gram in grams:
            idx, sign = self._bucket(gram)
            vec[idx] += sign
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            idx, _ = self._bucket(text)
            vec[idx] = 1.0
            return vec
        return vec / norm


def hashed_ngram_provider(dim: int, seed: int = 0) -> HashedNgramProvider:
    if dim < 8:
        raise InvalidDimension(f"dim must be >= 8, got {dim}")
    return HashedNgramProvider(dim=dim, seed=seed)


def embed_corpus(corpus: Corpus, provider: EmbeddingProvider) -> np.ndarray:
    """One embedding row per message, in corpus order.

    Missing embeddings are collected and reported together with the ids of
    every affected message.
    """
    rows = np.zeros((len(corpus), provider.dim), dtype=np.float64)
    missing: list[int] = []
    for i, message in enumerate(corpus):
        try:
            rows[i] = provider.embed(message.text)
        except MissingEmbedding:
            missing.append(message.id)
    if missing:
        raise MissingEmbedding(
            f"{len(missing)} message(s) lack stored embeddings: ids {missing[:20]}", ids=missing
        )
    return rows
