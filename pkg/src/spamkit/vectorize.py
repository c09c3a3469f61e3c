"""Bag-of-words and TF-IDF document-term matrices.

Column 0 of every matrix is the raw character length of the original
message; term columns start at 1 and follow lexicographic term order, so
the layout is stable no matter what order documents arrive in.  Matrices
are stored as sparse (row, col, value) triplets with no explicit zeros.
"""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import sparse

from .errors import EmptyVocabulary
from .preprocess import TokenizedMessage


class MatrixKind(enum.Enum):
    COUNTS = "counts"
    TFIDF = "tfidf"


@dataclass(frozen=True)
class Vocabulary:
    term_to_index: dict[str, int]  # 1-based; column 0 is reserved for text length
    doc_freq: dict[str, int]
    n_docs: int

    def __len__(self) -> int:
        return len(self.term_to_index)

    @property
    def n_cols(self) -> int:
        return len(self.term_to_index) + 1

    def idf(self, term: str) -> float:
        # Smoothed idf; unseen terms never reach this because bow/tfidf
        # construction drops out-of-vocabulary tokens first.
        return math.log((1 + self.n_docs) / (1 + self.doc_freq[term])) + 1.0


@dataclass(frozen=True)
class DocumentTermMatrix:
    n_rows: int
    n_cols: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    kind: MatrixKind

    def to_csr(self) -> sparse.csr_matrix:
        return sparse.csr_matrix(
            (self.values, (self.rows, self.cols)), shape=(self.n_rows, self.n_cols)
        )

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.n_rows, self.n_cols))
        dense[self.rows, self.cols] = self.values
        return dense

    def export_text(self) -> str:
        """Debug/oracle export: header line then one `row col value` per entry."""
        lines = [f"{self.n_rows} {self.n_cols} {self.kind.value}"]
        for r, c, v in zip(self.rows, self.cols, self.values):
            if self.kind is MatrixKind.COUNTS:
                lines.append(f"{r} {c} {int(v)}")
            else:
                lines.append(f"{r} {c} {float(v)!r}")
        return "\n".join(lines) + "\n"


def build_vocabulary(docs: Sequence[TokenizedMessage], min_df: int = 1) -> Vocabulary:
    """Collect terms with document frequency >= min_df, columns in lexicographic order."""
    if not docs:
        raise EmptyVocabulary("no documents supplied")
    doc_freq: Counter[str] = Counter()
    for doc in docs:
        doc_freq.update(set(doc.tokens))
    kept = sorted(t for t, df in doc_freq.items() if df >= min_df)
    if not kept:
        raise EmptyVocabulary(f"no term reaches min_df={min_df}")
    return Vocabulary(
        term_to_index={t: i + 1 for i, t in enumerate(kept)},
        doc_freq={t: doc_freq[t] for t in kept},
        n_docs=len(docs),
    )


def _triplets(docs, vocab, cell_values):
    rows, cols, vals = [], [], []
    for i, doc in enumerate(docs):
        if doc.text_length != 0:
            rows.append(i)
            cols.append(0)
            vals.append(float(doc.text_length))
        counts = Counter(t for t in doc.tokens if t in vocab.term_to_index)
        for term, value in cell_values(counts):
            rows.append(i)
            cols.append(vocab.term_to_index[term])
            vals.append(value)
    return (
        np.asarray(rows, dtype=np.int64),
        np.asarray(cols, dtype=np.int64),
        np.asarray(vals, dtype=np.float64),
    )


def bow_matrix(docs: Sequence[TokenizedMessage], vocab: Vocabulary) -> DocumentTermMatrix:
    """Raw term counts; out-of-vocabulary tokens are ignored."""

    def cells(counts: Counter):
        for term in sorted(counts):
            yield term, float(counts[term])

    rows, cols, vals = _triplets(docs, vocab, cells)
    return DocumentTermMatrix(len(docs), vocab.n_cols, rows, cols, vals, MatrixKind.COUNTS)


def tfidf_matrix(docs: Sequence[TokenizedMessage], vocab: Vocabulary) -> DocumentTermMatrix:
    """tf * smoothed-idf with L2-normalized rows.

    tf is the raw in-document count and idf(t) = ln((1+N)/(1+df)) + 1 with
    N fixed at vocabulary fit time.  Normalization covers term columns
    only; the text-length column passes through untouched.
    """

    def cells(counts: Counter):
        weighted = {t: c * vocab.idf(t) for t, c in counts.items()}
        norm = math.sqrt(sum(w * w for w in weighted.values()))
        for term in sorted(weighted):
            yield term, (weighted[term] / norm if norm > 0 else 0.0)

    rows, cols, vals = _triplets(docs, vocab, cells)
    return DocumentTermMatrix(len(docs), vocab.n_cols, rows, cols, vals, MatrixKind.TFIDF)
