"""Loading, merging, balancing, and splitting labeled SMS corpora.

Two on-disk layouts are supported: the classic tab-separated layout
(``label<TAB>text``, no header) and a two-column CSV with a ``label,text``
header and RFC-4180 quoting.  All operations are pure: they return new
Corpus values and never mutate their inputs.
"""

from __future__ import annotations

import csv
import enum
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import CountMismatch, DegenerateClass, EmptyCorpus, IoFailure, MalformedRecord


class Label(enum.Enum):
    HAM = "ham"
    SPAM = "spam"


class Source(enum.Enum):
    UCI_KAGGLE = "uci-kaggle"
    DSN = "dsn"
    SELF_COLLECTED = "self-collected"
    OTHER = "other"


class CorpusFormat(enum.Enum):
    TAB_SEPARATED = "tsv"
    COMMA_SEPARATED_WITH_HEADER = "csv"


@dataclass(frozen=True)
class LabeledMessage:
    id: int
    text: str
    label: Label
    source: Source = Source.OTHER

    def __post_init__(self):
        if not self.text.strip():
            raise MalformedRecord(f"message {self.id}: text is empty after trimming")


@dataclass(frozen=True)
class Corpus:
    messages: tuple[LabeledMessage, ...]

    def __post_init__(self):
        ids = [m.id for m in self.messages]
        if len(set(ids)) != len(ids):
            dup = next(i for i, c in Counter(ids).items() if c > 1)
            raise MalformedRecord(f"duplicate message id {dup}")

    def __len__(self) -> int:
        return len(self.messages)

    def __iter__(self):
        return iter(self.messages)

    @property
    def class_counts(self) -> dict[Label, int]:
        counts = Counter(m.label for m in self.messages)
        return {Label.HAM: counts.get(Label.HAM, 0), Label.SPAM: counts.get(Label.SPAM, 0)}

    def texts(self) -> list[str]:
        return [m.text for m in self.messages]

    def labels01(self) -> np.ndarray:
        """Labels as an int array, 0 = ham, 1 = spam."""
        return np.array([1 if m.label is Label.SPAM else 0 for m in self.messages], dtype=np.int64)


@dataclass(frozen=True)
class DatasetSplit:
    train: Corpus
    test: Corpus
    validation: Corpus


def _parse_label(raw: str, lineno: int) -> Label:
    token = raw.strip().lower()
    for label in Label:
        if token == label.value:
            return label
    raise MalformedRecord(f"line {lineno}: unknown label {raw!r}")


def load_corpus(path: str, format: CorpusFormat, source: Source = Source.OTHER) -> Corpus:
    """Read one corpus file; labels are matched case-insensitively.

    Raises MalformedRecord naming the offending line, EmptyCorpus when no
    valid data row is found, and IoFailure when the file cannot be read.
    """
    messages: list[LabeledMessage] = []
    try:
        if format is CorpusFormat.TAB_SEPARATED:
            with open(path, encoding="utf-8", newline="") as f:
                for lineno, line in enumerate(f, start=1):
                    line = line.rstrip("\r\n")
                    if not line:
                        continue
                    parts = line.split("\t", 1)
                    if len(parts) != 2:
                        raise MalformedRecord(f"line {lineno}: expected label<TAB>text")
                    label = _parse_label(parts[0], lineno)
                    if not parts[1].strip():
                        raise MalformedRecord(f"line {lineno}: empty message text")
                    messages.append(LabeledMessage(len(messages), parts[1], label, source))
        elif format is CorpusFormat.COMMA_SEPARATED_WITH_HEADER:
            with open(path, encoding="utf-8", newline="") as f:
                reader = csv.reader(f)
                try:
                    header = next(reader)
                except StopIteration:
                    raise EmptyCorpus(f"{path}: no header row")
                names = [h.strip().lower() for h in header]
                if "label" not in names or "text" not in names:
                    raise MalformedRecord("header must name columns label,text")
                li, ti = names.index("label"), names.index("text")
                for row in reader:
                    lineno = reader.line_num
                    if not row:
                        continue
                    if len(row) <= max(li, ti):
                        raise MalformedRecord(f"line {lineno}: missing field")
                    label = _parse_label(row[li], lineno)
                    if not row[ti].strip():
                        raise MalformedRecord(f"line {lineno}: empty message text")
                    messages.append(LabeledMessage(len(messages), row[ti], label, source))
        else:
            raise ValueError(f"unknown format {format!r}")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if not messages:
        raise EmptyCorpus(f"{path}: no data rows")
    return Corpus(tuple(messages))


def save_corpus(corpus: Corpus, path: str, format: CorpusFormat) -> None:
    """Write a corpus back out; TSV rejects texts containing tab or newline."""
    try:
        if format is CorpusFormat.TAB_SEPARATED:
            with open(path, "w", encoding="utf-8", newline="") as f:
                for m in corpus:
                    if "\t" in m.text or "\n" in m.text or "\r" in m.text:
                        raise MalformedRecord(
                            f"message {m.id}: tab/newline in text cannot be written as TSV"
                        )
                    f.write(f"{m.label.value}\t{m.text}\n")
        elif format is CorpusFormat.COMMA_SEPARATED_WITH_HEADER:
            with open(path, "w", encoding="utf-8", newline="") as f:
                writer = csv.writer(f)
                writer.writerow(["label", "text"])
                for m in corpus:
                    writer.writerow([m.label.value, m.text])
        else:
            raise ValueError(f"unknown format {format!r}")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def merge_corpora(parts: Sequence[Corpus]) -> Corpus:
    """Concatenate corpora, dropping exact (text, label) duplicates.

    The first occurrence wins; order is source order then original order,
    and ids are reassigned sequentially so they stay unique.
    """
    seen: set[tuple[str, Label]] = set()
    merged: list[LabeledMessage] = []
    for part in parts:
        for m in part:
            key = (m.text, m.label)
            if key in seen:
                continue
            seen.add(key)
            merged.append(LabeledMessage(len(merged), m.text, m.label, m.source))
    if not merged:
        raise EmptyCorpus("merge produced no messages")
    return Corpus(tuple(merged))


def downsample_majority(corpus: Corpus, seed: int) -> Corpus:
    """Discard majority-class rows, chosen uniformly at random, until parity.

    Every minority-class message is retained; corpus order is preserved.
    """
    counts = corpus.class_counts
    if counts[Label.HAM] == 0 or counts[Label.SPAM] == 0:
        raise DegenerateClass(f"both classes required, got {counts}")
    minority = min(counts, key=lambda lab: (counts[lab], lab.value))
    majority = Label.SPAM if minority is Label.HAM else Label.HAM
    if counts[minority] == counts[majority]:
        return corpus
    majority_ids = [m.id for m in corpus if m.label is majority]
    rng = np.random.default_rng(seed)
    kept = set(rng.choice(majority_ids, size=counts[minority], replace=False).tolist())
    messages = tuple(m for m in corpus if m.label is minority or m.id in kept)
    return Corpus(messages)


def stratified_split(
    corpus: Corpus, counts: tuple[int, int, int], seed: int
) -> DatasetSplit:
    """Partition a corpus into train/test/validation of exact sizes.

    Per-class allocation uses largest-remainder rounding so each part's
    class mix stays within one message of the global proportion.  The
    validation count may be zero; train and test must be at least 1.
    """
    n_train, n_test, n_val = counts
    if n_train < 1 or n_test < 1 or n_val < 0:
        raise CountMismatch(f"counts must be (>=1, >=1, >=0), got {counts}")
    if n_train + n_test + n_val != len(corpus):
        raise CountMismatch(
            f"counts {counts} sum to {n_train + n_test + n_val}, corpus has {len(corpus)}"
        )

    rng = np.random.default_rng(seed)
    part_sizes = [n_train, n_test, n_val]
    by_class: dict[Label, list[LabeledMessage]] = {Label.HAM: [], Label.SPAM: []}
    for m in corpus:
        by_class[m.label].append(m)

    total = len(corpus)
    # Allocate ham per part by largest remainder; spam fills the rest, which
    # keeps both row sums (class totals) and column sums (part sizes) exact.
    n_ham = len(by_class[Label.HAM])
    ideals = [size * n_ham / total for size in part_sizes]
    ham_alloc = [int(x) for x in ideals]
    remainder = n_ham - sum(ham_alloc)
    order = sorted(range(3), key=lambda p: (-(ideals[p] - int(ideals[p])), p))
    for p in order[:remainder]:
        ham_alloc[p] += 1
    for p in range(3):
        ham_alloc[p] = min(ham_alloc[p], part_sizes[p])
    spam_alloc = [part_sizes[p] - ham_alloc[p] for p in range(3)]

    parts: list[list[LabeledMessage]] = [[], [], []]
    for label, alloc in ((Label.HAM, ham_alloc), (Label.SPAM, spam_alloc)):
        members = by_class[label]
        perm = rng.permutation(len(members))
        start = 0
        for p in range(3):
            take = alloc[p]
            for idx in perm[start : start + take]:
                parts[p].append(members[idx])
            start += take

    def build(rows: list[LabeledMessage]) -> Corpus:
        rows = sorted(rows, key=lambda m: m.id)
        return Corpus(tuple(rows))

    # Validation may legitimately be empty; Corpus() forbids that, so keep a
    # zero-row sentinel by building from an empty tuple directly.
    train, test = build(parts[0]), build(parts[1])
    validation = Corpus(tuple(sorted(parts[2], key=lambda m: m.id))) if parts[2] else Corpus(())
    return DatasetSplit(train=train, test=test, validation=validation)


def corpus_from_rows(rows: Iterable[tuple[str, Label]], source: Source = Source.OTHER) -> Corpus:
    """Build a corpus from (text, label) pairs with sequential ids."""
    messages = tuple(
        LabeledMessage(i, text, label, source) for i, (text, label) in enumerate(rows)
    )
    if not messages:
        raise EmptyCorpus("no rows supplied")
    return Corpus(messages)
