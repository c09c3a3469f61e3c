"""Confusion matrices, metric derivation, timing, and model comparison.

The positive class is always an explicit argument: precision and recall
for a spam filter read very differently depending on whether "positive"
means spam caught or ham preserved, so nothing here assumes a default.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Sequence, TypeVar

import numpy as np

from .corpus import Label
from .errors import LengthMismatch

T = TypeVar("T")


@dataclass(frozen=True)
class ConfusionMatrix:
    positive_class: Label
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def swapped(self) -> "ConfusionMatrix":
        other = Label.HAM if self.positive_class is Label.SPAM else Label.SPAM
        return ConfusionMatrix(other, tp=self.tn, fp=self.fn, fn=self.fp, tn=self.tp)


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float | None  # absent when tp + fp == 0
    recall: float | None     # absent when tp + fn == 0
    fp_count: int
    fn_count: int


@dataclass(frozen=True)
class EvalReport:
    model_kind: str
    positive_class: Label
    accuracy: float
    precision: float | None
    recall: float | None
    fp_count: int
    fn_count: int
    train_accuracy: float | None = None
    train_wall_time: float | None = None
    inference_wall_time: float | None = None


def confusion(pred: Sequence[int], truth: Sequence[int], positive: Label) -> ConfusionMatrix:
    """Tally a 2x2 matrix; inputs are 0/1 vectors with 1 = spam."""
    pred = np.asarray(pred, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if pred.shape != truth.shape:
        raise LengthMismatch(f"pred has {pred.shape[0]} rows, truth has {truth.shape[0]}")
    if pred.shape[0] == 0:
        raise LengthMismatch("need at least one evaluated row")
    pos = 1 if positive is Label.SPAM else 0
    p = pred == pos
    t = truth == pos
    return ConfusionMatrix(
        positive_class=positive,
        tp=int(np.sum(p & t)),
        fp=int(np.sum(p & ~t)),
        fn=int(np.sum(~p & t)),
        tn=int(np.sum(~p & ~t)),
    )


def metrics(cm: ConfusionMatrix) -> Metrics:
    total = cm.total
    return Metrics(
        accuracy=(cm.tp + cm.tn) / total,
        precision=cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp > 0 else None,
        recall=cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn > 0 else None,
        fp_count=cm.fp,
        fn_count=cm.fn,
    )


def timed(work: Callable[[], T]) -> tuple[T, float]:
    """Run `work` and return (result, wall seconds) from a monotonic clock."""
    start = time.perf_counter()
    result = work()
    return result, time.perf_counter() - start


@dataclass(frozen=True)
class ComparisonTable:
    reports: tuple[EvalReport, ...]

    CSV_HEADER = "model,train_acc,train_time_s,test_acc,test_time_s,recall,precision,fp,fn"

    def to_csv(self) -> str:
        def num(x, fmt="{:.6f}"):
            return "" if x is None else fmt.format(x)

        lines = [self.CSV_HEADER]
        for r in self.reports:
            lines.append(
                ",".join(
                    [
                        r.model_kind,
                        num(r.train_accuracy),
                        num(r.train_wall_time),
                        num(r.accuracy),
                        num(r.inference_wall_time),
                        num(r.recall),
                        num(r.precision),
                        str(r.fp_count),
                        str(r.fn_count),
                    ]
                )
            )
        return "\n".join(lines) + "\n"

    def render_text(self) -> str:
        headers = ["model", "train_acc", "train_s", "test_acc", "test_s", "recall", "precision", "fp", "fn"]
        rows = []
        for r in self.reports:
            def pct(x):
                return "-" if x is None else f"{100 * x:.2f}%"

            def sec(x):
                return "-" if x is None else f"{x:.3f}"

            rows.append(
                [
                    r.model_kind,
                    pct(r.train_accuracy),
                    sec(r.train_wall_time),
                    pct(r.accuracy),
                    sec(r.inference_wall_time),
                    pct(r.recall),
                    pct(r.precision),
                    str(r.fp_count),
                    str(r.fn_count),
                ]
            )
        widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h) for i, h in enumerate(headers)]
        out = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(headers))]
        for row in rows:
            out.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
        return "\n".join(out) + "\n"


def compare_models(reports: Sequence[EvalReport]) -> ComparisonTable:
    """Rank reports by test accuracy (desc), then inference time (asc).

    Model kind is the final tie-break so the ordering is total and stable
    across runs.
    """
    if not reports:
        raise ValueError("need at least one report")
    ordered = sorted(
        reports,
        key=lambda r: (
            -r.accuracy,
            r.inference_wall_time if r.inference_wall_time is not None else float("inf"),
            r.model_kind,
        ),
    )
    return ComparisonTable(reports=tuple(ordered))
