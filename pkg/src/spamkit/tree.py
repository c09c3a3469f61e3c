"""CART trees shared by the random forest and gradient boosting models.

Split search is sparsity-aware: each node scans candidate columns through a
CSC store, aggregates duplicate values (plus one implicit zero block for
rows absent from a column), and scores every boundary between distinct
adjacent values from prefix sums.  Class counts stay integers, so the
scores are bit-identical to a naive dense scan of the same formula; ties
break toward the lowest candidate feature, then the lowest threshold,
which an exhaustive reference reproduces exactly.

A split is taken whenever a valid boundary exists, even at zero gain;
XOR-style targets have no first-order gain at the root yet still need the
split to become separable one level down.

Node membership is tracked as a per-row multiplicity array, which makes
bootstrap resamples (rows drawn more than once) first-class citizens.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse


@dataclass
class Tree:
    feature: np.ndarray    # int, -1 marks a leaf
    threshold: np.ndarray  # float
    left: np.ndarray       # int child index
    right: np.ndarray
    value: np.ndarray      # leaf payload (class-1 fraction or regression value)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def predict_values(self, X: np.ndarray) -> np.ndarray:
        idx = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            feats = self.feature[idx]
            active = feats >= 0
            if not active.any():
                break
            rows = np.nonzero(active)[0]
            f = feats[rows]
            go_left = X[rows, f] <= self.threshold[idx[rows]]
            idx[rows] = np.where(go_left, self.left[idx[rows]], self.right[idx[rows]])
        return self.value[idx]

    def to_jsonable(self) -> list[list]:
        return [
            [int(f), float(t), int(l), int(r), float(v)]
            for f, t, l, r, v in zip(self.feature, self.threshold, self.left, self.right, self.value)
        ]

    @classmethod
    def from_jsonable(cls, rows: list[list]) -> "Tree":
        arr = list(zip(*rows)) if rows else ([], [], [], [], [])
        return cls(
            feature=np.asarray(arr[0], dtype=np.int64),
            threshold=np.asarray(arr[1], dtype=np.float64),
            left=np.asarray(arr[2], dtype=np.int64),
            right=np.asarray(arr[3], dtype=np.int64),
            value=np.asarray(arr[4], dtype=np.float64),
        )


class ColumnStore:
    """Column-major view of a feature matrix for node-local scans."""

    def __init__(self, X):
        csc = sparse.csc_matrix(X)
        csc.eliminate_zeros()
        csc.sort_indices()
        self.n_rows, self.n_cols = csc.shape
        self._indptr = csc.indptr
        self._rows = csc.indices.astype(np.int64)
        self._vals = csc.data.astype(np.float64)

    def columns(self, features: np.ndarray):
        """Concatenated (segment, row, value) arrays for the given columns."""
        sizes = self._indptr[features + 1] - self._indptr[features]
        seg = np.repeat(np.arange(len(features)), sizes)
        chunks_r = [self._rows[self._indptr[f] : self._indptr[f + 1]] for f in features]
        chunks_v = [self._vals[self._indptr[f] : self._indptr[f + 1]] for f in features]
        rows = np.concatenate(chunks_r) if chunks_r else np.zeros(0, dtype=np.int64)
        vals = np.concatenate(chunks_v) if chunks_v else np.zeros(0)
        return seg, rows, vals

    def column(self, f: int):
        sl = slice(self._indptr[f], self._indptr[f + 1])
        return self._rows[sl], self._vals[sl]


def _as_store(X) -> ColumnStore:
    return X if isinstance(X, ColumnStore) else ColumnStore(X)


def _grouped_scan(seg, vals, stats, n_cand, node_totals):
    """Aggregate per (segment, distinct value) and return group arrays.

    stats is a list of per-entry weight arrays (counts first); a zero-block
    pseudo group is appended per segment carrying whatever mass the node has
    outside the stored entries, derived from node_totals (same stat order).
    """
    k = len(stats)
    nz_totals = [np.bincount(seg, weights=s, minlength=n_cand) for s in stats]
    z_stats = [node_totals[i] - nz_totals[i] for i in range(k)]
    has_zero = z_stats[0] > 0
    if has_zero.any():
        zf = np.nonzero(has_zero)[0]
        seg = np.concatenate([seg, zf])
        vals = np.concatenate([vals, np.zeros(len(zf))])
        stats = [np.concatenate([stats[i], z_stats[i][zf]]) for i in range(k)]
    order = np.lexsort((vals, seg))
    seg, vals = seg[order], vals[order]
    stats = [s[order] for s in stats]
    first = np.concatenate([[True], (seg[1:] != seg[:-1]) | (vals[1:] != vals[:-1])])
    starts = np.nonzero(first)[0]
    gseg = seg[starts]
    gval = vals[starts]
    gstats = [np.add.reduceat(s, starts) for s in stats]
    return gseg, gval, gstats


def _segment_prefixes(gseg, gstats):
    """Within-segment running sums at each boundary (between group j and j+1)."""
    cums = [np.cumsum(g) for g in gstats]
    seg_first = np.concatenate([[True], gseg[1:] != gseg[:-1]])
    base = [np.where(seg_first, c - g, 0.0) for c, g in zip(cums, gstats)]
    # propagate each segment's base to all of its groups
    idx = np.maximum.accumulate(np.where(seg_first, np.arange(len(gseg)), 0))
    bases = [b[idx] for b in base]
    return [c - b for c, b in zip(cums, bases)]


def _pick_boundary(gseg, gval, scores):
    """First (segment asc, value asc) boundary with the minimal finite score."""
    valid = gseg[:-1] == gseg[1:]
    scores = np.where(valid, scores, np.inf)
    j = int(np.argmin(scores))
    if not np.isfinite(scores[j]):
        return None
    return float(scores[j]), int(gseg[j]), (gval[j] + gval[j + 1]) / 2.0


def _best_split_gini(store, counts, y, cand, node_m, node_ones):
    seg, rows, vals = store.columns(cand)
    mult = counts[rows]
    nz = mult > 0
    seg, vals, mult = seg[nz], vals[nz], mult[nz].astype(np.float64)
    ones = mult * y[rows[nz]]
    node_totals = [np.full(len(cand), float(node_m)), np.full(len(cand), float(node_ones))]
    gseg, gval, (gc, go) = _grouped_scan(seg, vals, [mult, ones], len(cand), node_totals)
    if len(gseg) < 2:
        return None
    nl, ol = _segment_prefixes(gseg, [gc, go])
    n_left = nl[:-1]
    ones_left = ol[:-1]
    n_right = node_m - n_left
    ones_right = node_ones - ones_left
    with np.errstate(divide="ignore", invalid="ignore"):
        zeros_left = n_left - ones_left
        zeros_right = n_right - ones_right
        gini_left = 1.0 - (ones_left / n_left) ** 2 - (zeros_left / n_left) ** 2
        gini_right = 1.0 - (ones_right / n_right) ** 2 - (zeros_right / n_right) ** 2
        score = (n_left * gini_left + n_right * gini_right) / node_m
    found = _pick_boundary(gseg, gval, score)
    if found is None:
        return None
    return found[0], int(cand[found[1]]), found[2]


def _best_split_variance(store, counts, targets, cand, node_m, node_sum, node_sumsq):
    seg, rows, vals = store.columns(cand)
    mult = counts[rows]
    nz = mult > 0
    rsel = rows[nz]
    seg, vals, mult = seg[nz], vals[nz], mult[nz].astype(np.float64)
    t = targets[rsel]
    node_totals = [
        np.full(len(cand), float(node_m)),
        np.full(len(cand), node_sum),
        np.full(len(cand), node_sumsq),
    ]
    gseg, gval, (gc, gt, gt2) = _grouped_scan(
        seg, vals, [mult, mult * t, mult * t * t], len(cand), node_totals
    )
    if len(gseg) < 2:
        return None
    nl, tl, t2l = _segment_prefixes(gseg, [gc, gt, gt2])
    n_left = nl[:-1]
    sum_left = tl[:-1]
    sumsq_left = t2l[:-1]
    n_right = node_m - n_left
    sum_right = node_sum - sum_left
    with np.errstate(divide="ignore", invalid="ignore"):
        sse_left = sumsq_left - sum_left * sum_left / n_left
        sse_right = (node_sumsq - sumsq_left) - sum_right * sum_right / n_right
        score = sse_left + sse_right
    found = _pick_boundary(gseg, gval, score)
    if found is None:
        return None
    return found[0], int(cand[found[1]]), found[2]


def _partition(store: ColumnStore, counts: np.ndarray, f: int, thr: float):
    rows, vals = store.column(f)
    if thr >= 0.0:
        left = counts.copy()
        move = rows[(counts[rows] > 0) & (vals > thr)]
        left[move] = 0
    else:
        left = np.zeros_like(counts)
        keep = rows[(counts[rows] > 0) & (vals <= thr)]
        left[keep] = counts[keep]
    return left, counts - left


def grow_classification_tree(
    X,
    y: np.ndarray,
    max_depth: int | None,
    features_per_split: int | None,
    rng: np.random.Generator | None,
    root_rows: np.ndarray | None = None,
) -> Tree:
    """Gini-split CART on 0/1 labels; leaves store the class-1 fraction.

    root_rows (which may repeat rows, e.g. a bootstrap draw) selects the
    sample the tree is grown on without copying the matrix.
    """
    store = _as_store(X)
    y = np.asarray(y, dtype=np.int64)
    n_features = store.n_cols

    def pick_features() -> np.ndarray:
        if features_per_split is None or features_per_split >= n_features:
            return np.arange(n_features)
        return np.sort(rng.choice(n_features, size=features_per_split, replace=False))

    if root_rows is None:
        root_counts = np.ones(store.n_rows, dtype=np.int64)
    else:
        root_counts = np.bincount(root_rows, minlength=store.n_rows).astype(np.int64)

    feature, threshold, left, right, value = [], [], [], [], []
    stack = [(root_counts, 0, None, None)]  # counts, depth, parent, side
    while stack:
        counts, depth, parent, side = stack.pop()
        node_id = len(feature)
        if parent is not None:
            (left if side == "L" else right)[parent] = node_id
        node_m = int(counts.sum())
        node_ones = int(counts @ y)
        split = None
        if node_m >= 2 and 0 < node_ones < node_m and (max_depth is None or depth < max_depth):
            split = _best_split_gini(store, counts, y, pick_features(), node_m, node_ones)
        if split is None:
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(node_ones / node_m)
            continue
        _, f, thr = split
        feature.append(f)
        threshold.append(thr)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        lc, rc = _partition(store, counts, f, thr)
        # Right pushed first so the left child is processed (and numbered) first.
        stack.append((rc, depth + 1, node_id, "R"))
        stack.append((lc, depth + 1, node_id, "L"))
    return Tree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.asarray(value, dtype=np.float64),
    )


def grow_regression_tree(
    X,
    targets: np.ndarray,
    leaf_numer: np.ndarray,
    leaf_denom: np.ndarray,
    max_depth: int | None,
) -> tuple[Tree, np.ndarray]:
    """Variance-split CART; each leaf stores sum(leaf_numer)/sum(leaf_denom).

    Targets drive the splits; the two auxiliary arrays let boosting place a
    Newton-step value in each leaf without a second pass.  Also returns the
    fitted value for every training row, so callers avoid re-traversal.
    """
    store = _as_store(X)
    targets = np.asarray(targets, dtype=np.float64)
    train_values = np.zeros(store.n_rows)

    feature, threshold, left, right, value = [], [], [], [], []
    stack = [(np.ones(store.n_rows, dtype=np.int64), 0, None, None)]
    while stack:
        counts, depth, parent, side = stack.pop()
        node_id = len(feature)
        if parent is not None:
            (left if side == "L" else right)[parent] = node_id
        member = counts > 0
        node_m = int(counts.sum())
        tvals = targets[member]
        split = None
        if node_m >= 2 and tvals.min() != tvals.max() and (max_depth is None or depth < max_depth):
            node_sum = float(counts @ targets)
            node_sumsq = float(counts @ (targets * targets))
            split = _best_split_variance(
                store, counts, targets, np.arange(store.n_cols), node_m, node_sum, node_sumsq
            )
        if split is None:
            denom = float(counts @ leaf_denom)
            numer = float(counts @ leaf_numer)
            leaf_value = numer / max(denom, 1e-12)
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(leaf_value)
            train_values[member] = leaf_value
            continue
        _, f, thr = split
        feature.append(f)
        threshold.append(thr)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        lc, rc = _partition(store, counts, f, thr)
        stack.append((rc, depth + 1, node_id, "R"))
        stack.append((lc, depth + 1, node_id, "L"))
    return (
        Tree(
            feature=np.asarray(feature, dtype=np.int64),
            threshold=np.asarray(threshold, dtype=np.float64),
            left=np.asarray(left, dtype=np.int64),
            right=np.asarray(right, dtype=np.int64),
            value=np.asarray(value, dtype=np.float64),
        ),
        train_values,
    )
