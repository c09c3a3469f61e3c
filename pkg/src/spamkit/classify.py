"""Five from-scratch classifiers behind one fit/predict contract.

All models consume a FeatureMatrix and 0/1 labels (0 = ham, 1 = spam) and
are bit-deterministic given data, hyperparameters, and seed.  Naive Bayes
switches event model on the feature kind: multinomial for counts and
TF-IDF, per-feature Gaussians for dense embeddings.  predict_proba returns
the class-1 probability where the model defines one; the linear SVM
reports its raw margin and the forest its vote fraction.
"""

from __future__ import annotations

import enum
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy import sparse

from .errors import (
    DegenerateClass,
    NegativeFeature,
    NonFiniteLoss,
    SchemaMismatch,
    UnsupportedVersion,
)
from .tree import ColumnStore, Tree, grow_classification_tree, grow_regression_tree
from .vectorize import DocumentTermMatrix, MatrixKind

MODEL_FORMAT_VERSION = 1

GAUSSIAN_VAR_FLOOR = 1e-9

DEFAULT_HYPERPARAMETERS: dict[str, dict[str, Any]] = {
    "nb": {"alpha": 1.0},
    "lr": {"l2": 1e-4, "lr": 0.1, "epochs": 300},
    "svm": {"lam": 1e-4, "epochs": 50},
    "gb": {"n_trees": 100, "max_depth": 3, "shrinkage": 0.1},
    "rf": {"n_trees": 100, "max_depth": None, "features_per_split": None},
}


class ModelKind(enum.Enum):
    NAIVE_BAYES = "nb"
    LOGISTIC_REGRESSION = "lr"
    LINEAR_SVM = "svm"
    GRADIENT_BOOSTING = "gb"
    RANDOM_FOREST = "rf"


class FeatureKind(enum.Enum):
    COUNTS = "counts"
    TFIDF = "tfidf"
    DENSE = "dense"


@dataclass(frozen=True)
class FeatureMatrix:
    data: Any  # scipy csr matrix or 2-D numpy array
    feature_kind: FeatureKind

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    @property
    def n_cols(self) -> int:
        return self.data.shape[1]

    def to_dense(self) -> np.ndarray:
        if sparse.issparse(self.data):
            return np.asarray(self.data.todense(), dtype=np.float64)
        return np.asarray(self.data, dtype=np.float64)

    def to_csr(self) -> sparse.csr_matrix:
        if sparse.issparse(self.data):
            return self.data.tocsr()
        return sparse.csr_matrix(np.asarray(self.data, dtype=np.float64))

    def min_value(self) -> float:
        if sparse.issparse(self.data):
            return float(self.data.data.min()) if self.data.nnz else 0.0
        return float(self.data.min()) if self.data.size else 0.0

    @classmethod
    def from_document_term_matrix(cls, dtm: DocumentTermMatrix) -> "FeatureMatrix":
        kind = FeatureKind.COUNTS if dtm.kind is MatrixKind.COUNTS else FeatureKind.TFIDF
        return cls(data=dtm.to_csr(), feature_kind=kind)

    @classmethod
    def from_dense(cls, array: np.ndarray, feature_kind: FeatureKind = FeatureKind.DENSE):
        array = np.asarray(array, dtype=np.float64)
        if not np.all(np.isfinite(array)):
            raise SchemaMismatch("feature matrix contains non-finite values")
        return cls(data=array, feature_kind=feature_kind)


@dataclass
class TrainedModel:
    kind: ModelKind
    feature_kind: FeatureKind
    n_cols: int
    hyperparameters: dict[str, Any]
    seed: int
    params: dict[str, Any]
    training_wall_time: float = 0.0  # informational; never persisted

    def _check(self, X: FeatureMatrix) -> None:
        if X.n_cols != self.n_cols:
            raise SchemaMismatch(f"expected {self.n_cols} columns, got {X.n_cols}")
        if X.feature_kind is not self.feature_kind:
            raise SchemaMismatch(
                f"model was fit on {self.feature_kind.value} features, got {X.feature_kind.value}"
            )

    def predict_proba(self, X: FeatureMatrix) -> np.ndarray:
        """Class-1 score per row: a probability for NB/LR/GB, the raw margin
        for the SVM, and the tree-vote fraction for the forest."""
        self._check(X)
        if X.n_rows == 0:
            return np.zeros(0)
        return _SCORERS[self.kind](self, X)

    def predict(self, X: FeatureMatrix) -> np.ndarray:
        scores = self.predict_proba(X)
        cut = 0.0 if self.kind is ModelKind.LINEAR_SVM else 0.5
        return (scores > cut).astype(np.int64)


def _class_counts(y: np.ndarray) -> tuple[int, int]:
    y = np.asarray(y, dtype=np.int64)
    n_spam = int(y.sum())
    return len(y) - n_spam, n_spam


def _require_both_classes(y: np.ndarray) -> None:
    n_ham, n_spam = _class_counts(y)
    if n_ham == 0 or n_spam == 0:
        raise DegenerateClass(f"need both classes, got ham={n_ham} spam={n_spam}")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


# -- naive Bayes ------------------------------------------------------------

def fit_naive_bayes(
    X: FeatureMatrix, y: np.ndarray, alpha: float = 1.0, event_model: str | None = None
) -> TrainedModel:
    """Multinomial on counts/TF-IDF, Gaussian on dense rows.

    event_model forces one variant regardless of feature kind; forcing
    multinomial onto features with negative values raises NegativeFeature.
    """
    t0 = time.perf_counter()
    y = np.asarray(y, dtype=np.int64)
    _require_both_classes(y)
    n_ham, n_spam = _class_counts(y)
    log_prior = np.log(np.array([n_ham, n_spam], dtype=np.float64) / len(y))

    if event_model is None:
        event_model = (
            "multinomial" if X.feature_kind in (FeatureKind.COUNTS, FeatureKind.TFIDF) else "gaussian"
        )
    if event_model == "multinomial":
        if X.min_value() < 0:
            raise NegativeFeature("multinomial model requires non-negative features")
        csr = X.to_csr()
        totals = np.zeros((2, X.n_cols))
        for c in (0, 1):
            rows = csr[y == c]
            totals[c] = np.asarray(rows.sum(axis=0)).ravel()
        with np.errstate(divide="ignore"):
            feature_log_prob = np.log(totals + alpha) - np.log(
                totals.sum(axis=1, keepdims=True) + alpha * X.n_cols
            )
        params = {
            "event_model": "multinomial",
            "class_log_prior": log_prior.tolist(),
            "feature_log_prob": feature_log_prob.tolist(),
        }
    elif event_model == "gaussian":
        dense = X.to_dense()
        theta = np.zeros((2, X.n_cols))
        var = np.zeros((2, X.n_cols))
        for c in (0, 1):
            part = dense[y == c]
            theta[c] = part.mean(axis=0)
            var[c] = part.var(axis=0) + GAUSSIAN_VAR_FLOOR
        params = {
            "event_model": "gaussian",
            "class_log_prior": log_prior.tolist(),
            "theta": theta.tolist(),
            "var": var.tolist(),
        }
    else:
        raise ValueError(f"unknown event_model {event_model!r}")
    return TrainedModel(
        kind=ModelKind.NAIVE_BAYES,
        feature_kind=X.feature_kind,
        n_cols=X.n_cols,
        hyperparameters={"alpha": alpha, "event_model": event_model},
        seed=0,
        params=params,
        training_wall_time=time.perf_counter() - t0,
    )


def _nb_joint_log_likelihood(model: TrainedModel, X: FeatureMatrix) -> np.ndarray:
    prior = np.asarray(model.params["class_log_prior"])
    if model.params["event_model"] == "multinomial":
        flp = np.asarray(model.params["feature_log_prob"])
        jll = X.to_csr() @ flp.T + prior
    else:
        dense = X.to_dense()
        theta = np.asarray(model.params["theta"])
        var = np.asarray(model.params["var"])
        jll = np.empty((X.n_rows, 2))
        for c in (0, 1):
            diff = dense - theta[c]
            jll[:, c] = prior[c] - 0.5 * np.sum(
                diff * diff / var[c] + np.log(2.0 * np.pi * var[c]), axis=1
            )
    return np.asarray(jll)


def naive_bayes_posteriors(model: TrainedModel, X: FeatureMatrix) -> np.ndarray:
    """Normalized (ham, spam) posterior pair per row."""
    jll = _nb_joint_log_likelihood(model, X)
    shift = jll.max(axis=1, keepdims=True)
    expd = np.exp(jll - shift)
    return expd / expd.sum(axis=1, keepdims=True)


def _nb_scores(model: TrainedModel, X: FeatureMatrix) -> np.ndarray:
    return naive_bayes_posteriors(model, X)[:, 1]


# -- logistic regression -----------------------------------------------------

def logistic_loss_and_grad(
    w: np.ndarray, b: float, X: FeatureMatrix, y: np.ndarray, l2: float
):
    """Mean cross-entropy plus (l2/2)*||w||^2 (bias unregularized), with gradients."""
    y = np.asarray(y, dtype=np.float64)
    Xc = X.to_csr() if sparse.issparse(X.data) else X.to_dense()
    # Overflow to inf is how divergence gets detected, so let it happen quietly.
    with np.errstate(over="ignore", invalid="ignore"):
        z = np.asarray(Xc @ w).ravel() + b
        # log(1+e^-|z|) + max(z,0) - z*y is the overflow-safe cross entropy.
        loss = float(np.mean(np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))))
        loss += 0.5 * l2 * float(w @ w)
        p = _sigmoid(z)
        resid = (p - y) / len(y)
        grad_w = np.asarray(Xc.T @ resid).ravel() + l2 * w
        grad_b = float(resid.sum())
    return loss, grad_w, grad_b


def fit_logistic_regression(
    X: FeatureMatrix,
    y: np.ndarray,
    l2: float = 1e-4,
    lr: float = 0.1,
    epochs: int = 300,
    seed: int = 0,
) -> TrainedModel:
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    t0 = time.perf_counter()
    y = np.asarray(y, dtype=np.int64)
    w = np.zeros(X.n_cols)
    b = 0.0
    for _ in range(epochs):
        loss, grad_w, grad_b = logistic_loss_and_grad(w, b, X, y, l2)
        if not math.isfinite(loss):
            raise NonFiniteLoss("logistic loss diverged; reduce the learning rate")
        w = w - lr * grad_w
        b = b - lr * grad_b
    loss, _, _ = logistic_loss_and_grad(w, b, X, y, l2)
    if not math.isfinite(loss):
        raise NonFiniteLoss("logistic loss diverged; reduce the learning rate")
    return TrainedModel(
        kind=ModelKind.LOGISTIC_REGRESSION,
        feature_kind=X.feature_kind,
        n_cols=X.n_cols,
        hyperparameters={"l2": l2, "lr": lr, "epochs": epochs},
        seed=seed,
        params={"w": w.tolist(), "b": b},
        training_wall_time=time.perf_counter() - t0,
    )


def _lr_scores(model: TrainedModel, X: FeatureMatrix) -> np.ndarray:
    w = np.asarray(model.params["w"])
    z = np.asarray(X.data @ w).ravel() + model.params["b"]
    return _sigmoid(z)


# -- linear SVM (Pegasos) ----------------------------------------------------

def svm_objective(w: np.ndarray, X: FeatureMatrix, y_pm: np.ndarray, lam: float) -> float:
    margins = np.asarray(X.data @ w).ravel() * y_pm
    hinge = np.maximum(0.0, 1.0 - margins).mean()
    return 0.5 * lam * float(w @ w) + float(hinge)


def fit_linear_svm(
    X: FeatureMatrix,
    y: np.ndarray,
    lam: float = 1e-4,
    epochs: int = 50,
    seed: int = 0,
) -> TrainedModel:
    """Primal hinge loss by Pegasos stochastic subgradient, eta_t = 1/(lam*t).

    The returned weights are the average over all iterates; the recorded
    objective trace is evaluated at that running average after each epoch.
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    t0 = time.perf_counter()
    y_pm = np.where(np.asarray(y, dtype=np.int64) == 1, 1.0, -1.0)
    n = X.n_rows
    csr = X.to_csr()
    row_idx = [csr.indices[csr.indptr[i] : csr.indptr[i + 1]] for i in range(n)]
    row_val = [csr.data[csr.indptr[i] : csr.indptr[i + 1]] for i in range(n)]

    rng = np.random.default_rng(seed)
    w = np.zeros(X.n_cols)
    avg = np.zeros(X.n_cols)
    trace: list[float] = []
    t = 1
    for _ in range(epochs):
        for i in rng.permutation(n):
            eta = 1.0 / (lam * t)
            idx, val = row_idx[i], row_val[i]
            margin = y_pm[i] * float(w[idx] @ val)
            w *= 1.0 - eta * lam
            if margin < 1.0:
                w[idx] += eta * y_pm[i] * val
            avg += (w - avg) / t
            t += 1
        trace.append(svm_objective(avg, X, y_pm, lam))
        if not math.isfinite(trace[-1]):
            raise NonFiniteLoss("hinge objective diverged")
    return TrainedModel(
        kind=ModelKind.LINEAR_SVM,
        feature_kind=X.feature_kind,
        n_cols=X.n_cols,
        hyperparameters={"lam": lam, "epochs": epochs},
        seed=seed,
        params={"w": avg.tolist(), "objective_trace": trace},
        training_wall_time=time.perf_counter() - t0,
    )


def _svm_scores(model: TrainedModel, X: FeatureMatrix) -> np.ndarray:
    w = np.asarray(model.params["w"])
    return np.asarray(X.data @ w).ravel()


# -- gradient boosting --------------------------------------------------------

def fit_gradient_boosting(
    X: FeatureMatrix,
    y: np.ndarray,
    n_trees: int = 100,
    max_depth: int = 3,
    shrinkage: float = 0.1,
    seed: int = 0,
) -> TrainedModel:
    """Stagewise logistic-loss boosting: depth-limited regression trees on the
    negative gradient, leaf values by a single Newton step."""
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    t0 = time.perf_counter()
    y = np.asarray(y, dtype=np.int64)
    _require_both_classes(y)
    store = ColumnStore(X.data)
    yf = y.astype(np.float64)
    p_prior = float(yf.mean())
    prior = math.log(p_prior / (1.0 - p_prior))
    scores = np.full(len(y), prior)
    trees: list[Tree] = []
    for _ in range(n_trees):
        p = _sigmoid(scores)
        residual = yf - p
        hessian = p * (1.0 - p)
        tree, fitted = grow_regression_tree(store, residual, residual, hessian, max_depth)
        trees.append(tree)
        scores = scores + shrinkage * fitted
    return TrainedModel(
        kind=ModelKind.GRADIENT_BOOSTING,
        feature_kind=X.feature_kind,
        n_cols=X.n_cols,
        hyperparameters={"n_trees": n_trees, "max_depth": max_depth, "shrinkage": shrinkage},
        seed=seed,
        params={"prior": prior, "shrinkage": shrinkage, "trees": [t.to_jsonable() for t in trees]},
        training_wall_time=time.perf_counter() - t0,
    )


def _gb_scores(model: TrainedModel, X: FeatureMatrix) -> np.ndarray:
    dense = X.to_dense()
    scores = np.full(X.n_rows, model.params["prior"])
    shrinkage = model.params["shrinkage"]
    for rows in model.params["trees"]:
        scores = scores + shrinkage * Tree.from_jsonable(rows).predict_values(dense)
    return _sigmoid(scores)


# -- random forest -------------------------------------------------------------

def fit_random_forest(
    X: FeatureMatrix,
    y: np.ndarray,
    n_trees: int = 100,
    max_depth: int | None = None,
    features_per_split: int | None = None,
    seed: int = 0,
    bootstrap: bool = True,
    n_jobs: int = 1,
) -> TrainedModel:
    """Bootstrap-sampled Gini CART ensemble with per-split feature subsampling.

    Each tree draws from its own generator keyed by (seed, tree index), so
    predictions are identical no matter how many worker threads build them.
    """
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    t0 = time.perf_counter()
    y = np.asarray(y, dtype=np.int64)
    _require_both_classes(y)
    store = ColumnStore(X.data)
    n = len(y)
    if features_per_split is None:
        features_per_split = math.ceil(math.sqrt(X.n_cols))

    def build(tree_idx: int) -> Tree:
        rng = np.random.default_rng([seed, tree_idx])
        rows = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        return grow_classification_tree(
            store, y, max_depth=max_depth,
            features_per_split=features_per_split, rng=rng, root_rows=rows,
        )

    if n_jobs <= 1:
        trees = [build(i) for i in range(n_trees)]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = list(pool.map(build, range(n_trees)))
    return TrainedModel(
        kind=ModelKind.RANDOM_FOREST,
        feature_kind=X.feature_kind,
        n_cols=X.n_cols,
        hyperparameters={
            "n_trees": n_trees,
            "max_depth": max_depth,
            "features_per_split": features_per_split,
            "bootstrap": bootstrap,
        },
        seed=seed,
        params={"trees": [t.to_jsonable() for t in trees]},
        training_wall_time=time.perf_counter() - t0,
    )


def _rf_scores(model: TrainedModel, X: FeatureMatrix) -> np.ndarray:
    dense = X.to_dense()
    votes = np.zeros(X.n_rows)
    for rows in model.params["trees"]:
        votes += (Tree.from_jsonable(rows).predict_values(dense) > 0.5).astype(np.float64)
    return votes / len(model.params["trees"])


_SCORERS = {
    ModelKind.NAIVE_BAYES: _nb_scores,
    ModelKind.LOGISTIC_REGRESSION: _lr_scores,
    ModelKind.LINEAR_SVM: _svm_scores,
    ModelKind.GRADIENT_BOOSTING: _gb_scores,
    ModelKind.RANDOM_FOREST: _rf_scores,
}

_FITTERS = {
    ModelKind.NAIVE_BAYES: fit_naive_bayes,
    ModelKind.LOGISTIC_REGRESSION: fit_logistic_regression,
    ModelKind.LINEAR_SVM: fit_linear_svm,
    ModelKind.GRADIENT_BOOSTING: fit_gradient_boosting,
    ModelKind.RANDOM_FOREST: fit_random_forest,
}


def fit_model(kind: ModelKind, X: FeatureMatrix, y: np.ndarray, hyperparameters=None, seed: int = 0) -> TrainedModel:
    """Dispatch to the right fit function with defaults filled in."""
    hp = dict(DEFAULT_HYPERPARAMETERS[kind.value])
    if hyperparameters:
        hp.update(hyperparameters)
    if kind is ModelKind.NAIVE_BAYES:
        return fit_naive_bayes(X, y, **hp)
    return _FITTERS[kind](X, y, seed=seed, **hp)


# -- persistence ----------------------------------------------------------------

def model_to_jsonable(model: TrainedModel) -> dict:
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model.kind.value,
        "feature_kind": model.feature_kind.value,
        "n_cols": model.n_cols,
        "hyperparameters": model.hyperparameters,
        "seed": model.seed,
        "parameters": model.params,
    }


def model_from_jsonable(doc: dict) -> TrainedModel:
    version = doc.get("format_version")
    if version is None or version > MODEL_FORMAT_VERSION:
        raise UnsupportedVersion(f"model format_version {version} is not supported")
    return TrainedModel(
        kind=ModelKind(doc["kind"]),
        feature_kind=FeatureKind(doc["feature_kind"]),
        n_cols=int(doc["n_cols"]),
        hyperparameters=dict(doc["hyperparameters"]),
        seed=int(doc["seed"]),
        params=doc["parameters"],
    )


def save_model(model: TrainedModel, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(model_to_jsonable(model), f, sort_keys=True, separators=(",", ":"))
        f.write("\n")


def load_model(path: str) -> TrainedModel:
    with open(path, encoding="utf-8") as f:
        return model_from_jsonable(json.load(f))
