"""End-to-end orchestration: hybrid rule-then-model classification.

A trained pipeline bundles the preprocessing config, the train-fitted
vocabulary (or embedding provider), the classifier, and the full rule set,
so a saved bundle classifies identically after reload with no external
files.  The rule stage always runs first on raw text: any match
short-circuits to spam before the model is consulted, both at evaluation
time and for single messages.
"""

from __future__ import annotations

import enum
import hashlib
import json
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .classify import (
    DEFAULT_HYPERPARAMETERS,
    FeatureMatrix,
    ModelKind,
    TrainedModel,
    fit_model,
    model_from_jsonable,
    model_to_jsonable,
)
from .corpus import Corpus, Label, downsample_majority, stratified_split
from .embed import EmbeddingProvider, file_backed_provider, hashed_ngram_provider
from .errors import (
    ConfigError,
    CorruptModel,
    IoFailure,
    MissingEmbedding,
    SpamkitError,
    UnsupportedVersion,
)
from .evaluate import EvalReport, confusion, metrics, timed
from .preprocess import PreprocessConfig, normalize
from .rules import RuleSet, default_ruleset, match_message, ruleset_from_json
from .vectorize import Vocabulary, bow_matrix, build_vocabulary, tfidf_matrix

PIPELINE_FORMAT_VERSION = 1

DEFAULT_EMBEDDING_DIM = 64


class FeaturizerKind(enum.Enum):
    BOW = "bow"
    TFIDF = "tfidf"
    EMBEDDING = "embedding"


class Stage(enum.Enum):
    RULE = "rule"
    MODEL = "model"


@dataclass(frozen=True)
class EmbeddingSpec:
    provider: str  # "hashed" or "file"
    dim: int = DEFAULT_EMBEDDING_DIM
    seed: int = 0
    path: str | None = None

    def build(self) -> EmbeddingProvider:
        if self.provider == "hashed":
            return hashed_ngram_provider(self.dim, self.seed)
        if self.provider == "file":
            return file_backed_provider(self.path)
        raise ConfigError(f"unknown embedding provider {self.provider!r}")


@dataclass(frozen=True)
class PipelineConfig:
    featurizer: FeaturizerKind = FeaturizerKind.TFIDF
    model_kind: ModelKind = ModelKind.NAIVE_BAYES
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    hyperparameters: dict[str, Any] = field(default_factory=dict)
    embedding: EmbeddingSpec | None = None
    rules: RuleSet = field(default_factory=default_ruleset)
    seed: int = 0
    split_counts: tuple[int, int, int] | None = None  # None: 75/25/0
    balance: bool = False
    min_df: int = 1
    # Raw character counts (column 0 of the term matrices) sit three orders
    # of magnitude above unit-norm TF-IDF weights and drown the multinomial
    # likelihoods, so the model's feature view excludes them by default.
    use_text_length: bool = False


@dataclass(frozen=True)
class Verdict:
    label: Label
    stage: Stage
    score: float | None
    matched_rule_ids: tuple[str, ...] = ()


@contextmanager
def _stage_context(name: str):
    try:
        yield
    except SpamkitError as exc:
        raise type(exc)(f"{name}: {exc}") from exc


@dataclass
class TrainedPipeline:
    config: PipelineConfig
    model: TrainedModel
    vocabulary: Vocabulary | None = None
    train_accuracy: float | None = None
    _provider: EmbeddingProvider | None = None

    def provider(self) -> EmbeddingProvider:
        if self._provider is None:
            self._provider = self.config.embedding.build()
        return self._provider

    def featurize(self, texts: list[str]) -> FeatureMatrix:
        """Transform raw texts with train-fitted state only."""
        if self.config.featurizer is FeaturizerKind.EMBEDDING:
            prov = self.provider()
            rows = np.zeros((len(texts), prov.dim))
            missing: list[int] = []
            for i, text in enumerate(texts):
                try:
                    rows[i] = prov.embed(text)
                except MissingEmbedding:
                    missing.append(i)
            if missing:
                raise MissingEmbedding(
                    f"{len(missing)} text(s) lack stored embeddings: rows {missing[:20]}",
                    ids=missing,
                )
            return FeatureMatrix.from_dense(rows)
        docs = [normalize(t, self.config.preprocess) for t in texts]
        build = bow_matrix if self.config.featurizer is FeaturizerKind.BOW else tfidf_matrix
        return self._matrix_view(build(docs, self.vocabulary))

    def _matrix_view(self, dtm) -> FeatureMatrix:
        full = FeatureMatrix.from_document_term_matrix(dtm)
        if self.config.use_text_length:
            return full
        return FeatureMatrix(full.data[:, 1:], full.feature_kind)

    def rule_flags(self, texts: list[str]) -> np.ndarray:
        return np.array(
            [match_message(t, self.config.rules).flagged for t in texts], dtype=bool
        )

    def predict_texts(self, texts: list[str]) -> np.ndarray:
        """Hybrid 0/1 predictions: rule matches force spam, the model decides the rest."""
        flags = self.rule_flags(texts)
        preds = self.model.predict(self.featurize(texts))
        return np.where(flags, 1, preds)

    def classify_message(self, text: str) -> Verdict:
        verdict = match_message(text, self.config.rules)
        if verdict.flagged:
            return Verdict(
                label=Label.SPAM,
                stage=Stage.RULE,
                score=1.0,
                matched_rule_ids=verdict.matched_rule_ids,
            )
        X = self.featurize([text])
        label = Label.SPAM if int(self.model.predict(X)[0]) == 1 else Label.HAM
        return Verdict(label=label, stage=Stage.MODEL, score=float(self.model.predict_proba(X)[0]))


def _default_split(n: int) -> tuple[int, int, int]:
    n_test = n // 4
    return (n - n_test, n_test, 0)


def _resolve_hyperparameters(config: PipelineConfig) -> dict[str, Any]:
    hp = dict(DEFAULT_HYPERPARAMETERS[config.model_kind.value])
    hp.update(config.hyperparameters)
    return hp


def _validate_config(config: PipelineConfig) -> None:
    if config.featurizer is FeaturizerKind.EMBEDDING and config.embedding is None:
        raise ConfigError("embedding featurizer requires an embedding spec")


def train_pipeline(corpus: Corpus, config: PipelineConfig) -> tuple[TrainedPipeline, EvalReport]:
    """Balance, split, featurize (fit on train only), fit, evaluate on test.

    The returned report carries spam-positive metrics for the held-out test
    part; rule-flagged test messages count as spam predictions, mirroring
    how the deployed pipeline routes traffic.
    """
    _validate_config(config)
    with _stage_context("balance"):
        if config.balance:
            corpus = downsample_majority(corpus, config.seed)
    counts = config.split_counts or _default_split(len(corpus))
    with _stage_context("split"):
        split = stratified_split(corpus, counts, config.seed)

    pipeline = TrainedPipeline(config=config, model=None)  # model filled in below

    with _stage_context("featurize"):
        train_texts = split.train.texts()
        if config.featurizer is FeaturizerKind.EMBEDDING:
            X_train = pipeline.featurize(train_texts)
            if (
                _resolve_hyperparameters(config).get("event_model") == "multinomial"
                and X_train.min_value() < 0
            ):
                raise ConfigError(
                    "multinomial naive Bayes cannot consume embedding features "
                    "with negative values"
                )
        else:
            docs = [normalize(t, config.preprocess) for t in train_texts]
            vocabulary = build_vocabulary(docs, min_df=config.min_df)
            pipeline.vocabulary = vocabulary
            build = bow_matrix if config.featurizer is FeaturizerKind.BOW else tfidf_matrix
            X_train = pipeline._matrix_view(build(docs, vocabulary))

    y_train = split.train.labels01()
    with _stage_context("fit"):
        model, train_time = timed(
            lambda: fit_model(
                config.model_kind, X_train, y_train,
                hyperparameters=config.hyperparameters, seed=config.seed,
            )
        )
    pipeline.model = model

    train_pred = np.where(pipeline.rule_flags(train_texts), 1, model.predict(X_train))
    train_acc = float((train_pred == y_train).mean())
    pipeline.train_accuracy = train_acc

    with _stage_context("evaluate"):
        test_texts = split.test.texts()
        X_test = pipeline.featurize(test_texts)
        y_test = split.test.labels01()
        hybrid = lambda: np.where(pipeline.rule_flags(test_texts), 1, model.predict(X_test))
        test_pred, infer_time = timed(hybrid)
        cm = confusion(test_pred, y_test, positive=Label.SPAM)
        m = metrics(cm)

    report = EvalReport(
        model_kind=config.model_kind.value,
        positive_class=Label.SPAM,
        accuracy=m.accuracy,
        precision=m.precision,
        recall=m.recall,
        fp_count=m.fp_count,
        fn_count=m.fn_count,
        train_accuracy=train_acc,
        train_wall_time=train_time,
        inference_wall_time=infer_time,
    )
    return pipeline, report


def evaluate_pipeline(
    pipeline: TrainedPipeline, corpus: Corpus, positive: Label = Label.SPAM
):
    """Hybrid predictions over a labeled corpus; returns (report, confusion)."""
    texts = corpus.texts()
    X = pipeline.featurize(texts)
    pred, infer_time = timed(
        lambda: np.where(pipeline.rule_flags(texts), 1, pipeline.model.predict(X))
    )
    cm = confusion(pred, corpus.labels01(), positive=positive)
    m = metrics(cm)
    report = EvalReport(
        model_kind=pipeline.config.model_kind.value,
        positive_class=positive,
        accuracy=m.accuracy,
        precision=m.precision,
        recall=m.recall,
        fp_count=m.fp_count,
        fn_count=m.fn_count,
        train_accuracy=pipeline.train_accuracy,
        train_wall_time=None,
        inference_wall_time=infer_time,
    )
    return report, cm


# -- persistence --------------------------------------------------------------

def _config_to_jsonable(config: PipelineConfig) -> dict:
    return {
        "featurizer": config.featurizer.value,
        "model_kind": config.model_kind.value,
        "preprocess": {
            "lowercase": config.preprocess.lowercase,
            "strip_punctuation": config.preprocess.strip_punctuation,
            "stopwords": sorted(config.preprocess.stopword_list),
            "apply_stemming": config.preprocess.apply_stemming,
        },
        "hyperparameters": config.hyperparameters,
        "embedding": None
        if config.embedding is None
        else {
            "provider": config.embedding.provider,
            "dim": config.embedding.dim,
            "seed": config.embedding.seed,
            "path": config.embedding.path,
        },
        "rules": config.rules.to_json(),
        "seed": config.seed,
        "split_counts": list(config.split_counts) if config.split_counts else None,
        "balance": config.balance,
        "min_df": config.min_df,
        "use_text_length": config.use_text_length,
    }


def _config_from_jsonable(doc: dict) -> PipelineConfig:
    emb = doc.get("embedding")
    return PipelineConfig(
        featurizer=FeaturizerKind(doc["featurizer"]),
        model_kind=ModelKind(doc["model_kind"]),
        preprocess=PreprocessConfig(
            lowercase=doc["preprocess"]["lowercase"],
            strip_punctuation=doc["preprocess"]["strip_punctuation"],
            stopword_list=frozenset(doc["preprocess"]["stopwords"]),
            apply_stemming=doc["preprocess"]["apply_stemming"],
        ),
        hyperparameters=dict(doc["hyperparameters"]),
        embedding=None
        if emb is None
        else EmbeddingSpec(
            provider=emb["provider"], dim=emb["dim"], seed=emb["seed"], path=emb["path"]
        ),
        rules=ruleset_from_json(doc["rules"]),
        seed=doc["seed"],
        split_counts=tuple(doc["split_counts"]) if doc["split_counts"] else None,
        balance=doc["balance"],
        min_df=doc["min_df"],
        use_text_length=doc["use_text_length"],
    )


def _vocab_to_jsonable(vocab: Vocabulary | None) -> dict | None:
    if vocab is None:
        return None
    terms = sorted(vocab.term_to_index, key=vocab.term_to_index.get)
    return {
        "terms": terms,
        "doc_freq": [vocab.doc_freq[t] for t in terms],
        "n_docs": vocab.n_docs,
    }


def _vocab_from_jsonable(doc: dict | None) -> Vocabulary | None:
    if doc is None:
        return None
    return Vocabulary(
        term_to_index={t: i + 1 for i, t in enumerate(doc["terms"])},
        doc_freq=dict(zip(doc["terms"], doc["doc_freq"])),
        n_docs=doc["n_docs"],
    )


def _canonical_payload(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def save_pipeline(pipeline: TrainedPipeline, path: str) -> None:
    payload = {
        "config": _config_to_jsonable(pipeline.config),
        "vocabulary": _vocab_to_jsonable(pipeline.vocabulary),
        "model": model_to_jsonable(pipeline.model),
        "train_accuracy": pipeline.train_accuracy,
    }
    body = _canonical_payload(payload)
    envelope = {
        "format_version": PIPELINE_FORMAT_VERSION,
        "checksum": hashlib.sha256(body.encode("utf-8")).hexdigest(),
        "payload": payload,
    }
    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(envelope, f, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
            f.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write pipeline bundle {path}: {exc}") from exc


def load_pipeline(path: str) -> TrainedPipeline:
    try:
        with open(path, encoding="utf-8") as f:
            raw = f.read()
    except OSError as exc:
        raise IoFailure(f"cannot read pipeline bundle {path}: {exc}") from exc
    try:
        envelope = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise CorruptModel(f"{path}: truncated or not a bundle: {exc}") from exc
    version = envelope.get("format_version")
    if version is None or version > PIPELINE_FORMAT_VERSION:
        raise UnsupportedVersion(f"{path}: bundle format_version {version} is not supported")
    payload = envelope.get("payload")
    body = _canonical_payload(payload)
    if hashlib.sha256(body.encode("utf-8")).hexdigest() != envelope.get("checksum"):
        raise CorruptModel(f"{path}: checksum mismatch")
    config = _config_from_jsonable(payload["config"])
    model = model_from_jsonable(payload["model"])
    return TrainedPipeline(
        config=config,
        model=model,
        vocabulary=_vocab_from_jsonable(payload["vocabulary"]),
        train_accuracy=payload["train_accuracy"],
    )
