import json

import numpy as np
import pytest

from spamkit.classify import ModelKind
from spamkit.corpus import Corpus, Label, LabeledMessage
from spamkit.embed import write_embeddings_file
from spamkit.errors import ConfigError, CorruptModel, MissingEmbedding, UnsupportedVersion
from spamkit.pipeline import (
    EmbeddingSpec,
    FeaturizerKind,
    PipelineConfig,
    Stage,
    evaluate_pipeline,
    load_pipeline,
    save_pipeline,
    train_pipeline,
)

HAM_TEMPLATES = [
    "hey are we still meeting at {i} today",
    "can you call mum about dinner {i}",
    "running late the bus is slow {i}",
    "thanks for the notes see you in class {i}",
    "movie night at ours bring snacks {i}",
    "happy birthday hope its lovely {i}",
]
SPAM_TEMPLATES = [
    "URGENT you have won a free prize claim {i} immediately",
    "free entry weekly competition text {i} to enter now",
    "congratulations you are selected for cash reward {i}",
    "exclusive offer expires today reply {i} to subscribe",
    "your mobile number won the draw call {i} now",
]


def toy_corpus(n_ham=72, n_spam=48) -> Corpus:
    messages = []
    for i in range(n_ham):
        text = HAM_TEMPLATES[i % len(HAM_TEMPLATES)].format(i=i)
        messages.append(LabeledMessage(len(messages), text, Label.HAM))
    for i in range(n_spam):
        text = SPAM_TEMPLATES[i % len(SPAM_TEMPLATES)].format(i=i)
        messages.append(LabeledMessage(len(messages), text, Label.SPAM))
    return Corpus(tuple(messages))


def nb_config(**kwargs) -> PipelineConfig:
    defaults = dict(
        featurizer=FeaturizerKind.TFIDF,
        model_kind=ModelKind.NAIVE_BAYES,
        seed=7,
        split_counts=(90, 20, 10),
    )
    defaults.update(kwargs)
    return PipelineConfig(**defaults)


class TestTrainPipeline:
    def test_learns_toy_spam(self):
        pipeline, report = train_pipeline(toy_corpus(), nb_config())
        assert report.accuracy >= 0.9
        assert report.train_wall_time >= 0
        assert report.inference_wall_time >= 0

    def test_balance_flag_downsamples(self):
        corpus = toy_corpus(80, 40)
        pipeline, report = train_pipeline(corpus, nb_config(balance=True, split_counts=(60, 15, 5)))
        assert pipeline.train_accuracy is not None

    def test_default_split_is_75_25(self):
        pipeline, report = train_pipeline(toy_corpus(), nb_config(split_counts=None))
        assert report.accuracy > 0.8

    def test_bow_featurizer(self):
        _, report = train_pipeline(toy_corpus(), nb_config(featurizer=FeaturizerKind.BOW))
        assert report.accuracy >= 0.9

    def test_embedding_featurizer_with_hashed_provider(self):
        config = nb_config(
            featurizer=FeaturizerKind.EMBEDDING,
            embedding=EmbeddingSpec(provider="hashed", dim=48, seed=3),
        )
        pipeline, report = train_pipeline(toy_corpus(), config)
        assert pipeline.model.params["event_model"] == "gaussian"
        assert report.accuracy >= 0.8

    def test_embedding_without_spec_rejected(self):
        with pytest.raises(ConfigError):
            train_pipeline(toy_corpus(), nb_config(featurizer=FeaturizerKind.EMBEDDING))

    def test_forced_multinomial_on_signed_embeddings_rejected(self):
        config = nb_config(
            featurizer=FeaturizerKind.EMBEDDING,
            embedding=EmbeddingSpec(provider="hashed", dim=32, seed=0),
            hyperparameters={"event_model": "multinomial"},
        )
        with pytest.raises(ConfigError):
            train_pipeline(toy_corpus(), config)

    def test_missing_embedding_surfaces_ids(self, tmp_path):
        path = tmp_path / "emb.txt"
        corpus = toy_corpus(20, 12)
        known = {m.text: np.full(8, 0.5) for m in list(corpus)[:-2]}
        write_embeddings_file(str(path), 8, known)
        config = nb_config(
            featurizer=FeaturizerKind.EMBEDDING,
            embedding=EmbeddingSpec(provider="file", dim=8, path=str(path)),
            split_counts=(24, 6, 2),
        )
        with pytest.raises(MissingEmbedding):
            train_pipeline(corpus, config)

    def test_no_train_test_leakage(self):
        # a term that only ever appears in test messages gets no column
        corpus = toy_corpus()
        pipeline, _ = train_pipeline(corpus, nb_config())
        split_terms = set(pipeline.vocabulary.term_to_index)
        assert "zzzunseenzzz" not in split_terms
        X = pipeline.featurize(["zzzunseenzzz completely novel"])
        assert X.n_cols == len(pipeline.vocabulary.term_to_index)

    def test_stage_context_in_errors(self):
        corpus = toy_corpus(10, 10)
        with pytest.raises(Exception, match="split"):
            train_pipeline(corpus, nb_config(split_counts=(90, 20, 10)))


@pytest.fixture(scope="module")
def pipeline():
    pipe, _ = train_pipeline(toy_corpus(), nb_config())
    return pipe


class TestClassifyMessage:

    def test_rule_stage_short_circuits(self, pipeline):
        verdict = pipeline.classify_message("CENTRAL BANK has blocked your Account and Atm Card has been deactivated")
        assert verdict.label is Label.SPAM
        assert verdict.stage is Stage.RULE
        assert verdict.matched_rule_ids

    def test_clean_message_routed_to_model(self, pipeline):
        verdict = pipeline.classify_message("are we still meeting at 5?")
        assert verdict.stage is Stage.MODEL

    def test_empty_message_defined(self, pipeline):
        verdict = pipeline.classify_message("")
        assert verdict.stage is Stage.MODEL
        assert verdict.label in (Label.HAM, Label.SPAM)

    def test_short_circuit_dominance(self, pipeline):
        # every rule-flagged text must come back spam through the pipeline
        texts = [
            "WIN instant cash",
            "BVN ALERT: verify now",
            "lottery results enclosed",
            "claim at http://bit.ly/x123",
        ]
        for text in texts:
            verdict = pipeline.classify_message(text)
            assert verdict.label is Label.SPAM and verdict.stage is Stage.RULE

    def test_predict_texts_mixes_stages(self, pipeline):
        preds = pipeline.predict_texts(
            ["WIN a lottery today", "movie night at ours bring snacks 3"]
        )
        assert preds.tolist() == [1, 0]

    def test_rule_flags_count_as_spam_in_evaluation(self):
        corpus = Corpus(
            tuple(
                [LabeledMessage(0, "WIN free cash right now", Label.SPAM)]
                + [LabeledMessage(i, f"calm ordinary note {i}", Label.HAM) for i in range(1, 8)]
            )
        )
        pipe, _ = train_pipeline(toy_corpus(), nb_config())
        report, cm = evaluate_pipeline(pipe, corpus, positive=Label.SPAM)
        assert cm.tp >= 1  # the rule-flagged message scored as a spam prediction


class TestPersistence:
    def test_round_trip_identical_verdicts(self, tmp_path):
        pipeline, _ = train_pipeline(toy_corpus(), nb_config())
        path = tmp_path / "model.bundle"
        save_pipeline(pipeline, str(path))
        loaded = load_pipeline(str(path))
        held_out = [f"brand new message number {i} about plans" for i in range(50)]
        held_out += [f"WIN free cash prize {i}" for i in range(50)]
        for text in held_out:
            a = pipeline.classify_message(text)
            b = loaded.classify_message(text)
            assert (a.label, a.stage, a.score, a.matched_rule_ids) == (
                b.label, b.stage, b.score, b.matched_rule_ids,
            )

    def test_byte_identical_bundles_for_same_seed(self, tmp_path):
        for kind in (ModelKind.NAIVE_BAYES, ModelKind.RANDOM_FOREST):
            hp = {"n_trees": 5} if kind is ModelKind.RANDOM_FOREST else {}
            paths = []
            for run in ("a", "b"):
                pipe, _ = train_pipeline(
                    toy_corpus(), nb_config(model_kind=kind, hyperparameters=hp)
                )
                p = tmp_path / f"{kind.value}-{run}.bundle"
                save_pipeline(pipe, str(p))
                paths.append(p)
            assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_truncated_file_is_corrupt(self, tmp_path):
        pipeline, _ = train_pipeline(toy_corpus(), nb_config())
        path = tmp_path / "model.bundle"
        save_pipeline(pipeline, str(path))
        data = path.read_bytes()
        path.write_bytes(data[: len(data) // 2])
        with pytest.raises(CorruptModel):
            load_pipeline(str(path))

    def test_tampered_payload_fails_checksum(self, tmp_path):
        pipeline, _ = train_pipeline(toy_corpus(), nb_config())
        path = tmp_path / "model.bundle"
        save_pipeline(pipeline, str(path))
        doc = json.loads(path.read_text())
        doc["payload"]["train_accuracy"] = 0.12345
        path.write_text(json.dumps(doc))
        with pytest.raises(CorruptModel):
            load_pipeline(str(path))

    def test_future_version_rejected(self, tmp_path):
        pipeline, _ = train_pipeline(toy_corpus(), nb_config())
        path = tmp_path / "model.bundle"
        save_pipeline(pipeline, str(path))
        doc = json.loads(path.read_text())
        doc["format_version"] = 99
        path.write_text(json.dumps(doc))
        with pytest.raises(UnsupportedVersion):
            load_pipeline(str(path))

    def test_bundle_is_self_contained_for_rules(self, tmp_path):
        pipeline, _ = train_pipeline(toy_corpus(), nb_config())
        path = tmp_path / "model.bundle"
        save_pipeline(pipeline, str(path))
        loaded = load_pipeline(str(path))
        assert loaded.config.rules.to_json() == pipeline.config.rules.to_json()


class TestEndToEndDeterminism:
    def test_same_inputs_same_reports(self):
        r = []
        for _ in range(2):
            _, report = train_pipeline(toy_corpus(), nb_config(model_kind=ModelKind.LINEAR_SVM))
            r.append((report.accuracy, report.precision, report.recall, report.fp_count, report.fn_count))
        assert r[0] == r[1]

    def test_different_seed_changes_split(self):
        _, r1 = train_pipeline(toy_corpus(), nb_config(seed=1))
        _, r2 = train_pipeline(toy_corpus(), nb_config(seed=2))
        # reports may coincide, but the fitted vocabularies generally differ
        p1, _ = train_pipeline(toy_corpus(), nb_config(seed=1))
        p2, _ = train_pipeline(toy_corpus(), nb_config(seed=2))
        assert (
            p1.vocabulary.term_to_index != p2.vocabulary.term_to_index
            or r1.accuracy != r2.accuracy
        )


class TestEvaluatePipeline:
    def test_ham_positive_metrics(self):
        pipe, _ = train_pipeline(toy_corpus(), nb_config())
        report, cm = evaluate_pipeline(pipe, toy_corpus(), positive=Label.HAM)
        assert cm.positive_class is Label.HAM
        assert report.accuracy > 0.9
