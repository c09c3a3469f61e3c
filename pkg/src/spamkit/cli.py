"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 model error.
"""

from __future__ import annotations

import json
import sys

import click

from .classify import ModelKind
from .corpus import Corpus, CorpusFormat, Label, LabeledMessage, Source, load_corpus
from .errors import ConfigError, DataError, ModelError
from .evaluate import ComparisonTable, compare_models
from .pipeline import (
    EmbeddingSpec,
    FeaturizerKind,
    PipelineConfig,
    evaluate_pipeline,
    load_pipeline,
    save_pipeline,
    train_pipeline,
)
from .embed import file_backed_provider
from .rules import default_ruleset, load_rules, match_message

CORPUS_FORMAT_VERSION = 1


def save_corpus_bundle(corpus: Corpus, path: str) -> None:
    doc = {
        "format_version": CORPUS_FORMAT_VERSION,
        "messages": [
            {"id": m.id, "label": m.label.value, "source": m.source.value, "text": m.text}
            for m in corpus
        ],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
        f.write("\n")


def load_corpus_bundle(path: str) -> Corpus:
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    messages = tuple(
        LabeledMessage(m["id"], m["text"], Label(m["label"]), Source(m["source"]))
        for m in doc["messages"]
    )
    return Corpus(messages)


def _load_any_corpus(path: str) -> Corpus:
    """Accept an ingested bundle or, by extension, a raw .tsv/.csv file."""
    if path.endswith(".tsv"):
        return load_corpus(path, CorpusFormat.TAB_SEPARATED)
    if path.endswith(".csv"):
        return load_corpus(path, CorpusFormat.COMMA_SEPARATED_WITH_HEADER)
    try:
        return load_corpus_bundle(path)
    except (json.JSONDecodeError, KeyError) as exc:
        raise DataError(
            f"{path} is not an ingested corpus; run `spamkit ingest` first "
            f"or pass a .tsv/.csv file"
        ) from exc


def _parse_split(text: str | None) -> tuple[int, int, int] | None:
    if text is None:
        return None
    parts = text.split(",")
    if len(parts) != 3:
        raise click.UsageError("--split expects three comma-separated counts, e.g. 4540,1396,1050")
    try:
        return tuple(int(p) for p in parts)  # type: ignore[return-value]
    except ValueError:
        raise click.UsageError(f"--split counts must be integers, got {text!r}")


def _build_config(featurizer, embeddings, model, rules, balance, seed, split, min_df=1):
    ruleset = load_rules(rules) if rules else default_ruleset()
    feat = FeaturizerKind(featurizer)
    embedding = None
    if feat is FeaturizerKind.EMBEDDING:
        if embeddings:
            provider = file_backed_provider(embeddings)
            embedding = EmbeddingSpec(provider="file", dim=provider.dim, path=embeddings)
        else:
            embedding = EmbeddingSpec(provider="hashed", seed=seed)
    elif embeddings:
        raise ConfigError("--embeddings only applies to --featurizer embedding")
    return PipelineConfig(
        featurizer=feat,
        model_kind=ModelKind(model),
        embedding=embedding,
        rules=ruleset,
        seed=seed,
        split_counts=split,
        balance=balance,
        min_df=min_df,
    )


def _print_report(report) -> None:
    table = ComparisonTable(reports=(report,))
    click.echo(table.render_text(), nl=False)


@click.group()
def cli():
    """Hybrid rule-and-model SMS spam detection."""


@cli.command()
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--format", "fmt", required=True, type=click.Choice(["tsv", "csv"]))
@click.option("--source", default="other",
              type=click.Choice([s.value for s in Source]))
@click.option("--out", required=True, type=click.Path())
def ingest(input_path, fmt, source, out):
    """Parse a raw dataset file into a corpus bundle."""
    corpus_format = CorpusFormat.TAB_SEPARATED if fmt == "tsv" else CorpusFormat.COMMA_SEPARATED_WITH_HEADER
    corpus = load_corpus(input_path, corpus_format, Source(source))
    save_corpus_bundle(corpus, out)
    counts = corpus.class_counts
    click.echo(f"ingested {len(corpus)} messages "
               f"(ham={counts[Label.HAM]}, spam={counts[Label.SPAM]}) -> {out}")


@cli.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--featurizer", default="tfidf", type=click.Choice(["bow", "tfidf", "embedding"]))
@click.option("--embeddings", default=None, type=click.Path())
@click.option("--model", default="nb", type=click.Choice([m.value for m in ModelKind]))
@click.option("--rules", default=None, type=click.Path())
@click.option("--balance", is_flag=True, default=False)
@click.option("--seed", default=0, type=int)
@click.option("--split", default=None, help="train,test,validation counts; default 75/25/0")
@click.option("--out", required=True, type=click.Path())
def train(corpus_path, featurizer, embeddings, model, rules, balance, seed, split, out):
    """Train a pipeline and write a self-contained model bundle."""
    corpus = _load_any_corpus(corpus_path)
    config = _build_config(featurizer, embeddings, model, rules, balance, seed, _parse_split(split))
    pipeline, report = train_pipeline(corpus, config)
    save_pipeline(pipeline, out)
    _print_report(report)
    click.echo(f"saved bundle -> {out}")


@cli.command()
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--positive", default="spam", type=click.Choice(["ham", "spam"]))
@click.option("--csv", "csv_path", default=None, type=click.Path())
def evaluate(model_path, corpus_path, positive, csv_path):
    """Evaluate a saved bundle against a labeled corpus."""
    pipeline = load_pipeline(model_path)
    corpus = _load_any_corpus(corpus_path)
    report, cm = evaluate_pipeline(pipeline, corpus, Label(positive))
    _print_report(report)
    click.echo(f"confusion (positive={positive}): tp={cm.tp} fp={cm.fp} fn={cm.fn} tn={cm.tn}")
    if csv_path:
        table = ComparisonTable(reports=(report,))
        with open(csv_path, "w", encoding="utf-8") as f:
            f.write(table.to_csv())
        click.echo(f"wrote {csv_path}")


@cli.command()
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--text", default=None)
@click.option("--stdin", "use_stdin", is_flag=True, default=False)
def classify(model_path, text, use_stdin):
    """Classify messages; prints `label<TAB>stage<TAB>score` per message."""
    if (text is None) == (not use_stdin):
        raise click.UsageError("pass exactly one of --text or --stdin")
    pipeline = load_pipeline(model_path)
    messages = [text] if text is not None else [line.rstrip("\n") for line in sys.stdin]
    for message in messages:
        verdict = pipeline.classify_message(message)
        score = "" if verdict.score is None else f"{verdict.score:.6f}"
        click.echo(f"{verdict.label.value}\t{verdict.stage.value}\t{score}")


@cli.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--featurizer", default="tfidf", type=click.Choice(["bow", "tfidf", "embedding"]))
@click.option("--embeddings", default=None, type=click.Path())
@click.option("--rules", default=None, type=click.Path())
@click.option("--balance", is_flag=True, default=False)
@click.option("--seed", default=0, type=int)
@click.option("--split", default=None)
@click.option("--csv", "csv_path", default=None, type=click.Path())
def compare(corpus_path, featurizer, embeddings, rules, balance, seed, split, csv_path):
    """Train and evaluate all five models on one split; print the ranking."""
    corpus = _load_any_corpus(corpus_path)
    reports = []
    for kind in ModelKind:
        config = _build_config(
            featurizer, embeddings, kind.value, rules, balance, seed, _parse_split(split)
        )
        _, report = train_pipeline(corpus, config)
        reports.append(report)
        click.echo(f"trained {kind.value}: test_acc={report.accuracy:.4f}", err=True)
    table = compare_models(reports)
    click.echo(table.render_text(), nl=False)
    if csv_path:
        with open(csv_path, "w", encoding="utf-8") as f:
            f.write(table.to_csv())
        click.echo(f"wrote {csv_path}")


@cli.command("rules-test")
@click.option("--rules", "rules_path", default=None, type=click.Path())
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
def rules_test(rules_path, corpus_path):
    """Per-rule hit counts over a corpus."""
    ruleset = load_rules(rules_path) if rules_path else default_ruleset()
    corpus = _load_any_corpus(corpus_path)
    hits = {rule.id: 0 for rule in ruleset.rules}
    flagged = 0
    for message in corpus:
        verdict = match_message(message.text, ruleset)
        if verdict.flagged:
            flagged += 1
        for rule_id in verdict.matched_rule_ids:
            hits[rule_id] += 1
    for rule_id, count in hits.items():
        click.echo(f"{rule_id}\t{count}")
    click.echo(f"total flagged: {flagged}/{len(corpus)}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except ModelError as exc:
        click.echo(f"model error: {exc}", err=True)
        return 3
    except DataError as exc:
        click.echo(f"data error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
