import pathlib

import pytest

from spamkit.corpus import Corpus, Label, LabeledMessage, Source

REPO_ROOT = pathlib.Path(__file__).resolve().parent.parent
SMS_CSV = REPO_ROOT / "data" / "sms_spam.csv"


def make_corpus(n_ham: int, n_spam: int, source=Source.OTHER, prefix: str = "msg") -> Corpus:
    """Synthetic corpus with distinguishable texts, hams first."""
    messages = []
    for i in range(n_ham):
        messages.append(LabeledMessage(len(messages), f"{prefix} ham {i}", Label.HAM, source))
    for i in range(n_spam):
        messages.append(LabeledMessage(len(messages), f"{prefix} spam {i}", Label.SPAM, source))
    return Corpus(tuple(messages))


@pytest.fixture(scope="session")
def sms_csv_path() -> pathlib.Path:
    assert SMS_CSV.exists(), "shipped UCI/Kaggle corpus missing from data/"
    return SMS_CSV
