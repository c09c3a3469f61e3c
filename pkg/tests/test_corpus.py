import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spamkit.corpus import (
    Corpus,
    CorpusFormat,
    Label,
    LabeledMessage,
    Source,
    downsample_majority,
    load_corpus,
    merge_corpora,
    save_corpus,
    stratified_split,
)
from spamkit.errors import CountMismatch, DegenerateClass, EmptyCorpus, MalformedRecord

from conftest import make_corpus


class TestLoadCorpus:
    def test_tsv_line_parses(self, tmp_path):
        p = tmp_path / "a.tsv"
        p.write_text("ham\tGo until jurong point\nspam\tWINNER!! claim now\n", encoding="utf-8")
        corpus = load_corpus(str(p), CorpusFormat.TAB_SEPARATED, Source.UCI_KAGGLE)
        assert len(corpus) == 2
        assert corpus.messages[0].label is Label.HAM
        assert corpus.messages[0].text == "Go until jurong point"
        assert corpus.messages[1].label is Label.SPAM

    def test_labels_case_insensitive(self, tmp_path):
        p = tmp_path / "a.tsv"
        p.write_text("HAM\thello there\n Spam \tbuy now\n", encoding="utf-8")
        corpus = load_corpus(str(p), CorpusFormat.TAB_SEPARATED)
        assert [m.label for m in corpus] == [Label.HAM, Label.SPAM]

    def test_header_only_csv_is_empty(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("label,text\n", encoding="utf-8")
        with pytest.raises(EmptyCorpus):
            load_corpus(str(p), CorpusFormat.COMMA_SEPARATED_WITH_HEADER)

    def test_unknown_label_names_line(self, tmp_path):
        p = tmp_path / "a.tsv"
        p.write_text("ham\tok\nspamm\thello\n", encoding="utf-8")
        with pytest.raises(MalformedRecord, match="line 2"):
            load_corpus(str(p), CorpusFormat.TAB_SEPARATED)

    def test_missing_field(self, tmp_path):
        p = tmp_path / "a.tsv"
        p.write_text("ham no tab here\n", encoding="utf-8")
        with pytest.raises(MalformedRecord, match="line 1"):
            load_corpus(str(p), CorpusFormat.TAB_SEPARATED)

    def test_csv_quoted_fields(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text('label,text\nham,"hello, with comma"\nspam,"line\nbreak"\n', encoding="utf-8")
        corpus = load_corpus(str(p), CorpusFormat.COMMA_SEPARATED_WITH_HEADER)
        assert corpus.messages[0].text == "hello, with comma"
        assert corpus.messages[1].text == "line\nbreak"

    def test_ids_sequential(self, tmp_path):
        p = tmp_path / "a.tsv"
        p.write_text("ham\ta\nham\tb\nham\tc\n", encoding="utf-8")
        corpus = load_corpus(str(p), CorpusFormat.TAB_SEPARATED)
        assert [m.id for m in corpus] == [0, 1, 2]

    def test_shipped_corpus_loads(self, sms_csv_path):
        corpus = load_corpus(str(sms_csv_path), CorpusFormat.COMMA_SEPARATED_WITH_HEADER, Source.UCI_KAGGLE)
        assert len(corpus) == 5572
        counts = corpus.class_counts
        assert counts[Label.HAM] == 4825
        assert counts[Label.SPAM] == 747


class TestSaveRoundTrip:
    def test_tsv_round_trip_byte_exact(self, tmp_path):
        texts = ["plain text", "trailing space ", "  leading", "unicode £ é ∑", "1+1=2?"]
        corpus = Corpus(
            tuple(LabeledMessage(i, t, Label.HAM if i % 2 == 0 else Label.SPAM) for i, t in enumerate(texts))
        )
        p = tmp_path / "out.tsv"
        save_corpus(corpus, str(p), CorpusFormat.TAB_SEPARATED)
        again = load_corpus(str(p), CorpusFormat.TAB_SEPARATED)
        assert [m.text for m in again] == texts
        assert [m.label for m in again] == [m.label for m in corpus]

    def test_tsv_rejects_tab_and_newline(self, tmp_path):
        for bad in ["has\ttab", "has\nnewline"]:
            corpus = Corpus((LabeledMessage(0, bad, Label.HAM),))
            with pytest.raises(MalformedRecord):
                save_corpus(corpus, str(tmp_path / "x.tsv"), CorpusFormat.TAB_SEPARATED)

    def test_csv_round_trip_quotes_tricky_text(self, tmp_path):
        texts = ['with "quotes"', "with, comma", "with\nnewline", "with\ttab"]
        corpus = Corpus(tuple(LabeledMessage(i, t, Label.SPAM) for i, t in enumerate(texts)))
        p = tmp_path / "out.csv"
        save_corpus(corpus, str(p), CorpusFormat.COMMA_SEPARATED_WITH_HEADER)
        again = load_corpus(str(p), CorpusFormat.COMMA_SEPARATED_WITH_HEADER)
        assert [m.text for m in again] == texts


class TestMerge:
    def test_disjoint_union(self):
        a = make_corpus(2, 1, prefix="a")
        b = make_corpus(1, 1, prefix="b")
        merged = merge_corpora([a, b])
        assert len(merged) == 5
        assert [m.id for m in merged] == list(range(5))

    def test_duplicate_kept_once(self):
        a = Corpus((LabeledMessage(0, "same text", Label.SPAM),))
        b = Corpus((LabeledMessage(0, "same text", Label.SPAM), LabeledMessage(1, "other", Label.HAM)))
        merged = merge_corpora([a, b])
        assert len(merged) == 2
        assert merged.messages[0].text == "same text"

    def test_same_text_different_label_not_deduped(self):
        a = Corpus((LabeledMessage(0, "same text", Label.SPAM),))
        b = Corpus((LabeledMessage(0, "same text", Label.HAM),))
        assert len(merge_corpora([a, b])) == 2

    def test_paper_scale_merge_with_two_duplicates(self):
        # 5,572 + 1,141 + 275 where exactly two later rows repeat an
        # earlier (text, label) pair: the documented dedup leaves 6,986.
        uci = make_corpus(4825, 747, Source.UCI_KAGGLE, prefix="uci")
        dsn_rows = [LabeledMessage(0, "uci spam 0", Label.SPAM, Source.DSN)]
        dsn_rows += [
            LabeledMessage(i + 1, f"dsn spam {i}", Label.SPAM, Source.DSN) for i in range(1140)
        ]
        self_rows = [LabeledMessage(0, "uci spam 1", Label.SPAM, Source.SELF_COLLECTED)]
        self_rows += [
            LabeledMessage(i + 1, f"self spam {i}", Label.SPAM, Source.SELF_COLLECTED)
            for i in range(274)
        ]
        dsn = Corpus(tuple(dsn_rows))
        self_collected = Corpus(tuple(self_rows))
        assert (len(uci), len(dsn), len(self_collected)) == (5572, 1141, 275)
        merged = merge_corpora([uci, dsn, self_collected])
        assert len(merged) == 6986

    def test_all_empty_raises(self):
        with pytest.raises(EmptyCorpus):
            merge_corpora([])


class TestDownsample:
    def test_parity_keeps_all_minority(self):
        corpus = make_corpus(100, 30)
        balanced = downsample_majority(corpus, seed=7)
        counts = balanced.class_counts
        assert counts[Label.HAM] == 30 and counts[Label.SPAM] == 30
        spam_texts = {m.text for m in corpus if m.label is Label.SPAM}
        assert {m.text for m in balanced if m.label is Label.SPAM} == spam_texts

    def test_already_balanced_unchanged(self):
        corpus = make_corpus(40, 40)
        assert downsample_majority(corpus, seed=1) is corpus

    def test_missing_class_raises(self):
        corpus = make_corpus(10, 0)
        with pytest.raises(DegenerateClass):
            downsample_majority(corpus, seed=0)

    def test_spam_majority_also_works(self):
        corpus = make_corpus(5, 20)
        balanced = downsample_majority(corpus, seed=3)
        assert balanced.class_counts == {Label.HAM: 5, Label.SPAM: 5}

    @given(n_ham=st.integers(1, 60), n_spam=st.integers(1, 60), seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_property_exact_parity(self, n_ham, n_spam, seed):
        balanced = downsample_majority(make_corpus(n_ham, n_spam), seed)
        counts = balanced.class_counts
        assert counts[Label.HAM] == counts[Label.SPAM] == min(n_ham, n_spam)

    def test_seed_determinism_and_variation(self):
        corpus = make_corpus(120, 20)
        a = downsample_majority(corpus, seed=11)
        b = downsample_majority(corpus, seed=11)
        assert [m.id for m in a] == [m.id for m in b]
        c = downsample_majority(corpus, seed=12)
        assert [m.id for m in a] != [m.id for m in c]


class TestStratifiedSplit:
    def test_paper_counts(self):
        corpus = make_corpus(3500, 3486)  # 6,986 total
        split = stratified_split(corpus, (4540, 1396, 1050), seed=0)
        assert (len(split.train), len(split.test), len(split.validation)) == (4540, 1396, 1050)

    def test_small_balanced_split_stratifies(self):
        corpus = make_corpus(5, 5)
        split = stratified_split(corpus, (8, 1, 1), seed=0)
        counts = split.train.class_counts
        assert counts[Label.HAM] == 4 and counts[Label.SPAM] == 4

    def test_count_mismatch(self):
        corpus = make_corpus(3500, 3486)
        with pytest.raises(CountMismatch):
            stratified_split(corpus, (4540, 1396, 1051), seed=0)

    def test_zero_validation_allowed(self):
        corpus = make_corpus(6, 2)
        split = stratified_split(corpus, (6, 2, 0), seed=0)
        assert len(split.validation) == 0

    @given(
        n_ham=st.integers(2, 50),
        n_spam=st.integers(2, 50),
        seed=st.integers(0, 2**31),
        data=st.data(),
    )
    @settings(max_examples=50, deadline=None)
    def test_property_partition_and_proportions(self, n_ham, n_spam, seed, data):
        total = n_ham + n_spam
        n_train = data.draw(st.integers(1, total - 1))
        n_test = data.draw(st.integers(1, total - n_train))
        n_val = total - n_train - n_test
        corpus = make_corpus(n_ham, n_spam)
        split = stratified_split(corpus, (n_train, n_test, n_val), seed)
        ids = [m.id for part in (split.train, split.test, split.validation) for m in part]
        assert sorted(ids) == list(range(total))
        for part, size in ((split.train, n_train), (split.test, n_test), (split.validation, n_val)):
            if size == 0:
                continue
            ham = part.class_counts[Label.HAM]
            ideal = size * n_ham / total
            assert abs(ham - ideal) <= 1.0

    def test_seed_determinism_and_variation(self):
        corpus = make_corpus(80, 40)
        a = stratified_split(corpus, (90, 20, 10), seed=5)
        b = stratified_split(corpus, (90, 20, 10), seed=5)
        assert [m.id for m in a.train] == [m.id for m in b.train]
        c = stratified_split(corpus, (90, 20, 10), seed=6)
        assert [m.id for m in a.train] != [m.id for m in c.train]


class TestCorpusInvariants:
    def test_duplicate_ids_rejected(self):
        with pytest.raises(MalformedRecord):
            Corpus((LabeledMessage(0, "a", Label.HAM), LabeledMessage(0, "b", Label.HAM)))

    def test_blank_text_rejected(self):
        with pytest.raises(MalformedRecord):
            LabeledMessage(0, "   ", Label.HAM)

    def test_class_counts_match_recount(self):
        corpus = make_corpus(3, 4)
        assert corpus.class_counts == {Label.HAM: 3, Label.SPAM: 4}
