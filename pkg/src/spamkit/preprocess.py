"""Text normalization and transformer-style sequence encoding.

The classical path (lowercase, punctuation removal, stop words, stemming)
feeds the count/TF-IDF vectorizers; the subword path (WordPiece pieces,
special tokens, padding, attention masks) produces fixed-length encoded
sequences for any downstream dense encoder.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

from .errors import InvalidLength, SchemaError
from .stemmer import porter_stem

PAD, UNK, CLS, SEP, MASK = "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"
RESERVED_TOKENS = (PAD, UNK, CLS, SEP, MASK)

MAX_WORDPIECE_CHARS = 100
DEFAULT_MAX_LEN = 64


def load_stopwords(path: str) -> frozenset[str]:
    """Read a stop-word file: one lowercase word per line."""
    with open(path, encoding="utf-8") as f:
        return frozenset(line.strip() for line in f if line.strip())


def default_stopwords() -> frozenset[str]:
    text = resources.files("spamkit.data").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(line.strip() for line in text.splitlines() if line.strip())


_DEFAULT_STOPWORDS = default_stopwords()


@dataclass(frozen=True)
class PreprocessConfig:
    lowercase: bool = True
    strip_punctuation: bool = True
    stopword_list: frozenset[str] = field(default_factory=lambda: _DEFAULT_STOPWORDS)
    apply_stemming: bool = True

    def __post_init__(self):
        for word in self.stopword_list:
            if word != word.lower() or not all(c.isalnum() for c in word):
                raise SchemaError(f"stop word {word!r} must be lowercase and punctuation-free")


@dataclass(frozen=True)
class TokenizedMessage:
    tokens: tuple[str, ...]
    text_length: int


def _stem_to_fixpoint(token: str) -> str:
    # Porter is not idempotent on every input ("university" -> "univers"
    # -> "univer"), so iterate until stable; converges in a couple passes.
    for _ in range(20):
        stemmed = porter_stem(token)
        if stemmed == token:
            return token
        token = stemmed
    return token


def normalize(text: str, config: PreprocessConfig | None = None) -> TokenizedMessage:
    """Run the normalization pipeline over one raw message.

    Order: record original character count, lowercase, replace punctuation
    and special characters with spaces, split on whitespace, drop stop
    words, stem.  Stemming runs to a fixed point and stop words are
    re-dropped afterwards, so normalizing the joined output a second time
    changes nothing.
    """
    if config is None:
        config = PreprocessConfig()
    text_length = len(text)
    work = text.lower() if config.lowercase else text
    if config.strip_punctuation:
        work = "".join(c if c.isalnum() or c.isspace() else " " for c in work)
    tokens = [t for t in work.split() if t not in config.stopword_list]
    if config.apply_stemming:
        tokens = [_stem_to_fixpoint(t) for t in tokens]
        tokens = [t for t in tokens if t not in config.stopword_list]
    return TokenizedMessage(tokens=tuple(tokens), text_length=text_length)


@dataclass(frozen=True)
class SubwordVocab:
    entries: dict[str, int]

    def __post_init__(self):
        ids = sorted(self.entries.values())
        if ids != list(range(len(self.entries))):
            raise SchemaError("subword vocab ids must be dense from 0")
        for token in RESERVED_TOKENS:
            if token not in self.entries:
                raise SchemaError(f"subword vocab is missing reserved token {token}")

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, token: str) -> bool:
        return token in self.entries

    def id_of(self, token: str) -> int:
        return self.entries.get(token, self.entries[UNK])

    @classmethod
    def from_tokens(cls, tokens) -> "SubwordVocab":
        entries: dict[str, int] = {}
        for token in tokens:
            if token in entries:
                raise SchemaError(f"duplicate vocab token {token!r}")
            entries[token] = len(entries)
        return cls(entries)

    @classmethod
    def from_file(cls, path: str) -> "SubwordVocab":
        """Standard vocab.txt layout: one token per line, line number = id."""
        with open(path, encoding="utf-8") as f:
            return cls.from_tokens(line.rstrip("\r\n") for line in f if line.strip())


@dataclass(frozen=True)
class EncodedSequence:
    token_ids: tuple[int, ...]
    attention_mask: tuple[int, ...]
    segment_ids: tuple[int, ...]
    max_len: int


def wordpiece_tokenize(text: str, vocab: SubwordVocab) -> list[str]:
    """Greedy longest-match-first subword segmentation.

    Words are taken from a plain whitespace split; continuation pieces
    carry the "##" prefix.  A word longer than MAX_WORDPIECE_CHARS, or one
    with no valid segmentation, maps to the single token [UNK].
    """
    pieces: list[str] = []
    for word in text.split():
        if len(word) > MAX_WORDPIECE_CHARS:
            pieces.append(UNK)
            continue
        start = 0
        word_pieces: list[str] = []
        while start < len(word):
            end = len(word)
            match = None
            while start < end:
                piece = word[start:end]
                if start > 0:
                    piece = "##" + piece
                if piece in vocab:
                    match = piece
                    break
                end -= 1
            if match is None:
                word_pieces = [UNK]
                break
            word_pieces.append(match)
            start = end
        pieces.extend(word_pieces)
    return pieces


def encode_sequence(subtokens, vocab: SubwordVocab, max_len: int = DEFAULT_MAX_LEN) -> EncodedSequence:
    """Lay out [CLS] t1 .. tk [SEP] [PAD]... at a fixed length.

    Token lists longer than max_len - 2 are tail-truncated; the attention
    mask is 1 exactly on non-pad positions and segment ids are all zero.
    """
    if max_len < 3:
        raise InvalidLength(f"max_len must be >= 3, got {max_len}")
    kept = list(subtokens)[: max_len - 2]
    ids = [vocab.id_of(CLS)] + [vocab.id_of(t) for t in kept] + [vocab.id_of(SEP)]
    n_real = len(ids)
    ids.extend([vocab.id_of(PAD)] * (max_len - n_real))
    mask = [1] * n_real + [0] * (max_len - n_real)
    return EncodedSequence(
        token_ids=tuple(ids),
        attention_mask=tuple(mask),
        segment_ids=tuple([0] * max_len),
        max_len=max_len,
    )
