"""Word segmentation, WordPiece sub-word alignment, and text reconstruction.

The attack operates on a flat list of words.  Segmentation is deliberately
simple and fully deterministic: split on whitespace, then detach leading and
trailing punctuation characters as words of their own.  The canonical surface
form is the single-space join of the word list; original spacing is not
preserved.
"""

from __future__ import annotations

import hashlib
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path

from .errors import VocabMissingSpecialToken

MASK_TOKEN = "[MASK]"
UNK_TOKEN = "[UNK]"
CLS_TOKEN = "[CLS]"
SEP_TOKEN = "[SEP]"
PAD_TOKEN = "[PAD]"
SPECIAL_TOKENS = (MASK_TOKEN, UNK_TOKEN, CLS_TOKEN, SEP_TOKEN, PAD_TOKEN)

CONTINUATION_PREFIX = "##"


def is_punctuation(text: str) -> bool:
    """True when every character of ``text`` is Unicode punctuation."""
    return bool(text) and all(unicodedata.category(ch).startswith("P") for ch in text)


@dataclass(frozen=True)
class WordSequence:
    """An ordered list of words plus the text it came from."""

    words: tuple[str, ...]
    source_text: str

    def __len__(self) -> int:
        return len(self.words)

    def replaced(self, index: int, word: str) -> "WordSequence":
        """A copy with word ``index`` substituted."""
        words = self.words[:index] + (word,) + self.words[index + 1 :]
        return WordSequence(words, detokenize(words))

    @property
    def text(self) -> str:
        return detokenize(self.words)


def split_words(text: str, lower: bool = True) -> WordSequence:
    """Segment ``text`` into words: whitespace split, punctuation detached.

    Leading and trailing punctuation characters of each chunk become words of
    their own (one word per character); interior punctuation is kept, so
    contractions like "don't" survive.  Special tokens such as "[MASK]" are
    never split or case-folded.  ``lower`` should be set iff the vocabulary
    in use is uncased.
    """
    words: list[str] = []
    for chunk in text.split():
        if chunk in SPECIAL_TOKENS:
            words.append(chunk)
            continue
        if lower:
            chunk = chunk.lower()
        lead: list[str] = []
        trail: list[str] = []
        while chunk and unicodedata.category(chunk[0]).startswith("P"):
            lead.append(chunk[0])
            chunk = chunk[1:]
        while chunk and unicodedata.category(chunk[-1]).startswith("P"):
            trail.append(chunk[-1])
            chunk = chunk[:-1]
        words.extend(lead)
        if chunk:
            words.append(chunk)
        words.extend(reversed(trail))
    return WordSequence(tuple(words), text)


def detokenize(words) -> str:
    """Canonical surface form: words joined with single spaces."""
    return " ".join(words)


@dataclass
class Vocabulary:
    """A WordPiece vocabulary: one token per line, line number = id."""

    tokens: list[str]
    cased: bool = False
    sha256: str = ""
    token_to_id: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.token_to_id:
            self.token_to_id = {tok: i for i, tok in enumerate(self.tokens)}
        for required in (MASK_TOKEN, UNK_TOKEN):
            if required not in self.token_to_id:
                raise VocabMissingSpecialToken(f"vocabulary has no {required} entry")
        self.mask_id = self.token_to_id[MASK_TOKEN]
        self.unk_id = self.token_to_id[UNK_TOKEN]
        self.cls_id = self.token_to_id.get(CLS_TOKEN)
        self.sep_id = self.token_to_id.get(SEP_TOKEN)
        self.pad_id = self.token_to_id.get(PAD_TOKEN)
        if not self.sha256:
            payload = "\n".join(self.tokens).encode("utf-8")
            self.sha256 = hashlib.sha256(payload).hexdigest()

    def __len__(self) -> int:
        return len(self.tokens)

    @classmethod
    def load(cls, path, cased: bool = False) -> "Vocabulary":
        raw = Path(path).read_bytes()
        tokens = [line for line in raw.decode("utf-8").splitlines()]
        while tokens and tokens[-1] == "":
            tokens.pop()
        return cls(tokens=tokens, cased=cased, sha256=hashlib.sha256(raw).hexdigest())

    def save(self, path) -> None:
        Path(path).write_text("\n".join(self.tokens) + "\n", encoding="utf-8")

    def decode(self, token_id: int) -> str:
        return self.tokens[token_id]

    def is_special_id(self, token_id: int) -> bool:
        return self.tokens[token_id] in SPECIAL_TOKENS

    def wordpiece(self, word: str) -> list[int]:
        """Greedy longest-match sub-word split of one word.

        Returns the id list; a word with unmatchable residue collapses to a
        single [UNK] id.
        """
        if word in self.token_to_id:
            return [self.token_to_id[word]]
        ids: list[int] = []
        start = 0
        while start < len(word):
            end = len(word)
            match = None
            while start < end:
                piece = word[start:end]
                if start > 0:
                    piece = CONTINUATION_PREFIX + piece
                if piece in self.token_to_id:
                    match = self.token_to_id[piece]
                    break
                end -= 1
            if match is None:
                return [self.unk_id]
            ids.append(match)
            start = end
        return ids


@dataclass(frozen=True)
class SubwordAlignment:
    """Word positions mapped to half-open spans over a sub-word token list."""

    tokens: tuple[int, ...]
    spans: tuple[tuple[int, int], ...]
    vocab_id: str

    def span(self, word_index: int) -> tuple[int, int]:
        return self.spans[word_index]

    def span_length(self, word_index: int) -> int:
        start, end = self.spans[word_index]
        return end - start


def align_subwords(ws: WordSequence, vocab: Vocabulary) -> SubwordAlignment:
    """Tokenize every word and record its contiguous span of sub-word ids."""
    tokens: list[int] = []
    spans: list[tuple[int, int]] = []
    for word in ws.words:
        ids = vocab.wordpiece(word)
        spans.append((len(tokens), len(tokens) + len(ids)))
        tokens.extend(ids)
    return SubwordAlignment(tuple(tokens), tuple(spans), vocab.sha256)


def encode_for_classifier(
    vocab: Vocabulary,
    text: str,
    pair: str | None = None,
    max_positions: int | None = None,
) -> tuple[list[int], list[int]]:
    """Frame one text (or a pair) for a sequence classifier.

    Returns (input_ids, token_type_ids) shaped [CLS] a [SEP] (b [SEP]).
    When ``max_positions`` is set, segments are trimmed longest-first until
    the framed sequence fits.
    """
    if vocab.cls_id is None or vocab.sep_id is None:
        raise VocabMissingSpecialToken("classifier encoding needs [CLS] and [SEP]")
    seg_a = align_subwords(split_words(text, lower=not vocab.cased), vocab).tokens
    seg_b = (
        align_subwords(split_words(pair, lower=not vocab.cased), vocab).tokens
        if pair is not None
        else ()
    )
    a, b = list(seg_a), list(seg_b)
    if max_positions is not None:
        overhead = 3 if pair is not None else 2
        while len(a) + len(b) > max_positions - overhead:
            if len(a) >= len(b) and a:
                a.pop()
            else:
                b.pop()
    ids = [vocab.cls_id] + a + [vocab.sep_id]
    type_ids = [0] * len(ids)
    if pair is not None:
        ids += b + [vocab.sep_id]
        type_ids += [1] * (len(b) + 1)
    return ids, type_ids
