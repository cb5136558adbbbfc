"""Vocabularies, raw captions, and token-indexed training examples."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from ..errors import InputError

PAD, BOS, EOS, UNK = 0, 1, 2, 3
RESERVED = ("<pad>", "<s>", "</s>", "<unk>")


@dataclass(frozen=True)
class RawCaption:
    image_id: int
    language_id: str
    words: tuple[str, ...]

    @property
    def text(self) -> str:
        return " ".join(self.words)


@dataclass(frozen=True)
class CaptionedExample:
    """Sentinel-wrapped token-id sequence for one (image, caption) pair."""

    scene_id: int
    language_id: str
    tokens: tuple[int, ...]
    raw_text: str

    def word_positions(self) -> range:
        """Positions of the actual words (between the begin/end sentinels)."""
        return range(1, len(self.tokens) - 1)


@dataclass
class Vocabulary:
    language_id: str
    index_to_word: list[str]
    counts: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        self.word_to_index = {w: i for i, w in enumerate(self.index_to_word)}

    @property
    def size(self) -> int:
        return len(self.index_to_word)

    def content_words(self) -> list[str]:
        return self.index_to_word[len(RESERVED):]

    def index(self, word: str) -> int:
        return self.word_to_index.get(word, UNK)

    def word(self, index: int) -> str:
        return self.index_to_word[index]

    def encode(self, words) -> list[int]:
        return [self.index(w) for w in words]

    def decode(self, indices, keep_sentinels: bool = False) -> list[str]:
        words = [self.index_to_word[i] for i in indices]
        if keep_sentinels:
            return words
        return [w for i, w in zip(indices, words) if i >= len(RESERVED)]


def build_vocabulary(captions, min_count: int = 6) -> Vocabulary:
    """Index words occurring at least `min_count` times (strict 'more than
    five' at the default); ties in count are broken lexicographically."""
    captions = list(captions)
    if not captions:
        raise InputError("cannot build a vocabulary from an empty caption list")
    languages = {c.language_id for c in captions}
    if len(languages) > 1:
        raise InputError(f"captions mix languages: {sorted(languages)}")
    counts = Counter()
    for cap in captions:
        counts.update(cap.words)
    retained = sorted((w for w, c in counts.items() if c >= min_count),
                      key=lambda w: (-counts[w], w))
    vocab = Vocabulary(
        language_id=captions[0].language_id,
        index_to_word=list(RESERVED) + retained,
        counts={w: counts[w] for w in retained},
    )
    return vocab


def index_caption(caption: RawCaption, vocab: Vocabulary, max_len: int) -> CaptionedExample:
    words = caption.words
    if len(words) > max_len - 2:
        words = words[: max_len - 2]
    tokens = (BOS, *vocab.encode(words), EOS)
    return CaptionedExample(
        scene_id=caption.image_id,
        language_id=caption.language_id,
        tokens=tokens,
        raw_text=caption.text,
    )


def index_captions(captions, vocab: Vocabulary, max_len: int) -> list[CaptionedExample]:
    return [index_caption(c, vocab, max_len) for c in captions]
