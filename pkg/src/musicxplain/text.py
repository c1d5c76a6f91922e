"""Word-type featurization of lyrics and mask-driven re-rendering.

The interpretable text unit is the unique word type; masking a word removes
every occurrence of it. Cleaning is fixed and locale-independent: lowercase,
drop Unicode punctuation (category P*), split on whitespace.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


def _strip_punctuation(s: str) -> str:
    drop = {ord(c): None for c in set(s) if unicodedata.category(c).startswith("P")}
    return s.translate(drop) if drop else s


def clean_lyrics(lyrics: str) -> str:
    """Lowercase and strip punctuation; the cleaned stream feeds tokenization."""
    return _strip_punctuation(lyrics.lower())


@dataclass(frozen=True)
class TextFeaturization:
    """Word types of one lyric, with each type's token positions.

    `word_types` is in first-occurrence order; `occurrences` maps every word
    type to its positions in the cleaned token stream. Positions partition
    0..n_tokens-1.
    """

    word_types: tuple[str, ...]
    occurrences: dict[str, tuple[int, ...]]

    def __post_init__(self):
        if len(set(self.word_types)) != len(self.word_types):
            raise ValidationError("word types must be duplicate-free")
        if set(self.word_types) != set(self.occurrences):
            raise ValidationError("occurrence map keys must equal the word types")
        positions = sorted(p for locs in self.occurrences.values() for p in locs)
        if positions != list(range(len(positions))):
            raise ValidationError("occurrence positions must partition the token stream")

    @property
    def n_tokens(self) -> int:
        return sum(len(locs) for locs in self.occurrences.values())

    def tokens(self) -> list[str]:
        """The cleaned token stream, rebuilt in original order."""
        stream = [""] * self.n_tokens
        for word, locs in self.occurrences.items():
            for pos in locs:
                stream[pos] = word
        return stream


def clean_and_tokenize(lyrics: str) -> TextFeaturization:
    """Clean the lyrics and collect word types in first-occurrence order.

    Empty input (or input that cleans to nothing) yields an empty
    featurization; that is not an error.
    """
    tokens = clean_lyrics(lyrics).split()
    word_types: list[str] = []
    occurrences: dict[str, list[int]] = {}
    for pos, tok in enumerate(tokens):
        if tok not in occurrences:
            word_types.append(tok)
            occurrences[tok] = []
        occurrences[tok].append(pos)
    return TextFeaturization(
        word_types=tuple(word_types),
        occurrences={w: tuple(locs) for w, locs in occurrences.items()},
    )


def render_masked_lyrics(feat: TextFeaturization, text_submask) -> str:
    """Render the lyric string a mask selects.

    Tokens whose word type is masked out are removed entirely (all
    occurrences); the remaining tokens keep their original order and are
    joined by single spaces.
    """
    bits = np.asarray(text_submask)
    if bits.shape != (len(feat.word_types),):
        raise ValidationError(
            f"text submask length {bits.shape} does not match {len(feat.word_types)} word types"
        )
    kept = {w for w, bit in zip(feat.word_types, bits) if bit}
    return " ".join(tok for tok in feat.tokens() if tok in kept)
