"""Shared domain types: class labels, interpretable features, masks, instances.

Everything here is immutable after construction and safe to share between
threads. Feature identity is value identity: two descriptors with equal
fields denote the same feature in every instance, which is what allows the
per-instance explanation weights to be aggregated corpus-wide.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import ValidationError


class Modality(str, Enum):
    AUDIO = "audio"
    TEXT = "text"


@dataclass(frozen=True)
class ClassLabel:
    index: int
    name: str

    def __post_init__(self):
        if self.index < 0:
            raise ValidationError(f"class index must be >= 0, got {self.index}")
        if not self.name:
            raise ValidationError("class name must be non-empty")

    def to_dict(self) -> dict:
        return {"index": self.index, "name": self.name}

    @classmethod
    def from_dict(cls, d: dict) -> "ClassLabel":
        return cls(index=int(d["index"]), name=str(d["name"]))


def labels_from_names(names: Sequence[str]) -> tuple[ClassLabel, ...]:
    """Build a dense label set 0..n-1 from class names."""
    labels = tuple(ClassLabel(i, name) for i, name in enumerate(names))
    validate_label_set(labels)
    return labels


def validate_label_set(labels: Sequence[ClassLabel]) -> None:
    """Indices must be dense 0..n-1 and names unique."""
    if not labels:
        raise ValidationError("label set must be non-empty")
    indices = sorted(lab.index for lab in labels)
    if indices != list(range(len(labels))):
        raise ValidationError(f"class indices must be dense 0..{len(labels) - 1}, got {indices}")
    names = {lab.name for lab in labels}
    if len(names) != len(labels):
        raise ValidationError("class names must be unique")


def is_clean_word(word: str) -> bool:
    """True when `word` is lowercase, non-empty, and free of whitespace/punctuation."""
    if not word or word != word.lower():
        return False
    for ch in word:
        if ch.isspace() or unicodedata.category(ch).startswith("P"):
            return False
    return True


@dataclass(frozen=True)
class FeatureDescriptor:
    """One interpretable on/off unit: a word type, or one source of one audio segment.

    Text descriptors carry `word`; audio descriptors carry `(segment, source)`.
    Equality of descriptors defines cross-instance feature identity, e.g.
    "vocals@seg3" names the same feature in every instance.
    """

    modality: Modality
    word: str | None = None
    segment: int | None = None
    source: str | None = None

    def __post_init__(self):
        if self.modality is Modality.TEXT:
            if self.word is None or self.segment is not None or self.source is not None:
                raise ValidationError("text descriptor must carry a word and nothing else")
            if not is_clean_word(self.word):
                raise ValidationError(
                    f"text feature key must be a lowercase word without whitespace "
                    f"or punctuation, got {self.word!r}"
                )
        elif self.modality is Modality.AUDIO:
            if self.word is not None or self.segment is None or self.source is None:
                raise ValidationError("audio descriptor must carry (segment, source) and nothing else")
            if self.segment < 0:
                raise ValidationError(f"segment index must be >= 0, got {self.segment}")
            if not self.source:
                raise ValidationError("source name must be non-empty")
        else:
            raise ValidationError(f"unknown modality {self.modality!r}")

    @classmethod
    def for_text(cls, word: str) -> "FeatureDescriptor":
        return cls(modality=Modality.TEXT, word=word)

    @classmethod
    def for_audio(cls, segment: int, source: str) -> "FeatureDescriptor":
        return cls(modality=Modality.AUDIO, segment=int(segment), source=source)

    @property
    def key(self):
        """The identity key: the word for text, (segment, source) for audio."""
        if self.modality is Modality.TEXT:
            return self.word
        return (self.segment, self.source)

    def label(self) -> str:
        """Short display form, e.g. "love" or "vocals@seg3"."""
        if self.modality is Modality.TEXT:
            return self.word
        return f"{self.source}@seg{self.segment}"

    def sort_key(self):
        """Deterministic corpus-level ordering: audio first, segment-major."""
        if self.modality is Modality.AUDIO:
            return (0, self.segment, self.source)
        return (1, self.word, "")

    def to_dict(self) -> dict:
        if self.modality is Modality.TEXT:
            return {"modality": "text", "key": self.word}
        return {"modality": "audio", "key": {"segment": self.segment, "source": self.source}}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureDescriptor":
        modality = d.get("modality")
        key = d.get("key")
        if modality == "text":
            return cls.for_text(key)
        if modality == "audio":
            return cls.for_audio(int(key["segment"]), str(key["source"]))
        raise ValidationError(f"unknown modality in descriptor: {modality!r}")


class FeatureSpace:
    """The ordered feature universe of one instance; defines mask indexing.

    Canonical order: the audio block first (segment-major, sources in the
    separator's fixed order), then text features in first-occurrence order.
    Construction validates the ordering, so a FeatureSpace is canonical by
    construction everywhere in the pipeline.
    """

    __slots__ = ("descriptors", "n_audio", "_index")

    def __init__(self, descriptors: Iterable[FeatureDescriptor]):
        descriptors = tuple(descriptors)
        index: dict[FeatureDescriptor, int] = {}
        for i, desc in enumerate(descriptors):
            if desc in index:
                raise ValidationError(f"duplicate feature descriptor {desc.label()!r}")
            index[desc] = i
        audio = [d for d in descriptors if d.modality is Modality.AUDIO]
        # Audio block must come first, segment-major, with one consistent source order.
        if any(d.modality is Modality.AUDIO for d in descriptors[len(audio):]):
            raise ValidationError("audio features must precede all text features")
        source_rank: dict[str, int] = {}
        for d in audio:
            source_rank.setdefault(d.source, len(source_rank))
        order = [(d.segment, source_rank[d.source]) for d in audio]
        if order != sorted(order):
            raise ValidationError("audio features are not in canonical segment-major order")
        self.descriptors = descriptors
        self.n_audio = len(audio)
        self._index = index

    @property
    def d(self) -> int:
        return len(self.descriptors)

    @property
    def n_text(self) -> int:
        return self.d - self.n_audio

    def index_of(self, desc: FeatureDescriptor) -> int:
        try:
            return self._index[desc]
        except KeyError:
            raise ValidationError(f"descriptor {desc.label()!r} not in feature space") from None

    def __len__(self) -> int:
        return self.d

    def __iter__(self) -> Iterator[FeatureDescriptor]:
        return iter(self.descriptors)

    def __getitem__(self, i: int) -> FeatureDescriptor:
        return self.descriptors[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, FeatureSpace) and self.descriptors == other.descriptors

    def __hash__(self) -> int:
        return hash(self.descriptors)

    def __repr__(self) -> str:
        return f"FeatureSpace(d={self.d}, audio={self.n_audio}, text={self.n_text})"

    def to_dict(self) -> dict:
        return {"descriptors": [d.to_dict() for d in self.descriptors]}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSpace":
        return cls(FeatureDescriptor.from_dict(x) for x in d["descriptors"])


def canonical_feature_order(
    audio_features: Sequence[tuple[int, str]],
    text_features: Sequence[str],
) -> FeatureSpace:
    """Assemble the canonical FeatureSpace from raw per-modality feature lists.

    `audio_features` are (segment, source) pairs; their source order (order of
    first appearance) is kept as the within-segment order. `text_features` are
    word types, kept in the given (first-occurrence) order. Both inputs must be
    duplicate-free.
    """
    audio = [FeatureDescriptor.for_audio(seg, src) for seg, src in audio_features]
    if len(set(audio)) != len(audio):
        raise ValidationError("duplicate audio feature in input")
    text = [FeatureDescriptor.for_text(w) for w in text_features]
    if len(set(text)) != len(text):
        raise ValidationError("duplicate text feature in input")
    source_rank: dict[str, int] = {}
    for desc in audio:
        source_rank.setdefault(desc.source, len(source_rank))
    audio.sort(key=lambda desc: (desc.segment, source_rank[desc.source]))
    return FeatureSpace(audio + text)


class BinaryMask:
    """Immutable 0/1 vector over a FeatureSpace; bit=1 keeps the feature."""

    __slots__ = ("bits",)

    def __init__(self, bits):
        arr = np.array(bits, dtype=np.uint8, copy=True)
        if arr.ndim != 1:
            raise ValidationError(f"mask must be one-dimensional, got shape {arr.shape}")
        if not np.all((arr == 0) | (arr == 1)):
            raise ValidationError("mask bits must be 0 or 1")
        arr.setflags(write=False)
        self.bits = arr

    @classmethod
    def all_ones(cls, d: int) -> "BinaryMask":
        return cls(np.ones(d, dtype=np.uint8))

    @classmethod
    def all_zeros(cls, d: int) -> "BinaryMask":
        return cls(np.zeros(d, dtype=np.uint8))

    @property
    def d(self) -> int:
        return int(self.bits.shape[0])

    @property
    def n_ones(self) -> int:
        return int(self.bits.sum())

    def to_string(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)

    @classmethod
    def from_string(cls, s: str) -> "BinaryMask":
        if any(c not in "01" for c in s):
            raise ValidationError(f"mask string must contain only 0/1, got {s!r}")
        return cls(np.frombuffer(s.encode("ascii"), dtype=np.uint8) - ord("0"))

    def __eq__(self, other) -> bool:
        return isinstance(other, BinaryMask) and np.array_equal(self.bits, other.bits)

    def __hash__(self) -> int:
        return hash(self.bits.tobytes())

    def __repr__(self) -> str:
        return f"BinaryMask({self.to_string()})"


def mask_apply_indexing(mask: BinaryMask, space: FeatureSpace) -> tuple[np.ndarray, np.ndarray]:
    """Split a mask into its (audio, text) submasks along the canonical boundary."""
    if mask.d != space.d:
        raise ValidationError(f"mask length {mask.d} does not match feature space d={space.d}")
    return mask.bits[: space.n_audio], mask.bits[space.n_audio :]


@dataclass(frozen=True)
class MultimodalInstance:
    """One (lyrics, mono audio) pair with identity metadata.

    `audio` is a mono float vector with amplitude nominally in [-1, 1]; either
    modality may be empty, but not both. The audio array is made read-only.
    """

    id: str
    lyrics: str
    audio: np.ndarray
    sample_rate: int

    def __post_init__(self):
        audio = np.asarray(self.audio)
        if audio.ndim != 1:
            raise ValidationError(f"audio must be a mono 1-D vector, got shape {audio.shape}")
        if audio.size and not np.issubdtype(audio.dtype, np.floating):
            raise ValidationError(f"audio samples must be float, got dtype {audio.dtype}")
        if self.sample_rate <= 0:
            raise ValidationError(f"sample_rate must be > 0, got {self.sample_rate}")
        if not self.lyrics and audio.size == 0:
            raise ValidationError(f"instance {self.id!r}: at least one modality must be non-empty")
        audio = audio.copy()
        audio.setflags(write=False)
        object.__setattr__(self, "audio", audio)

    @property
    def has_audio(self) -> bool:
        return self.audio.size > 0

    @property
    def has_lyrics(self) -> bool:
        return len(self.lyrics) > 0


def validate_prediction_vector(probabilities, n_classes: int, tol: float = 1e-6) -> np.ndarray:
    """Check one model output: length |L|, entries >= 0, sum 1 within `tol`."""
    arr = np.asarray(probabilities, dtype=np.float64)
    if arr.shape != (n_classes,):
        raise ValidationError(f"prediction vector has shape {arr.shape}, expected ({n_classes},)")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("prediction vector contains non-finite entries")
    if np.any(arr < 0):
        raise ValidationError(f"prediction vector has negative entries (min {arr.min():g})")
    total = float(arr.sum())
    if abs(total - 1.0) > tol:
        raise ValidationError(f"prediction vector sums to {total!r}, expected 1 within {tol}")
    return arr
