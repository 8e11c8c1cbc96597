"""Domain types and the target-sequence codec.

A segmentation is stored as the sorted indices of the *last* sentence of
every segment, so ``[1, 3]`` over four sentences means ``[0, 1] [2, 3]``.
Targets are flat strings:

* seg_only     ``"31 | 410 | 680"``
* labels_only  ``"History | Geography"``
* combined     ``"31 := History | 410 := Geography"``

Decoders never raise on model output; they drop what they cannot parse and
report how many parts were dropped.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

SEGMENT_DELIMITER = "|"
PAIR_DELIMITER = ":="

_JOIN = f" {SEGMENT_DELIMITER} "
_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)
_INDEX_RE = re.compile(r"[0-9]+")


class Modality(str, enum.Enum):
    DOCUMENT = "document"
    CONVERSATION = "conversation"


class TargetMode(str, enum.Enum):
    SEG_ONLY = "seg_only"
    LABELS_ONLY = "labels_only"
    COMBINED = "combined"


class MarkerScheme(str, enum.Enum):
    FIXED_BOS = "fixed_bos"
    INDEXED = "indexed"


def tokenize(text: str) -> list[str]:
    """Split on unicode whitespace and detach punctuation.

    Case is preserved; ``"Hello, world."`` -> ``["Hello", ",", "world", "."]``.
    """
    return _TOKEN_RE.findall(text)


def normalize_label(label: str) -> str:
    # ":=" first so that "|" replacement cannot be confused with it
    return label.replace(PAIR_DELIMITER, "/").replace(SEGMENT_DELIMITER, "/").strip()


@dataclass(frozen=True)
class Document:
    id: str
    sentences: tuple[str, ...]
    modality: Modality = Modality.DOCUMENT

    def __post_init__(self) -> None:
        object.__setattr__(self, "sentences", tuple(self.sentences))
        object.__setattr__(self, "modality", Modality(self.modality))
        if not self.sentences:
            raise ValueError(f"document {self.id!r} has no sentences")

    def __len__(self) -> int:
        return len(self.sentences)


@dataclass(frozen=True)
class Segmentation:
    boundaries: tuple[int, ...]
    num_sentences: int

    def __post_init__(self) -> None:
        b = tuple(int(x) for x in self.boundaries)
        object.__setattr__(self, "boundaries", b)
        n = self.num_sentences
        if n < 1:
            raise ValueError("num_sentences must be >= 1")
        if not b:
            raise ValueError("a segmentation needs at least one boundary")
        if any(y <= x for x, y in zip(b, b[1:])):
            raise ValueError(f"boundaries must be strictly increasing: {b}")
        if b[0] < 0 or b[-1] != n - 1:
            raise ValueError(
                f"boundaries must lie in [0, {n - 1}] and end at {n - 1}: {b}"
            )

    @property
    def num_segments(self) -> int:
        return len(self.boundaries)

    def intervals(self) -> list[tuple[int, int]]:
        """Inclusive (first, last) sentence index of each segment."""
        out = []
        start = 0
        for b in self.boundaries:
            out.append((start, b))
            start = b + 1
        return out

    def segment_ids(self) -> list[int]:
        """Segment number of every sentence."""
        ids = []
        for seg, (start, end) in enumerate(self.intervals()):
            ids.extend([seg] * (end - start + 1))
        return ids


@dataclass(frozen=True)
class LabeledSegmentation:
    segmentation: Segmentation
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        labels = tuple(normalize_label(str(x)) for x in self.labels)
        object.__setattr__(self, "labels", labels)
        if len(labels) != len(self.segmentation.boundaries):
            raise ValueError(
                f"{len(labels)} labels for {len(self.segmentation.boundaries)} segments"
            )

    @classmethod
    def build(cls, boundaries: Iterable[int], labels: Iterable[str], num_sentences: int):
        return cls(Segmentation(tuple(boundaries), num_sentences), tuple(labels))

    @property
    def boundaries(self) -> tuple[int, ...]:
        return self.segmentation.boundaries

    @property
    def num_sentences(self) -> int:
        return self.segmentation.num_sentences


@dataclass(frozen=True)
class TargetSequence:
    text: str
    mode: TargetMode

    def __str__(self) -> str:
        return self.text


@dataclass(frozen=True)
class MarkedToken:
    text: str
    sentence_index: int
    is_sentence_marker: bool = False
    marker_id: int | None = None


@dataclass(frozen=True)
class MarkedTokenStream:
    tokens: tuple[MarkedToken, ...]
    scheme: MarkerScheme

    def markers(self) -> list[MarkedToken]:
        return [t for t in self.tokens if t.is_sentence_marker]

    def render(self) -> str:
        return " ".join(t.text for t in self.tokens)


# --- encoding -------------------------------------------------------------


def encode_segmentation(seg: Segmentation) -> TargetSequence:
    return TargetSequence(_JOIN.join(str(b) for b in seg.boundaries), TargetMode.SEG_ONLY)


def encode_labels(labels: Sequence[str]) -> TargetSequence:
    return TargetSequence(_JOIN.join(labels), TargetMode.LABELS_ONLY)


def encode_combined(ls: LabeledSegmentation) -> TargetSequence:
    units = (f"{b} {PAIR_DELIMITER} {label}" for b, label in zip(ls.boundaries, ls.labels))
    return TargetSequence(_JOIN.join(units), TargetMode.COMBINED)


def encode(ls: LabeledSegmentation | Segmentation, mode: TargetMode | str) -> TargetSequence:
    mode = TargetMode(mode)
    if mode is TargetMode.SEG_ONLY:
        seg = ls.segmentation if isinstance(ls, LabeledSegmentation) else ls
        return encode_segmentation(seg)
    if not isinstance(ls, LabeledSegmentation):
        raise TypeError(f"mode {mode.value} needs labels")
    if mode is TargetMode.LABELS_ONLY:
        return encode_labels(ls.labels)
    return encode_combined(ls)


# --- decoding -------------------------------------------------------------


def _split_parts(raw: str) -> list[str]:
    # A blank output carries no parts at all; blank parts inside a
    # non-blank output are corruption and get counted.
    if not raw.strip():
        return []
    return [p.strip() for p in raw.split(SEGMENT_DELIMITER)]


def _parse_index(part: str, num_sentences: int) -> int | None:
    if not _INDEX_RE.fullmatch(part):
        return None
    value = int(part)
    return value if value < num_sentences else None


def decode_segmentation(raw: str, num_sentences: int) -> tuple[Segmentation, int]:
    """Parse a seg_only target, tolerating corruption.

    Returns the segmentation and the number of dropped parts. Parts that are
    not in-range base-10 integers are dropped; the closing boundary
    ``num_sentences - 1`` is appended when missing without counting as a drop.
    """
    if num_sentences < 1:
        raise ValueError("num_sentences must be >= 1")
    dropped = 0
    found = set()
    for part in _split_parts(raw):
        idx = _parse_index(part, num_sentences)
        if idx is None:
            dropped += 1
        else:
            found.add(idx)
    found.add(num_sentences - 1)
    return Segmentation(tuple(sorted(found)), num_sentences), dropped


def decode_combined(raw: str, num_sentences: int) -> tuple[LabeledSegmentation, int]:
    if num_sentences < 1:
        raise ValueError("num_sentences must be >= 1")
    dropped = 0
    units: dict[int, str] = {}
    for part in _split_parts(raw):
        pos, sep, label = part.partition(PAIR_DELIMITER)
        idx = _parse_index(pos.strip(), num_sentences)
        if idx is None:
            dropped += 1
            continue
        units.setdefault(idx, label.strip() if sep else "")
    units.setdefault(num_sentences - 1, "")
    order = sorted(units)
    return LabeledSegmentation(Segmentation(tuple(order), num_sentences), tuple(units[i] for i in order)), dropped


def decode_labels(raw: str) -> list[str]:
    return _split_parts(raw)


def decode(raw: str, num_sentences: int, mode: TargetMode | str):
    """Dispatch on ``mode``; returns ``(value, dropped_parts)``.

    labels_only carries no positions, so nothing can be dropped.
    """
    mode = TargetMode(mode)
    if mode is TargetMode.SEG_ONLY:
        return decode_segmentation(raw, num_sentences)
    if mode is TargetMode.COMBINED:
        return decode_combined(raw, num_sentences)
    return decode_labels(raw), 0


# --- binary sentence labels -----------------------------------------------


def boundary_labels(seg: Segmentation) -> list[int]:
    v = [0] * seg.num_sentences
    for b in seg.boundaries:
        v[b] = 1
    return v


def segmentation_from_labels(v: Sequence[int]) -> Segmentation:
    if len(v) == 0:
        raise ValueError("empty label vector")
    bounds = [i for i, x in enumerate(v) if x]
    if not v[-1]:
        bounds.append(len(v) - 1)
    return Segmentation(tuple(bounds), len(v))


# --- sentence position markers --------------------------------------------


def marker_text(scheme: MarkerScheme, marker_id: int) -> str:
    return "<bos>" if scheme is MarkerScheme.FIXED_BOS else f"<pos_{marker_id}>"


def mark_sentence_positions(doc: Document, scheme: MarkerScheme | str = MarkerScheme.INDEXED) -> MarkedTokenStream:
    """Flatten a document into tokens with one marker at the head of each sentence.

    ``fixed_bos`` gives every marker id 0; ``indexed`` gives sentence ``i`` id ``i``.
    """
    scheme = MarkerScheme(scheme)
    tokens: list[MarkedToken] = []
    for i, sentence in enumerate(doc.sentences):
        mid = 0 if scheme is MarkerScheme.FIXED_BOS else i
        tokens.append(MarkedToken(marker_text(scheme, mid), i, True, mid))
        tokens.extend(MarkedToken(t, i) for t in tokenize(sentence))
    return MarkedTokenStream(tuple(tokens), scheme)


@dataclass(frozen=True)
class Example:
    """One corpus record: a document plus optional gold segmentation and labels."""

    document: Document
    segmentation: Segmentation | None = None
    labels: tuple[str, ...] | None = field(default=None)

    def __post_init__(self) -> None:
        seg = self.segmentation
        if seg is not None and seg.num_sentences != len(self.document):
            raise ValueError(
                f"{self.document.id}: segmentation covers {seg.num_sentences} sentences, "
                f"document has {len(self.document)}"
            )
        if self.labels is not None:
            if seg is None:
                raise ValueError(f"{self.document.id}: labels without boundaries")
            object.__setattr__(self, "labels", LabeledSegmentation(seg, tuple(self.labels)).labels)

    @property
    def id(self) -> str:
        return self.document.id

    @property
    def labeled(self) -> LabeledSegmentation | None:
        if self.segmentation is None or self.labels is None:
            return None
        return LabeledSegmentation(self.segmentation, self.labels)
