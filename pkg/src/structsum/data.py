"""Corpus ingestion, canonical JSONL I/O, augmentation and leakage scanning."""

from __future__ import annotations

import json
import logging
import math
import random
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Iterator, Mapping, NamedTuple, Sequence

from .codec import (
    Document,
    Example,
    LabeledSegmentation,
    Modality,
    Segmentation,
    tokenize,
)

logger = logging.getLogger(__name__)

HEADER_RE = re.compile(r"^={3,},(\d+),(.*)$")
DEFAULT_TRUNCATION_LIMITS = (20, 50, 200)
DEFAULT_MAX_PREPEND = 1000


class IngestError(ValueError):
    pass


# --- canonical JSONL ------------------------------------------------------


def example_to_record(ex: Example) -> dict:
    rec = {
        "id": ex.document.id,
        "modality": ex.document.modality.value,
        "sentences": list(ex.document.sentences),
    }
    if ex.segmentation is not None:
        rec["boundaries"] = list(ex.segmentation.boundaries)
    if ex.labels is not None:
        rec["labels"] = list(ex.labels)
    return rec


def record_to_example(rec: Mapping) -> Example:
    try:
        doc = Document(str(rec["id"]), tuple(rec["sentences"]), Modality(rec.get("modality", "document")))
    except KeyError as e:
        raise IngestError(f"record is missing field {e}") from None
    seg = None
    if rec.get("boundaries") is not None:
        seg = Segmentation(tuple(rec["boundaries"]), len(doc))
    labels = rec.get("labels")
    return Example(doc, seg, tuple(labels) if labels is not None else None)


def dumps_record(rec: Mapping) -> str:
    return json.dumps(rec, ensure_ascii=False)


def iter_jsonl(path: str | Path) -> Iterator[tuple[int, dict | None, str]]:
    """Yield ``(line_no, record_or_None, raw_line)``; None marks malformed JSON."""
    with Path(path).open("r", encoding="utf-8") as f:
        for no, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                yield no, None, line
                continue
            yield no, rec if isinstance(rec, dict) else None, line


def read_jsonl(path: str | Path) -> list[dict]:
    out = []
    for no, rec, _ in iter_jsonl(path):
        if rec is None:
            raise IngestError(f"{path}:{no}: malformed JSON line")
        out.append(rec)
    return out


def read_corpus(path: str | Path) -> list[Example]:
    out = []
    for no, rec in enumerate(read_jsonl(path), 1):
        try:
            out.append(record_to_example(rec))
        except (ValueError, TypeError) as e:
            raise IngestError(f"{path}: record {no}: {e}") from None
    return out


def format_jsonl(records: Iterable[Mapping]) -> str:
    return "".join(dumps_record(r) + "\n" for r in records)


def write_jsonl(path: str | Path, records: Iterable[Mapping]) -> None:
    Path(path).write_text(format_jsonl(records), encoding="utf-8", newline="\n")


def write_corpus(path: str | Path, examples: Iterable[Example]) -> None:
    write_jsonl(path, (example_to_record(e) for e in examples))


# --- sectioned text -------------------------------------------------------


class SectionedParse(NamedTuple):
    document: Document
    segmentation: LabeledSegmentation
    empty_sections: int


def parse_sectioned_text(raw: str, doc_id: str = "", max_level: int = 1) -> SectionedParse:
    """Parse Wiki-727K style text: ``========,<level>,<title>.`` headers over
    one sentence per line.

    Headers deeper than ``max_level`` are folded into the enclosing segment.
    Sections with no sentences are dropped and counted. Sentences before the
    first header form an unlabeled segment.
    """
    sentences: list[str] = []
    sections: list[list] = []  # [title, sentence count]
    empty = 0
    for line in raw.splitlines():
        line = line.strip()
        if not line:
            continue
        m = HEADER_RE.match(line)
        if m is None:
            if not sections:
                sections.append(["", 0])
            sentences.append(line)
            sections[-1][1] += 1
            continue
        if int(m.group(1)) > max_level:
            continue
        title = m.group(2).strip()
        if title.endswith("."):
            title = title[:-1].rstrip()
        if sections and sections[-1][1] == 0:
            empty += 1
            sections.pop()
        sections.append([title, 0])
    if sections and sections[-1][1] == 0:
        empty += 1
        sections.pop()
    if not sentences:
        raise IngestError(f"{doc_id or '<text>'}: no sentences under any header")
    if empty:
        logger.warning("%s: dropped %d empty section(s)", doc_id or "<text>", empty)

    bounds, labels, pos = [], [], -1
    for title, count in sections:
        pos += count
        bounds.append(pos)
        labels.append(title)
    doc = Document(doc_id, tuple(sentences), Modality.DOCUMENT)
    return SectionedParse(doc, LabeledSegmentation.build(bounds, labels, len(sentences)), empty)


# --- augmentation ---------------------------------------------------------


def prepend_empty_sentences(
    doc: Document, seg: LabeledSegmentation | Segmentation | None, count: int
):
    """Insert ``count`` empty sentences at the front; they join the first segment."""
    if count < 0:
        raise ValueError("count must be >= 0")
    new_doc = replace(doc, sentences=("",) * count + doc.sentences)
    if seg is None:
        return new_doc, None
    plain = seg.segmentation if isinstance(seg, LabeledSegmentation) else seg
    shifted = Segmentation(tuple(b + count for b in plain.boundaries), plain.num_sentences + count)
    if isinstance(seg, LabeledSegmentation):
        return new_doc, LabeledSegmentation(shifted, seg.labels)
    return new_doc, shifted


def prepend_example(ex: Example, count: int) -> Example:
    doc, seg = prepend_empty_sentences(ex.document, ex.segmentation, count)
    return Example(doc, seg, ex.labels)


def sample_prepend_count(rng_seed: int | random.Random | None, max_count: int = DEFAULT_MAX_PREPEND) -> int:
    """Uniform integer in ``[0, max_count]``.

    Pass a ``random.Random`` to draw a reproducible sequence; an int seeds a
    fresh generator and so always gives the same single draw.
    """
    if max_count < 0:
        raise ValueError("max_count must be >= 0")
    rng = rng_seed if isinstance(rng_seed, random.Random) else random.Random(rng_seed)
    return rng.randint(0, max_count)


def truncate_turns(doc: Document, max_tokens_per_turn: int) -> Document:
    if max_tokens_per_turn < 1:
        raise ValueError("max_tokens_per_turn must be >= 1")
    if doc.modality is not Modality.CONVERSATION:
        logger.warning("%s: truncate_turns on a %s, left unchanged", doc.id, doc.modality.value)
        return doc
    turns = []
    for turn in doc.sentences:
        toks = tokenize(turn)
        turns.append(turn if len(toks) <= max_tokens_per_turn else " ".join(toks[:max_tokens_per_turn]))
    return replace(doc, sentences=tuple(turns))


def replicate_with_truncations(
    example: Example, limits: Sequence[int] = DEFAULT_TRUNCATION_LIMITS
) -> list[Example]:
    """The original followed by one truncated replica per limit (id suffixed ``-t<limit>``)."""
    if not limits:
        raise ValueError("limits must be non-empty")
    out = [example]
    for limit in limits:
        doc = truncate_turns(example.document, limit)
        doc = replace(doc, id=f"{example.document.id}-t{limit}")
        out.append(Example(doc, example.segmentation, example.labels))
    return out


# --- leakage scan ---------------------------------------------------------


@dataclass(frozen=True, order=True)
class DuplicatePair:
    id_a: str
    id_b: str
    similarity: float

    def as_dict(self) -> dict:
        return {"id_a": self.id_a, "id_b": self.id_b, "similarity": self.similarity}


SparseVector = Mapping[str, float]
#: Embeds a list of document texts into sparse vectors (one per text).
CorpusEmbedder = Callable[[Sequence[str]], list[SparseVector]]


def _doc_text(doc: Document | Example | str) -> str:
    if isinstance(doc, Example):
        doc = doc.document
    if isinstance(doc, Document):
        return " ".join(doc.sentences)
    return doc


def _doc_id(doc: Document | Example | str, i: int) -> str:
    if isinstance(doc, (Example, Document)):
        return doc.id
    return str(i)


def tfidf_vectors(texts: Sequence[str]) -> list[dict[str, float]]:
    """L2-normalised tf-idf with smoothed idf ``ln((1+N)/(1+df)) + 1``."""
    counts = [Counter(t.casefold() for t in tokenize(text)) for text in texts]
    df: Counter = Counter()
    for c in counts:
        df.update(c.keys())
    n = len(texts)
    idf = {term: math.log((1 + n) / (1 + d)) + 1.0 for term, d in df.items()}
    out = []
    for c in counts:
        vec = {term: tf * idf[term] for term, tf in c.items()}
        norm = math.sqrt(sum(v * v for v in vec.values()))
        out.append({term: v / norm for term, v in vec.items()} if norm else {})
    return out


def _unit(vec: SparseVector) -> dict:
    norm = math.sqrt(sum(v * v for v in vec.values()))
    return {k: v / norm for k, v in vec.items()} if norm else {}


def near_duplicate_scan(
    corpus_a: Sequence[Document | Example | str],
    corpus_b: Sequence[Document | Example | str],
    threshold: float,
    embedder: CorpusEmbedder = tfidf_vectors,
) -> list[DuplicatePair]:
    """Every cross-corpus pair with cosine similarity >= ``threshold``.

    Both corpora are embedded together; candidate pairs come from an inverted
    index over ``corpus_b`` so only pairs sharing a term are scored.
    """
    if not 0 < threshold <= 1:
        raise ValueError("threshold must lie in (0, 1]")
    if not corpus_a or not corpus_b:
        logger.warning("near-duplicate scan over an empty corpus")
        return []
    vectors = [_unit(v) for v in embedder([_doc_text(d) for d in [*corpus_a, *corpus_b]])]
    vec_a, vec_b = vectors[: len(corpus_a)], vectors[len(corpus_a) :]

    index: dict = defaultdict(list)
    for j, vec in enumerate(vec_b):
        for term, w in vec.items():
            index[term].append((j, w))

    pairs = []
    for i, vec in enumerate(vec_a):
        scores: dict[int, float] = defaultdict(float)
        for term, w in vec.items():
            for j, wb in index.get(term, ()):
                scores[j] += w * wb
        for j, s in scores.items():
            if s >= threshold:
                pairs.append(DuplicatePair(_doc_id(corpus_a[i], i), _doc_id(corpus_b[j], j), min(s, 1.0)))
    pairs.sort(key=lambda p: (-p.similarity, p.id_a, p.id_b))
    return pairs


# --- statistics -----------------------------------------------------------


@dataclass
class CorpusStats:
    num_docs: int = 0
    sentence_count_histogram: dict[int, int] = field(default_factory=dict)
    segment_count_histogram: dict[int, int] = field(default_factory=dict)
    max_sentences: int = 0
    max_tokens: int = 0
    malformed_lines: int = 0

    def as_dict(self) -> dict:
        return {
            "num_docs": self.num_docs,
            "sentence_count_histogram": {str(k): v for k, v in sorted(self.sentence_count_histogram.items())},
            "segment_count_histogram": {str(k): v for k, v in sorted(self.segment_count_histogram.items())},
            "max_sentences": self.max_sentences,
            "max_tokens": self.max_tokens,
            "malformed_lines": self.malformed_lines,
        }


def corpus_stats(corpus: str | Path | Iterable[Example]) -> CorpusStats:
    """Histograms of sentence and segment counts; ``max_tokens`` is per document.

    Given a path, malformed lines are counted and skipped. Unsegmented
    documents count as 0 segments.
    """
    stats = CorpusStats()
    sent_hist: Counter = Counter()
    seg_hist: Counter = Counter()

    if isinstance(corpus, (str, Path)):
        examples = []
        for no, rec, _ in iter_jsonl(corpus):
            try:
                if rec is None:
                    raise IngestError("not a JSON object")
                examples.append(record_to_example(rec))
            except (ValueError, TypeError) as e:
                stats.malformed_lines += 1
                logger.warning("%s:%d: skipped (%s)", corpus, no, e)
    else:
        examples = list(corpus)

    for ex in examples:
        n = len(ex.document)
        stats.num_docs += 1
        sent_hist[n] += 1
        seg_hist[ex.segmentation.num_segments if ex.segmentation else 0] += 1
        stats.max_sentences = max(stats.max_sentences, n)
        stats.max_tokens = max(stats.max_tokens, sum(len(tokenize(s)) for s in ex.document.sentences))
    stats.sentence_count_histogram = dict(sent_hist)
    stats.segment_count_histogram = dict(seg_hist)
    return stats
