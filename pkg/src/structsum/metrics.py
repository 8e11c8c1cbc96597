"""Segmentation and labeling metrics: P_k, Rouge-1/2/L, aligned label F1,
and the erroneous-output fraction.

All rates are plain fractions in [0, 1]; ``EvalReport.to_dict(percent=True)``
scales them for table-style display.
"""

from __future__ import annotations

import bisect
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .codec import (
    LabeledSegmentation,
    Segmentation,
    TargetMode,
    decode,
    tokenize,
)

LABEL_SEPARATOR = " | "


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, overlap: int, pred_total: int, ref_total: int) -> "RougeScore":
        p = overlap / pred_total if pred_total else 0.0
        r = overlap / ref_total if ref_total else 0.0
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(p, r, f)

    def as_dict(self, scale: float = 1.0) -> dict[str, float]:
        return {"p": self.precision * scale, "r": self.recall * scale, "f": self.f1 * scale}


# --- P_k ------------------------------------------------------------------


def compute_k(ref: Segmentation) -> int:
    """Half the mean reference segment length, rounded half-up, at least 1."""
    half_mean = Fraction(ref.num_sentences, 2 * ref.num_segments)
    return max(1, math.floor(half_mean + Fraction(1, 2)))


def pk(ref: Segmentation, hyp: Segmentation, k: int | None = None) -> float:
    """Probability that two sentences ``k`` apart are classified differently
    (same segment vs. different segments) by ``ref`` and ``hyp``.

    Window starts run over ``0 .. |S|-k-1``; ``k`` is clamped to ``[1, |S|-1]``.
    """
    n = ref.num_sentences
    if hyp.num_sentences != n:
        raise ValueError(f"reference has {n} sentences, hypothesis {hyp.num_sentences}")
    if n < 2:
        raise ValueError("P_k is undefined for fewer than 2 sentences")
    if k is None:
        k = compute_k(ref)
    k = min(max(1, k), n - 1)

    ref_ids = ref.segment_ids()
    hyp_ids = hyp.segment_ids()
    errors = sum(
        (ref_ids[i] == ref_ids[i + k]) != (hyp_ids[i] == hyp_ids[i + k])
        for i in range(n - k)
    )
    return errors / (n - k)


# --- Rouge ----------------------------------------------------------------


def serialize_labels(labels: Sequence[str]) -> str:
    return LABEL_SEPARATOR.join(labels)


def rouge_tokens(text: str) -> list[str]:
    return [t.lower() for t in tokenize(text)]


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(pred: str, ref: str, n: int = 1) -> RougeScore:
    if n < 1:
        raise ValueError("n must be >= 1")
    p_grams = _ngrams(rouge_tokens(pred), n)
    r_grams = _ngrams(rouge_tokens(ref), n)
    overlap = sum((p_grams & r_grams).values())
    return RougeScore.from_counts(overlap, sum(p_grams.values()), sum(r_grams.values()))


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, 1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(pred: str, ref: str) -> RougeScore:
    p_tok = rouge_tokens(pred)
    r_tok = rouge_tokens(ref)
    return RougeScore.from_counts(lcs_length(p_tok, r_tok), len(p_tok), len(r_tok))


# --- Label F1 -------------------------------------------------------------


def align_segments(hyp: Segmentation, ref: Segmentation) -> list[int]:
    """Map every hypothesis segment to the reference segment it overlaps most.

    Ties go to the earlier reference segment.
    """
    if hyp.num_sentences != ref.num_sentences:
        raise ValueError("hypothesis and reference cover different sentence counts")
    ref_bounds = ref.boundaries
    ref_iv = ref.intervals()
    mapping = []
    for start, end in hyp.intervals():
        first = bisect.bisect_left(ref_bounds, start)
        last = bisect.bisect_left(ref_bounds, end)
        best, best_overlap = first, -1
        for j in range(first, last + 1):
            rs, re_ = ref_iv[j]
            overlap = min(end, re_) - max(start, rs) + 1
            if overlap > best_overlap:
                best, best_overlap = j, overlap
        mapping.append(best)
    return mapping


def _label_key(label: str) -> str:
    return label.strip().casefold()


def label_matches(hyp: LabeledSegmentation, ref: LabeledSegmentation) -> tuple[int, int]:
    """(correct, predicted) segment counts after alignment."""
    mapping = align_segments(hyp.segmentation, ref.segmentation)
    correct = sum(
        _label_key(hyp.labels[i]) == _label_key(ref.labels[j]) for i, j in enumerate(mapping)
    )
    return correct, len(mapping)


def label_f1(hyp: LabeledSegmentation, ref: LabeledSegmentation) -> float:
    """Micro-averaged F1 of predicted labels against their aligned gold labels.

    Each predicted segment has exactly one gold label, so every miss is one
    false positive plus one false negative and micro-F1 equals accuracy.
    """
    correct, total = label_matches(hyp, ref)
    return correct / total


# --- erroneous outputs ----------------------------------------------------


def erroneous_fraction(
    raws: Sequence[str], num_sentences: Sequence[int], mode: TargetMode | str = TargetMode.SEG_ONLY
) -> float:
    if len(raws) != len(num_sentences):
        raise ValueError(f"{len(raws)} outputs but {len(num_sentences)} sentence counts")
    if not raws:
        return 0.0
    bad = sum(decode(raw, n, mode)[1] >= 1 for raw, n in zip(raws, num_sentences))
    return bad / len(raws)


# --- corpus report --------------------------------------------------------


@dataclass
class EvalReport:
    pk: float | None = None
    rouge1: RougeScore | None = None
    rouge2: RougeScore | None = None
    rougeL: RougeScore | None = None
    label_f1: float | None = None
    erroneous_fraction: float = 0.0
    documents_evaluated: int = 0
    k_values: list[int] = field(default_factory=list)

    def to_dict(self, percent: bool = False) -> dict:
        s = 100.0 if percent else 1.0

        def rate(x):
            return None if x is None else x * s

        return {
            "pk": rate(self.pk),
            "rouge1": self.rouge1.as_dict(s) if self.rouge1 else None,
            "rouge2": self.rouge2.as_dict(s) if self.rouge2 else None,
            "rougeL": self.rougeL.as_dict(s) if self.rougeL else None,
            "label_f1": rate(self.label_f1),
            "erroneous_fraction": self.erroneous_fraction * s,
            "documents_evaluated": self.documents_evaluated,
            "k_values": list(self.k_values),
        }


@dataclass
class CorpusEvaluator:
    """Accumulates per-document results into an ``EvalReport``.

    P_k and Rouge are averaged over documents; label F1 is micro-averaged
    over all predicted segments in the corpus.
    """

    k_override: int | None = None
    _pk: list[float] = field(default_factory=list)
    _rouge: list[tuple[RougeScore, RougeScore, RougeScore]] = field(default_factory=list)
    _correct: int = 0
    _predicted: int = 0
    _erroneous: int = 0
    _docs: int = 0
    _k: list[int] = field(default_factory=list)

    def add(
        self,
        ref_seg: Segmentation | None,
        hyp_seg: Segmentation | None,
        ref_labels: Sequence[str] | None = None,
        hyp_labels: Sequence[str] | None = None,
        dropped_parts: int = 0,
    ) -> None:
        self._docs += 1
        if dropped_parts >= 1:
            self._erroneous += 1
        if ref_seg is not None and hyp_seg is not None and ref_seg.num_sentences >= 2:
            k = self.k_override if self.k_override is not None else compute_k(ref_seg)
            k = min(max(1, k), ref_seg.num_sentences - 1)
            self._k.append(k)
            self._pk.append(pk(ref_seg, hyp_seg, k))
        if ref_labels is not None and hyp_labels is not None:
            pred, gold = serialize_labels(hyp_labels), serialize_labels(ref_labels)
            self._rouge.append((rouge_n(pred, gold, 1), rouge_n(pred, gold, 2), rouge_l(pred, gold)))
            if ref_seg is not None and hyp_seg is not None:
                c, t = label_matches(
                    LabeledSegmentation(hyp_seg, tuple(hyp_labels)),
                    LabeledSegmentation(ref_seg, tuple(ref_labels)),
                )
                self._correct += c
                self._predicted += t

    @staticmethod
    def _mean_score(scores: list[RougeScore]) -> RougeScore:
        n = len(scores)
        return RougeScore(
            sum(s.precision for s in scores) / n,
            sum(s.recall for s in scores) / n,
            sum(s.f1 for s in scores) / n,
        )

    def report(self) -> EvalReport:
        rep = EvalReport(documents_evaluated=self._docs, k_values=list(self._k))
        if self._docs:
            rep.erroneous_fraction = self._erroneous / self._docs
        if self._pk:
            rep.pk = sum(self._pk) / len(self._pk)
        if self._rouge:
            r1, r2, rl = zip(*self._rouge)
            rep.rouge1 = self._mean_score(list(r1))
            rep.rouge2 = self._mean_score(list(r2))
            rep.rougeL = self._mean_score(list(rl))
        if self._predicted:
            rep.label_f1 = self._correct / self._predicted
        return rep
