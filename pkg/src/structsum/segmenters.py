"""Baseline segmenters.

``texttile`` is an unsupervised coherence-valley segmenter; ``threshold_segment``
turns per-sentence boundary probabilities from any external classifier into a
segmentation, and ``bce_loss`` scores those probabilities against a reference.
"""

from __future__ import annotations

import logging
import math
import statistics
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Mapping, NamedTuple, Sequence, Union

from .codec import Document, Segmentation, boundary_labels, tokenize

logger = logging.getLogger(__name__)

Vector = Union[Mapping[object, float], Sequence[float]]
#: Maps a window of sentences to a (sparse or dense) vector.
Embedder = Callable[[Sequence[str]], Vector]

BCE_EPS = 1e-7
# rises at or below this are treated as flat
DEPTH_TOL = 1e-12


def tf_embedder(sentences: Sequence[str]) -> Counter:
    """Case-folded term frequencies over a window of sentences."""
    counts: Counter = Counter()
    for s in sentences:
        counts.update(t.casefold() for t in tokenize(s))
    return counts


def cosine(a: Vector, b: Vector) -> float:
    if isinstance(a, Mapping) and isinstance(b, Mapping):
        if len(a) > len(b):
            a, b = b, a
        dot = sum(v * b.get(key, 0.0) for key, v in a.items())
        na = math.sqrt(sum(v * v for v in a.values()))
        nb = math.sqrt(sum(v * v for v in b.values()))
    else:
        a, b = list(a), list(b)
        if len(a) != len(b):
            raise ValueError("dense vectors differ in length")
        dot = sum(x * y for x, y in zip(a, b))
        na = math.sqrt(sum(x * x for x in a))
        nb = math.sqrt(sum(y * y for y in b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return max(-1.0, min(1.0, dot / (na * nb)))


@dataclass(frozen=True)
class TilingParams:
    block_size: int = 2
    smoothing_width: int = 1
    cutoff_c: float = 0.5

    def __post_init__(self) -> None:
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")
        if self.smoothing_width < 0:
            raise ValueError("smoothing_width must be >= 0")


@dataclass(frozen=True)
class CoherenceProfile:
    """Similarity across each gap; ``scores[g]`` sits between sentence g and g+1."""

    scores: tuple[float, ...]
    block_size: int

    def __len__(self) -> int:
        return len(self.scores)


def smooth(scores: Sequence[float], width: int) -> list[float]:
    """Moving average over a window of ``width`` scores, truncated at the edges."""
    if width <= 1:
        return list(scores)
    left = width // 2
    right = width - 1 - left
    out = []
    for i in range(len(scores)):
        window = scores[max(0, i - left) : i + right + 1]
        out.append(sum(window) / len(window))
    return out


def coherence_profile(
    doc: Document, params: TilingParams = TilingParams(), embedder: Embedder = tf_embedder
) -> CoherenceProfile:
    sents = doc.sentences
    if len(sents) < 2:
        raise ValueError("coherence needs at least 2 sentences")
    bs = params.block_size
    scores = []
    for g in range(len(sents) - 1):
        left = embedder(sents[max(0, g - bs + 1) : g + 1])
        right = embedder(sents[g + 1 : g + 1 + bs])
        scores.append(cosine(left, right))
    return CoherenceProfile(tuple(smooth(scores, params.smoothing_width)), bs)


def depth_scores(profile: CoherenceProfile | Sequence[float]) -> list[float]:
    """Depth of every gap: climb to the nearest peak on each side and sum the rises.

    Only valleys count: a gap with no rise on one side (a slope, a plateau,
    or the profile edge) has depth 0.
    """
    s = list(profile.scores if isinstance(profile, CoherenceProfile) else profile)
    depths = []
    for g, here in enumerate(s):
        i = g
        while i > 0 and s[i - 1] >= s[i]:
            i -= 1
        j = g
        while j < len(s) - 1 and s[j + 1] >= s[j]:
            j += 1
        left, right = s[i] - here, s[j] - here
        depths.append(left + right if left > DEPTH_TOL and right > DEPTH_TOL else 0.0)
    return depths


def texttile(
    doc: Document, params: TilingParams = TilingParams(), embedder: Embedder = tf_embedder
) -> Segmentation:
    """Cut at gaps whose depth is positive and at least mean + c * stddev."""
    depths = depth_scores(coherence_profile(doc, params, embedder))
    cut = statistics.fmean(depths) + params.cutoff_c * statistics.pstdev(depths)
    bounds = [g for g, d in enumerate(depths) if d > 0 and d >= cut]
    bounds.append(len(doc) - 1)
    return Segmentation(tuple(bounds), len(doc))


def threshold_segment(probs: Sequence[float], threshold: float = 0.5) -> Segmentation:
    if len(probs) == 0:
        raise ValueError("no probabilities given")
    n = len(probs)
    bounds = [i for i, p in enumerate(probs) if p >= threshold]
    if not bounds or bounds[-1] != n - 1:
        bounds.append(n - 1)
    return Segmentation(tuple(bounds), n)


class BCELoss(NamedTuple):
    total: float
    mean: float


def bce_loss(probs: Sequence[float], ref: Segmentation, eps: float = BCE_EPS) -> BCELoss:
    if len(probs) != ref.num_sentences:
        raise ValueError(f"{len(probs)} probabilities for {ref.num_sentences} sentences")
    total = 0.0
    for p, y in zip(probs, boundary_labels(ref)):
        p = min(max(p, eps), 1.0 - eps)
        total -= math.log(p) if y else math.log1p(-p)
    return BCELoss(total, total / len(probs))
