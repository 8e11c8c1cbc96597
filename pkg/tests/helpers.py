"""Random generators and brute-force oracles shared by the test modules.

The oracles deliberately avoid the library's own helpers (segment ids,
bisect, DP tables) so they check the implementation rather than mirror it.
"""

from __future__ import annotations

import itertools
import math
import random
import string
from collections import Counter

from structsum.codec import Document, LabeledSegmentation, Modality, Segmentation


def random_segmentation(rng: random.Random, n: int, max_segments: int | None = None) -> Segmentation:
    max_segments = min(n, max_segments or n)
    count = rng.randint(1, max_segments)
    inner = sorted(rng.sample(range(n - 1), count - 1)) if count > 1 else []
    return Segmentation(tuple(inner + [n - 1]), n)


LABEL_ALPHABET = string.ascii_letters + string.digits + " -_.,'éü日本|:=/"


def random_label(rng: random.Random) -> str:
    return "".join(rng.choice(LABEL_ALPHABET) for _ in range(rng.randint(0, 12)))


def random_labeled(rng: random.Random, n: int, max_segments: int | None = None) -> LabeledSegmentation:
    seg = random_segmentation(rng, n, max_segments)
    return LabeledSegmentation(seg, tuple(random_label(rng) for _ in seg.boundaries))


def random_document(rng: random.Random, n: int, modality=Modality.DOCUMENT, doc_id: str = "d") -> Document:
    words = ["alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta"]
    sents = []
    for _ in range(n):
        toks = [rng.choice(words) for _ in range(rng.randint(0, 15))]
        sents.append(" ".join(toks) + ("." if toks else ""))
    return Document(doc_id, tuple(sents), modality)


def block_document(rng: random.Random, num_blocks: int, doc_id: str = "blocks", vocab_size: int = 8):
    """Blocks with disjoint topic vocabularies; each sentence uses all but one
    of its block's words in random order."""
    sents, bounds = [], []
    for b in range(num_blocks):
        vocab = [f"topic{b}word{i}" for i in range(vocab_size)]
        for _ in range(rng.randint(4, 10)):
            words = rng.sample(vocab, vocab_size - 1)
            sents.append(" ".join(words) + ".")
        bounds.append(len(sents) - 1)
    return Document(doc_id, tuple(sents)), Segmentation(tuple(bounds), len(sents))


# --- oracles --------------------------------------------------------------


def brute_pk(ref_bounds, hyp_bounds, n: int, k: int) -> float:
    """Window enumeration straight from the definition: a pair (i, i+k) is in
    the same segment iff no boundary index falls in [i, i+k-1]."""

    def same(bounds, a, b):
        return not any(a <= x <= b - 1 for x in bounds)

    windows = range(0, n - k)
    bad = sum(same(ref_bounds, i, i + k) != same(hyp_bounds, i, i + k) for i in windows)
    return bad / len(windows)


def brute_lcs(a, b) -> int:
    """Longest common subsequence by trying every subsequence of the shorter side."""
    if len(a) > len(b):
        a, b = b, a

    def is_subseq(sub, seq):
        it = iter(seq)
        return all(tok in it for tok in sub)

    for size in range(len(a), 0, -1):
        for idx in itertools.combinations(range(len(a)), size):
            if is_subseq([a[i] for i in idx], b):
                return size
    return 0


def brute_align(hyp: Segmentation, ref: Segmentation) -> list[int]:
    """Count shared sentences sentence by sentence."""

    def owner(bounds, i):
        for j, b in enumerate(bounds):
            if i <= b:
                return j
        raise AssertionError

    out = []
    for h in range(len(hyp.boundaries)):
        members = [i for i in range(hyp.num_sentences) if owner(hyp.boundaries, i) == h]
        votes = Counter(owner(ref.boundaries, i) for i in members)
        best = max(votes.values())
        out.append(min(j for j, v in votes.items() if v == best))
    return out


def dense_cosine_pairs(vectors_a, vectors_b, threshold):
    """All-pairs cosine over dense numpy matrices."""
    import numpy as np

    vocab = sorted({t for v in [*vectors_a, *vectors_b] for t in v})
    pos = {t: i for i, t in enumerate(vocab)}

    def mat(vs):
        m = np.zeros((len(vs), len(vocab)))
        for r, v in enumerate(vs):
            for t, w in v.items():
                m[r, pos[t]] = w
        norms = np.linalg.norm(m, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        return m / norms

    sims = mat(vectors_a) @ mat(vectors_b).T
    return {(i, j): float(sims[i, j]) for i, j in zip(*np.nonzero(sims >= threshold))}


def analytic_bce(probs, labels) -> float:
    return -sum(math.log(p) if y else math.log(1 - p) for p, y in zip(probs, labels))
