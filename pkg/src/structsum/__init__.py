"""Joint text segmentation and segment labeling as target-sequence generation:
codecs, metrics, baseline segmenters and corpus tooling."""

__version__ = "0.1.0"

from .codec import (
    Document,
    Example,
    LabeledSegmentation,
    MarkerScheme,
    Modality,
    Segmentation,
    TargetMode,
    TargetSequence,
    boundary_labels,
    decode_combined,
    decode_segmentation,
    encode_combined,
    encode_segmentation,
    mark_sentence_positions,
    segmentation_from_labels,
)
from .metrics import EvalReport, RougeScore, align_segments, compute_k, label_f1, pk, rouge_l, rouge_n
from .segmenters import TilingParams, bce_loss, texttile, threshold_segment

__all__ = [
    "Document",
    "Example",
    "LabeledSegmentation",
    "MarkerScheme",
    "Modality",
    "Segmentation",
    "TargetMode",
    "TargetSequence",
    "boundary_labels",
    "decode_combined",
    "decode_segmentation",
    "encode_combined",
    "encode_segmentation",
    "mark_sentence_positions",
    "segmentation_from_labels",
    "EvalReport",
    "RougeScore",
    "align_segments",
    "compute_k",
    "label_f1",
    "pk",
    "rouge_l",
    "rouge_n",
    "TilingParams",
    "bce_loss",
    "texttile",
    "threshold_segment",
]
