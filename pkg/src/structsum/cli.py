"""Command-line pipelines over canonical JSONL files.

Data goes to stdout (or ``--output``); diagnostics go to stderr.
Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import random
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__
from .codec import (
    Example,
    LabeledSegmentation,
    Modality,
    Segmentation,
    TargetMode,
    decode,
    encode,
)
from .data import (
    DEFAULT_MAX_PREPEND,
    DEFAULT_TRUNCATION_LIMITS,
    IngestError,
    corpus_stats,
    example_to_record,
    format_jsonl,
    near_duplicate_scan,
    parse_sectioned_text,
    prepend_example,
    read_corpus,
    read_jsonl,
    replicate_with_truncations,
    sample_prepend_count,
)
from .metrics import CorpusEvaluator
from .segmenters import TilingParams, bce_loss, texttile, threshold_segment

log = logging.getLogger("structsum")


class UsageError(Exception):
    exit_code = 2


class DomainError(Exception):
    exit_code = 1


@dataclass
class RunConfig:
    mode: TargetMode = TargetMode.COMBINED
    k_override: int | None = None
    tiling: TilingParams = field(default_factory=TilingParams)
    threshold: float = 0.5
    seed: int = 0
    percent_display: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.threshold <= 1.0:
            raise UsageError("--threshold must lie in [0, 1]")

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        try:
            tiling = TilingParams(
                block_size=getattr(args, "block_size", 2),
                smoothing_width=getattr(args, "smoothing", 1),
                cutoff_c=getattr(args, "cutoff", 0.5),
            )
        except ValueError as e:
            raise UsageError(str(e)) from None
        return cls(
            mode=TargetMode(getattr(args, "mode", "combined")),
            k_override=getattr(args, "k", None),
            tiling=tiling,
            threshold=getattr(args, "threshold", 0.5),
            seed=getattr(args, "seed", 0),
            percent_display=getattr(args, "percent", False),
        )


# --- helpers --------------------------------------------------------------


def _emit(args: argparse.Namespace, text: str) -> None:
    if getattr(args, "output", None):
        Path(args.output).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=False) + "\n"


def _load_corpus(path: str) -> list[Example]:
    _check_readable(path)
    try:
        return read_corpus(path)
    except IngestError as e:
        raise DomainError(str(e)) from None


def _load_records(path: str) -> list[dict]:
    _check_readable(path)
    try:
        return read_jsonl(path)
    except IngestError as e:
        raise DomainError(str(e)) from None


def _check_readable(path: str) -> None:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"cannot read {path}")


def _by_id(records: Iterable[dict], what: str) -> dict[str, dict]:
    out = {}
    for rec in records:
        if "id" not in rec:
            raise DomainError(f"{what}: record without an id")
        out[str(rec["id"])] = rec
    return out


def _limits(text: str) -> list[int]:
    try:
        limits = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad limit list {text!r}") from None
    if not limits or any(x < 1 for x in limits):
        raise argparse.ArgumentTypeError("limits must be positive integers")
    return limits


# --- commands -------------------------------------------------------------


def cmd_ingest(args: argparse.Namespace) -> int:
    src = Path(args.input)
    if not src.exists():
        raise UsageError(f"cannot read {src}")
    if src.is_dir():
        pattern = "*.jsonl" if args.format == "jsonl" else "*"
        files = sorted(p for p in src.rglob(pattern) if p.is_file())
    else:
        files = [src]

    examples: list[Example] = []
    rejected = empty_sections = 0
    for path in files:
        if args.format == "jsonl":
            try:
                examples.extend(read_corpus(path))
            except IngestError as e:
                rejected += 1
                print(f"{path}: {e}", file=sys.stderr)
            continue
        doc_id = path.relative_to(src).with_suffix("").as_posix() if src.is_dir() else path.stem
        try:
            raw = path.read_text(encoding="utf-8")
            parsed = parse_sectioned_text(raw, doc_id=doc_id, max_level=args.max_level)
        except (IngestError, UnicodeDecodeError) as e:
            rejected += 1
            print(f"{path}: rejected: {e}", file=sys.stderr)
            continue
        empty_sections += parsed.empty_sections
        ls = parsed.segmentation
        examples.append(Example(parsed.document, ls.segmentation, ls.labels))

    _emit(args, format_jsonl(example_to_record(e) for e in examples))
    summary = _json({"documents": len(examples), "rejected": rejected, "empty_sections": empty_sections})
    (sys.stdout if args.output else sys.stderr).write(summary)
    if not examples:
        raise DomainError("no documents ingested")
    return 0


def cmd_encode(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_args(args)
    out = []
    for ex in _load_corpus(args.corpus):
        if ex.segmentation is None or (cfg.mode is not TargetMode.SEG_ONLY and ex.labels is None):
            print(f"{ex.id}: no gold {'labels' if ex.segmentation else 'boundaries'}, skipped", file=sys.stderr)
            continue
        target = encode(ex.labeled or ex.segmentation, cfg.mode)
        out.append({"id": ex.id, "target": target.text, "num_sentences": len(ex.document)})
    _emit(args, format_jsonl(out))
    if not out:
        raise DomainError("nothing to encode")
    return 0


def decoded_record(rec_id: str, raw: str, num_sentences: int | None, mode: TargetMode) -> dict:
    if mode is TargetMode.LABELS_ONLY:
        labels, dropped = decode(raw, 1, mode)
        return {"id": rec_id, "labels": labels, "dropped_parts": dropped}
    if num_sentences is None:
        raise DomainError(f"{rec_id}: sentence count unknown; pass --corpus")
    value, dropped = decode(raw, num_sentences, mode)
    out = {"id": rec_id, "num_sentences": num_sentences, "boundaries": list(value.boundaries)}
    if isinstance(value, LabeledSegmentation):
        out["labels"] = list(value.labels)
    out["dropped_parts"] = dropped
    return out


def cmd_decode(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_args(args)
    sizes = {}
    if args.corpus:
        sizes = {ex.id: len(ex.document) for ex in _load_corpus(args.corpus)}
    out = []
    for rec in _load_records(args.targets):
        rec_id = str(rec.get("id", ""))
        n = rec.get("num_sentences", sizes.get(rec_id))
        row = decoded_record(rec_id, str(rec.get("target", "")), n, cfg.mode)
        if row["dropped_parts"]:
            print(f"{rec_id}: dropped {row['dropped_parts']} part(s)", file=sys.stderr)
        out.append(row)
    _emit(args, format_jsonl(out))
    return 0


def cmd_segment(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_args(args)
    if args.method == "threshold" and not args.probs:
        raise UsageError("--method threshold needs --probs")
    corpus = _load_corpus(args.corpus)
    probs = _by_id(_load_records(args.probs), args.probs) if args.probs else {}
    out = []
    for ex in corpus:
        n = len(ex.document)
        if args.method == "texttile":
            seg = texttile(ex.document, cfg.tiling) if n >= 2 else Segmentation((0,), 1)
        else:
            rec = probs.get(ex.id)
            if rec is None:
                raise DomainError(f"{ex.id}: no probabilities in {args.probs}")
            if not isinstance(rec.get("probs"), list):
                raise DomainError(f"{ex.id}: record has no probs list")
            if len(rec["probs"]) != n:
                raise DomainError(f"{ex.id}: {len(rec['probs'])} probabilities for {n} sentences")
            seg = threshold_segment(rec["probs"], cfg.threshold)
        out.append({"id": ex.id, "num_sentences": n, "boundaries": list(seg.boundaries)})
    _emit(args, format_jsonl(out))
    return 0


def _hyp_from_record(rec: dict, ref: Example, mode: TargetMode):
    n = len(ref.document)
    if "target" in rec:
        row = decoded_record(ref.id, str(rec["target"]), n, mode)
    else:
        row = dict(rec)
        row.setdefault("dropped_parts", 0)
    seg = None
    if row.get("boundaries") is not None:
        try:
            seg = Segmentation(tuple(row["boundaries"]), n)
        except ValueError as e:
            raise DomainError(f"{ref.id}: invalid hypothesis: {e}") from None
    return seg, row.get("labels"), int(row["dropped_parts"])


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_args(args)
    refs = _load_corpus(args.ref)
    hyps = _by_id(_load_records(args.hyp), args.hyp)
    missing = [ex.id for ex in refs if ex.id not in hyps]
    extra = sorted(set(hyps) - {ex.id for ex in refs})
    if missing or extra:
        raise DomainError(f"corpora do not match: {len(missing)} missing, {len(extra)} unknown hypothesis id(s)")

    ev = CorpusEvaluator(k_override=cfg.k_override)
    for ref in refs:
        hyp_seg, hyp_labels, dropped = _hyp_from_record(hyps[ref.id], ref, cfg.mode)
        use_seg = cfg.mode is not TargetMode.LABELS_ONLY
        use_labels = cfg.mode is not TargetMode.SEG_ONLY
        if use_seg and ref.segmentation is None:
            raise DomainError(f"{ref.id}: reference has no boundaries")
        if use_labels and ref.labels is None:
            raise DomainError(f"{ref.id}: reference has no labels")
        ev.add(
            ref.segmentation if use_seg else None,
            hyp_seg if use_seg else None,
            ref.labels if use_labels else None,
            hyp_labels if use_labels else None,
            dropped_parts=dropped,
        )
    report = ev.report()
    if cfg.mode is not TargetMode.COMBINED:
        report.label_f1 = None
    _emit(args, _json(report.to_dict(percent=cfg.percent_display)))
    return 0


def cmd_augment(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_args(args)
    rng = random.Random(cfg.seed)
    examples = _load_corpus(args.corpus)
    for op in args.ops:
        if op == "prepend_empty":
            examples = [prepend_example(ex, sample_prepend_count(rng, args.max_prepend)) for ex in examples]
        else:
            nxt = []
            for ex in examples:
                if ex.document.modality is Modality.CONVERSATION:
                    nxt.extend(replicate_with_truncations(ex, args.limits))
                else:
                    nxt.append(ex)
            examples = nxt
    _emit(args, format_jsonl(example_to_record(e) for e in examples))
    return 0


def cmd_dedup(args: argparse.Namespace) -> int:
    if not 0 < args.threshold <= 1:
        raise UsageError("--threshold must lie in (0, 1]")
    a = _load_corpus(args.corpus_a)
    b = _load_corpus(args.corpus_b)
    pairs = near_duplicate_scan(a, b, args.threshold)
    _emit(args, format_jsonl(p.as_dict() for p in pairs))
    print(f"{len(pairs)} pair(s) with similarity >= {args.threshold}", file=sys.stderr)
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    _check_readable(args.corpus)
    stats = corpus_stats(args.corpus)
    _emit(args, _json(stats.as_dict()))
    return 0


def cmd_loss(args: argparse.Namespace) -> int:
    corpus = _load_corpus(args.corpus)
    probs = _by_id(_load_records(args.probs), args.probs)
    total = count = 0.0
    for ex in corpus:
        if ex.segmentation is None:
            raise DomainError(f"{ex.id}: reference has no boundaries")
        rec = probs.get(ex.id)
        if rec is None:
            raise DomainError(f"{ex.id}: no probabilities in {args.probs}")
        try:
            loss = bce_loss(rec["probs"], ex.segmentation)
        except (KeyError, TypeError, ValueError) as e:
            raise DomainError(f"{ex.id}: {e}") from None
        total += loss.total
        count += len(rec["probs"])
    _emit(args, _json({"sum": total, "mean": total / count if count else 0.0, "documents": len(corpus)}))
    return 0


# --- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="structsum", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    out = argparse.ArgumentParser(add_help=False)
    out.add_argument("--output", "-o", help="write data here instead of stdout")
    mode = argparse.ArgumentParser(add_help=False)
    mode.add_argument("--mode", choices=[m.value for m in TargetMode], default="combined")

    s = sub.add_parser("ingest", parents=[out], help="convert sectioned text or JSONL to canonical JSONL")
    s.add_argument("input")
    s.add_argument("--format", choices=["sectioned_text", "jsonl"], default="sectioned_text")
    s.add_argument("--max-level", type=int, default=1, help="deepest header level that starts a segment")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("encode", parents=[out, mode], help="write target sequences")
    s.add_argument("corpus")
    s.set_defaults(func=cmd_encode)

    s = sub.add_parser("decode", parents=[out, mode], help="parse (possibly corrupted) target sequences")
    s.add_argument("targets")
    s.add_argument("--corpus", help="canonical corpus supplying sentence counts")
    s.set_defaults(func=cmd_decode)

    s = sub.add_parser("segment", parents=[out], help="run a baseline segmenter")
    s.add_argument("corpus")
    s.add_argument("--method", choices=["texttile", "threshold"], default="texttile")
    s.add_argument("--probs", help="JSONL of {id, probs} for --method threshold")
    s.add_argument("--threshold", type=float, default=0.5)
    s.add_argument("--block-size", type=int, default=2)
    s.add_argument("--smoothing", type=int, default=1)
    s.add_argument("--cutoff", type=float, default=0.5)
    s.set_defaults(func=cmd_segment)

    s = sub.add_parser("eval", parents=[out, mode], help="score hypotheses against a reference corpus")
    s.add_argument("ref")
    s.add_argument("hyp")
    s.add_argument("--k", type=int, help="fixed P_k window instead of half the mean segment length")
    s.add_argument("--percent", action="store_true", help="report rates x100")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("augment", parents=[out], help="prepend empty sentences / add truncated replicas")
    s.add_argument("corpus")
    s.add_argument("--ops", nargs="+", choices=["prepend_empty", "truncate_replicas"], required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-prepend", type=int, default=DEFAULT_MAX_PREPEND)
    s.add_argument("--limits", type=_limits, default=list(DEFAULT_TRUNCATION_LIMITS))
    s.set_defaults(func=cmd_augment)

    s = sub.add_parser("dedup", parents=[out], help="near-duplicate scan between two corpora")
    s.add_argument("corpus_a")
    s.add_argument("corpus_b")
    s.add_argument("--threshold", type=float, default=0.9)
    s.set_defaults(func=cmd_dedup)

    s = sub.add_parser("stats", parents=[out], help="corpus statistics")
    s.add_argument("corpus")
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("loss", parents=[out], help="BCE of boundary probabilities against gold")
    s.add_argument("corpus")
    s.add_argument("--probs", required=True)
    s.set_defaults(func=cmd_loss)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, DomainError) as e:
        print(f"structsum {args.command}: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"structsum {args.command}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
