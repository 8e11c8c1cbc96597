import random
from pathlib import Path

import pytest

from helpers import dense_cosine_pairs, random_document, random_labeled
from structsum.codec import Document, Example, LabeledSegmentation, Modality, Segmentation, tokenize
from structsum.data import (
    DEFAULT_TRUNCATION_LIMITS,
    IngestError,
    corpus_stats,
    example_to_record,
    format_jsonl,
    near_duplicate_scan,
    parse_sectioned_text,
    prepend_empty_sentences,
    read_corpus,
    record_to_example,
    replicate_with_truncations,
    sample_prepend_count,
    tfidf_vectors,
    truncate_turns,
    write_corpus,
)

FIXTURES = Path(__file__).parent / "fixtures"


class TestSectionedText:
    def test_two_sections(self):
        raw = "========,1,Intro.\na\nb\n========,1,Body.\nc\nd\ne\n"
        parsed = parse_sectioned_text(raw, "x")
        assert parsed.document.sentences == ("a", "b", "c", "d", "e")
        assert parsed.segmentation.boundaries == (1, 4)
        assert parsed.segmentation.labels == ("Intro", "Body")
        assert parsed.empty_sections == 0

    def test_nested_headers_fold(self):
        parsed = parse_sectioned_text((FIXTURES / "sectioned" / "ada.txt").read_text(), "ada")
        assert parsed.segmentation.boundaries == (1, 4, 5)
        assert parsed.segmentation.labels == ("preface", "Early life", "Legacy")

    def test_deeper_level_splits(self):
        parsed = parse_sectioned_text((FIXTURES / "sectioned" / "ada.txt").read_text(), "ada", max_level=2)
        assert parsed.segmentation.boundaries == (1, 2, 4, 5)
        assert parsed.segmentation.labels == ("preface", "Early life", "Childhood", "Legacy")

    def test_empty_section_dropped(self):
        parsed = parse_sectioned_text((FIXTURES / "sectioned" / "babbage.txt").read_text(), "b")
        assert parsed.empty_sections == 1
        assert parsed.segmentation.boundaries == (0, 2, 3)
        assert parsed.segmentation.labels == ("preface", "Analytical engine", "Honours / awards")

    def test_no_sentences_rejected(self):
        with pytest.raises(IngestError):
            parse_sectioned_text((FIXTURES / "bad_header_only.txt").read_text())

    def test_malformed_header_is_a_sentence(self):
        parsed = parse_sectioned_text("========,1,A.\n========,x,B.\nreal\n")
        assert parsed.document.sentences == ("========,x,B.", "real")

    def test_text_before_first_header(self):
        parsed = parse_sectioned_text("lead\n========,1,A.\nbody\n")
        assert parsed.segmentation.boundaries == (0, 1)
        assert parsed.segmentation.labels == ("", "A")

    def test_always_valid(self):
        rng = random.Random(0)
        for _ in range(300):
            lines = []
            for _ in range(rng.randint(1, 20)):
                if rng.random() < 0.3:
                    lines.append(f"========,{rng.randint(1, 3)},T{rng.randint(0, 9)}.")
                else:
                    lines.append(rng.choice(["x y", "z.", "", "  "]))
            try:
                parsed = parse_sectioned_text("\n".join(lines))
            except IngestError:
                continue
            ls = parsed.segmentation
            assert ls.num_sentences == len(parsed.document)
            assert all(s.strip() for s in parsed.document.sentences)


class TestCanonicalJsonl:
    def test_round_trip_bytes(self, tmp_path):
        rng = random.Random(1)
        examples = []
        for i in range(50):
            n = rng.randint(1, 20)
            doc = random_document(rng, n, rng.choice(list(Modality)), doc_id=f"doc{i}")
            ls = random_labeled(rng, n)
            examples.append(Example(doc, ls.segmentation, ls.labels))
        examples.append(Example(Document("bare", ("só texto",))))
        path = tmp_path / "c.jsonl"
        write_corpus(path, examples)
        first = path.read_bytes()
        assert read_corpus(path) == examples
        write_corpus(path, read_corpus(path))
        assert path.read_bytes() == first

    def test_sectioned_round_trip(self, tmp_path):
        parsed = parse_sectioned_text((FIXTURES / "sectioned" / "curie.txt").read_text(), "curie")
        ex = Example(parsed.document, parsed.segmentation.segmentation, parsed.segmentation.labels)
        path = tmp_path / "c.jsonl"
        write_corpus(path, [ex])
        (back,) = read_corpus(path)
        assert back.document.sentences == parsed.document.sentences
        assert back.segmentation.boundaries == parsed.segmentation.boundaries
        assert back.labels == parsed.segmentation.labels

    def test_record_shape(self):
        ex = Example(Document("a", ("s",), Modality.CONVERSATION), Segmentation((0,), 1), ("L",))
        assert example_to_record(ex) == {
            "id": "a",
            "modality": "conversation",
            "sentences": ["s"],
            "boundaries": [0],
            "labels": ["L"],
        }
        assert format_jsonl([example_to_record(ex)]).endswith("\n")

    def test_missing_field(self):
        with pytest.raises(IngestError):
            record_to_example({"sentences": ["a"]})


def labeled(bounds, labels, n):
    return LabeledSegmentation.build(bounds, labels, n)


class TestPrepend:
    def test_identity(self):
        doc = Document("d", ("a", "b"))
        ls = labeled([1], ["x"], 2)
        assert prepend_empty_sentences(doc, ls, 0) == (doc, ls)

    def test_shift(self):
        doc = Document("d", tuple("abcdef"))
        new_doc, new_ls = prepend_empty_sentences(doc, labeled([2, 5], ["x", "y"], 6), 3)
        assert new_doc.sentences[:3] == ("", "", "")
        assert new_ls.boundaries == (5, 8)
        assert new_ls.labels == ("x", "y")

    def test_composition_and_invariants(self):
        rng = random.Random(2)
        for _ in range(300):
            n = rng.randint(1, 30)
            doc = random_document(rng, n)
            ls = random_labeled(rng, n)
            a, b = rng.randint(0, 50), rng.randint(0, 50)
            twice = prepend_empty_sentences(*prepend_empty_sentences(doc, ls, a), b)
            once = prepend_empty_sentences(doc, ls, a + b)
            assert twice == once
            assert once[1].segmentation.num_segments == ls.segmentation.num_segments
            assert [x - a - b for x in once[1].boundaries] == list(ls.boundaries)

    def test_negative(self):
        with pytest.raises(ValueError):
            prepend_empty_sentences(Document("d", ("a",)), None, -1)


class TestSamplePrepend:
    def test_zero_max(self):
        rng = random.Random(0)
        assert {sample_prepend_count(rng, 0) for _ in range(100)} == {0}

    def test_range(self):
        rng = random.Random(0)
        draws = [sample_prepend_count(rng) for _ in range(100_000)]
        assert min(draws) == 0 and max(draws) == 1000

    def test_deterministic(self):
        a, b = random.Random(9), random.Random(9)
        assert [sample_prepend_count(a) for _ in range(50)] == [sample_prepend_count(b) for _ in range(50)]
        assert sample_prepend_count(5) == sample_prepend_count(5)


def conversation(turns, doc_id="c"):
    return Document(doc_id, tuple(turns), Modality.CONVERSATION)


class TestTruncation:
    def test_short_turn_unchanged(self):
        doc = conversation(["hello there, friend"])
        assert truncate_turns(doc, 95) == doc

    def test_long_turn(self):
        doc = conversation([" ".join(f"w{i}" for i in range(200))])
        out = truncate_turns(doc, 95)
        assert len(tokenize(out.sentences[0])) == 95
        assert out.sentences[0] == " ".join(f"w{i}" for i in range(95))

    def test_documents_pass_through(self, caplog):
        doc = Document("d", ("a b c d",))
        assert truncate_turns(doc, 1) is doc
        assert "unchanged" in caplog.text

    def test_invariants(self):
        rng = random.Random(3)
        for _ in range(300):
            doc = random_document(rng, rng.randint(1, 20), Modality.CONVERSATION)
            limit = rng.randint(1, 12)
            out = truncate_turns(doc, limit)
            assert len(out) == len(doc)
            assert all(len(tokenize(s)) <= limit for s in out.sentences)

    def test_replicas(self):
        doc = conversation(["a b c"] * 4)
        ex = Example(doc, Segmentation((1, 3), 4), ("x", "y"))
        reps = replicate_with_truncations(ex)
        assert len(reps) == 1 + len(DEFAULT_TRUNCATION_LIMITS) == 4
        assert [r.id for r in reps] == ["c", "c-t20", "c-t50", "c-t200"]
        assert all(r.segmentation == ex.segmentation and r.labels == ex.labels for r in reps)
        assert len(replicate_with_truncations(ex, [1])) == 2
        assert replicate_with_truncations(ex, [1])[1].document.sentences == ("a",) * 4

    def test_replicas_need_limits(self):
        with pytest.raises(ValueError):
            replicate_with_truncations(Example(conversation(["a"])), [])


def random_corpus(rng, size, prefix, vocab):
    docs = []
    for i in range(size):
        words = [rng.choice(vocab) for _ in range(rng.randint(3, 25))]
        docs.append(Document(f"{prefix}{i}", (" ".join(words),)))
    return docs


class TestNearDuplicates:
    def test_identical_document(self):
        a = [Document("a0", ("the quick brown fox",)), Document("a1", ("lorem ipsum",))]
        b = [Document("b0", ("the quick brown fox",))]
        pairs = near_duplicate_scan(a, b, 0.9)
        assert [(p.id_a, p.id_b) for p in pairs] == [("a0", "b0")]
        assert abs(pairs[0].similarity - 1.0) <= 1e-9

    def test_disjoint(self):
        a = [Document("a", ("red green",))]
        b = [Document("b", ("blue yellow",))]
        assert near_duplicate_scan(a, b, 0.5) == []

    def test_empty_side(self, caplog):
        assert near_duplicate_scan([], [Document("b", ("x",))], 0.5) == []
        assert "empty" in caplog.text

    def test_threshold_validated(self):
        with pytest.raises(ValueError):
            near_duplicate_scan(["a"], ["a"], 0.0)

    def test_matches_brute_force(self):
        rng = random.Random(4)
        vocab = [f"w{i}" for i in range(60)]
        a = random_corpus(rng, 80, "a", vocab)
        b = random_corpus(rng, 80, "b", vocab)
        for t in (0.2, 0.4, 0.8):
            pairs = near_duplicate_scan(a, b, t)
            vecs = tfidf_vectors([" ".join(d.sentences) for d in a + b])
            oracle = dense_cosine_pairs(vecs[:80], vecs[80:], t)
            assert {(p.id_a, p.id_b) for p in pairs} == {(f"a{i}", f"b{j}") for i, j in oracle}
            for p in pairs:
                assert p.similarity == pytest.approx(oracle[int(p.id_a[1:]), int(p.id_b[1:])], abs=1e-9)
            sims = [p.similarity for p in pairs]
            assert sims == sorted(sims, reverse=True)

    def test_symmetric_under_swap(self):
        rng = random.Random(5)
        vocab = [f"w{i}" for i in range(30)]
        a = random_corpus(rng, 40, "a", vocab)
        b = random_corpus(rng, 40, "b", vocab)
        ab = {(p.id_a, p.id_b) for p in near_duplicate_scan(a, b, 0.3)}
        ba = {(p.id_b, p.id_a) for p in near_duplicate_scan(b, a, 0.3)}
        assert ab == ba and ab

    def test_plain_strings_and_custom_embedder(self):
        def bag(texts):
            return [{ch: 1.0 for ch in t} for t in texts]

        pairs = near_duplicate_scan(["abc", "xyz"], ["cba"], 0.99, embedder=bag)
        assert [(p.id_a, p.id_b) for p in pairs] == [("0", "0")]


class TestCorpusStats:
    def test_empty(self):
        stats = corpus_stats([])
        assert stats.num_docs == 0 and stats.max_sentences == 0 and stats.sentence_count_histogram == {}

    def test_single(self):
        stats = corpus_stats([Example(Document("d", ("a b", "c", "d", "e", "f.")), Segmentation((4,), 5), ("x",))])
        assert stats.max_sentences == 5 and stats.max_tokens == 7
        assert stats.segment_count_histogram == {1: 1}

    def test_file_with_malformed_lines(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text(
            '{"id": "a", "sentences": ["x"], "boundaries": [0]}\n'
            "not json\n"
            '{"id": "b", "sentences": []}\n'
            '{"id": "c", "sentences": ["x", "y"]}\n',
            encoding="utf-8",
        )
        stats = corpus_stats(path)
        assert stats.num_docs == 2 and stats.malformed_lines == 2
        assert stats.segment_count_histogram == {1: 1, 0: 1}

    def test_histograms_sum(self):
        rng = random.Random(6)
        examples = []
        for i in range(200):
            n = rng.randint(1, 15)
            ls = random_labeled(rng, n) if rng.random() < 0.7 else None
            examples.append(Example(random_document(rng, n), ls and ls.segmentation, ls and ls.labels))
        stats = corpus_stats(examples)
        assert sum(stats.sentence_count_histogram.values()) == 200
        assert sum(stats.segment_count_histogram.values()) == 200
