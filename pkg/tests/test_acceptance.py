"""Acceptance gate: ten end-to-end criteria, one verdict line per criterion.

Every test re-derives its expected values inside the test body (or from the
independent oracles module) rather than trusting library internals, and
prints a single PASS/FAIL line so a log scan shows the whole gate at a
glance.  Run with -s (or read the captured output of a failure) to see the
verdict lines.
"""

import contextlib
import json
import random
import re
import time
from collections import Counter

import pytest

from askgap import builder as builder_mod
from askgap import plans as plans_mod
from askgap.builder import BuildConfig, PretrainInstance, build_dataset, instance_to_json
from askgap.builder import Mode, MODE_TOKENS, QSEP_TOKEN, budget_token_count
from askgap.cli import main
from askgap.corpus import document_from_sentences, read_corpus
from askgap.gsg import select_gap_sentences
from askgap.metrics import levenshtein_norm, rouge_l, rouge_n
from askgap.plans import (
    BLUEPRINT,
    CONTENT_QUESTIONS,
    GRADE_EXACT,
    GRADE_NONE,
    KEYWORDS,
    QaPair,
    extract_plan,
    filter_coverage,
    filter_rheme,
    filter_round_trip,
    grade_pairs,
)
from askgap.qg import RecordedBackend

import oracles


@contextlib.contextmanager
def verdict(number, title):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE FAIL [{number:02d}] {title}")
        raise
    print(f"ACCEPTANCE PASS [{number:02d}] {title}")


# pinned walkthrough contract: summary text and the plan strings the three
# strategies must reproduce char-for-char from the recorded backend
WALKTHROUGH = (
    "In a group discussion about a philosophical concept, Sarah used the "
    "Socratic method by asking and answering questions to stimulate critical "
    "thinking and clarify underlying assumptions. "
    "The method helped her and her classmates achieve a deeper understanding "
    "of the concept and address disagreements. "
    "Sarah looked forward to continuing to use it in her studies."
)
PINNED_CONTENT = (
    "How did Sarah use the Socratic method? "
    "What were the benefits of the Socratic method? "
    "What did Sarah think of the method?"
)
PINNED_KEYWORDS = (
    "Group discussion | Sarah | Socratic method | questions | thinking | "
    "assumptions || method | classmates | understanding | disagreement || studies"
)
PINNED_BLUEPRINT_PREFIX = (
    "What type of discussion did Sarah have about a philosophical concept? "
    "Group discussion | Who used the Socratic method? Sarah | "
)


def _tokens(text):
    # independent of askgap.corpus.word_tokenize on purpose
    return re.findall(r"\w+|[^\w\s]", text.lower())


@pytest.fixture(scope="module")
def big_builds(synthetic_corpus_10k):
    """One 10k-document build per worker count, shared by criteria 4 and 5."""
    config = BuildConfig(ask_answer_proportion=0.25, seed=11)
    out = {}
    for workers in (1, 8):
        items, report = build_dataset(
            read_corpus(synthetic_corpus_10k), config, workers=workers
        )
        instances = [it for it in items if isinstance(it, PretrainInstance)]
        out[workers] = (instances, report)
    return out


def test_criterion_01_gap_count_law():
    with verdict(1, "gap selection count law holds for every n in 1..50"):
        started = time.perf_counter()
        for n in range(1, 51):
            sentences = [f"alpha{i} beta{i} gamma{i}." for i in range(n)]
            doc = document_from_sentences(f"law-{n}", sentences)
            sel = select_gap_sentences(doc, gsr=0.45, seed=3, mask_rate=0.8)
            k = min(n, max(1, oracles.round_half_up(0.45 * n)))
            m = min(k, max(1, oracles.round_half_up(0.8 * k)))
            assert len(sel.selected) == k, f"n={n}: got {len(sel.selected)} selected"
            assert len(sel.masked) == m, f"n={n}: got {len(sel.masked)} masked"
            assert len(sel.kept) == k - m
        assert time.perf_counter() - started < 1.0


def test_criterion_02_selection_matches_bruteforce():
    with verdict(2, "selection equals brute-force leave-one-out scoring on 200 docs"):
        rng = random.Random(1402)
        vocab = ["ash", "birch", "cedar", "dune", "elm", "fern", "gale", "harbor"]
        started = time.perf_counter()
        for case in range(200):
            n = rng.randint(1, 6)
            sentences = [
                " ".join(rng.choices(vocab, k=rng.randint(2, 5))) + "."
                for _ in range(n)
            ]
            doc = document_from_sentences(f"sel-{case}", sentences)
            sel = select_gap_sentences(doc, gsr=0.45, seed=case, mask_rate=0.8)
            k = min(n, max(1, oracles.round_half_up(0.45 * n)))
            tokens = [oracles.simple_tokens(s) for s in sentences]
            expected = tuple(oracles.brute_force_selection(tokens, k))
            assert sel.selected == expected, f"case {case}: {sentences}"
        assert time.perf_counter() - started < 10.0


def test_criterion_03_rouge_matches_oracles():
    with verdict(3, "ROUGE-L matches exhaustive subsequence search; "
                    "ROUGE-1/2 match hand counts"):
        rng = random.Random(93)
        vocab = list("abcde")
        started = time.perf_counter()
        for _ in range(500):
            cand = rng.choices(vocab, k=rng.randint(0, 8))
            ref = rng.choices(vocab, k=rng.randint(0, 8))
            got = rouge_l(cand, ref)
            want_p, want_r, want_f = oracles.brute_force_rouge_l(cand, ref)
            assert abs(got.precision - want_p) < 1e-12
            assert abs(got.recall - want_r) < 1e-12
            assert abs(got.f1 - want_f) < 1e-12
        assert time.perf_counter() - started < 10.0

        # hand-counted fixtures
        # unigrams: P = 2/2, R = 2/3 -> F1 = 0.8
        assert abs(rouge_n(["a", "b"], ["a", "b", "c"], 1).f1 - 0.8) < 1e-12
        # bigrams {the cat, cat sat} / {the cat, cat sat, sat down}: F1 = 0.8
        score2 = rouge_n("the cat sat".split(), "the cat sat down".split(), 2)
        assert abs(score2.precision - 1.0) < 1e-12
        assert abs(score2.recall - 2 / 3) < 1e-12
        assert abs(score2.f1 - 0.8) < 1e-12
        # clipping: "a a a" vs "a" overlaps once, P = 1/3, R = 1 -> F1 = 0.5
        assert abs(rouge_n(["a", "a", "a"], ["a"], 1).f1 - 0.5) < 1e-12
        # LCS of "a x b" / "a b y" is "a b": P = R = 2/3
        got_l = rouge_l("a x b".split(), "a b y".split())
        assert abs(got_l.f1 - 2 / 3) < 1e-12


def test_criterion_04_mode_grammar_at_scale(big_builds):
    with verdict(4, "10k-doc build: mode grammar, budgets, and mode mix hold"):
        instances, report = big_builds[1]
        assert report.documents_in == report.emitted + report.skipped
        assert report.emitted == len(instances)
        assert len(instances) == 10_000, "tiny synthetic docs must never skip"

        question_tokens = {
            MODE_TOKENS[Mode.ASK],
            MODE_TOKENS[Mode.ANSWER],
            MODE_TOKENS[Mode.ASK_AND_ANSWER],
        }
        mode_counts = Counter()
        for inst in instances:
            mode_counts[inst.mode] += 1
            assert budget_token_count(inst.source) <= 512
            assert budget_token_count(inst.target) <= 256
            assert inst.source.count("<mask>") == len(inst.meta.masked)
            assert len(inst.meta.masked) >= 1
            if inst.mode is Mode.RECONSTRUCT:
                assert not any(
                    inst.source.startswith(tok) for tok in question_tokens
                )
                assert not inst.meta.questions
                assert QSEP_TOKEN not in inst.target
            else:
                assert inst.source.startswith(MODE_TOKENS[inst.mode] + " ")
                assert inst.meta.questions
            if inst.mode is Mode.ASK_AND_ANSWER:
                assert inst.target.count(QSEP_TOKEN) == 1
                assert f" {QSEP_TOKEN} " in inst.target
            else:
                assert QSEP_TOKEN not in inst.target

        fraction = mode_counts[Mode.ASK_AND_ANSWER] / len(instances)
        assert 0.225 <= fraction <= 0.275, f"ask_and_answer fraction {fraction}"
        assert mode_counts[Mode.RECONSTRUCT] == len(instances) - mode_counts[
            Mode.ASK_AND_ANSWER
        ]


def test_criterion_05_parallel_determinism(big_builds):
    with verdict(5, "workers=1 and workers=8 builds are byte-identical"):
        serial, _ = big_builds[1]
        parallel, _ = big_builds[8]
        blob_serial = "\n".join(instance_to_json(i) for i in serial) + "\n"
        blob_parallel = "\n".join(instance_to_json(i) for i in parallel) + "\n"
        assert blob_serial.encode("utf-8") == blob_parallel.encode("utf-8")


def test_criterion_06_walkthrough_plan_reproduction(walkthrough_fixture_path):
    with verdict(6, "recorded backend reproduces all three plan strings"):
        backend = RecordedBackend(walkthrough_fixture_path)

        content = extract_plan(WALKTHROUGH, CONTENT_QUESTIONS, backend)
        assert content.text == PINNED_CONTENT

        keywords = extract_plan(WALKTHROUGH, KEYWORDS, backend)
        assert keywords.text == PINNED_KEYWORDS

        blueprint = extract_plan(WALKTHROUGH, BLUEPRINT, backend)
        assert blueprint.text.startswith(PINNED_BLUEPRINT_PREFIX)
        assert len(blueprint.units) == 10
        assert {u.sentence_index for u in blueprint.units} == {0, 1, 2}
        # the "thinking" candidate fails its round trip and must be gone
        assert all(u.answer != "thinking" for u in blueprint.units)


class _ScriptedQa:
    """Duck-typed QA backend answering from a fixed question->answer table."""

    def __init__(self, table):
        self.table = table

    def answer_question(self, question, context):
        return self.table[question]


def test_criterion_07_filter_semantics():
    with verdict(7, "round-trip, rheme, and coverage filters behave exactly"):
        summary = (
            "The tide gauge recorded a nine foot surge. "
            "Engineers reinforced the east levee. "
            "The town issued an evacuation order."
        )
        p0a = QaPair("What did the tide gauge record?", "a nine foot surge", 0)
        p0b = QaPair("What recorded the surge?", "the tide gauge", 0)
        p1a = QaPair("What did engineers reinforce?", "the east levee", 1)
        p1b = QaPair("Who reinforced the east levee?", "Engineers", 1)
        p2a = QaPair("When was the evacuation order issued?", "the evacuation order", 2)
        p2b = QaPair("What did the town issue?", "an evacuation order", 2)
        pairs = [p0a, p0b, p1a, p1b, p2a, p2b]
        backend = _ScriptedQa({
            p0a.question: "a nine foot surge",   # exact
            p0b.question: "The tide gauge",      # survives normalization
            p1a.question: "the west levee",      # mismatch: dropped
            p1b.question: "Engineers",           # exact
            p2a.question: "the evacuation order",  # exact
            p2b.question: "a curfew notice",     # mismatch: dropped
        })

        survivors = filter_round_trip(pairs, backend, summary)
        assert [(p.question, p.answer) for p in survivors] == [
            (p.question, p.answer) for p in (p0a, p0b, p1b, p2a)
        ]
        assert survivors[0].round_trip_grade == GRADE_EXACT
        assert survivors[1].round_trip_grade == plans_mod.GRADE_NORMALIZED

        # rheme: p2a's answer adds no content over its question
        informative = filter_rheme(survivors)
        assert [(p.question, p.answer) for p in informative] == [
            (p.question, p.answer) for p in (p0a, p0b, p1b)
        ]

        # coverage: sentence 2 lost everything; exactly one pair comes back,
        # and it is the better-graded candidate
        graded = grade_pairs(pairs, backend, summary)
        assert graded[4].round_trip_grade == GRADE_EXACT
        assert graded[5].round_trip_grade == GRADE_NONE
        covered = filter_coverage(informative, graded)
        assert len(covered) == len(informative) + 1
        restored = [p for p in covered if p.sentence_index == 2]
        assert len(restored) == 1
        assert restored[0].question == p2a.question
        assert {p.sentence_index for p in covered} == {0, 1, 2}

        # idempotence of each stage
        assert filter_round_trip(survivors, backend, summary) == survivors
        assert filter_rheme(informative) == informative
        assert filter_coverage(covered, graded) == covered


def test_criterion_08_analysis_statistics(tmp_path):
    with verdict(8, "analyze output matches independent recomputation; "
                    "keyword plans stay shorter than blueprints"):
        summaries = "samples/summaries20.jsonl"
        plan_paths = []
        for strategy in ("content-questions", "keywords", "blueprint"):
            out = tmp_path / f"{strategy}.jsonl"
            code = main([
                "plans", "--in", summaries, "--out", str(out),
                "--strategy", strategy, "--backend", "heuristic",
            ])
            assert code == 0
            plan_paths.append(str(out))

        stats_path = tmp_path / "stats.json"
        code = main([
            "analyze", "--plans", *plan_paths, "--summaries", summaries,
            "--json", str(stats_path), "--no-figures",
        ])
        assert code == 0
        reported = json.loads(stats_path.read_text(encoding="utf-8"))

        with open(summaries, encoding="utf-8") as fh:
            summary_rows = [json.loads(line) for line in fh if line.strip()]
        summary_by_key = {
            (r["doc_id"], r["query_id"]): r["summary"] for r in summary_rows
        }

        def unigram_f1(cand, ref):
            overlap = sum((Counter(cand) & Counter(ref)).values())
            if not cand or not ref or not overlap:
                return 0.0
            p, r = overlap / len(cand), overlap / len(ref)
            return 2 * p * r / (p + r)

        def vocab_overlap(a, b):
            va = {t for t in a if any(ch.isalnum() for ch in t)}
            vb = {t for t in b if any(ch.isalnum() for ch in t)}
            if not va or not vb:
                return 0.0
            return len(va & vb) / min(len(va), len(vb))

        plan_tokens_by_key = {}
        for path in plan_paths:
            with open(path, encoding="utf-8") as fh:
                rows = [json.loads(line) for line in fh if line.strip()]
            strategy = rows[0]["strategy"]
            ratios, rouges, by_doc = [], [], {}
            for row in rows:
                key = (row["doc_id"], row["query_id"])
                ptoks = _tokens(row["plan_text"])
                stoks = _tokens(summary_by_key[key])
                ratios.append(len(ptoks) / len(stoks))
                rouges.append(unigram_f1(ptoks, stoks))
                by_doc.setdefault(row["doc_id"], []).append(ptoks)
                plan_tokens_by_key[(strategy, key)] = len(ptoks)
            overlaps = [
                vocab_overlap(group[i], group[j])
                for group in by_doc.values()
                for i in range(len(group))
                for j in range(i + 1, len(group))
            ]
            got = reported[strategy]
            assert got["plan_count"] == len(rows) == 20
            assert abs(got["length_ratio"] - sum(ratios) / len(ratios)) < 1e-9
            assert abs(got["summary_rouge1_f1"] - sum(rouges) / len(rouges)) < 1e-9
            assert overlaps, "sample file must exercise shared-document overlap"
            assert abs(got["mean_cross_overlap"] - sum(overlaps) / len(overlaps)) < 1e-9
            assert abs(got["max_cross_overlap"] - max(overlaps)) < 1e-9

        for key in summary_by_key:
            kw = plan_tokens_by_key[(KEYWORDS, key)]
            bp = plan_tokens_by_key[(BLUEPRINT, key)]
            assert kw < bp, f"{key}: keywords {kw} not below blueprint {bp}"


def test_criterion_09_edit_distance_oracle():
    with verdict(9, "normalized edit distance matches full-matrix DP on 100 pairs"):
        rng = random.Random(77)
        vocab = ["red", "blue", "green", "stone", "river", "lamp"]
        for _ in range(100):
            a = rng.choices(vocab, k=rng.randint(0, 12))
            b = rng.choices(vocab, k=rng.randint(0, 12))
            dist = oracles.full_matrix_levenshtein(a, b)
            longest = max(len(a), len(b))
            want = dist / longest if longest else 0.0
            assert levenshtein_norm(a, b) == want
            assert levenshtein_norm(a, a) == 0.0
            assert levenshtein_norm(b, b) == 0.0


def test_criterion_10_dataset_stats_hand_counts(capsys):
    with verdict(10, "dataset stats over bundled pairs match hand counts"):
        path = "samples/qfs_pairs.jsonl"
        with open(path, encoding="utf-8") as fh:
            rows = [json.loads(line) for line in fh if line.strip()]

        examples = len(rows)
        documents = sorted({r["doc_id"] for r in rows})
        summary_lengths = [len(_tokens(r["summary"])) for r in rows]
        doc_lengths = {}
        for r in rows:
            if "document" in r and r["doc_id"] not in doc_lengths:
                doc_lengths[r["doc_id"]] = len(_tokens(r["document"]))
        mean_summary = sum(summary_lengths) / examples
        mean_document = sum(doc_lengths.values()) / len(doc_lengths)

        # the bundled sample is frozen; its hand counts are part of the gate
        assert examples == 12
        assert len(documents) == 4
        assert mean_summary == 14.0
        assert mean_document == 48.25

        code = main(["analyze", "--summaries", path, "--dataset-stats"])
        assert code == 0
        out = capsys.readouterr().out
        assert re.search(r"examples:\s+12\b", out)
        assert re.search(r"documents:\s+4\b", out)
        assert f"{mean_summary:.2f}" in out
        assert f"{mean_document:.2f}" in out
