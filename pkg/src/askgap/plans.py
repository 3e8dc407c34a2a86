"""Control plans: compact question/keyword scaffolds extracted from
reference summaries, used to steer a summarizer at inference time.

Three strategies share one record shape:

  content_questions  one question per summary sentence, joined by spaces
  keywords           noun phrases per sentence, " | " inside a sentence and
                     " || " between sentences (empty segments are kept)
  blueprint_qa       filtered question/answer pairs, "Q? answer | Q? answer"

Blueprint pairs pass three filters: round-trip consistency (a QA model must
recover the answer from the question), rheme (the answer must add something
the question does not already say), and coverage (every sentence that had a
candidate keeps at least one pair).
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .corpus import segment_sentences, word_tokenize
from .errors import EmptyPlan
from .metrics import OverlapStats, lexical_overlap, rouge_n
from .qg import (
    BackendSpec,
    NpSpan,
    QgBackend,
    QgRequest,
    _as_backend,
    answer_question,
    extract_noun_phrases,
    generate_question,
)

CONTENT_QUESTIONS = "content_questions"
KEYWORDS = "keywords"
BLUEPRINT = "blueprint_qa"
STRATEGIES = (CONTENT_QUESTIONS, KEYWORDS, BLUEPRINT)

KEYWORD_SEP = " | "
SENTENCE_SEP = " || "
PAIR_SEP = " | "

# round-trip grades, best first
GRADE_EXACT = 2
GRADE_NORMALIZED = 1
GRADE_NONE = 0

_ARTICLES = ("a ", "an ", "the ")


@dataclass(frozen=True)
class QaPair:
    question: str
    answer: str
    sentence_index: int
    round_trip_ok: bool = False
    round_trip_grade: int = GRADE_NONE


@dataclass(frozen=True)
class PlanUnit:
    sentence_index: int
    question: str | None = None
    answer: str | None = None
    keywords: tuple[str, ...] | None = None


@dataclass(frozen=True)
class Plan:
    strategy: str
    units: tuple[PlanUnit, ...]
    text: str


def normalize_answer(text: str) -> str:
    """Lowercase, trim, strip one leading article and terminal punctuation."""
    out = text.strip().lower()
    for article in _ARTICLES:
        if out.startswith(article):
            out = out[len(article) :]
            break
    return out.rstrip(string.punctuation + " ")


def _sentences(summary: str) -> list[str]:
    return [summary[s.start : s.end] for s in segment_sentences(summary)]


def extract_content_questions(
    summary: str, backend: QgBackend | BackendSpec
) -> Plan:
    """One question per summary sentence, with the whole summary as context."""
    backend = _as_backend(backend)
    units = []
    questions = []
    for i, sentence in enumerate(_sentences(summary)):
        q = generate_question(
            backend, QgRequest(context=summary, answer_sentence=sentence), i
        )
        questions.append(q.text)
        units.append(PlanUnit(sentence_index=i, question=q.text))
    return Plan(
        strategy=CONTENT_QUESTIONS, units=tuple(units), text=" ".join(questions)
    )


def extract_keywords_plan(summary: str, backend: QgBackend | BackendSpec) -> Plan:
    """Noun phrases per sentence; a sentence with none keeps its empty
    segment so segment count always equals sentence count."""
    backend = _as_backend(backend)
    units = []
    segments = []
    for i, sentence in enumerate(_sentences(summary)):
        spans = extract_noun_phrases(backend, sentence)
        keywords = tuple(s.text for s in spans)
        units.append(PlanUnit(sentence_index=i, keywords=keywords))
        segments.append(KEYWORD_SEP.join(keywords))
    return Plan(strategy=KEYWORDS, units=tuple(units), text=SENTENCE_SEP.join(segments))


def _blueprint_candidates(
    summary: str, backend: QgBackend
) -> list[QaPair]:
    pairs: list[QaPair] = []
    for i, sentence in enumerate(_sentences(summary)):
        for span in extract_noun_phrases(backend, sentence):
            q = generate_question(
                backend, QgRequest(context=summary, answer_sentence=span.text), i
            )
            pairs.append(QaPair(question=q.text, answer=span.text, sentence_index=i))
    return pairs


def filter_round_trip(
    pairs: Sequence[QaPair], backend: QgBackend | BackendSpec, context: str
) -> list[QaPair]:
    """Keep pairs whose answer a QA backend recovers from the question.

    Every returned pair carries its grade: exact string match beats a match
    after normalization (case, leading article, terminal punctuation).
    """
    return [p for p in grade_pairs(pairs, backend, context) if p.round_trip_ok]


def _content_tokens(text: str) -> set[str]:
    return {
        t
        for t in word_tokenize(text)
        if any(ch.isalnum() for ch in t) and t not in ("a", "an", "the")
    }


def filter_rheme(pairs: Sequence[QaPair]) -> list[QaPair]:
    """Drop pairs whose answer adds nothing: every content token of the
    answer already appears in the question."""
    kept = []
    for pair in pairs:
        answer_tokens = _content_tokens(pair.answer)
        question_tokens = set(word_tokenize(pair.question))
        if answer_tokens and not answer_tokens <= question_tokens:
            kept.append(pair)
    return kept


def grade_pairs(
    pairs: Sequence[QaPair], backend: QgBackend | BackendSpec, context: str
) -> list[QaPair]:
    """Annotate every pair with its round-trip grade without filtering."""
    backend = _as_backend(backend)
    graded = []
    for pair in pairs:
        recovered = answer_question(backend, pair.question, context)
        if recovered.strip() == pair.answer.strip():
            grade = GRADE_EXACT
        elif normalize_answer(recovered) == normalize_answer(pair.answer):
            grade = GRADE_NORMALIZED
        else:
            grade = GRADE_NONE
        graded.append(
            QaPair(
                question=pair.question,
                answer=pair.answer,
                sentence_index=pair.sentence_index,
                round_trip_ok=grade != GRADE_NONE,
                round_trip_grade=grade,
            )
        )
    return graded


def filter_coverage(
    kept: Sequence[QaPair], candidates: Sequence[QaPair]
) -> list[QaPair]:
    """Restore one pair for every sentence that lost all of its candidates.

    The restored pair is the candidate with the best round-trip grade
    (exact > normalized > none); grade ties go to the longest answer, then
    to candidate order.  Coverage never removes pairs, so it is idempotent
    and the result is ordered by (sentence, candidate order).
    """
    seen_sentences = {pair.sentence_index for pair in kept}
    restored: list[QaPair] = list(kept)
    by_sentence: dict[int, list[QaPair]] = {}
    for pair in candidates:
        by_sentence.setdefault(pair.sentence_index, []).append(pair)
    for sentence_index, group in by_sentence.items():
        if sentence_index in seen_sentences:
            continue
        best = max(
            range(len(group)),
            key=lambda i: (
                group[i].round_trip_grade,
                len(word_tokenize(group[i].answer)),
                -i,
            ),
        )
        restored.append(group[best])

    def cand_order(pair: QaPair) -> int:
        for i, c in enumerate(candidates):
            if (
                c.sentence_index == pair.sentence_index
                and c.question == pair.question
                and c.answer == pair.answer
            ):
                return i
        return len(candidates)

    restored.sort(key=lambda p: (p.sentence_index, cand_order(p)))
    return restored


def extract_blueprint(summary: str, backend: QgBackend | BackendSpec) -> Plan:
    """Question/answer pairs per noun phrase, passed through the round-trip,
    rheme, and coverage filters.  Raises EmptyPlan when nothing survives."""
    backend = _as_backend(backend)
    candidates = grade_pairs(_blueprint_candidates(summary, backend), backend, summary)
    surviving = [p for p in candidates if p.round_trip_ok]
    surviving = filter_rheme(surviving)
    final = filter_coverage(surviving, candidates)
    if not final:
        raise EmptyPlan("all blueprint pairs were filtered out")
    units = tuple(
        PlanUnit(sentence_index=p.sentence_index, question=p.question, answer=p.answer)
        for p in final
    )
    text = PAIR_SEP.join(f"{p.question} {p.answer}" for p in final)
    return Plan(strategy=BLUEPRINT, units=units, text=text)


def extract_plan(
    summary: str, strategy: str, backend: QgBackend | BackendSpec
) -> Plan:
    if strategy == CONTENT_QUESTIONS:
        return extract_content_questions(summary, backend)
    if strategy == KEYWORDS:
        return extract_keywords_plan(summary, backend)
    if strategy == BLUEPRINT:
        return extract_blueprint(summary, backend)
    raise ValueError(f"unknown strategy {strategy!r}")


# --- serialization ---------------------------------------------------------


def plan_to_record(plan: Plan, doc_id: str, query_id: str) -> dict:
    units = []
    for u in plan.units:
        entry: dict = {"sentence_index": u.sentence_index}
        if u.question is not None:
            entry["question"] = u.question
        if u.answer is not None:
            entry["answer"] = u.answer
        if u.keywords is not None:
            entry["keywords"] = list(u.keywords)
        units.append(entry)
    return {
        "doc_id": doc_id,
        "query_id": query_id,
        "strategy": plan.strategy,
        "plan_text": plan.text,
        "units": units,
    }


def plan_from_record(record: Mapping) -> tuple[Plan, str, str]:
    units = tuple(
        PlanUnit(
            sentence_index=u["sentence_index"],
            question=u.get("question"),
            answer=u.get("answer"),
            keywords=tuple(u["keywords"]) if "keywords" in u else None,
        )
        for u in record["units"]
    )
    plan = Plan(
        strategy=record["strategy"], units=units, text=record["plan_text"]
    )
    return plan, record["doc_id"], record["query_id"]


def parse_plan_text(strategy: str, text: str) -> Plan:
    """Rebuild a plan from its display text.

    Positional for content questions (one per sentence) and keywords (one
    segment per sentence).  Blueprint text is flat, so sentence indices are
    not recoverable; round-trip blueprint plans through their JSON records.
    """
    if strategy == CONTENT_QUESTIONS:
        questions = [q + "?" for q in text.split("? ") if q]
        if questions and text.endswith("?"):
            questions[-1] = questions[-1].rstrip("?") + "?"
        units = tuple(
            PlanUnit(sentence_index=i, question=q) for i, q in enumerate(questions)
        )
        return Plan(strategy=strategy, units=units, text=text)
    if strategy == KEYWORDS:
        segments = text.split(SENTENCE_SEP)
        units = tuple(
            PlanUnit(
                sentence_index=i,
                keywords=tuple(k for k in seg.split(KEYWORD_SEP) if k)
                if seg
                else (),
            )
            for i, seg in enumerate(segments)
        )
        return Plan(strategy=strategy, units=units, text=text)
    raise ValueError(f"cannot parse plan text for strategy {strategy!r}")


# --- analysis ----------------------------------------------------------------


@dataclass(frozen=True)
class StrategyReport:
    """Aggregate statistics for one strategy across a plan file."""

    strategy: str
    plan_count: int
    stats: OverlapStats
    summary_rouge1: float

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "plan_count": self.plan_count,
            "length_ratio": self.stats.length_ratio,
            "summary_rouge1_f1": self.summary_rouge1,
            "mean_cross_overlap": self.stats.mean_overlap,
            "max_cross_overlap": self.stats.max_overlap,
        }


def analyze_plans(
    plans: Iterable[tuple[str, str, Plan]],
    summaries: Mapping[tuple[str, str], str],
) -> dict[str, StrategyReport]:
    """Per-strategy statistics over (doc_id, query_id, plan) triples.

    length_ratio averages plan words / summary words; summary_rouge1
    averages unigram F1 between plan and its summary; cross-query overlap
    is the lexical overlap between plans of the same strategy that share a
    document (mean and max are None when no document has two plans).
    """
    by_strategy: dict[str, list[tuple[str, str, Plan]]] = {}
    for doc_id, query_id, plan in plans:
        if (doc_id, query_id) not in summaries:
            raise KeyError(f"no summary for plan ({doc_id!r}, {query_id!r})")
        by_strategy.setdefault(plan.strategy, []).append((doc_id, query_id, plan))
    out: dict[str, StrategyReport] = {}
    for strategy, triples in sorted(by_strategy.items()):
        ratios = []
        rouges = []
        by_doc: dict[str, list[list[str]]] = {}
        for doc_id, query_id, plan in triples:
            plan_tokens = word_tokenize(plan.text)
            summary_tokens = word_tokenize(summaries[(doc_id, query_id)])
            if summary_tokens:
                ratios.append(len(plan_tokens) / len(summary_tokens))
            rouges.append(rouge_n(plan_tokens, summary_tokens, 1).f1)
            by_doc.setdefault(doc_id, []).append(plan_tokens)
        overlaps = []
        for doc_plans in by_doc.values():
            for i in range(len(doc_plans)):
                for j in range(i + 1, len(doc_plans)):
                    overlaps.append(lexical_overlap(doc_plans[i], doc_plans[j]))
        stats = OverlapStats(
            mean_overlap=sum(overlaps) / len(overlaps) if overlaps else None,
            max_overlap=max(overlaps) if overlaps else None,
            length_ratio=sum(ratios) / len(ratios) if ratios else 0.0,
        )
        out[strategy] = StrategyReport(
            strategy=strategy,
            plan_count=len(triples),
            stats=stats,
            summary_rouge1=sum(rouges) / len(rouges) if rouges else 0.0,
        )
    return out


def read_plan_file(path: str) -> list[tuple[str, str, Plan]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                plan, doc_id, query_id = plan_from_record(json.loads(line))
            except (ValueError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad plan record: {exc}") from exc
            out.append((doc_id, query_id, plan))
    return out
