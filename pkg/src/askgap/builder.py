"""Dataset assembly: turn documents into seq2seq pretraining instances.

Every document yields one instance in one of four modes:

  reconstruct    masked doc                      -> pseudo-summary
  ask            <ask> masked doc                -> questions
  answer         <answer> questions masked doc   -> pseudo-summary
  ask_and_answer <ask&answer> masked doc         -> questions <qsep> pseudo-summary

Reconstruct sources carry no mode token.  A per-document Bernoulli draw
decides whether the instance is plain reconstruction or the configured
question-bearing mode, so question supervision lands on a controlled share
of the data.
"""

from __future__ import annotations

import enum
import json
import re
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Iterator

from . import corpus as corpus_mod
from .corpus import DIALOGUE, Document, PROSE, RawRecord, rewrite_third_person
from .errors import (
    BackendUnavailable,
    ConfigError,
    EmptyDocument,
    FixtureMiss,
    QuestionCountMismatch,
    SkipRateExceeded,
    UnsupportedDialogue,
)
from .gsg import (
    DEFAULT_GSR,
    DEFAULT_MASK_RATE,
    GapSelection,
    MASK_TOKEN,
    PseudoSummary,
    apply_mask,
    build_pseudo_summary,
    select_gap_sentences,
)
from .qg import BackendSpec, QgBackend, QgRequest, Question, generate_question
from .seeding import stable_rng


class Mode(str, enum.Enum):
    RECONSTRUCT = "reconstruct"
    ASK = "ask"
    ANSWER = "answer"
    ASK_AND_ANSWER = "ask_and_answer"


MODE_TOKENS = {
    Mode.ASK: "<ask>",
    Mode.ANSWER: "<answer>",
    Mode.ASK_AND_ANSWER: "<ask&answer>",
}
QSEP_TOKEN = "<qsep>"

QUESTION_MODES = (Mode.ASK, Mode.ANSWER, Mode.ASK_AND_ANSWER)

DEFAULT_ASK_ANSWER_PROPORTION = 0.25
DEFAULT_INPUT_BUDGET = 512
DEFAULT_TARGET_BUDGET = 256
DEFAULT_MAX_SKIP_RATE = 0.10

# Sentinels count as one token each when budgets are enforced.
_BUDGET_TOKEN_RE = re.compile(
    r"<ask&answer>|<ask>|<answer>|<qsep>|<mask>|\w+|[^\w\s]"
)


def budget_token_count(text: str) -> int:
    """Word-token count with mode/mask sentinels counted as single tokens."""
    return len(_BUDGET_TOKEN_RE.findall(text))


def _truncate_budget_tokens(text: str, limit: int) -> str:
    """Cut text after its first `limit` budget tokens."""
    if limit <= 0:
        return ""
    count = 0
    end = 0
    for m in _BUDGET_TOKEN_RE.finditer(text):
        count += 1
        end = m.end()
        if count == limit:
            break
    return text[:end]


@dataclass(frozen=True)
class BuildConfig:
    """Knobs for one dataset build.

    ask_answer_proportion is the share of documents that get the
    question-bearing augmentation_mode; everything else is reconstruct.
    """

    gsr: float = DEFAULT_GSR
    mask_rate: float = DEFAULT_MASK_RATE
    ask_answer_proportion: float = DEFAULT_ASK_ANSWER_PROPORTION
    input_budget: int = DEFAULT_INPUT_BUDGET
    target_budget: int = DEFAULT_TARGET_BUDGET
    seed: int = 0
    backend: BackendSpec = field(default_factory=BackendSpec)
    corpus_kind: str = PROSE
    augmentation_mode: Mode = Mode.ASK_AND_ANSWER
    max_skip_rate: float = DEFAULT_MAX_SKIP_RATE

    def validate(self) -> None:
        if not 0.0 < self.gsr <= 1.0:
            raise ConfigError("gsr must be in (0, 1]")
        if not 0.0 <= self.mask_rate <= 1.0:
            raise ConfigError("mask_rate must be in [0, 1]")
        if not 0.0 <= self.ask_answer_proportion <= 1.0:
            raise ConfigError("ask_answer_proportion must be in [0, 1]")
        if self.input_budget <= 0 or self.target_budget <= 0:
            raise ConfigError("budgets must be positive")
        if self.corpus_kind not in (PROSE, DIALOGUE):
            raise ConfigError(f"unknown corpus kind {self.corpus_kind!r}")
        if self.augmentation_mode not in QUESTION_MODES:
            raise ConfigError("augmentation_mode must be a question-bearing mode")
        if not 0.0 <= self.max_skip_rate <= 1.0:
            raise ConfigError("max_skip_rate must be in [0, 1]")


@dataclass(frozen=True)
class InstanceMeta:
    selected: tuple[int, ...]
    masked: tuple[int, ...]
    kept: tuple[int, ...]
    questions: tuple[Question, ...]
    doc_truncated: bool = False
    source_truncated: bool = False
    target_truncated: bool = False

    def to_dict(self) -> dict:
        return {
            "selected": list(self.selected),
            "masked": list(self.masked),
            "kept": list(self.kept),
            "questions": [
                {"text": q.text, "source_index": q.source_index}
                for q in self.questions
            ],
            "truncated": {
                "document": self.doc_truncated,
                "source": self.source_truncated,
                "target": self.target_truncated,
            },
        }


@dataclass(frozen=True)
class PretrainInstance:
    id: str
    mode: Mode
    source: str
    target: str
    meta: InstanceMeta

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "mode": self.mode.value,
            "source": self.source,
            "target": self.target,
            "meta": self.meta.to_dict(),
        }


@dataclass(frozen=True)
class Skip:
    """A document that produced no instance, and why."""

    id: str
    mode: Mode
    reason: str


def choose_mode(config: BuildConfig, doc_id: str) -> Mode:
    """Bernoulli(ask_answer_proportion) draw keyed by (seed, doc_id).

    Success yields config.augmentation_mode, failure plain reconstruction.
    Proportions 0 and 1 are exact, not merely almost sure.
    """
    if config.ask_answer_proportion <= 0.0:
        return Mode.RECONSTRUCT
    if config.ask_answer_proportion >= 1.0:
        return config.augmentation_mode
    rng = stable_rng(config.seed, doc_id, "mode")
    if rng.random() < config.ask_answer_proportion:
        return config.augmentation_mode
    return Mode.RECONSTRUCT


def _join_questions(questions: Iterable[Question]) -> str:
    return " ".join(q.text for q in questions)


def assemble_instance(
    doc: Document,
    sel: GapSelection,
    pseudo: PseudoSummary,
    questions: tuple[Question, ...],
    mode: Mode,
) -> PretrainInstance:
    """Lay out source and target strings for the given mode.

    Question-bearing modes require exactly one question per pseudo-summary
    sentence, ordered by ascending source sentence index.
    """
    if mode in QUESTION_MODES:
        if len(questions) != len(pseudo.sentences):
            raise QuestionCountMismatch(
                f"document {doc.id}: {len(questions)} questions for "
                f"{len(pseudo.sentences)} pseudo-summary sentences"
            )
    else:
        questions = ()
    masked = apply_mask(doc, sel)
    qblock = _join_questions(questions)
    if mode is Mode.RECONSTRUCT:
        source = masked.text
        target = pseudo.text
    elif mode is Mode.ASK:
        source = f"{MODE_TOKENS[mode]} {masked.text}"
        target = qblock
    elif mode is Mode.ANSWER:
        source = f"{MODE_TOKENS[mode]} {qblock} {masked.text}"
        target = pseudo.text
    else:  # ASK_AND_ANSWER
        source = f"{MODE_TOKENS[mode]} {masked.text}"
        target = f"{qblock} {QSEP_TOKEN} {pseudo.text}"
    meta = InstanceMeta(
        selected=sel.selected,
        masked=sel.masked,
        kept=sel.kept,
        questions=questions,
        doc_truncated=doc.truncated,
        target_truncated=pseudo.truncated,
    )
    return PretrainInstance(
        id=doc.id, mode=mode, source=source, target=target, meta=meta
    )


def _source_prefix(instance: PretrainInstance) -> str:
    if instance.mode is Mode.RECONSTRUCT:
        return ""
    token = MODE_TOKENS[instance.mode]
    if instance.mode is Mode.ANSWER:
        return f"{token} {_join_questions(instance.meta.questions)} "
    return f"{token} "


def _truncate_sentences(text: str, limit: int) -> tuple[str, bool]:
    """Drop whole trailing sentences until text fits `limit` budget tokens;
    the first sentence survives even when it alone is over budget."""
    if budget_token_count(text) <= limit:
        return text, False
    try:
        spans = corpus_mod.segment_sentences(text)
    except EmptyDocument:
        return text, False
    end = spans[0].end
    total = budget_token_count(text[: spans[0].end])
    for span in spans[1:]:
        seg = budget_token_count(text[span.start : span.end])
        if total + seg > limit:
            break
        total += seg
        end = span.end
    return text[:end], True


def enforce_budgets(
    instance: PretrainInstance, config: BuildConfig
) -> PretrainInstance | Skip:
    """Trim an instance to the configured token budgets, or skip it.

    Sources lose document tokens from the tail only; the mode token and any
    prepended questions are never touched.  Targets lose whole trailing
    summary sentences; the question block is never cut, so an instance whose
    questions alone overflow is skipped, as is an answer-mode instance whose
    prepended questions exceed half the input budget.
    """
    qblock = _join_questions(instance.meta.questions)
    qtokens = budget_token_count(qblock) if qblock else 0
    if instance.mode is Mode.ANSWER and qtokens > config.input_budget / 2:
        return Skip(
            id=instance.id,
            mode=instance.mode,
            reason="questions exceed half input budget",
        )
    source = instance.source
    meta = instance.meta
    prefix = _source_prefix(instance)
    doc_part = source[len(prefix) :]
    room = config.input_budget - budget_token_count(prefix)
    if room < 1:
        return Skip(
            id=instance.id, mode=instance.mode, reason="no room for document text"
        )
    if budget_token_count(doc_part) > room:
        doc_part = _truncate_budget_tokens(doc_part, room)
        source = prefix + doc_part
        meta = replace(meta, source_truncated=True)

    target = instance.target
    if instance.mode is Mode.ASK:
        if budget_token_count(target) > config.target_budget:
            return Skip(
                id=instance.id,
                mode=instance.mode,
                reason="question block exceeds target budget",
            )
    elif instance.mode is Mode.ASK_AND_ANSWER:
        head = f"{qblock} {QSEP_TOKEN} "
        head_tokens = budget_token_count(head)
        if head_tokens >= config.target_budget:
            return Skip(
                id=instance.id,
                mode=instance.mode,
                reason="question block exceeds target budget",
            )
        marker = f" {QSEP_TOKEN} "
        pseudo_part = target.split(marker, 1)[1]
        trimmed, cut = _truncate_sentences(
            pseudo_part, config.target_budget - head_tokens
        )
        if cut:
            target = head + trimmed
            meta = replace(meta, target_truncated=True)
    else:
        trimmed, cut = _truncate_sentences(target, config.target_budget)
        if cut:
            target = trimmed
            meta = replace(meta, target_truncated=True)
    if source == instance.source and target == instance.target and meta is instance.meta:
        return instance
    return PretrainInstance(
        id=instance.id,
        mode=instance.mode,
        source=source,
        target=target,
        meta=meta,
    )


_HIST_BUCKET = 32


@dataclass
class BuildReport:
    """Aggregate counters for one build; serialized as a single JSON doc."""

    records_in: int = 0
    documents_in: int = 0
    emitted: int = 0
    skipped: int = 0
    mode_counts: dict[str, int] = field(default_factory=dict)
    skip_reasons: dict[str, int] = field(default_factory=dict)
    source_token_total: int = 0
    target_token_total: int = 0
    source_hist: dict[int, int] = field(default_factory=dict)
    target_hist: dict[int, int] = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def observe_instance(self, instance: PretrainInstance) -> None:
        self.emitted += 1
        key = instance.mode.value
        self.mode_counts[key] = self.mode_counts.get(key, 0) + 1
        s = budget_token_count(instance.source)
        t = budget_token_count(instance.target)
        self.source_token_total += s
        self.target_token_total += t
        sb = (s // _HIST_BUCKET) * _HIST_BUCKET
        tb = (t // _HIST_BUCKET) * _HIST_BUCKET
        self.source_hist[sb] = self.source_hist.get(sb, 0) + 1
        self.target_hist[tb] = self.target_hist.get(tb, 0) + 1

    def observe_skip(self, skip: Skip) -> None:
        self.skipped += 1
        self.skip_reasons[skip.reason] = self.skip_reasons.get(skip.reason, 0) + 1

    @property
    def mean_source_tokens(self) -> float:
        return self.source_token_total / self.emitted if self.emitted else 0.0

    @property
    def mean_target_tokens(self) -> float:
        return self.target_token_total / self.emitted if self.emitted else 0.0

    def to_dict(self) -> dict:
        return {
            "records_in": self.records_in,
            "documents_in": self.documents_in,
            "emitted": self.emitted,
            "skipped": self.skipped,
            "mode_counts": dict(sorted(self.mode_counts.items())),
            "skip_reasons": dict(sorted(self.skip_reasons.items())),
            "mean_source_tokens": self.mean_source_tokens,
            "mean_target_tokens": self.mean_target_tokens,
            "source_hist": {str(k): v for k, v in sorted(self.source_hist.items())},
            "target_hist": {str(k): v for k, v in sorted(self.target_hist.items())},
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False)


def _third_person_transform(doc: Document) -> Callable[[int, str], str]:
    def transform(i: int, text: str) -> str:
        assert doc.speakers is not None and doc.addressees is not None
        speaker = doc.speakers[i]
        addressee = doc.addressees[i]
        if addressee is None:
            raise UnsupportedDialogue(
                f"document {doc.id}: turn {i} has no two-party speaker pair"
            )
        prefix = f"{speaker}: "
        utterance = text[len(prefix) :] if text.startswith(prefix) else text
        return rewrite_third_person(utterance, speaker, addressee)

    return transform


def config_to_dict(config: BuildConfig) -> dict:
    return {
        "gsr": config.gsr,
        "mask_rate": config.mask_rate,
        "ask_answer_proportion": config.ask_answer_proportion,
        "input_budget": config.input_budget,
        "target_budget": config.target_budget,
        "seed": config.seed,
        "backend": config.backend.kind,
        "corpus_kind": config.corpus_kind,
        "augmentation_mode": config.augmentation_mode.value,
        "max_skip_rate": config.max_skip_rate,
    }


class DatasetBuilder:
    """Streams records through chunking, gap selection, question generation,
    and budget enforcement; reorders nothing, so output order equals input
    order regardless of worker count."""

    # skip-rate abort only kicks in after this many documents
    _ABORT_MIN_DOCS = 20

    def __init__(
        self,
        config: BuildConfig,
        backend: QgBackend | None = None,
        workers: int = 1,
    ):
        config.validate()
        self.config = config
        self.workers = max(1, workers)
        self.backend = backend
        self.report = BuildReport(config=config_to_dict(config))

    def _documents(self, records: Iterable[RawRecord]) -> Iterator[Document]:
        if self.config.corpus_kind == DIALOGUE:
            yield from corpus_mod.iter_concat_dialogues(
                self._count(records), self.config.input_budget
            )
        else:
            for record in self._count(records):
                yield from corpus_mod.chunk_document(
                    record, self.config.input_budget
                )

    def _count(self, records: Iterable[RawRecord]) -> Iterator[RawRecord]:
        for record in records:
            self.report.records_in += 1
            yield record

    def _process(self, doc: Document) -> PretrainInstance | Skip:
        config = self.config
        mode = choose_mode(config, doc.id)
        sel = select_gap_sentences(doc, config.gsr, config.seed, config.mask_rate)
        transform = (
            _third_person_transform(doc) if doc.kind == DIALOGUE else None
        )
        try:
            pseudo = build_pseudo_summary(
                doc, sel, config.target_budget, sentence_transform=transform
            )
            questions: tuple[Question, ...] = ()
            if mode in QUESTION_MODES:
                assert self.backend is not None
                qs = []
                for idx, text in zip(pseudo.sentence_indices, pseudo.sentences):
                    req = QgRequest(context=doc.text, answer_sentence=text)
                    qs.append(
                        generate_question(self.backend, req, source_index=idx)
                    )
                questions = tuple(qs)
            instance = assemble_instance(doc, sel, pseudo, questions, mode)
        except (BackendUnavailable, FixtureMiss, UnsupportedDialogue) as exc:
            return Skip(id=doc.id, mode=mode, reason=f"{type(exc).__name__}: {exc}")
        return enforce_budgets(instance, config)

    def run(
        self, records: Iterable[RawRecord]
    ) -> Iterator[PretrainInstance | Skip]:
        """Yield instances and skips in input order, updating self.report.

        Raises SkipRateExceeded once the skip rate passes the configured
        threshold (checked after a small warm-up, and again at the end).
        """
        if self.backend is None:
            from .qg import make_backend

            self.backend = make_backend(self.config.backend)
        docs = self._documents(records)
        for item in _map_ordered(self._process, docs, self.workers):
            self.report.documents_in += 1
            if isinstance(item, Skip):
                self.report.observe_skip(item)
            else:
                self.report.observe_instance(item)
            yield item
            self._check_abort(final=False)
        self._check_abort(final=True)

    def _check_abort(self, final: bool) -> None:
        done = self.report.documents_in
        if done == 0 or (not final and done < self._ABORT_MIN_DOCS):
            return
        rate = self.report.skipped / done
        if rate > self.config.max_skip_rate:
            raise SkipRateExceeded(
                f"skip rate {rate:.3f} exceeds threshold "
                f"{self.config.max_skip_rate:.3f} after {done} documents"
            )


def _map_ordered(fn, items, workers: int, window_factor: int = 4):
    """Parallel map that preserves input order with a bounded in-flight
    window, so results stream without loading everything into memory."""
    if workers <= 1:
        for item in items:
            yield fn(item)
        return
    window = workers * window_factor
    with ThreadPoolExecutor(max_workers=workers) as pool:
        pending: deque = deque()
        it = iter(items)
        for item in it:
            pending.append(pool.submit(fn, item))
            if len(pending) >= window:
                break
        for item in it:
            yield pending.popleft().result()
            pending.append(pool.submit(fn, item))
        while pending:
            yield pending.popleft().result()


def build_dataset(
    records: Iterable[RawRecord],
    config: BuildConfig,
    backend: QgBackend | None = None,
    workers: int = 1,
) -> tuple[list[PretrainInstance | Skip], BuildReport]:
    """Materialized convenience wrapper around DatasetBuilder.run."""
    builder = DatasetBuilder(config, backend=backend, workers=workers)
    items = list(builder.run(records))
    return items, builder.report


def instance_to_json(instance: PretrainInstance) -> str:
    return json.dumps(
        instance.to_dict(), sort_keys=True, ensure_ascii=False,
        separators=(",", ":"),
    )
