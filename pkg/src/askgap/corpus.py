"""Corpus ingestion: tokenization, sentence segmentation, chunking, dialogues.

Raw records arrive as JSON lines with either prose text or speaker turns.
Everything downstream works on Document objects: a text plus non-overlapping
sentence spans whose offsets index into that text.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator

from .errors import EmptyDocument, UnsupportedDialogue

PROSE = "prose"
DIALOGUE = "dialogue"

# Words whose trailing period does not end a sentence.
ABBREVIATIONS = frozenset(
    {"mr", "mrs", "dr", "prof", "st", "vs", "etc", "e.g", "i.e"}
)

_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)
_TERMINALS = ".!?"
_QUOTES = "\"'“”‘’"
_CLOSERS = "\"'”’)]"


def word_tokenize(text: str) -> list[str]:
    """Lowercased word tokens; each punctuation character is its own token."""
    return _TOKEN_RE.findall(text.lower())


def token_spans(text: str) -> list[tuple[str, int, int]]:
    """(token, start, end) triples; offsets index into the original text."""
    return [(m.group().lower(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


@dataclass(frozen=True)
class SentenceSpan:
    start: int
    end: int
    token_count: int


@dataclass(frozen=True)
class Turn:
    speaker: str
    text: str


@dataclass(frozen=True)
class RawRecord:
    """One corpus line: prose text or dialogue turns, never both."""

    id: str
    kind: str
    text: str | None = None
    turns: tuple[Turn, ...] | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("record id must be non-empty")
        if self.kind == PROSE:
            if self.text is None or self.turns is not None:
                raise ValueError(f"prose record {self.id} must carry text only")
        elif self.kind == DIALOGUE:
            if self.turns is None or self.text is not None:
                raise ValueError(f"dialogue record {self.id} must carry turns only")
        else:
            raise ValueError(f"record {self.id}: unknown kind {self.kind!r}")


@dataclass(frozen=True)
class Document:
    """A chunked unit of work: text plus sentence spans into that text.

    For dialogue documents, each span covers one rendered "Speaker: utterance"
    line; speakers[i] is the speaker of span i and addressees[i] the other
    party of the source dialogue (None when that dialogue did not have
    exactly two distinct speakers).
    """

    id: str
    text: str
    sentences: tuple[SentenceSpan, ...]
    origin: str
    kind: str = PROSE
    truncated: bool = False
    speakers: tuple[str, ...] | None = None
    addressees: tuple[str | None, ...] | None = None

    def sentence_text(self, i: int) -> str:
        span = self.sentences[i]
        return self.text[span.start : span.end]


def parse_record(obj: dict) -> RawRecord:
    """Build a RawRecord from a decoded corpus JSON object."""
    kind = obj.get("kind", PROSE)
    if kind == DIALOGUE:
        turns = tuple(Turn(t["speaker"], t["text"]) for t in obj.get("turns", ()))
        return RawRecord(id=str(obj["id"]), kind=kind, turns=turns)
    return RawRecord(id=str(obj["id"]), kind=kind, text=obj["text"])


def read_corpus(path: str) -> Iterator[RawRecord]:
    """Stream records from a JSONL corpus file; malformed lines report
    their line number."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield parse_record(json.loads(line))
            except (ValueError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad corpus record: {exc}") from exc


def _preceding_word(text: str, punct: int) -> str:
    k = punct
    while k > 0 and (text[k - 1].isalpha() or text[k - 1] == "."):
        k -= 1
    return text[k:punct].lower()


def _is_boundary(text: str, punct: int, after: int) -> bool:
    # Abbreviations swallow their period.
    if text[punct] == "." and _preceding_word(text, punct) in ABBREVIATIONS:
        return False
    if after >= len(text):
        return True
    if not text[after].isspace():
        return False
    k = after
    while k < len(text) and text[k].isspace():
        k += 1
    if k >= len(text):
        return True
    nxt = text[k]
    return nxt.isupper() or nxt in _QUOTES


def _make_span(text: str, start: int, end: int) -> SentenceSpan:
    return SentenceSpan(start, end, len(word_tokenize(text[start:end])))


def segment_sentences(text: str) -> list[SentenceSpan]:
    """Rule-based sentence segmentation.

    A boundary is sentence-final punctuation (. ! ?), plus any closing
    quotes or brackets, followed by whitespace and an uppercase letter or
    quote.  Periods after stop-listed abbreviations never end a sentence.
    Text with no terminal punctuation yields a single span.  Spans cover
    every non-whitespace character and never overlap.
    """
    if not text or not text.strip():
        raise EmptyDocument("text is empty or whitespace-only")
    spans: list[SentenceSpan] = []
    n = len(text)
    i = 0
    while i < n and text[i].isspace():
        i += 1
    start = i
    while i < n:
        if text[i] in _TERMINALS:
            j = i + 1
            while j < n and text[j] in _TERMINALS:
                j += 1
            while j < n and text[j] in _CLOSERS:
                j += 1
            if _is_boundary(text, i, j):
                spans.append(_make_span(text, start, j))
                i = j
                while i < n and text[i].isspace():
                    i += 1
                start = i
                continue
            i = j
            continue
        i += 1
    if start < n:
        end = n
        while end > start and text[end - 1].isspace():
            end -= 1
        if end > start:
            spans.append(_make_span(text, start, end))
    return spans


def _shift(spans: list[SentenceSpan], offset: int) -> tuple[SentenceSpan, ...]:
    return tuple(
        SentenceSpan(s.start - offset, s.end - offset, s.token_count) for s in spans
    )


def _truncate_at_token(text: str, limit: int) -> str:
    """Cut text after its first `limit` word tokens."""
    toks = token_spans(text)
    if len(toks) <= limit:
        return text
    return text[: toks[limit - 1][2]]


def chunk_document(record: RawRecord, input_budget: int) -> list[Document]:
    """Split a prose record into documents of at most input_budget word
    tokens, packing whole sentences greedily in order.

    A single sentence longer than the budget becomes its own document, hard
    truncated at a token boundary and flagged.
    """
    if record.kind != PROSE:
        raise ValueError(f"record {record.id} is not prose")
    if input_budget <= 0:
        raise ValueError("input_budget must be positive")
    assert record.text is not None
    spans = segment_sentences(record.text)
    docs: list[Document] = []

    def finish(group: list[SentenceSpan]) -> None:
        k = len(docs)
        chunk = record.text[group[0].start : group[-1].end]
        docs.append(
            Document(
                id=f"{record.id}#{k}",
                text=chunk,
                sentences=_shift(group, group[0].start),
                origin=f"{record.id}[{k}]",
                kind=PROSE,
            )
        )

    group: list[SentenceSpan] = []
    total = 0
    for span in spans:
        if group and total + span.token_count > input_budget:
            finish(group)
            group, total = [], 0
        if not group and span.token_count > input_budget:
            k = len(docs)
            cut = _truncate_at_token(record.text[span.start : span.end], input_budget)
            docs.append(
                Document(
                    id=f"{record.id}#{k}",
                    text=cut,
                    sentences=(SentenceSpan(0, len(cut), input_budget),),
                    origin=f"{record.id}[{k}]",
                    kind=PROSE,
                    truncated=True,
                )
            )
            continue
        group.append(span)
        total += span.token_count
    if group:
        finish(group)
    return docs


def render_turn(turn: Turn) -> str:
    return f"{turn.speaker}: {turn.text}"


def _dialogue_pair(record: RawRecord) -> tuple[str, str] | None:
    assert record.turns is not None
    names = []
    for t in record.turns:
        if t.speaker not in names:
            names.append(t.speaker)
    if len(names) == 2:
        return (names[0], names[1])
    return None


def _dialogue_lines(record: RawRecord) -> list[tuple[str, str | None, str]]:
    """(speaker, addressee, rendered line) per turn."""
    pair = _dialogue_pair(record)
    out = []
    assert record.turns is not None
    for t in record.turns:
        other = None
        if pair is not None:
            other = pair[1] if t.speaker == pair[0] else pair[0]
        out.append((t.speaker, other, render_turn(t)))
    return out


def _dialogue_document(
    lines: list[tuple[str, str | None, str]],
    doc_id: str,
    origin: str,
    truncated: bool,
) -> Document:
    text_parts: list[str] = []
    spans: list[SentenceSpan] = []
    speakers: list[str] = []
    addressees: list[str | None] = []
    pos = 0
    for i, (speaker, other, line) in enumerate(lines):
        if i > 0:
            pos += 1  # newline separator
        spans.append(SentenceSpan(pos, pos + len(line), len(word_tokenize(line))))
        speakers.append(speaker)
        addressees.append(other)
        text_parts.append(line)
        pos += len(line)
    return Document(
        id=doc_id,
        text="\n".join(text_parts),
        sentences=tuple(spans),
        origin=origin,
        kind=DIALOGUE,
        truncated=truncated,
        speakers=tuple(speakers),
        addressees=tuple(addressees),
    )


def iter_concat_dialogues(
    records: Iterable[RawRecord], input_budget: int
) -> Iterator[Document]:
    """Pack whole dialogues into documents of at most input_budget word
    tokens, rendered one "Speaker: utterance" line per turn.

    A dialogue is never split across documents; one that alone exceeds the
    budget is truncated at a turn boundary and flagged.
    """
    if input_budget <= 0:
        raise ValueError("input_budget must be positive")
    group_lines: list[tuple[str, str | None, str]] = []
    group_ids: list[str] = []
    group_tokens = 0
    emitted = 0

    def finish(truncated: bool = False) -> Document:
        nonlocal emitted
        doc = _dialogue_document(
            group_lines,
            doc_id=f"{group_ids[0]}#0",
            origin=",".join(group_ids),
            truncated=truncated,
        )
        emitted += 1
        return doc

    for record in records:
        if record.kind != DIALOGUE:
            raise ValueError(f"record {record.id} is not a dialogue")
        if not record.turns:
            raise EmptyDocument(f"dialogue {record.id} has no turns")
        lines = _dialogue_lines(record)
        rec_tokens = sum(len(word_tokenize(line)) for _, _, line in lines)
        if group_lines and group_tokens + rec_tokens > input_budget:
            yield finish()
            group_lines, group_ids, group_tokens = [], [], 0
        if not group_lines and rec_tokens > input_budget:
            kept: list[tuple[str, str | None, str]] = []
            total = 0
            for item in lines:
                t = len(word_tokenize(item[2]))
                if kept and total + t > input_budget:
                    break
                kept.append(item)
                total += t
            group_lines, group_ids = kept, [record.id]
            yield finish(truncated=True)
            group_lines, group_ids, group_tokens = [], [], 0
            continue
        group_lines.extend(lines)
        group_ids.append(record.id)
        group_tokens += rec_tokens
    if group_lines:
        yield finish()


def concat_dialogues(
    records: Iterable[RawRecord], input_budget: int
) -> list[Document]:
    return list(iter_concat_dialogues(records, input_budget))


# Rule-based third person rewrite.  First/second person pronouns are mapped
# onto the speaker (A) and addressee (B) by table; no verbs are re-inflected.
_PRONOUN_RE = re.compile(r"\b(i|me|my|mine|we|us|you|your)\b", re.IGNORECASE)


def rewrite_third_person(text: str, speaker: str, addressee: str) -> str:
    """Replace first/second person pronouns with participant names.

    I/me -> speaker; my/mine -> speaker's; we/us -> "speaker and addressee";
    you -> addressee; your -> addressee's.  Matching is case-insensitive on
    word boundaries; everything else is left untouched.
    """

    def sub(match: re.Match[str]) -> str:
        p = match.group().lower()
        if p in ("i", "me"):
            return speaker
        if p in ("my", "mine"):
            return speaker + "'s"
        if p in ("we", "us"):
            return f"{speaker} and {addressee}"
        if p == "you":
            return addressee
        return addressee + "'s"  # your

    return _PRONOUN_RE.sub(sub, text)


@dataclass(frozen=True)
class ThirdPersonRewriter:
    speakers: tuple[str, str]

    def rewrite(self, speaker: str, text: str) -> str:
        if speaker not in self.speakers:
            raise ValueError(f"unknown speaker {speaker!r}")
        other = self.speakers[1] if speaker == self.speakers[0] else self.speakers[0]
        return rewrite_third_person(text, speaker, other)

    def rewrite_turn(self, turn: Turn) -> str:
        return self.rewrite(turn.speaker, turn.text)


def to_third_person(record: RawRecord) -> ThirdPersonRewriter:
    """Per-turn rewrite for a two-party dialogue record.

    The rewrite is applied only when rendering pseudo-summary or question
    text; the document input keeps the original dialogue format.
    """
    if record.kind != DIALOGUE:
        raise ValueError(f"record {record.id} is not a dialogue")
    pair = _dialogue_pair(record)
    if pair is None:
        raise UnsupportedDialogue(
            f"dialogue {record.id} does not have exactly two distinct speakers"
        )
    return ThirdPersonRewriter(speakers=pair)


def document_from_sentences(
    doc_id: str, sentences: Iterable[str], origin: str | None = None
) -> Document:
    """Build a prose Document directly from sentence strings (joined by a
    single space).  Convenient for tests and synthetic corpora."""
    spans: list[SentenceSpan] = []
    parts: list[str] = []
    pos = 0
    for i, sent in enumerate(sentences):
        if i > 0:
            pos += 1
        spans.append(SentenceSpan(pos, pos + len(sent), len(word_tokenize(sent))))
        parts.append(sent)
        pos += len(sent)
    if not spans:
        raise EmptyDocument(f"document {doc_id} has no sentences")
    return Document(
        id=doc_id,
        text=" ".join(parts),
        sentences=tuple(spans),
        origin=origin or doc_id,
        kind=PROSE,
    )
