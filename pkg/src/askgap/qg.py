"""Question backends: a deterministic heuristic, recorded fixtures, and a
remote HTTP service speaking a small JSON protocol.

All three expose the same three operations:

  generate_question(context, answer_sentence) -> question text
  answer_question(question, context)          -> answer span text
  extract_noun_phrases(sentence)              -> char-offset spans

Backends are referentially transparent per request within a run; remote
responses are memoized in an on-disk cache keyed by a request hash, so a
re-run touches the network only for unseen requests.

Wire protocol (remote backends):

  POST /v1/generate     {"context": str, "answer": str}   -> {"question": str}
  POST /v1/answer       {"context": str, "question": str} -> {"answer": str}
  POST /v1/nounphrases  {"sentence": str}
      -> {"spans": [{"start": int, "end": int, "text": str}]}

4xx responses are never retried; 5xx and transport errors retry with
exponential backoff before giving up with BackendUnavailable.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from typing import Callable

import requests

from .corpus import token_spans, word_tokenize
from .errors import BackendUnavailable, FixtureMiss

logger = logging.getLogger(__name__)

HEURISTIC = "heuristic"
RECORDED = "recorded"
REMOTE = "remote"

ENDPOINT_ENV_VAR = "ASKGAP_ENDPOINT"


@dataclass(frozen=True)
class QgRequest:
    """One question-generation request: the sentence to be asked about and
    the full document or summary it came from."""

    context: str
    answer_sentence: str

    def __post_init__(self) -> None:
        if not self.answer_sentence.strip():
            raise ValueError("answer_sentence must be non-empty")
        if not self.context.strip():
            raise ValueError("context must be non-empty")


@dataclass(frozen=True)
class Question:
    text: str
    source_index: int = 0


@dataclass(frozen=True)
class NpSpan:
    start: int
    end: int
    text: str


@dataclass(frozen=True)
class BackendSpec:
    """How to reach a question backend.

    kind is one of heuristic / recorded / remote.  Recorded backends read
    fixture_path; remote ones POST to endpoint with the given timeout,
    retry budget, and in-flight bound.
    """

    kind: str = HEURISTIC
    endpoint: str | None = None
    fixture_path: str | None = None
    timeout: float = 10.0
    max_retries: int = 3
    backoff: float = 0.25
    max_inflight: int = 8

    @classmethod
    def parse(cls, text: str, env: dict | None = None) -> "BackendSpec":
        """Parse a CLI backend argument.

        Accepts "heuristic", "recorded:PATH", and HTTP(S) URLs.  The
        ASKGAP_ENDPOINT environment variable overrides the URL for remote
        backends (and turns "heuristic" left at its default into remote
        only when the flag explicitly asks for remote).
        """
        env = dict(os.environ if env is None else env)
        override = env.get(ENDPOINT_ENV_VAR)
        if text == HEURISTIC:
            return cls(kind=HEURISTIC)
        if text.startswith("recorded:"):
            return cls(kind=RECORDED, fixture_path=text[len("recorded:") :])
        if text.startswith("remote:"):
            url = override or text[len("remote:") :]
            return cls(kind=REMOTE, endpoint=url)
        if text.startswith("http://") or text.startswith("https://"):
            return cls(kind=REMOTE, endpoint=override or text)
        raise ValueError(f"unrecognized backend {text!r}")


def _normalize_question(text: str) -> str:
    """Trim, collapse newlines, and guarantee exactly one trailing '?'."""
    cleaned = " ".join(text.split())
    cleaned = cleaned.rstrip("?").rstrip()
    if not cleaned:
        cleaned = "What"
    return cleaned + "?"


# --- heuristic backend -------------------------------------------------

_AUX_VERBS = frozenset(
    {
        "is", "are", "was", "were", "am", "be", "been", "being",
        "has", "have", "had", "do", "does", "did",
        "will", "would", "shall", "should", "can", "could", "may",
        "might", "must",
    }
)

_DETERMINERS = frozenset(
    {
        "a", "an", "the", "this", "that", "these", "those",
        "his", "her", "its", "their", "my", "your", "our",
    }
)

_PRONOUN_DETS = frozenset({"his", "her", "its", "their", "my", "your", "our"})

# Tokens that never start a noun phrase run on their own.
_NP_STOP_STARTERS = _DETERMINERS | frozenset(
    {
        "in", "on", "at", "by", "for", "with", "from", "to", "of",
        "and", "or", "but", "if", "when", "while", "as", "after", "before",
    }
)

_MAX_SUBJECT_TOKENS = 8
_MAX_NP_TOKENS = 6
_MAX_ANSWER_TOKENS = 8


def _is_verbish(token: str, prev: str | None) -> bool:
    low = token.lower()
    if low in _AUX_VERBS:
        return True
    if low.endswith("ed") and len(low) > 2:
        return True
    # plural/3rd-person -s, unless licensed by a possessive determiner
    if low.endswith("s") and len(low) > 3 and not token[0].isupper():
        if prev is not None and prev.lower() in _PRONOUN_DETS:
            return False
        return True
    return False


class HeuristicBackend:
    """Deterministic template backend; makes no network calls.

    Question quality is intentionally low: the point is a cheap, fully
    reproducible stand-in with the same interface as a real model.
    """

    kind = HEURISTIC

    def generate_question(self, req: QgRequest) -> str:
        if req.answer_sentence not in req.context:
            logger.debug("answer sentence not found verbatim in context")
        toks = [
            (text, start, end)
            for text, start, end in token_spans(req.answer_sentence)
            if any(ch.isalnum() for ch in text) or text == "'"
        ]
        if not toks:
            toks = token_spans(req.answer_sentence)
        originals = [req.answer_sentence[s:e] for _, s, e in toks]
        subject_end = 0
        prev: str | None = None
        for i, (text, _start, _end) in enumerate(toks):
            if i >= _MAX_SUBJECT_TOKENS or _is_verbish(originals[i], prev):
                break
            subject_end = i + 1
            prev = text
        if subject_end == 0:
            subject_end = 1
        subject = req.answer_sentence[toks[0][1] : toks[subject_end - 1][2]]
        follower = toks[subject_end][0] if subject_end < len(toks) else ""
        if follower.endswith("ed") and len(follower) > 2:
            return _normalize_question(f"What did {subject} do?")
        return _normalize_question(f"What is true of {subject}?")

    def answer_question(self, question: str, context: str) -> str:
        """Longest contiguous context span (capped at 8 word tokens) that
        maximizes unigram overlap with the question."""
        qvocab = set(word_tokenize(question))
        ctoks = token_spans(context)
        if not ctoks:
            return context.strip()
        best_overlap = -1
        best_len = 0
        best_slice = (ctoks[0][1], ctoks[0][2])
        n = len(ctoks)
        for i in range(n):
            seen: list[str] = []
            overlap = 0
            for j in range(i, min(n, i + _MAX_ANSWER_TOKENS)):
                tok = ctoks[j][0]
                seen.append(tok)
                if tok in qvocab:
                    overlap += 1
                length = j - i + 1
                if overlap > best_overlap or (
                    overlap == best_overlap and length > best_len
                ):
                    best_overlap = overlap
                    best_len = length
                    best_slice = (ctoks[i][1], ctoks[j][2])
        return context[best_slice[0] : best_slice[1]]

    def extract_noun_phrases(self, sentence: str) -> list[NpSpan]:
        """Coarse noun phrase spans: capitalized runs plus determiner-led
        runs that stop before a verb-suffix token."""
        toks = token_spans(sentence)
        words = [
            (text, start, end)
            for text, start, end in toks
            if any(ch.isalnum() for ch in text)
        ]
        originals = [sentence[s:e] for _, s, e in words]
        candidates: list[tuple[int, int, int, int]] = []  # tok start, tok end
        n = len(words)
        i = 0
        while i < n:
            low = words[i][0]
            orig = originals[i]
            if low in _DETERMINERS:
                j = i + 1
                prev = low
                while (
                    j < n
                    and j - i < _MAX_NP_TOKENS
                    and words[j][0] not in _DETERMINERS
                    and not _is_verbish(originals[j], prev)
                ):
                    prev = words[j][0]
                    j += 1
                if j > i + 1:
                    candidates.append((i, j, words[i][1], words[j - 1][2]))
                    i = j
                    continue
            elif orig[0].isupper() and low not in _NP_STOP_STARTERS:
                j = i
                while (
                    j < n
                    and j - i < _MAX_NP_TOKENS
                    and originals[j][0].isupper()
                    and words[j][0] not in _NP_STOP_STARTERS
                ):
                    j += 1
                candidates.append((i, j, words[i][1], words[j - 1][2]))
                i = j
                continue
            i += 1
        spans: list[NpSpan] = []
        last_end = -1
        for _ti, _tj, cstart, cend in candidates:
            if cstart <= last_end:
                continue
            spans.append(NpSpan(cstart, cend, sentence[cstart:cend]))
            last_end = cend - 1
        return spans


# --- recorded backend ---------------------------------------------------


def context_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


class RecordedBackend:
    """Replays responses captured from a real service.

    The fixture file is JSON with three sections; entries may carry either
    the full "context" string or a precomputed "context_hash":

      {"generate":    [{"context": ..., "answer": ..., "question": ...}],
       "answer":      [{"context": ..., "question": ..., "answer": ...}],
       "nounphrases": [{"sentence": ..., "spans": [{"start","end","text"}]}]}

    Any request without a fixture entry raises FixtureMiss naming the key.
    """

    kind = RECORDED

    def __init__(self, fixture_path: str):
        self.fixture_path = fixture_path
        with open(fixture_path, encoding="utf-8") as fh:
            data = json.load(fh)
        self._generate: dict[tuple[str, str], str] = {}
        self._answer: dict[tuple[str, str], str] = {}
        self._nps: dict[str, list[NpSpan]] = {}
        for entry in data.get("generate", ()):
            key = (self._ctx_key(entry), entry["answer"])
            self._generate[key] = entry["question"]
        for entry in data.get("answer", ()):
            key = (self._ctx_key(entry), entry["question"])
            self._answer[key] = entry["answer"]
        for entry in data.get("nounphrases", ()):
            self._nps[entry["sentence"]] = [
                NpSpan(s["start"], s["end"], s["text"]) for s in entry["spans"]
            ]

    @staticmethod
    def _ctx_key(entry: dict) -> str:
        if "context_hash" in entry:
            return entry["context_hash"]
        return context_hash(entry["context"])

    def generate_question(self, req: QgRequest) -> str:
        key = (context_hash(req.context), req.answer_sentence)
        try:
            return _normalize_question(self._generate[key])
        except KeyError:
            raise FixtureMiss(
                f"no recorded question for context {key[0]} / "
                f"sentence {req.answer_sentence!r}"
            ) from None

    def answer_question(self, question: str, context: str) -> str:
        key = (context_hash(context), question)
        try:
            return self._answer[key]
        except KeyError:
            raise FixtureMiss(
                f"no recorded answer for context {key[0]} / question {question!r}"
            ) from None

    def extract_noun_phrases(self, sentence: str) -> list[NpSpan]:
        try:
            return list(self._nps[sentence])
        except KeyError:
            raise FixtureMiss(f"no recorded noun phrases for {sentence!r}") from None


# --- response cache ------------------------------------------------------


class ResponseCache:
    """Newline-delimited JSON memo of remote responses.

    Each line is {"request_hash": ..., "response": ...}; the file lives
    beside the output dataset so re-runs replay past responses instead of
    hitting the network.  Thread safe; inserts are appended and flushed.
    """

    def __init__(self, path: str | None):
        self.path = path
        self._lock = threading.Lock()
        self._data: dict[str, object] = {}
        if path and os.path.exists(path):
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    entry = json.loads(line)
                    self._data[entry["request_hash"]] = entry["response"]

    def get_or_put(self, key: str, produce: Callable[[], object]) -> object:
        with self._lock:
            if key in self._data:
                return self._data[key]
        value = produce()
        with self._lock:
            if key in self._data:
                return self._data[key]
            self._data[key] = value
            if self.path:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(
                        json.dumps(
                            {"request_hash": key, "response": value},
                            ensure_ascii=False,
                            sort_keys=True,
                        )
                        + "\n"
                    )
                    fh.flush()
        return value


def request_hash(op: str, body: dict) -> str:
    payload = json.dumps({"op": op, "body": body}, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


# --- remote backend -------------------------------------------------------


class RemoteBackend:
    """JSON/HTTP client for a question service (see module docstring)."""

    kind = REMOTE

    def __init__(self, spec: BackendSpec, cache: ResponseCache | None = None):
        if not spec.endpoint:
            raise ValueError("remote backend needs an endpoint")
        self.spec = spec
        self.cache = cache or ResponseCache(None)
        self._session = requests.Session()
        self._inflight = threading.Semaphore(max(1, spec.max_inflight))

    def _post(self, op: str, body: dict) -> dict:
        key = request_hash(op, body)

        def produce() -> object:
            url = self.spec.endpoint.rstrip("/") + "/v1/" + op
            last_error: str = "no attempt made"
            for attempt in range(self.spec.max_retries + 1):
                if attempt > 0:
                    time.sleep(self.spec.backoff * (2 ** (attempt - 1)))
                try:
                    with self._inflight:
                        resp = self._session.post(
                            url, json=body, timeout=self.spec.timeout
                        )
                except requests.RequestException as exc:
                    last_error = f"transport error: {exc}"
                    continue
                if 400 <= resp.status_code < 500:
                    raise BackendUnavailable(
                        f"{url} rejected request ({resp.status_code}): "
                        f"{resp.text[:200]}"
                    )
                if resp.status_code >= 500:
                    last_error = f"server error {resp.status_code}"
                    continue
                try:
                    return resp.json()
                except ValueError as exc:
                    raise BackendUnavailable(
                        f"{url} returned non-JSON body: {exc}"
                    ) from exc
            raise BackendUnavailable(
                f"{url} unavailable after {self.spec.max_retries + 1} attempts "
                f"({last_error})"
            )

        result = self.cache.get_or_put(key, produce)
        if not isinstance(result, dict):
            raise BackendUnavailable(f"malformed cached response for {op}")
        return result

    def generate_question(self, req: QgRequest) -> str:
        data = self._post(
            "generate", {"context": req.context, "answer": req.answer_sentence}
        )
        if "question" not in data or not isinstance(data["question"], str):
            raise BackendUnavailable("generate response missing 'question'")
        return _normalize_question(data["question"])

    def answer_question(self, question: str, context: str) -> str:
        data = self._post("answer", {"context": context, "question": question})
        if "answer" not in data or not isinstance(data["answer"], str):
            raise BackendUnavailable("answer response missing 'answer'")
        return data["answer"]

    def extract_noun_phrases(self, sentence: str) -> list[NpSpan]:
        data = self._post("nounphrases", {"sentence": sentence})
        spans = data.get("spans")
        if not isinstance(spans, list):
            raise BackendUnavailable("nounphrases response missing 'spans'")
        out: list[NpSpan] = []
        for s in spans:
            try:
                out.append(NpSpan(int(s["start"]), int(s["end"]), str(s["text"])))
            except (KeyError, TypeError, ValueError) as exc:
                raise BackendUnavailable(f"malformed span in response: {s!r}") from exc
        return out


QgBackend = HeuristicBackend | RecordedBackend | RemoteBackend


def make_backend(spec: BackendSpec, cache_path: str | None = None) -> QgBackend:
    if spec.kind == HEURISTIC:
        return HeuristicBackend()
    if spec.kind == RECORDED:
        if not spec.fixture_path:
            raise ValueError("recorded backend needs fixture_path")
        return RecordedBackend(spec.fixture_path)
    if spec.kind == REMOTE:
        return RemoteBackend(spec, ResponseCache(cache_path))
    raise ValueError(f"unknown backend kind {spec.kind!r}")


def _as_backend(backend: QgBackend | BackendSpec) -> QgBackend:
    if isinstance(backend, BackendSpec):
        return make_backend(backend)
    return backend


def generate_question(
    backend: QgBackend | BackendSpec, req: QgRequest, source_index: int = 0
) -> Question:
    """Ask the backend for a question whose answer is req.answer_sentence.

    The returned text always ends with exactly one '?' and contains no
    newline, whatever the backend produced.
    """
    return Question(
        text=_as_backend(backend).generate_question(req), source_index=source_index
    )


def answer_question(
    backend: QgBackend | BackendSpec, question: str, context: str
) -> str:
    return _as_backend(backend).answer_question(question, context)


def extract_noun_phrases(
    backend: QgBackend | BackendSpec, sentence: str
) -> list[NpSpan]:
    """Noun phrase spans ordered by start offset; spans never overlap."""
    return _as_backend(backend).extract_noun_phrases(sentence)
