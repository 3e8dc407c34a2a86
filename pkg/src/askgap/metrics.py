"""Token-level evaluation metrics: ROUGE, Levenshtein, lexical overlap."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .errors import MissingReference

ROUGE1 = "rouge1"
ROUGE2 = "rouge2"
ROUGEL = "rougeL"
VARIANTS = (ROUGE1, ROUGE2, ROUGEL)


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_pr(cls, precision: float, recall: float) -> "RougeScore":
        denom = precision + recall
        f1 = 2.0 * precision * recall / denom if denom > 0 else 0.0
        return cls(precision, recall, f1)


@dataclass(frozen=True)
class OverlapStats:
    """Cross-plan overlap summary; mean/max are None when no pair exists."""

    mean_overlap: float | None
    max_overlap: float | None
    length_ratio: float


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: Sequence[str], reference: Sequence[str], n: int) -> RougeScore:
    """Clipped n-gram overlap precision/recall/F1 (n = 1 or 2).

    An empty candidate or reference n-gram multiset scores zero on the
    corresponding side rather than raising.
    """
    if n not in (1, 2):
        raise ValueError(f"unsupported n-gram order {n}")
    cand = _ngrams(candidate, n)
    ref = _ngrams(reference, n)
    total_c = sum(cand.values())
    total_r = sum(ref.values())
    overlap = sum(min(count, ref[gram]) for gram, count in cand.items())
    precision = overlap / total_c if total_c else 0.0
    recall = overlap / total_r if total_r else 0.0
    return RougeScore.from_pr(precision, recall)


def _lcs_len(a: Sequence[str], b: Sequence[str]) -> int:
    # two-row DP keeps memory at O(min(|a|, |b|))
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[len(b)]


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> RougeScore:
    """Longest-common-subsequence precision/recall/F1."""
    lcs = _lcs_len(candidate, reference)
    precision = lcs / len(candidate) if candidate else 0.0
    recall = lcs / len(reference) if reference else 0.0
    return RougeScore.from_pr(precision, recall)


def score_variant(
    candidate: Sequence[str], reference: Sequence[str], variant: str
) -> RougeScore:
    if variant == ROUGE1:
        return rouge_n(candidate, reference, 1)
    if variant == ROUGE2:
        return rouge_n(candidate, reference, 2)
    if variant == ROUGEL:
        return rouge_l(candidate, reference)
    raise ValueError(f"unknown variant {variant!r}")


def multi_ref_max(
    candidate: Sequence[str],
    references: Sequence[Sequence[str]],
    variant: str = ROUGE1,
) -> RougeScore:
    """Score against each reference, return the one maximizing F1.

    Ties resolve to the lowest reference index.  Zero references raise
    MissingReference.
    """
    if not references:
        raise MissingReference("multi_ref_max needs at least one reference")
    best: RougeScore | None = None
    for ref in references:
        score = score_variant(candidate, ref, variant)
        if best is None or score.f1 > best.f1:
            best = score
    assert best is not None
    return best


def levenshtein(a: Sequence[str], b: Sequence[str]) -> int:
    """Word-level edit distance with unit insert/delete/substitute costs."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        cur = [i]
        for j, y in enumerate(b, start=1):
            cost = 0 if x == y else 1
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost))
        prev = cur
    return prev[len(b)]


def levenshtein_norm(a: Sequence[str], b: Sequence[str]) -> float:
    """Edit distance divided by max(|a|, |b|); two empty sequences score 0."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return levenshtein(a, b) / longest


def _content_vocab(tokens: Sequence[str]) -> set[str]:
    return {
        t.lower() for t in tokens if any(ch.isalnum() for ch in t)
    }


def lexical_overlap(a: Sequence[str], b: Sequence[str]) -> float:
    """|V(a) n V(b)| / min(|V(a)|, |V(b)|) over lowercased vocabularies with
    punctuation-only tokens stripped.  Either vocabulary empty scores 0."""
    va = _content_vocab(a)
    vb = _content_vocab(b)
    if not va or not vb:
        return 0.0
    return len(va & vb) / min(len(va), len(vb))
