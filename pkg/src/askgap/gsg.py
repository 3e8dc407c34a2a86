"""Gap sentence selection, masking, and pseudo-summary assembly.

Each sentence is scored by how well it is covered by the rest of its
document (leave-one-out unigram overlap F1).  The top scorers form the
pseudo-summary; most of them are replaced by a sentinel in the input while
a small share stays visible to anchor the reconstruction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .corpus import Document, word_tokenize
from .errors import EmptyDocument, IndexOutOfRange
from .metrics import rouge_n
from .seeding import stable_rng

MASK_TOKEN = "<mask>"

DEFAULT_GSR = 0.45
DEFAULT_MASK_RATE = 0.8


def round_half_up(x: float) -> int:
    """Round to nearest integer with exact halves going up."""
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class GapSelection:
    """Outcome of gap sentence selection for one document."""

    selected: tuple[int, ...]
    scores: tuple[float, ...]
    masked: tuple[int, ...]
    kept: tuple[int, ...]


@dataclass(frozen=True)
class MaskedDocument:
    text: str
    mask_positions: tuple[tuple[int, int], ...]  # (sentinel order, sentence index)


@dataclass(frozen=True)
class PseudoSummary:
    sentences: tuple[str, ...]
    sentence_indices: tuple[int, ...]
    text: str
    truncated: bool


def score_gap_sentences(doc: Document) -> list[float]:
    """Leave-one-out unigram overlap F1 per sentence.

    A single-sentence document scores [0.0] because the complement is empty.
    """
    n = len(doc.sentences)
    if n == 0:
        raise EmptyDocument(f"document {doc.id} has no sentences")
    token_lists = [word_tokenize(doc.sentence_text(i)) for i in range(n)]
    scores: list[float] = []
    for i in range(n):
        rest: list[str] = []
        for j, toks in enumerate(token_lists):
            if j != i:
                rest.extend(toks)
        scores.append(rouge_n(token_lists[i], rest, 1).f1)
    return scores


def select_gap_sentences(
    doc: Document,
    gsr: float = DEFAULT_GSR,
    seed: int = 0,
    mask_rate: float = DEFAULT_MASK_RATE,
) -> GapSelection:
    """Pick the k = clamp(round(gsr * n), 1, n) best-covered sentences and
    split them into masked and kept subsets.

    round(mask_rate * k), at least 1, are masked; which ones is drawn from an
    RNG keyed by (seed, doc.id), so the choice is reproducible per document
    and independent of processing order.  Score ties resolve to the lower
    sentence index.
    """
    if not 0.0 < gsr <= 1.0:
        raise ValueError("gsr must be in (0, 1]")
    if not 0.0 <= mask_rate <= 1.0:
        raise ValueError("mask_rate must be in [0, 1]")
    scores = score_gap_sentences(doc)
    n = len(scores)
    k = min(n, max(1, round_half_up(gsr * n)))
    ranked = sorted(range(n), key=lambda i: (-scores[i], i))
    selected = tuple(sorted(ranked[:k]))
    m = min(k, max(1, round_half_up(mask_rate * k)))
    rng = stable_rng(seed, doc.id, "mask")
    masked = tuple(sorted(rng.sample(selected, m)))
    masked_set = set(masked)
    kept = tuple(i for i in selected if i not in masked_set)
    return GapSelection(
        selected=selected, scores=tuple(scores), masked=masked, kept=kept
    )


def apply_mask(doc: Document, sel: GapSelection) -> MaskedDocument:
    """Replace each masked sentence with the sentinel, preserving order.

    Adjacent masked sentences yield adjacent sentinels; nothing is merged.
    """
    n = len(doc.sentences)
    for i in sel.masked:
        if not 0 <= i < n:
            raise IndexOutOfRange(f"sentence index {i} outside document {doc.id}")
    masked_set = set(sel.masked)
    parts: list[str] = []
    positions: list[tuple[int, int]] = []
    order = 0
    for i in range(n):
        if i in masked_set:
            parts.append(MASK_TOKEN)
            positions.append((order, i))
            order += 1
        else:
            parts.append(doc.sentence_text(i))
    return MaskedDocument(text=" ".join(parts), mask_positions=tuple(positions))


def build_pseudo_summary(
    doc: Document,
    sel: GapSelection,
    target_budget: int,
    sentence_transform: Callable[[int, str], str] | None = None,
) -> PseudoSummary:
    """Concatenate the selected sentences in document order, truncated to
    target_budget word tokens at sentence boundaries.

    Whole trailing sentences are dropped; the first sentence survives even
    if it alone exceeds the budget, in which case the summary is flagged.
    sentence_transform, when given, rewrites each sentence (index, text)
    before it is counted and joined (used for third-person dialogue text).
    """
    if target_budget <= 0:
        raise ValueError("target_budget must be positive")
    n = len(doc.sentences)
    for i in sel.selected:
        if not 0 <= i < n:
            raise IndexOutOfRange(f"sentence index {i} outside document {doc.id}")
    texts: list[str] = []
    indices: list[int] = []
    total = 0
    truncated = False
    for i in sel.selected:
        text = doc.sentence_text(i)
        if sentence_transform is not None:
            text = sentence_transform(i, text)
        count = len(word_tokenize(text))
        if texts and total + count > target_budget:
            truncated = True
            break
        if not texts and count > target_budget:
            truncated = True
        texts.append(text)
        indices.append(i)
        total += count
    return PseudoSummary(
        sentences=tuple(texts),
        sentence_indices=tuple(indices),
        text=" ".join(texts),
        truncated=truncated,
    )
