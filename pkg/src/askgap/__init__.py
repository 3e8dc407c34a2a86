"""askgap: question-augmented gap-sentence pretraining data engine.

Turns raw text or dialogue corpora into seq2seq pretraining instances that
pair masked documents with pseudo-summaries and, on a configurable share of
examples, machine-generated questions.  Also extracts question/keyword
control plans from reference summaries and measures their statistics.
"""

from .builder import (
    BuildConfig,
    BuildReport,
    DatasetBuilder,
    Mode,
    PretrainInstance,
    Skip,
    assemble_instance,
    build_dataset,
    choose_mode,
    enforce_budgets,
)
from .corpus import (
    Document,
    RawRecord,
    SentenceSpan,
    Turn,
    chunk_document,
    concat_dialogues,
    document_from_sentences,
    read_corpus,
    segment_sentences,
    to_third_person,
    word_tokenize,
)
from .gsg import (
    GapSelection,
    MaskedDocument,
    PseudoSummary,
    apply_mask,
    build_pseudo_summary,
    score_gap_sentences,
    select_gap_sentences,
)
from .metrics import (
    OverlapStats,
    RougeScore,
    lexical_overlap,
    levenshtein,
    levenshtein_norm,
    multi_ref_max,
    rouge_l,
    rouge_n,
)
from .plans import (
    Plan,
    PlanUnit,
    QaPair,
    analyze_plans,
    extract_blueprint,
    extract_content_questions,
    extract_keywords_plan,
    extract_plan,
    filter_coverage,
    filter_rheme,
    filter_round_trip,
)
from .qg import (
    BackendSpec,
    NpSpan,
    QgRequest,
    Question,
    answer_question,
    extract_noun_phrases,
    generate_question,
    make_backend,
)

__version__ = "0.1.0"

__all__ = [
    "BuildConfig",
    "BuildReport",
    "DatasetBuilder",
    "Mode",
    "PretrainInstance",
    "Skip",
    "assemble_instance",
    "build_dataset",
    "choose_mode",
    "enforce_budgets",
    "Document",
    "RawRecord",
    "SentenceSpan",
    "Turn",
    "chunk_document",
    "concat_dialogues",
    "document_from_sentences",
    "read_corpus",
    "segment_sentences",
    "to_third_person",
    "word_tokenize",
    "GapSelection",
    "MaskedDocument",
    "PseudoSummary",
    "apply_mask",
    "build_pseudo_summary",
    "score_gap_sentences",
    "select_gap_sentences",
    "OverlapStats",
    "RougeScore",
    "lexical_overlap",
    "levenshtein",
    "levenshtein_norm",
    "multi_ref_max",
    "rouge_l",
    "rouge_n",
    "Plan",
    "PlanUnit",
    "QaPair",
    "analyze_plans",
    "extract_blueprint",
    "extract_content_questions",
    "extract_keywords_plan",
    "extract_plan",
    "filter_coverage",
    "filter_rheme",
    "filter_round_trip",
    "BackendSpec",
    "NpSpan",
    "QgRequest",
    "Question",
    "answer_question",
    "extract_noun_phrases",
    "generate_question",
    "make_backend",
    "__version__",
]
