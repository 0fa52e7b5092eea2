"""measqc: quality control for scientific measurement extraction.

Library surface: quantity parsing and validation, MeasEval-style corpus i/o
and scoring, hallucination-targeted rewards for the quantity and relation
extraction phases, token-entropy diagnostics, and training-corpus tooling.
"""

__version__ = "0.1.0"

from .annotations import (
    Annotation,
    Corpus,
    Document,
    MeasurementGroup,
    Span,
    assemble_groups,
    load_documents,
    load_measeval_tsv,
    write_measeval_tsv,
)
from .entropy import TokenRecord, TraceSample, compute_stats, extract_bracket_segments, token_entropy
from .narratives import RelationNarrative, parse_relation_narrative
from .quantities import ParsedQuantity, QuantityParser, extract_quantities, out_of_scope_hits, validate_span
from .reward_quantity import QuantityRewardConfig, RewardBreakdown, total_reward
from .reward_relation import RelationRewardConfig, align_groups, total_reward_rel
from .scoring import (
    ClassScores,
    MatchCriterion,
    ScoreReport,
    krippendorff_alpha,
    match_spans,
    score_relations,
    score_report,
    token_prf,
)
from .sentences import locate_quantity_sentences, split_sentences
from .traces import ConclusionRow, FormatVerdict, QuantityTrace, check_quantity_format, parse_conclusion, parse_trace

__all__ = [
    "__version__",
    "Annotation",
    "ClassScores",
    "ConclusionRow",
    "Corpus",
    "Document",
    "FormatVerdict",
    "MatchCriterion",
    "MeasurementGroup",
    "ParsedQuantity",
    "QuantityParser",
    "QuantityRewardConfig",
    "QuantityTrace",
    "RelationNarrative",
    "RelationRewardConfig",
    "RewardBreakdown",
    "ScoreReport",
    "Span",
    "TokenRecord",
    "TraceSample",
    "align_groups",
    "assemble_groups",
    "check_quantity_format",
    "compute_stats",
    "extract_bracket_segments",
    "extract_quantities",
    "krippendorff_alpha",
    "load_documents",
    "load_measeval_tsv",
    "locate_quantity_sentences",
    "match_spans",
    "out_of_scope_hits",
    "parse_conclusion",
    "parse_relation_narrative",
    "parse_trace",
    "score_relations",
    "score_report",
    "split_sentences",
    "token_entropy",
    "token_prf",
    "total_reward",
    "total_reward_rel",
    "validate_span",
    "write_measeval_tsv",
]
