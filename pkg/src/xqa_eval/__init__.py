"""Evaluation toolkit for extractive question answering.

Scores model answers against multi-annotator gold answers (exact match,
Levenshtein similarity, token F1, ROUGE-L), calibrates a combined metric
against human expert verdicts, drives chunked querying of a QA inference
endpoint, and serves a human rating workflow over HTTP.
"""

from .calibration import (
    FitReport,
    accuracy,
    compare_weights,
    comparison_csv,
    cross_validate,
    fit_weights,
    predict_helpfulness,
)
from .datamodel import (
    HumanRating,
    PredictionRecord,
    QAInstance,
    RatingStore,
    SplitPlan,
    load_annotations,
    load_predictions,
    load_ratings,
    make_splits,
)
from .metrics import (
    CorpusScores,
    GoldAnswerSet,
    ScoreVector,
    WeightVector,
    aggregate,
    exact_match,
    levenshtein_distance,
    levenshtein_similarity,
    rouge_l,
    score_instance,
    token_f1,
    weighted_average,
)
from .qaclient import (
    QueryConfig,
    chunk_context,
    merge_predictions,
    query_model,
    restrict_scope,
    validate_answer,
)
from .reporting import attach_verdicts, build_report, render_csv, render_json, render_text, score_dataset
from .textnorm import normalize, tokenize, word_set

__all__ = [
    "CorpusScores",
    "FitReport",
    "GoldAnswerSet",
    "HumanRating",
    "PredictionRecord",
    "QAInstance",
    "QueryConfig",
    "RatingStore",
    "ScoreVector",
    "SplitPlan",
    "WeightVector",
    "accuracy",
    "aggregate",
    "attach_verdicts",
    "build_report",
    "chunk_context",
    "compare_weights",
    "comparison_csv",
    "cross_validate",
    "exact_match",
    "fit_weights",
    "levenshtein_distance",
    "levenshtein_similarity",
    "load_annotations",
    "load_predictions",
    "load_ratings",
    "make_splits",
    "merge_predictions",
    "normalize",
    "predict_helpfulness",
    "query_model",
    "render_csv",
    "render_json",
    "render_text",
    "restrict_scope",
    "rouge_l",
    "score_dataset",
    "score_instance",
    "token_f1",
    "tokenize",
    "validate_answer",
    "weighted_average",
    "word_set",
]

__version__ = "0.1.0"
