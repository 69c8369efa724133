"""Request and response bodies for the HTTP service.

Batch endpoints accept every input either inline (``annotations``) or as a
path on the server's filesystem (``annotations_path``). Inline bodies suit
remote callers; paths suit the bundled CLI, which talks to the app
in-process and shares its filesystem.
"""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


# ---------------------------------------------------------------------------
# rating sessions


class SessionCreateRequest(_Strict):
    """Declare a rating session over one annotation set and n prediction sets."""

    session_id: str | None = None
    annotations: dict[str, Any] | None = None
    annotations_path: str | None = None
    predictions: list[dict[str, Any]] = Field(default_factory=list)
    predictions_paths: list[str] = Field(default_factory=list)
    rules: dict[str, Any] | None = None
    rules_path: str | None = None
    ratings_path: str
    seed: int = 0
    excerpt_margin: int = Field(default=500, ge=0)
    blind: bool = False
    full_context: bool = False


class SessionCreated(_Strict):
    session_id: str
    items: int
    models: list[str]


class TaskPayload(_Strict):
    """One answer awaiting a verdict, with enough context to judge it."""

    question_id: str
    model_id: str
    question: str
    question_key: str
    context_excerpt: str
    answer_start: int | None
    answer_end: int | None
    model_answer: str
    gold_answers: list[str]
    criteria: str
    position: int
    total: int


class NextTaskResponse(_Strict):
    done: bool
    task: TaskPayload | None = None


class VerdictRequest(_Strict):
    rater_id: str
    question_id: str
    model_id: str
    verdict: Literal[0, 1]


class VerdictAck(_Strict):
    recorded: bool
    question_id: str
    model_id: str
    rater_id: str
    rated: int
    total: int


class RaterProgress(_Strict):
    rated: int
    remaining: int


class ProgressResponse(_Strict):
    items: int
    raters: dict[str, RaterProgress]
    expected_total: int
    rated_total: int


# ---------------------------------------------------------------------------
# batch endpoints


class EvaluateRequest(_Strict):
    annotations: dict[str, Any] | None = None
    annotations_path: str | None = None
    predictions: list[dict[str, Any]] = Field(default_factory=list)
    predictions_paths: list[str] = Field(default_factory=list)
    ratings: list[dict[str, Any]] | None = None
    ratings_path: str | None = None
    scores: dict[str, Any] | None = None
    scores_path: str | None = None
    group_by: Literal["question_key", "model", "dataset"] = "question_key"
    aggregation: Literal["majority", "any"] = "majority"
    normalized: bool = True
    format: Literal["text", "csv", "json"] = "text"


class EvaluateResponse(_Strict):
    rows: list[dict[str, Any]]
    total_instances: int
    missing_predictions: list[str]
    orphan_predictions: list[str]
    rendered: str
    format: str


class CalibrateRequest(_Strict):
    annotations: dict[str, Any] | None = None
    annotations_path: str | None = None
    predictions: list[dict[str, Any]] = Field(default_factory=list)
    predictions_paths: list[str] = Field(default_factory=list)
    ratings: list[dict[str, Any]] | None = None
    ratings_path: str | None = None
    aggregation: Literal["majority", "any"] = "majority"
    normalized: bool = True
    folds: int | None = Field(default=None, ge=2)
    seed: int = 0


class CalibrationEntry(_Strict):
    fit: dict[str, Any]
    cross_validation: dict[str, Any] | None = None


class CalibrateResponse(_Strict):
    reports: list[CalibrationEntry]
    comparison_csv: str | None = None
    max_deviation: float | None = None


class SplitRequest(_Strict):
    documents: list[str] | None = None
    annotations: dict[str, Any] | None = None
    annotations_path: str | None = None
    k: int = 1
    test_fraction: float = 0.2
    seed: int = 0


class ExtractRequest(_Strict):
    documents: list[dict[str, Any]] | None = None
    documents_path: str | None = None
    rules: dict[str, Any] | None = None
    rules_path: str | None = None
    endpoint: str
    model_id: str
    window: int = Field(default=512, gt=0)
    doc_stride: int = Field(default=128, gt=0)
    top_k: int = Field(default=3, gt=0)
    timeout: float = Field(default=30.0, gt=0)
    parallelism: int = Field(default=1, gt=0)


class ExtractResponse(_Strict):
    predictions: dict[str, Any]
    errors: list[dict[str, str]]
    partial: list[str]


class HealthResponse(_Strict):
    status: str
    version: str
