"""Ingestion, persistence, and splitting of annotations, predictions, ratings.

File formats:
  - annotations: SQuAD-style JSON, {"data": [{"document_id", "paragraphs":
    [{"context", "qas": [{"id", "question", "answers": [{"text", ...}]}]}]}]}
  - predictions: flat JSON map question_id -> {"text", "confidence"} plus a
    top-level "model_id" key
  - ratings: JSONL, one verdict record per line
"""

from __future__ import annotations

import json
import math
import os
import random
import threading
import warnings
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from .errors import AnswerNotInContextWarning, DataValidationError
from .metrics import GoldAnswerSet

DEFAULT_DATASET_ID = "default"
DEFAULT_QUESTION_KEY = "general"


@dataclass(frozen=True)
class QAInstance:
    """One annotated question against one document context."""

    question_id: str
    document_id: str
    question: str
    context: str
    gold: GoldAnswerSet
    question_key: str = DEFAULT_QUESTION_KEY
    dataset_id: str = DEFAULT_DATASET_ID

    def __post_init__(self) -> None:
        if not self.context:
            raise DataValidationError(
                f"question {self.question_id!r} has an empty context"
            )
        for answer in self.gold.answers:
            if answer not in self.context:
                warnings.warn(
                    f"gold answer {answer!r} for question {self.question_id!r} "
                    "does not occur in the document context",
                    AnswerNotInContextWarning,
                    stacklevel=2,
                )


@dataclass(frozen=True)
class PredictionRecord:
    """A model's answer to one question; empty text means no-answer."""

    question_id: str
    answer_text: str
    confidence: float
    model_id: str

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise DataValidationError(
                f"confidence for question {self.question_id!r} must be in "
                f"[0, 1], got {self.confidence!r}"
            )


@dataclass(frozen=True)
class HumanRating:
    """One rater's verdict on one (question, model) pair."""

    question_id: str
    model_id: str
    rater_id: str
    verdict: int
    timestamp: str

    def __post_init__(self) -> None:
        if self.verdict not in (0, 1):
            raise DataValidationError(
                f"verdict must be 0 or 1, got {self.verdict!r}"
            )
        if not self.rater_id:
            raise DataValidationError("rater_id must be non-empty")

    def key(self) -> tuple[str, str, str]:
        return (self.question_id, self.model_id, self.rater_id)


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass(frozen=True)
class SplitPlan:
    """A document-level train/test split, reproducible from its seed.

    ``folds`` holds the test membership of each fold. For k >= 2 every
    document is in exactly one test fold; for k = 1 the plan is a single
    holdout and the remaining documents are train-only.
    """

    seed: int
    k: int
    test_fraction: float | None
    documents: tuple[str, ...]
    folds: tuple[tuple[str, ...], ...]

    def test_documents(self, fold: int) -> tuple[str, ...]:
        return self.folds[fold]

    def train_documents(self, fold: int) -> tuple[str, ...]:
        held_out = set(self.folds[fold])
        return tuple(d for d in self.documents if d not in held_out)

    def assignment(self) -> dict[str, int]:
        """Map each document to the fold where it is a test document."""
        return {doc: i for i, fold in enumerate(self.folds) for doc in fold}

    def to_payload(self) -> dict:
        return {
            "seed": self.seed,
            "k": self.k,
            "test_fraction": self.test_fraction,
            "documents": list(self.documents),
            "folds": [
                {
                    "fold": i,
                    "test": list(self.test_documents(i)),
                    "train": list(self.train_documents(i)),
                }
                for i in range(self.k)
            ],
        }

    @classmethod
    def from_payload(cls, payload: dict) -> SplitPlan:
        try:
            return cls(
                seed=int(payload["seed"]),
                k=int(payload["k"]),
                test_fraction=(
                    None
                    if payload.get("test_fraction") is None
                    else float(payload["test_fraction"])
                ),
                documents=tuple(payload["documents"]),
                folds=tuple(tuple(f["test"]) for f in payload["folds"]),
            )
        except (KeyError, TypeError) as exc:
            raise DataValidationError(f"malformed split plan: {exc}") from exc


@dataclass(frozen=True)
class HyperparameterRecord:
    """Fine-tuning configuration attached to a model run for provenance."""

    base_model: str
    epochs: int
    batch_size: int
    learning_rate: float
    doc_stride: int

    def __post_init__(self) -> None:
        if self.epochs <= 0 or self.batch_size <= 0 or self.doc_stride <= 0:
            raise DataValidationError("epochs, batch_size and doc_stride must be positive")
        if self.learning_rate <= 0:
            raise DataValidationError("learning_rate must be positive")


LEAFLET_FINETUNE_DEFAULTS = HyperparameterRecord(
    base_model="deepset/gelectra-large-germanquad",
    epochs=2,
    batch_size=12,
    learning_rate=1e-5,
    doc_stride=128,
)

REPORT_FINETUNE_DEFAULTS = HyperparameterRecord(
    base_model="deepset/gelectra-large-germanquad",
    epochs=5,
    batch_size=12,
    learning_rate=1e-5,
    doc_stride=128,
)


def _read_json(path: str | Path, what: str) -> object:
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataValidationError(f"cannot read {what} file {path}: {exc}") from exc
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise DataValidationError(
            f"malformed {what} file {path}: line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc


def parse_annotations(payload: object, source: str = "<inline>") -> list[QAInstance]:
    """Build QAInstances from a SQuAD-style payload.

    Gold answers are de-duplicated after normalization. A gold answer that
    does not occur in its context raises a warning but still loads.
    """
    if not isinstance(payload, dict) or not isinstance(payload.get("data"), list):
        raise DataValidationError(
            f"annotations file {source} must be an object with a 'data' list"
        )
    dataset_id = str(payload.get("dataset_id", DEFAULT_DATASET_ID))
    instances: list[QAInstance] = []
    seen_ids: set[str] = set()
    for doc_index, doc in enumerate(payload["data"]):
        try:
            document_id = str(doc["document_id"])
            paragraphs = doc["paragraphs"]
        except (KeyError, TypeError) as exc:
            raise DataValidationError(
                f"annotations file {source}: document #{doc_index} is malformed: {exc}"
            ) from exc
        for paragraph in paragraphs:
            try:
                context = paragraph["context"]
                qas = paragraph["qas"]
            except (KeyError, TypeError) as exc:
                raise DataValidationError(
                    f"annotations file {source}: paragraph in document "
                    f"{document_id!r} is malformed: {exc}"
                ) from exc
            for qa in qas:
                try:
                    question_id = str(qa["id"])
                    question = str(qa["question"])
                    answers = [str(a["text"]) for a in qa["answers"]]
                except (KeyError, TypeError) as exc:
                    raise DataValidationError(
                        f"annotations file {source}: question entry in document "
                        f"{document_id!r} is malformed: {exc}"
                    ) from exc
                if question_id in seen_ids:
                    raise DataValidationError(
                        f"annotations file {source}: duplicate question id {question_id!r}"
                    )
                seen_ids.add(question_id)
                instances.append(
                    QAInstance(
                        question_id=question_id,
                        document_id=document_id,
                        question=question,
                        context=context,
                        gold=GoldAnswerSet.from_answers(question_id, answers),
                        question_key=str(qa.get("question_key", DEFAULT_QUESTION_KEY)),
                        dataset_id=dataset_id,
                    )
                )
    return instances


def load_annotations(path: str | Path) -> list[QAInstance]:
    """Read a SQuAD-style annotations file into QAInstances."""
    return parse_annotations(_read_json(path, "annotations"), source=str(path))


def save_annotations(path: str | Path, instances: Sequence[QAInstance]) -> None:
    """Write QAInstances back to the SQuAD-style JSON format."""
    documents: dict[str, dict] = {}
    for inst in instances:
        doc = documents.setdefault(
            inst.document_id, {"document_id": inst.document_id, "paragraphs": []}
        )
        paragraph = next(
            (p for p in doc["paragraphs"] if p["context"] == inst.context), None
        )
        if paragraph is None:
            paragraph = {"context": inst.context, "qas": []}
            doc["paragraphs"].append(paragraph)
        paragraph["qas"].append(
            {
                "id": inst.question_id,
                "question": inst.question,
                "question_key": inst.question_key,
                "answers": [{"text": a} for a in inst.gold.answers],
            }
        )
    payload: dict = {"data": list(documents.values())}
    dataset_ids = {inst.dataset_id for inst in instances}
    if len(dataset_ids) == 1:
        payload["dataset_id"] = dataset_ids.pop()
    elif len(dataset_ids) > 1:
        raise DataValidationError(
            "cannot save annotations spanning multiple dataset ids into one file"
        )
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )


def parse_predictions(
    payload: object, source: str = "<inline>"
) -> tuple[str, list[PredictionRecord]]:
    """Parse a predictions payload: a question-id map plus a model_id key.

    Returns the model id separately so it survives an empty prediction map.
    """
    if not isinstance(payload, dict) or "model_id" not in payload:
        raise DataValidationError(
            f"predictions file {source} must be an object with a 'model_id' key"
        )
    model_id = str(payload["model_id"])
    records: list[PredictionRecord] = []
    for question_id, entry in payload.items():
        if question_id == "model_id":
            continue
        if not isinstance(entry, dict) or "text" not in entry:
            raise DataValidationError(
                f"predictions file {source}: entry for {question_id!r} must be "
                "an object with 'text' and 'confidence'"
            )
        records.append(
            PredictionRecord(
                question_id=str(question_id),
                answer_text=str(entry["text"]),
                confidence=float(entry.get("confidence", 0.0)),
                model_id=model_id,
            )
        )
    return model_id, records


def read_predictions(path: str | Path) -> tuple[str, list[PredictionRecord]]:
    return parse_predictions(_read_json(path, "predictions"), source=str(path))


def load_predictions(path: str | Path) -> list[PredictionRecord]:
    """Prediction records only; see read_predictions for the model id."""
    return read_predictions(path)[1]


def save_predictions(path: str | Path, records: Sequence[PredictionRecord]) -> None:
    model_ids = {r.model_id for r in records}
    if len(model_ids) > 1:
        raise DataValidationError(
            "cannot save predictions from multiple models into one file"
        )
    payload: dict = {"model_id": model_ids.pop() if model_ids else "unknown"}
    for record in records:
        payload[record.question_id] = {
            "text": record.answer_text,
            "confidence": record.confidence,
        }
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )


def _rating_to_line(rating: HumanRating) -> str:
    return json.dumps(
        {
            "question_id": rating.question_id,
            "model_id": rating.model_id,
            "rater_id": rating.rater_id,
            "verdict": rating.verdict,
            "timestamp": rating.timestamp,
        },
        ensure_ascii=False,
    )


def parse_rating(entry: object, where: str = "<inline>") -> HumanRating:
    """Build one HumanRating from a decoded JSON object."""
    try:
        return HumanRating(
            question_id=str(entry["question_id"]),
            model_id=str(entry["model_id"]),
            rater_id=str(entry["rater_id"]),
            verdict=int(entry["verdict"]),
            timestamp=str(entry["timestamp"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataValidationError(f"malformed rating at {where}: {exc}") from exc


def _rating_from_line(line: str, path: str | Path, lineno: int) -> HumanRating:
    try:
        entry = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DataValidationError(
            f"malformed ratings file {path}: line {lineno}: {exc}"
        ) from exc
    return parse_rating(entry, where=f"{path}:{lineno}")


def load_ratings(path: str | Path) -> list[HumanRating]:
    """Read the full ratings log, in file order (including superseded rows)."""
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        return []
    except OSError as exc:
        raise DataValidationError(f"cannot read ratings file {path}: {exc}") from exc
    return [
        _rating_from_line(line, path, lineno)
        for lineno, line in enumerate(raw.splitlines(), start=1)
        if line.strip()
    ]


def save_ratings(path: str | Path, ratings: Sequence[HumanRating]) -> None:
    text = "".join(_rating_to_line(r) + "\n" for r in ratings)
    Path(path).write_text(text, encoding="utf-8")


def latest_ratings(ratings: Iterable[HumanRating]) -> dict[tuple[str, str, str], HumanRating]:
    """Last-write-wins view keyed by (question_id, model_id, rater_id)."""
    latest: dict[tuple[str, str, str], HumanRating] = {}
    for rating in ratings:
        latest[rating.key()] = rating
    return latest


class RatingStore:
    """Append-only JSONL store for verdicts; appends are durable before ack."""

    def __init__(self, path: str | Path):
        self._path = Path(path)
        self._lock = threading.Lock()

    @property
    def path(self) -> Path:
        return self._path

    def append(self, rating: HumanRating) -> None:
        line = _rating_to_line(rating) + "\n"
        with self._lock:
            with open(self._path, "a", encoding="utf-8") as handle:
                handle.write(line)
                handle.flush()
                os.fsync(handle.fileno())

    def all(self) -> list[HumanRating]:
        with self._lock:
            return load_ratings(self._path)

    def latest(self) -> dict[tuple[str, str, str], HumanRating]:
        return latest_ratings(self.all())


def make_splits(
    documents: Sequence[str],
    k: int,
    test_fraction: float,
    seed: int,
) -> SplitPlan:
    """Deterministic document-level split plan.

    k = 1 produces a single holdout with ceil(test_fraction * N) test
    documents; k >= 2 produces k cross-validation folds differing in size
    by at most one (test_fraction is implied by k and ignored).
    """
    unique = sorted(set(str(d) for d in documents))
    n = len(unique)
    if k < 1:
        raise DataValidationError(f"k must be at least 1, got {k}")
    if k > n:
        raise DataValidationError(f"cannot make {k} folds from {n} documents")
    if not 0.0 < test_fraction < 1.0:
        raise DataValidationError(
            f"test_fraction must be in (0, 1), got {test_fraction}"
        )
    shuffled = list(unique)
    random.Random(seed).shuffle(shuffled)
    if k == 1:
        test_size = math.ceil(test_fraction * n)
        folds = [tuple(sorted(shuffled[:test_size]))]
    else:
        base, extra = divmod(n, k)
        folds = []
        cursor = 0
        for i in range(k):
            size = base + (1 if i < extra else 0)
            folds.append(tuple(sorted(shuffled[cursor : cursor + size])))
            cursor += size
    return SplitPlan(
        seed=seed,
        k=k,
        test_fraction=test_fraction if k == 1 else None,
        documents=tuple(unique),
        folds=tuple(folds),
    )


def save_split_plan(path: str | Path, plan: SplitPlan) -> None:
    Path(path).write_text(
        json.dumps(plan.to_payload(), ensure_ascii=False, indent=2, sort_keys=True)
        + "\n",
        encoding="utf-8",
    )


def load_split_plan(path: str | Path) -> SplitPlan:
    payload = _read_json(path, "split plan")
    if not isinstance(payload, dict):
        raise DataValidationError(f"split plan file {path} must be a JSON object")
    return SplitPlan.from_payload(payload)
