"""Score datasets against predictions and render grouped report tables.

Rows aggregate per-question metric vectors by question key (or by model
or dataset), carry an optional human-verdict column, and render as an
aligned text table (3 decimals), CSV, or JSON (full precision).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

from .datamodel import HumanRating, PredictionRecord, QAInstance, latest_ratings
from .errors import DataValidationError
from .metrics import ScoreVector, aggregate, score_instance

GROUP_CHOICES = ("question_key", "model", "dataset")
TEXT_COLUMNS = ("Dataset", "Model", "Question", "n", "Lev", "EM", "F1", "ROUGE-L", "Human")
ALL_GROUPS = "all"


@dataclass(frozen=True)
class ScoredInstance:
    """One question's metric vector, tagged with its grouping keys."""

    question_id: str
    document_id: str
    dataset_id: str
    model_id: str
    question_key: str
    scores: ScoreVector
    human: float | None = None


@dataclass(frozen=True)
class ReportRow:
    """One aggregated line of the evaluation table."""

    dataset_id: str
    model_id: str
    question_key: str
    n: int
    lev: float
    em: float
    f1: float
    rouge_l: float
    human: float | None = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise DataValidationError("a report row needs at least one instance")
        values = [self.lev, self.em, self.f1, self.rouge_l]
        if self.human is not None:
            values.append(self.human)
        for value in values:
            if not 0.0 <= value <= 1.0:
                raise DataValidationError(f"row value {value!r} outside [0, 1]")


@dataclass(frozen=True)
class EvaluationReport:
    """Report rows plus the question-id mismatches found while scoring."""

    rows: tuple[ReportRow, ...]
    total_instances: int
    missing_predictions: tuple[str, ...]
    orphan_predictions: tuple[str, ...]


def score_dataset(
    instances: Sequence[QAInstance],
    predictions: Sequence[PredictionRecord],
    *,
    model_id: str | None = None,
    normalized: bool = True,
) -> tuple[list[ScoredInstance], tuple[str, ...], tuple[str, ...]]:
    """Score every instance against its prediction.

    Questions without a prediction are scored as empty answers and listed
    in the second return value; predictions without a matching question
    are listed in the third.
    """
    by_question: dict[str, PredictionRecord] = {}
    for record in predictions:
        by_question[record.question_id] = record
    if model_id is None:
        model_ids = {r.model_id for r in predictions}
        if len(model_ids) > 1:
            raise DataValidationError(
                "predictions come from multiple models; pass model_id explicitly"
            )
        model_id = model_ids.pop() if model_ids else "unknown"

    scored: list[ScoredInstance] = []
    missing: list[str] = []
    known = set()
    for instance in instances:
        known.add(instance.question_id)
        record = by_question.get(instance.question_id)
        if record is None:
            missing.append(instance.question_id)
            answer = ""
        else:
            answer = record.answer_text
        scored.append(
            ScoredInstance(
                question_id=instance.question_id,
                document_id=instance.document_id,
                dataset_id=instance.dataset_id,
                model_id=model_id,
                question_key=instance.question_key,
                scores=score_instance(answer, instance.gold, normalized=normalized),
            )
        )
    orphans = tuple(sorted(q for q in by_question if q not in known))
    return scored, tuple(missing), orphans


def attach_verdicts(
    scored: Sequence[ScoredInstance],
    ratings: Iterable[HumanRating],
    *,
    aggregation: str = "majority",
) -> list[ScoredInstance]:
    """Fill the human column from rater verdicts.

    Per (question, model), the latest verdict of each rater is aggregated:
    "majority" scores 1 when at least half the raters said correct, "any"
    when any rater did. Instances without ratings keep human = None.
    """
    if aggregation not in ("majority", "any"):
        raise DataValidationError(
            f"aggregation must be majority or any, got {aggregation!r}"
        )
    per_pair: dict[tuple[str, str], list[int]] = {}
    for rating in latest_ratings(ratings).values():
        per_pair.setdefault((rating.question_id, rating.model_id), []).append(
            rating.verdict
        )
    result = []
    for instance in scored:
        verdicts = per_pair.get((instance.question_id, instance.model_id))
        if not verdicts:
            result.append(replace(instance, human=None))
        elif aggregation == "any":
            result.append(replace(instance, human=float(max(verdicts))))
        else:
            result.append(
                replace(
                    instance,
                    human=1.0 if sum(verdicts) / len(verdicts) >= 0.5 else 0.0,
                )
            )
    return result


def _group_key(instance: ScoredInstance, group_by: str) -> tuple[str, str, str]:
    if group_by == "question_key":
        return (instance.dataset_id, instance.model_id, instance.question_key)
    if group_by == "model":
        return (instance.dataset_id, instance.model_id, ALL_GROUPS)
    return (instance.dataset_id, ALL_GROUPS, ALL_GROUPS)


def build_rows(
    scored: Sequence[ScoredInstance], *, group_by: str = "question_key"
) -> list[ReportRow]:
    """Aggregate scored instances into sorted report rows.

    The human column is present only when every instance of the row has a
    verdict.
    """
    if group_by not in GROUP_CHOICES:
        raise DataValidationError(
            f"group_by must be one of {', '.join(GROUP_CHOICES)}, got {group_by!r}"
        )
    groups: dict[tuple[str, str, str], list[ScoredInstance]] = {}
    for instance in scored:
        groups.setdefault(_group_key(instance, group_by), []).append(instance)
    rows = []
    for (dataset_id, model_id, question_key), members in sorted(groups.items()):
        corpus = aggregate([m.scores for m in members])
        human: float | None = None
        if all(m.human is not None for m in members):
            human = sum(m.human for m in members) / len(members)
        rows.append(
            ReportRow(
                dataset_id=dataset_id,
                model_id=model_id,
                question_key=question_key,
                n=corpus.question_count,
                lev=corpus.lev,
                em=corpus.em,
                f1=corpus.f1,
                rouge_l=corpus.rouge_l,
                human=human,
            )
        )
    return rows


def build_report(
    scored: Sequence[ScoredInstance],
    missing: Sequence[str] = (),
    orphans: Sequence[str] = (),
    *,
    group_by: str = "question_key",
) -> EvaluationReport:
    if not scored:
        raise DataValidationError("nothing to report: no scored instances")
    return EvaluationReport(
        rows=tuple(build_rows(scored, group_by=group_by)),
        total_instances=len(scored),
        missing_predictions=tuple(missing),
        orphan_predictions=tuple(orphans),
    )


def _cell(value: float | None) -> str:
    return "-" if value is None else f"{value:.3f}"


def render_text(report: EvaluationReport) -> str:
    """Aligned table, metric values at 3 decimals, mismatch summary below."""
    body = [
        (
            row.dataset_id,
            row.model_id,
            row.question_key,
            str(row.n),
            _cell(row.lev),
            _cell(row.em),
            _cell(row.f1),
            _cell(row.rouge_l),
            _cell(row.human),
        )
        for row in report.rows
    ]
    widths = [
        max(len(TEXT_COLUMNS[i]), *(len(line[i]) for line in body))
        for i in range(len(TEXT_COLUMNS))
    ]
    lines = [
        "  ".join(name.ljust(widths[i]) for i, name in enumerate(TEXT_COLUMNS)).rstrip(),
        "  ".join("-" * widths[i] for i in range(len(widths))),
    ]
    for line in body:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(line)).rstrip())
    lines.append("")
    lines.append(f"instances: {report.total_instances}")
    if report.missing_predictions:
        missing = ", ".join(report.missing_predictions)
        lines.append(
            f"unanswered questions scored as empty ({len(report.missing_predictions)}): {missing}"
        )
    if report.orphan_predictions:
        orphans = ", ".join(report.orphan_predictions)
        lines.append(
            f"predictions without a question ({len(report.orphan_predictions)}): {orphans}"
        )
    return "\n".join(lines) + "\n"


def render_csv(report: EvaluationReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(
        ["dataset_id", "model_id", "question_key", "n", "lev", "em", "f1", "rouge_l", "human"]
    )
    for row in report.rows:
        writer.writerow(
            [
                row.dataset_id,
                row.model_id,
                row.question_key,
                row.n,
                row.lev,
                row.em,
                row.f1,
                row.rouge_l,
                "" if row.human is None else row.human,
            ]
        )
    return buffer.getvalue()


def render_json(report: EvaluationReport) -> str:
    payload = {
        "rows": [
            {
                "dataset_id": row.dataset_id,
                "model_id": row.model_id,
                "question_key": row.question_key,
                "n": row.n,
                "lev": row.lev,
                "em": row.em,
                "f1": row.f1,
                "rouge_l": row.rouge_l,
                "human": row.human,
            }
            for row in report.rows
        ],
        "total_instances": report.total_instances,
        "missing_predictions": list(report.missing_predictions),
        "orphan_predictions": list(report.orphan_predictions),
    }
    return json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n"


RENDERERS = {"text": render_text, "csv": render_csv, "json": render_json}


def parse_scores(payload: object, source: str = "<inline>") -> list[ScoredInstance]:
    """Parse pre-scored per-question metric vectors.

    Format: {"dataset_id", "model_id", "rows": [{"question_id",
    "question_key", "em", "lev", "f1", "rouge_l", "human"?}]}. Used when
    metric values were computed elsewhere and only rendering is needed.
    """
    if not isinstance(payload, dict) or not isinstance(payload.get("rows"), list):
        raise DataValidationError(
            f"scores file {source} must be an object with a 'rows' list"
        )
    dataset_id = str(payload.get("dataset_id", "default"))
    model_id = str(payload.get("model_id", "unknown"))
    instances = []
    for index, row in enumerate(payload["rows"]):
        try:
            human = row.get("human")
            instances.append(
                ScoredInstance(
                    question_id=str(row.get("question_id", f"row-{index}")),
                    document_id=str(row.get("document_id", "")),
                    dataset_id=dataset_id,
                    model_id=model_id,
                    question_key=str(row.get("question_key", "general")),
                    scores=ScoreVector(
                        em=int(row["em"]),
                        lev=float(row["lev"]),
                        f1=float(row["f1"]),
                        rouge_l=float(row["rouge_l"]),
                    ),
                    human=None if human is None else float(human),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataValidationError(
                f"scores file {source}: row #{index} is malformed: {exc}"
            ) from exc
    return instances


def load_scores(path: str | Path) -> list[ScoredInstance]:
    """Read pre-scored metric vectors from a JSON file; see parse_scores."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataValidationError(f"cannot read scores file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataValidationError(
            f"malformed scores file {path}: line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    return parse_scores(payload, source=str(path))
