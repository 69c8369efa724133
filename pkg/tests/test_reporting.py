from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import pytest

from xqa_eval.datamodel import HumanRating, PredictionRecord, QAInstance
from xqa_eval.errors import DataValidationError
from xqa_eval.metrics import GoldAnswerSet, ScoreVector
from xqa_eval.reporting import (
    EvaluationReport,
    ReportRow,
    ScoredInstance,
    attach_verdicts,
    build_report,
    build_rows,
    load_scores,
    render_csv,
    render_json,
    render_text,
    score_dataset,
)

FIXTURES = Path(__file__).parent / "fixtures"


def instance(qid, answer, *, doc="doc-1", key="ingredient", dataset="leaflets"):
    return QAInstance(
        question_id=qid,
        document_id=doc,
        question="?",
        context=f"Es enthält {answer}.",
        gold=GoldAnswerSet.from_answers(qid, [answer]),
        question_key=key,
        dataset_id=dataset,
    )


def rating(qid, verdict, rater="alice", model="base", ts="2025-11-03T12:00:00+00:00"):
    return HumanRating(qid, model, rater, verdict, ts)


class TestScoreDataset:
    def test_perfect_predictions_score_one(self):
        instances = [instance("q1", "Metoprolol"), instance("q2", "Lactose")]
        predictions = [
            PredictionRecord("q1", "Metoprolol", 0.9, "base"),
            PredictionRecord("q2", "Lactose", 0.8, "base"),
        ]
        scored, missing, orphans = score_dataset(instances, predictions)
        assert all(s.scores == ScoreVector(1, 1.0, 1.0, 1.0) for s in scored)
        assert missing == () and orphans == ()
        assert {s.model_id for s in scored} == {"base"}

    def test_missing_prediction_scores_empty(self):
        instances = [instance("q1", "Metoprolol")]
        scored, missing, orphans = score_dataset(instances, [], model_id="base")
        assert scored[0].scores == ScoreVector(0, 0.0, 0.0, 0.0)
        assert missing == ("q1",)
        assert orphans == ()

    def test_orphan_predictions_listed(self):
        instances = [instance("q1", "Metoprolol")]
        predictions = [
            PredictionRecord("q1", "Metoprolol", 0.9, "base"),
            PredictionRecord("q9", "???", 0.9, "base"),
        ]
        _, _, orphans = score_dataset(instances, predictions)
        assert orphans == ("q9",)

    def test_conflicting_model_ids_rejected(self):
        instances = [instance("q1", "a")]
        predictions = [
            PredictionRecord("q1", "a", 0.9, "m1"),
            PredictionRecord("q2", "b", 0.9, "m2"),
        ]
        with pytest.raises(DataValidationError, match="multiple models"):
            score_dataset(instances, predictions)


class TestAttachVerdicts:
    def scored(self, qid="q1"):
        return ScoredInstance(
            question_id=qid,
            document_id="d",
            dataset_id="leaflets",
            model_id="base",
            question_key="ingredient",
            scores=ScoreVector(1, 1, 1, 1),
        )

    def test_majority_aggregation(self):
        ratings = [
            rating("q1", 1, rater="a"),
            rating("q1", 1, rater="b"),
            rating("q1", 0, rater="c"),
        ]
        (result,) = attach_verdicts([self.scored()], ratings)
        assert result.human == 1.0

    def test_majority_tie_counts_as_correct(self):
        ratings = [rating("q1", 1, rater="a"), rating("q1", 0, rater="b")]
        (result,) = attach_verdicts([self.scored()], ratings)
        assert result.human == 1.0

    def test_any_aggregation(self):
        ratings = [rating("q1", 0, rater="a"), rating("q1", 1, rater="b")]
        (result,) = attach_verdicts([self.scored()], ratings, aggregation="any")
        assert result.human == 1.0

    def test_unrated_instance_stays_none(self):
        (result,) = attach_verdicts([self.scored()], [rating("q9", 1)])
        assert result.human is None

    def test_resubmission_supersedes(self):
        ratings = [
            rating("q1", 1, ts="2025-11-03T12:00:00+00:00"),
            rating("q1", 0, ts="2025-11-03T12:05:00+00:00"),
        ]
        (result,) = attach_verdicts([self.scored()], ratings)
        assert result.human == 0.0

    def test_other_model_ratings_ignored(self):
        ratings = [HumanRating("q1", "tuned", "a", 1, "2025-11-03T12:00:00+00:00")]
        (result,) = attach_verdicts([self.scored()], ratings)
        assert result.human is None

    def test_unknown_aggregation_rejected(self):
        with pytest.raises(DataValidationError):
            attach_verdicts([self.scored()], [], aggregation="median")


def scored_instance(qid, key, vector, *, dataset="leaflets", model="base", human=None):
    return ScoredInstance(
        question_id=qid,
        document_id="d",
        dataset_id=dataset,
        model_id=model,
        question_key=key,
        scores=vector,
        human=human,
    )


class TestBuildRows:
    def test_grouping_by_question_key(self):
        scored = [
            scored_instance("q1", "ingredient", ScoreVector(1, 1, 1, 1)),
            scored_instance("q2", "ingredient", ScoreVector(0, 0, 0, 0)),
            scored_instance("q3", "manufacturer", ScoreVector(1, 1, 1, 1)),
        ]
        rows = build_rows(scored)
        assert [(r.question_key, r.n) for r in rows] == [
            ("ingredient", 2),
            ("manufacturer", 1),
        ]
        assert rows[0].em == 0.5

    def test_n_sums_to_total(self):
        scored = [
            scored_instance(f"q{i}", key, ScoreVector(1, 1, 1, 1))
            for i, key in enumerate(["a", "b", "a", "c", "b", "a"])
        ]
        rows = build_rows(scored)
        assert sum(r.n for r in rows) == len(scored)

    def test_group_by_model_and_dataset(self):
        scored = [
            scored_instance("q1", "a", ScoreVector(1, 1, 1, 1), model="base"),
            scored_instance("q2", "b", ScoreVector(0, 0, 0, 0), model="base"),
            scored_instance("q3", "a", ScoreVector(1, 1, 1, 1), model="tuned"),
        ]
        by_model = build_rows(scored, group_by="model")
        assert [(r.model_id, r.n, r.question_key) for r in by_model] == [
            ("base", 2, "all"),
            ("tuned", 1, "all"),
        ]
        by_dataset = build_rows(scored, group_by="dataset")
        assert [(r.dataset_id, r.n) for r in by_dataset] == [("leaflets", 3)]

    def test_human_column_requires_full_coverage(self):
        fully = [
            scored_instance("q1", "a", ScoreVector(1, 1, 1, 1), human=1.0),
            scored_instance("q2", "a", ScoreVector(0, 0, 0, 0), human=0.0),
        ]
        assert build_rows(fully)[0].human == 0.5
        partially = [
            scored_instance("q1", "a", ScoreVector(1, 1, 1, 1), human=1.0),
            scored_instance("q2", "a", ScoreVector(0, 0, 0, 0)),
        ]
        assert build_rows(partially)[0].human is None

    def test_unknown_group_rejected(self):
        with pytest.raises(DataValidationError):
            build_rows([], group_by="color")

    def test_empty_report_rejected(self):
        with pytest.raises(DataValidationError):
            build_report([])


class TestRenderers:
    def report(self):
        scored = [
            scored_instance("q1", "ingredient", ScoreVector(1, 0.9, 0.8, 0.7), human=1.0),
            scored_instance("q2", "ingredient", ScoreVector(0, 0.5, 0.4, 0.3), human=0.0),
        ]
        return build_report(scored, missing=("q7",), orphans=("q9",))

    def test_text_table_shape(self):
        text = render_text(self.report())
        lines = text.splitlines()
        assert lines[0].split() == [
            "Dataset", "Model", "Question", "n", "Lev", "EM", "F1", "ROUGE-L", "Human",
        ]
        row = lines[2].split()
        assert row == ["leaflets", "base", "ingredient", "2", "0.700", "0.500", "0.600", "0.500", "0.500"]
        assert "unanswered questions scored as empty (1): q7" in text
        assert "predictions without a question (1): q9" in text

    def test_csv_full_precision(self):
        scored = [scored_instance("q1", "a", ScoreVector(1, 1 / 3, 2 / 3, 0.5))]
        text = render_csv(build_report(scored))
        reader = csv.DictReader(io.StringIO(text))
        (entry,) = list(reader)
        assert float(entry["lev"]) == 1 / 3
        assert float(entry["f1"]) == 2 / 3
        assert entry["human"] == ""

    def test_json_round_trip(self):
        payload = json.loads(render_json(self.report()))
        assert payload["total_instances"] == 2
        (row,) = payload["rows"]
        assert row["lev"] == pytest.approx(0.7)
        assert payload["missing_predictions"] == ["q7"]

    def test_renderings_are_deterministic(self):
        report = self.report()
        assert render_text(report) == render_text(self.report())
        assert render_csv(report) == render_csv(self.report())
        assert render_json(report) == render_json(self.report())

    def test_formats_carry_identical_values(self):
        report = self.report()
        by_key_csv = {
            (r["dataset_id"], r["model_id"], r["question_key"]): r
            for r in csv.DictReader(io.StringIO(render_csv(report)))
        }
        json_rows = json.loads(render_json(report))["rows"]
        table_lines = render_text(report).splitlines()[2 : 2 + len(json_rows)]
        for row, line in zip(json_rows, table_lines):
            key = (row["dataset_id"], row["model_id"], row["question_key"])
            csv_row = by_key_csv[key]
            cells = line.split()
            for metric, cell_index in (("lev", 4), ("em", 5), ("f1", 6), ("rouge_l", 7)):
                assert round(float(csv_row[metric]), 6) == round(row[metric], 6)
                assert f"{row[metric]:.3f}" == cells[cell_index]


class TestPreScoredFixture:
    def test_reference_row_renders_exactly(self):
        scored = load_scores(FIXTURES / "prescored_ingredient_report.json")
        assert len(scored) == 35
        report = build_report(scored)
        text = render_text(report)
        row = text.splitlines()[2].split()
        assert row == [
            "Leaflets", "base", "Ingredient", "35",
            "0.960", "0.771", "0.849", "0.909", "0.971",
        ]

    def test_rendering_is_byte_stable(self):
        path = FIXTURES / "prescored_ingredient_report.json"
        first = render_text(build_report(load_scores(path)))
        second = render_text(build_report(load_scores(path)))
        assert first.encode() == second.encode()

    def test_malformed_scores_rejected(self, tmp_path):
        path = tmp_path / "scores.json"
        path.write_text(json.dumps({"rows": [{"em": 1}]}), encoding="utf-8")
        with pytest.raises(DataValidationError, match="row #0"):
            load_scores(path)


class TestReportRowValidation:
    def test_out_of_range_rejected(self):
        with pytest.raises(DataValidationError):
            ReportRow("d", "m", "k", 1, 1.5, 0.5, 0.5, 0.5)

    def test_zero_n_rejected(self):
        with pytest.raises(DataValidationError):
            ReportRow("d", "m", "k", 0, 0.5, 0.5, 0.5, 0.5)
