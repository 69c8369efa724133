"""Fit combined-metric weights against human verdicts by least squares.

The design matrix holds the four metric values plus an intercept column.
The solve goes through a QR factorization and back-substitution rather
than the normal equations, which keeps it stable for nearly collinear
metric columns.
"""

from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CollinearityError, DataValidationError
from .metrics import ScoreVector, WeightVector

MIN_SAMPLES = 5
FEATURE_COLUMNS = ("em", "lev", "f1", "rouge_l", "intercept")
DEFAULT_THRESHOLD = 0.5

Sample = tuple[ScoreVector, float]


@dataclass(frozen=True)
class FitReport:
    """Outcome of one weight fit on one (dataset, model) sample set."""

    weights: WeightVector
    r_squared: float
    accuracy: float
    sample_count: int
    dataset_id: str
    model_id: str
    residual_orthogonality: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.accuracy <= 1.0:
            raise DataValidationError(f"accuracy must be in [0, 1], got {self.accuracy!r}")
        if self.sample_count < MIN_SAMPLES:
            raise DataValidationError(
                f"a fit needs at least {MIN_SAMPLES} samples, got {self.sample_count}"
            )

    def to_payload(self) -> dict:
        return {
            "dataset_id": self.dataset_id,
            "model_id": self.model_id,
            "weights": {
                "w_em": self.weights.w_em,
                "w_lev": self.weights.w_lev,
                "w_f1": self.weights.w_f1,
                "w_rge": self.weights.w_rge,
                "intercept": self.weights.intercept,
            },
            "r_squared": self.r_squared,
            "accuracy": self.accuracy,
            "sample_count": self.sample_count,
            "residual_orthogonality": self.residual_orthogonality,
        }


@dataclass(frozen=True)
class CrossValidationReport:
    """In-sample vs held-out accuracy of the fitted weights."""

    fold_count: int
    in_sample_accuracy: float
    out_of_sample_accuracy: float
    seed: int

    def to_payload(self) -> dict:
        return {
            "fold_count": self.fold_count,
            "in_sample_accuracy": self.in_sample_accuracy,
            "out_of_sample_accuracy": self.out_of_sample_accuracy,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class WeightComparison:
    """Fitted weights side by side, with their pairwise disagreement."""

    reports: tuple[FitReport, ...]
    deviations: tuple[tuple[str, str, float], ...]
    max_deviation: float


def _design_matrix(samples: Sequence[Sample]) -> tuple[np.ndarray, np.ndarray]:
    rows = np.array([s.as_tuple() for s, _ in samples], dtype=float)
    targets = np.array([float(v) for _, v in samples], dtype=float)
    intercept = np.ones((rows.shape[0], 1))
    return np.hstack([rows, intercept]), targets


def _collinear_columns(design: np.ndarray) -> list[str]:
    full_rank = np.linalg.matrix_rank(design)
    names = []
    for j, name in enumerate(FEATURE_COLUMNS):
        reduced = np.delete(design, j, axis=1)
        if np.linalg.matrix_rank(reduced) == full_rank:
            names.append(name)
    return names


def _back_substitute(upper: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    n = upper.shape[0]
    coefficients = np.zeros(n)
    for i in range(n - 1, -1, -1):
        tail = upper[i, i + 1 :] @ coefficients[i + 1 :]
        coefficients[i] = (rhs[i] - tail) / upper[i, i]
    return coefficients


def fit_weights(
    samples: Sequence[Sample],
    *,
    dataset_id: str = "default",
    model_id: str = "unknown",
    threshold: float = DEFAULT_THRESHOLD,
) -> FitReport:
    """Ordinary least squares fit of the four metric weights plus intercept.

    Targets are usually binary human verdicts but any numeric target is
    accepted; accuracy compares thresholded predictions against thresholded
    targets.

    Raises CollinearityError naming the dependent columns when the design
    matrix is rank deficient, and DataValidationError for undersized input.
    """
    if len(samples) < MIN_SAMPLES:
        raise DataValidationError(
            f"too few samples: a fit needs at least {MIN_SAMPLES}, got {len(samples)}"
        )
    design, targets = _design_matrix(samples)
    rank = np.linalg.matrix_rank(design)
    if rank < design.shape[1]:
        columns = _collinear_columns(design)
        raise CollinearityError(
            "design matrix is rank deficient; collinear columns: "
            + ", ".join(columns),
            columns=columns,
        )
    q, r = np.linalg.qr(design)
    coefficients = _back_substitute(r, q.T @ targets)

    predicted = design @ coefficients
    residual = targets - predicted
    residual_scale = np.linalg.norm(residual) * np.linalg.norm(targets)
    dots = np.abs(design.T @ residual)
    column_norms = np.linalg.norm(design, axis=0)
    orthogonality = float(np.max(dots / (column_norms * max(residual_scale, 1.0))))

    ss_res = float(residual @ residual)
    centered = targets - targets.mean()
    ss_tot = float(centered @ centered)
    if ss_tot == 0.0:
        r_squared = 1.0 if ss_res <= 1e-24 * len(samples) else 0.0
    else:
        r_squared = 1.0 - ss_res / ss_tot

    verdict_bits = [1 if t >= threshold else 0 for t in targets]
    acc = accuracy(list(predicted), verdict_bits, threshold=threshold)

    weights = WeightVector(
        w_em=float(coefficients[0]),
        w_lev=float(coefficients[1]),
        w_f1=float(coefficients[2]),
        w_rge=float(coefficients[3]),
        intercept=float(coefficients[4]),
    )
    return FitReport(
        weights=weights,
        r_squared=r_squared,
        accuracy=acc,
        sample_count=len(samples),
        dataset_id=dataset_id,
        model_id=model_id,
        residual_orthogonality=orthogonality,
    )


def predict_helpfulness(scores: ScoreVector, weights: WeightVector) -> float:
    """Raw regression output: intercept + sum of weighted metric values.

    Unclamped, unlike the normalized combination in metrics.weighted_average.
    """
    return weights.intercept + sum(
        w * v for w, v in zip(weights.metric_weights(), scores.as_tuple())
    )


def accuracy(
    predicted: Sequence[float],
    verdicts: Sequence[int],
    threshold: float = DEFAULT_THRESHOLD,
) -> float:
    """Fraction of samples where thresholded prediction matches the verdict."""
    if len(predicted) != len(verdicts):
        raise DataValidationError(
            f"length mismatch: {len(predicted)} predictions vs {len(verdicts)} verdicts"
        )
    if not predicted:
        raise DataValidationError("cannot compute accuracy of an empty sample set")
    for verdict in verdicts:
        if verdict not in (0, 1):
            raise DataValidationError(f"verdict must be 0 or 1, got {verdict!r}")
    hits = sum(
        1 for p, v in zip(predicted, verdicts) if (1 if p >= threshold else 0) == v
    )
    return hits / len(predicted)


def compare_weights(reports: Sequence[FitReport]) -> WeightComparison:
    """Weight table over fits plus pairwise max-abs-weight deviations."""
    if len(reports) < 2:
        raise DataValidationError("weight comparison needs at least 2 fit reports")
    deviations = []
    worst = 0.0
    for i, left in enumerate(reports):
        for right in reports[i + 1 :]:
            delta = max(
                abs(a - b)
                for a, b in zip(
                    left.weights.metric_weights(), right.weights.metric_weights()
                )
            )
            left_key = f"{left.dataset_id}/{left.model_id}"
            right_key = f"{right.dataset_id}/{right.model_id}"
            deviations.append((left_key, right_key, delta))
            worst = max(worst, delta)
    return WeightComparison(
        reports=tuple(reports),
        deviations=tuple(deviations),
        max_deviation=worst,
    )


def comparison_csv(reports: Sequence[FitReport]) -> str:
    """Render fit reports as CSV for external bar-chart plotting."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(
        [
            "dataset_id",
            "model_id",
            "w_em",
            "w_lev",
            "w_f1",
            "w_rge",
            "intercept",
            "r_squared",
            "accuracy",
        ]
    )
    for report in reports:
        w = report.weights
        writer.writerow(
            [
                report.dataset_id,
                report.model_id,
                w.w_em,
                w.w_lev,
                w.w_f1,
                w.w_rge,
                w.intercept,
                report.r_squared,
                report.accuracy,
            ]
        )
    return buffer.getvalue()


def cross_validate(
    samples: Sequence[Sample],
    k: int,
    seed: int,
    *,
    dataset_id: str = "default",
    model_id: str = "unknown",
) -> CrossValidationReport:
    """k-fold accuracy of the fit: full-fit in-sample vs pooled held-out."""
    if k < 2:
        raise DataValidationError(f"cross-validation needs k >= 2, got {k}")
    if k > len(samples):
        raise DataValidationError(
            f"cannot make {k} folds from {len(samples)} samples"
        )
    indices = list(range(len(samples)))
    random.Random(seed).shuffle(indices)
    base, extra = divmod(len(indices), k)
    folds: list[list[int]] = []
    cursor = 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        folds.append(indices[cursor : cursor + size])
        cursor += size

    full = fit_weights(samples, dataset_id=dataset_id, model_id=model_id)
    hits = 0
    for fold in folds:
        held_out = set(fold)
        train = [samples[i] for i in indices if i not in held_out]
        if len(train) < MIN_SAMPLES:
            raise DataValidationError(
                f"fold leaves only {len(train)} training samples; need {MIN_SAMPLES}"
            )
        fitted = fit_weights(train, dataset_id=dataset_id, model_id=model_id)
        for i in fold:
            scores, target = samples[i]
            predicted = predict_helpfulness(scores, fitted.weights)
            wanted = 1 if float(target) >= DEFAULT_THRESHOLD else 0
            hits += int((1 if predicted >= DEFAULT_THRESHOLD else 0) == wanted)
    return CrossValidationReport(
        fold_count=k,
        in_sample_accuracy=full.accuracy,
        out_of_sample_accuracy=hits / len(samples),
        seed=seed,
    )
