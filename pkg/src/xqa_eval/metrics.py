"""Answer-quality metrics for extractive QA predictions.

Implements four per-question metrics (exact match, Levenshtein similarity,
token F1, ROUGE-L) over the de-duplicated gold answers of a question, a
weighted combination of the four, and corpus-level averaging.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import DataValidationError
from .textnorm import normalize, tokenize, word_set

METRIC_NAMES = ("em", "lev", "f1", "rouge_l")


@dataclass(frozen=True)
class GoldAnswerSet:
    """Annotator answers for one question, de-duplicated after normalization."""

    question_id: str
    answers: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.answers:
            raise DataValidationError(
                f"gold answer set for question {self.question_id!r} is empty"
            )
        normalized = [normalize(a) for a in self.answers]
        if len(set(normalized)) != len(normalized):
            raise DataValidationError(
                f"gold answers for question {self.question_id!r} contain "
                "duplicates after normalization"
            )

    @classmethod
    def from_answers(cls, question_id: str, answers: Iterable[str]) -> GoldAnswerSet:
        """Build a set from raw annotator answers, dropping normalized duplicates."""
        seen: set[str] = set()
        kept: list[str] = []
        for answer in answers:
            key = normalize(answer)
            if key in seen:
                continue
            seen.add(key)
            kept.append(answer)
        return cls(question_id, tuple(kept))

    def __len__(self) -> int:
        return len(self.answers)


@dataclass(frozen=True)
class ScoreVector:
    """The four automated metric values for one (prediction, gold set) pair."""

    em: int
    lev: float
    f1: float
    rouge_l: float

    def __post_init__(self) -> None:
        if self.em not in (0, 1):
            raise DataValidationError(f"em must be 0 or 1, got {self.em!r}")
        for name in ("lev", "f1", "rouge_l"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise DataValidationError(f"{name} must be in [0, 1], got {value!r}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (float(self.em), self.lev, self.f1, self.rouge_l)


@dataclass(frozen=True)
class WeightVector:
    """Weights of the combined metric; fitted weights may be negative."""

    w_em: float
    w_lev: float
    w_f1: float
    w_rge: float
    intercept: float = 0.0

    def metric_weights(self) -> tuple[float, float, float, float]:
        return (self.w_em, self.w_lev, self.w_f1, self.w_rge)


@dataclass(frozen=True)
class CorpusScores:
    """Per-metric means over a question set."""

    em: float
    lev: float
    f1: float
    rouge_l: float
    question_count: int


def levenshtein_distance(a: str, b: str) -> int:
    """Minimal number of character insertions, deletions and substitutions.

    Symmetric; 0 iff the strings are equal.
    """
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(
                min(
                    previous[j] + 1,        # delete from a
                    current[j - 1] + 1,     # insert into a
                    previous[j - 1] + (ca != cb),
                )
            )
        previous = current
    return previous[-1]


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Length of the longest common subsequence of two token sequences."""
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for x in a:
        current = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[-1]


def exact_match(pred: str, gold: GoldAnswerSet) -> int:
    """1 iff the normalized prediction equals any normalized gold answer."""
    target = normalize(pred)
    return int(any(normalize(answer) == target for answer in gold.answers))


def levenshtein_similarity(pred: str, gold: GoldAnswerSet, *, normalized: bool = True) -> float:
    """Best edit-distance similarity of the prediction to any gold answer.

    Per answer: 1 - distance / max(len); a pair of empty strings scores 1.
    The result is the maximum over the gold set and lies in [0, 1].
    """
    pred_text = normalize(pred) if normalized else pred
    best = 0.0
    for answer in gold.answers:
        answer_text = normalize(answer) if normalized else answer
        longest = max(len(pred_text), len(answer_text))
        if longest == 0:
            score = 1.0
        else:
            score = 1.0 - levenshtein_distance(pred_text, answer_text) / longest
        best = max(best, score)
    return best


def token_f1(pred: str, gold: GoldAnswerSet, *, normalized: bool = True) -> float:
    """Word-set F1 of the prediction, averaged over all gold answers.

    Per answer: harmonic mean of precision (shared distinct words over the
    prediction's distinct words) and recall (shared over the answer's
    distinct words); 0 when the sets are disjoint, 1 when both are empty.
    """
    pred_text = normalize(pred) if normalized else pred
    pred_words = word_set(tokenize(pred_text))
    total = 0.0
    for answer in gold.answers:
        answer_text = normalize(answer) if normalized else answer
        answer_words = word_set(tokenize(answer_text))
        if not pred_words and not answer_words:
            total += 1.0
            continue
        shared = len(pred_words & answer_words)
        if shared == 0:
            continue
        precision = shared / len(pred_words)
        recall = shared / len(answer_words)
        total += 2.0 * precision * recall / (precision + recall)
    return total / len(gold.answers)


def rouge_l(pred: str, gold: GoldAnswerSet, *, normalized: bool = True) -> float:
    """Best LCS-based F-measure of the prediction against any gold answer.

    Per answer: P = LCS / |prediction tokens|, R = LCS / |answer tokens|,
    F = 2PR / (P + R); 0 when the LCS is empty, 1 when both sequences are.
    """
    pred_text = normalize(pred) if normalized else pred
    pred_tokens = tokenize(pred_text)
    best = 0.0
    for answer in gold.answers:
        answer_text = normalize(answer) if normalized else answer
        answer_tokens = tokenize(answer_text)
        if not pred_tokens and not answer_tokens:
            score = 1.0
        else:
            common = lcs_length(pred_tokens, answer_tokens)
            if common == 0:
                score = 0.0
            else:
                precision = common / len(pred_tokens)
                recall = common / len(answer_tokens)
                score = 2.0 * precision * recall / (precision + recall)
        best = max(best, score)
    return best


def score_instance(pred: str, gold: GoldAnswerSet, *, normalized: bool = True) -> ScoreVector:
    """All four metrics for one (prediction, gold set) pair.

    ``normalized=False`` scores Levenshtein/F1/ROUGE-L on raw text; exact
    match always compares normalized text.
    """
    return ScoreVector(
        em=exact_match(pred, gold),
        lev=levenshtein_similarity(pred, gold, normalized=normalized),
        f1=token_f1(pred, gold, normalized=normalized),
        rouge_l=rouge_l(pred, gold, normalized=normalized),
    )


def weighted_average(
    scores: ScoreVector | CorpusScores | Sequence[float], weights: WeightVector
) -> float:
    """Weight-normalized combination of the four metric values.

    Computes sum(w_l * L_l) / sum(w_l) over the four metric weights; the
    intercept is not part of this form. Invariant under scaling all weights
    by a positive constant. Raises for a zero weight sum.

    Accepts a per-question ScoreVector, corpus-level means, or a plain
    (em, lev, f1, rouge_l) sequence.
    """
    if isinstance(scores, ScoreVector):
        values: tuple[float, ...] = scores.as_tuple()
    elif isinstance(scores, CorpusScores):
        values = (scores.em, scores.lev, scores.f1, scores.rouge_l)
    else:
        values = tuple(float(v) for v in scores)
        if len(values) != 4:
            raise ValueError(f"expected 4 metric values, got {len(values)}")
    metric_weights = weights.metric_weights()
    denominator = sum(metric_weights)
    if denominator == 0.0:
        raise ValueError("degenerate weights")
    numerator = sum(w * v for w, v in zip(metric_weights, values))
    return numerator / denominator


def aggregate(per_question: Sequence[ScoreVector]) -> CorpusScores:
    """Arithmetic mean of each metric over all scored questions."""
    if not per_question:
        raise ValueError("cannot aggregate an empty score list")
    count = len(per_question)
    return CorpusScores(
        em=sum(s.em for s in per_question) / count,
        lev=sum(s.lev for s in per_question) / count,
        f1=sum(s.f1 for s in per_question) / count,
        rouge_l=sum(s.rouge_l for s in per_question) / count,
        question_count=count,
    )
