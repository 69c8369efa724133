"""Rating session state for the review service.

A session pairs one annotation set with one or more prediction sets and
hands out answer-judging tasks to raters. Every rater sees every task, in a
per-rater order derived from the session seed, so two raters working at the
same time do not converge on the same item. Verdicts go straight to an
append-only store on disk; the session itself keeps no verdict state and can
be rebuilt from the store after a restart.
"""

from __future__ import annotations

import random
import threading
from dataclasses import dataclass, field
from pathlib import Path

from ..datamodel import HumanRating, PredictionRecord, QAInstance, RatingStore, utc_now_iso
from ..errors import DataValidationError
from ..qaclient import RuleEntry

DEFAULT_CRITERIA = (
    "Mark the answer correct when it gives the asked-for information from "
    "the document without being misleading."
)


@dataclass(frozen=True)
class SessionTask:
    """One model answer awaiting human judgement."""

    question_id: str
    model_id: str
    question: str
    question_key: str
    context: str
    model_answer: str
    gold: tuple[str, ...]
    criteria: str

    @property
    def key(self) -> tuple[str, str]:
        return (self.question_id, self.model_id)


@dataclass(frozen=True)
class SessionConfig:
    seed: int = 0
    excerpt_margin: int = 500
    blind: bool = False
    full_context: bool = False

    def __post_init__(self) -> None:
        if self.excerpt_margin < 0:
            raise DataValidationError("excerpt_margin must not be negative")


def build_tasks(
    instances: list[QAInstance],
    prediction_sets: list[tuple[str, list[PredictionRecord]]],
    rules: dict[str, RuleEntry] | None = None,
) -> list[SessionTask]:
    """Cross instances with prediction sets, one task per answer.

    A question with no prediction from some model still yields a task with
    an empty answer; raters judge the absence like any other output.
    """
    if not instances:
        raise DataValidationError("session needs at least one annotated question")
    if not prediction_sets:
        raise DataValidationError("session needs at least one prediction set")
    seen_models: set[str] = set()
    tasks: list[SessionTask] = []
    for model_id, records in prediction_sets:
        if model_id in seen_models:
            raise DataValidationError(f"duplicate prediction set for model '{model_id}'")
        seen_models.add(model_id)
        by_question = {record.question_id: record for record in records}
        for instance in instances:
            record = by_question.get(instance.question_id)
            entry = rules.get(instance.question_key) if rules else None
            criteria = entry.criteria if entry is not None and entry.criteria else DEFAULT_CRITERIA
            tasks.append(
                SessionTask(
                    question_id=instance.question_id,
                    model_id=model_id,
                    question=instance.question,
                    question_key=instance.question_key,
                    context=instance.context,
                    model_answer=record.answer_text if record is not None else "",
                    gold=instance.gold.answers,
                    criteria=criteria,
                )
            )
    return tasks


class RatingSession:
    """Hands out tasks and records verdicts for one set of answers."""

    def __init__(
        self,
        session_id: str,
        tasks: list[SessionTask],
        store: RatingStore,
        config: SessionConfig | None = None,
    ) -> None:
        if not tasks:
            raise DataValidationError("session needs at least one task")
        self.session_id = session_id
        self.config = config or SessionConfig()
        self.store = store
        self._tasks = list(tasks)
        self._by_key = {task.key: task for task in self._tasks}
        if len(self._by_key) != len(self._tasks):
            raise DataValidationError("duplicate (question_id, model_id) task")
        self._orders: dict[str, list[SessionTask]] = {}
        self._seen_raters: set[str] = set()
        self._lock = threading.Lock()

    @property
    def models(self) -> list[str]:
        ordered: list[str] = []
        for task in self._tasks:
            if task.model_id not in ordered:
                ordered.append(task.model_id)
        return ordered

    def __len__(self) -> int:
        return len(self._tasks)

    # -- task handout -------------------------------------------------

    def _order_for(self, rater_id: str) -> list[SessionTask]:
        order = self._orders.get(rater_id)
        if order is None:
            order = list(self._tasks)
            random.Random(f"{self.config.seed}:{rater_id}").shuffle(order)
            self._orders[rater_id] = order
        return order

    def _rated_keys(self, rater_id: str) -> set[tuple[str, str]]:
        keys = set(self._by_key)
        return {
            (question_id, model_id)
            for (question_id, model_id, rater) in self.store.latest()
            if rater == rater_id and (question_id, model_id) in keys
        }

    def next_for(self, rater_id: str) -> dict | None:
        """The first task in this rater's order without a stored verdict.

        Returns ``None`` once every task has one, so a reloaded client
        resumes exactly where the store says it stopped.
        """
        if not rater_id:
            raise DataValidationError("rater must not be empty")
        with self._lock:
            self._seen_raters.add(rater_id)
            rated = self._rated_keys(rater_id)
            for task in self._order_for(rater_id):
                if task.key not in rated:
                    return self._payload(task, position=len(rated) + 1)
        return None

    def task_for(self, question_id: str, model_id: str, rater_id: str) -> dict:
        """A specific task, for revisiting an already-judged answer."""
        task = self._by_key.get((question_id, model_id))
        if task is None:
            raise LookupError(f"no task for question '{question_id}' and model '{model_id}'")
        with self._lock:
            self._seen_raters.add(rater_id)
            rated = self._rated_keys(rater_id)
        return self._payload(task, position=min(len(rated) + 1, len(self._tasks)))

    def _payload(self, task: SessionTask, position: int) -> dict:
        excerpt, start, end = self._excerpt(task)
        return {
            "question_id": task.question_id,
            "model_id": task.model_id,
            "question": task.question,
            "question_key": task.question_key,
            "context_excerpt": excerpt,
            "answer_start": start,
            "answer_end": end,
            "model_answer": task.model_answer,
            "gold_answers": [] if self.config.blind else list(task.gold),
            "criteria": task.criteria,
            "position": position,
            "total": len(self._tasks),
        }

    def _excerpt(self, task: SessionTask) -> tuple[str, int | None, int | None]:
        context = task.context
        answer = task.model_answer
        if self.config.full_context:
            excerpt = context
        else:
            margin = self.config.excerpt_margin
            found = context.find(answer) if answer else -1
            if found < 0:
                excerpt = context[: 2 * margin] if margin else context
            else:
                lo = max(0, found - margin)
                hi = min(len(context), found + len(answer) + margin)
                excerpt = context[lo:hi]
        if not answer:
            return excerpt, None, None
        local = excerpt.find(answer)
        if local < 0:
            return excerpt, None, None
        return excerpt, local, local + len(answer)

    # -- verdicts -----------------------------------------------------

    def submit(self, rater_id: str, question_id: str, model_id: str, verdict: int) -> dict:
        """Persist one verdict and report the rater's progress.

        Resubmitting the same task overwrites the earlier verdict; the
        store appends both lines but only the last one counts.
        """
        task = self._by_key.get((question_id, model_id))
        if task is None:
            raise LookupError(f"no task for question '{question_id}' and model '{model_id}'")
        rating = HumanRating(
            question_id=question_id,
            model_id=model_id,
            rater_id=rater_id,
            verdict=verdict,
            timestamp=utc_now_iso(),
        )
        with self._lock:
            self._seen_raters.add(rater_id)
            self.store.append(rating)
            rated = len(self._rated_keys(rater_id))
        return {
            "recorded": True,
            "question_id": question_id,
            "model_id": model_id,
            "rater_id": rater_id,
            "rated": rated,
            "total": len(self._tasks),
        }

    # -- progress and export -------------------------------------------

    def progress(self) -> dict:
        with self._lock:
            keys = set(self._by_key)
            latest = self.store.latest()
            raters = set(self._seen_raters)
            raters.update(
                rater
                for (question_id, model_id, rater) in latest
                if (question_id, model_id) in keys
            )
            per_rater: dict[str, dict[str, int]] = {}
            for rater in sorted(raters):
                rated = sum(
                    1
                    for (question_id, model_id, other) in latest
                    if other == rater and (question_id, model_id) in keys
                )
                per_rater[rater] = {"rated": rated, "remaining": len(self._tasks) - rated}
        rated_total = sum(entry["rated"] for entry in per_rater.values())
        return {
            "items": len(self._tasks),
            "raters": per_rater,
            "expected_total": len(self._tasks) * len(per_rater),
            "rated_total": rated_total,
        }

    def export_bytes(self) -> bytes:
        """The raw verdict log, byte for byte as it sits on disk."""
        path = Path(self.store.path)
        if not path.exists():
            return b""
        return path.read_bytes()


@dataclass
class SessionManager:
    """Registry of live rating sessions, keyed by id."""

    sessions: dict[str, RatingSession] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)
    _counter: int = 0

    def create(
        self,
        tasks: list[SessionTask],
        ratings_path: str | Path,
        *,
        session_id: str | None = None,
        config: SessionConfig | None = None,
    ) -> RatingSession:
        with self._lock:
            if session_id is None:
                self._counter += 1
                session_id = f"session-{self._counter}"
            if session_id in self.sessions:
                raise DataValidationError(f"session '{session_id}' already exists")
            session = RatingSession(session_id, tasks, RatingStore(ratings_path), config)
            self.sessions[session_id] = session
        return session

    def get(self, session_id: str) -> RatingSession:
        session = self.sessions.get(session_id)
        if session is None:
            raise LookupError(f"unknown session '{session_id}'")
        return session
