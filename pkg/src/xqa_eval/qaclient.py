"""Client-side inference procedures around an external QA endpoint.

Covers the four steps between a structured document and a stored
prediction: keyword-based scope restriction, sliding-window chunking,
querying the endpoint per chunk, and merging plus rule-based validation
of the returned answer candidates.

Wire protocol: HTTP POST {endpoint}/answer with JSON
{"question", "context", "top_k"} -> {"answers": [{"text", "start",
"end", "confidence"}]}; "start"/"end" are character offsets into the
submitted context.
"""

from __future__ import annotations

import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import httpx

from .errors import DataValidationError, TransportError
from .textnorm import normalize

DEFAULT_WINDOW = 512
DEFAULT_DOC_STRIDE = 128
DEFAULT_TOP_K = 3

_WORD = re.compile(r"\S+")


@dataclass(frozen=True)
class Region:
    """One text region of a structured document."""

    region_id: str
    text: str
    heading: str | None = None
    category: str | None = None

    def __post_init__(self) -> None:
        if not self.text:
            raise DataValidationError(f"region {self.region_id!r} has empty text")


@dataclass(frozen=True)
class DocumentRegions:
    """A document as an ordered list of regions."""

    document_id: str
    regions: tuple[Region, ...]

    def full_text(self) -> str:
        return "\n\n".join(region.text for region in self.regions)


@dataclass(frozen=True)
class ScopeRule:
    """Keywords that select candidate regions for one question key."""

    question_key: str
    keywords: tuple[str, ...]
    match_target: str = "both"

    def __post_init__(self) -> None:
        if not self.keywords:
            raise DataValidationError(
                f"scope rule {self.question_key!r} has no keywords"
            )
        if any(not normalize(k) for k in self.keywords):
            raise DataValidationError(
                f"scope rule {self.question_key!r} has a keyword that is empty "
                "after normalization"
            )
        if self.match_target not in ("heading", "body", "both"):
            raise DataValidationError(
                f"match_target must be heading, body or both, got {self.match_target!r}"
            )


@dataclass(frozen=True)
class ScopeResult:
    """Assembled scope text plus which regions produced it."""

    text: str
    region_ids: tuple[str, ...]
    fallback: bool


@dataclass(frozen=True)
class AnswerCandidate:
    """One endpoint answer mapped back to scope-text coordinates."""

    text: str
    confidence: float
    chunk_index: int
    char_span: tuple[int, int]

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise DataValidationError(
                f"confidence must be in [0, 1], got {self.confidence!r}"
            )
        start, end = self.char_span
        if not 0 <= start < end:
            raise DataValidationError(f"invalid char span ({start}, {end})")


@dataclass(frozen=True)
class ValidationRule:
    """Pattern and length constraints for answers to one question key."""

    question_key: str
    must_match: str | None = None
    must_not_match: str | None = None
    min_length: int | None = None
    max_length: int | None = None
    must_match_reason: str | None = None
    must_not_match_reason: str | None = None

    def __post_init__(self) -> None:
        if (
            self.must_match is None
            and self.must_not_match is None
            and self.min_length is None
            and self.max_length is None
        ):
            raise DataValidationError(
                f"validation rule {self.question_key!r} has no constraints"
            )


@dataclass(frozen=True)
class ValidationResult:
    accepted: bool
    reason: str | None = None


@dataclass(frozen=True)
class QueryConfig:
    """Chunking and transport parameters for endpoint queries."""

    window: int = DEFAULT_WINDOW
    doc_stride: int = DEFAULT_DOC_STRIDE
    top_k: int = DEFAULT_TOP_K
    timeout: float = 30.0
    parallelism: int = 1


@dataclass(frozen=True)
class QueryResult:
    candidates: tuple[AnswerCandidate, ...]
    partial: bool
    request_count: int


@dataclass(frozen=True)
class RuleEntry:
    """Everything configured for one question key."""

    question_key: str
    question: str | None = None
    scope: ScopeRule | None = None
    validation: ValidationRule | None = None
    criteria: str | None = None


def restrict_scope(doc: DocumentRegions, rule: ScopeRule) -> ScopeResult:
    """Select the regions whose heading or body mentions any rule keyword.

    Matching regions are joined with blank lines in document order. With no
    match at all the full document is returned and the fallback flag set.
    """
    keywords = [normalize(k) for k in rule.keywords]
    matched: list[Region] = []
    for region in doc.regions:
        targets: list[str] = []
        if rule.match_target in ("heading", "both"):
            targets.append(normalize(region.heading or ""))
        if rule.match_target in ("body", "both"):
            targets.append(normalize(region.text))
        if any(k in t for k in keywords for t in targets):
            matched.append(region)
    if not matched:
        return ScopeResult(
            text=doc.full_text(),
            region_ids=tuple(r.region_id for r in doc.regions),
            fallback=True,
        )
    return ScopeResult(
        text="\n\n".join(r.text for r in matched),
        region_ids=tuple(r.region_id for r in matched),
        fallback=False,
    )


def chunk_context(
    tokens: Sequence[object], window: int, doc_stride: int
) -> list[tuple[int, int]]:
    """Sliding-window token ranges covering the whole sequence.

    Chunk i covers [i*(window - doc_stride), min(that + window, N));
    generation stops with the first chunk whose end reaches N, so
    consecutive chunks overlap by exactly doc_stride tokens.
    """
    if doc_stride <= 0:
        raise DataValidationError(f"stride must be positive, got {doc_stride}")
    if doc_stride >= window:
        raise DataValidationError("stride must be smaller than window")
    total = len(tokens)
    step = window - doc_stride
    chunks: list[tuple[int, int]] = []
    start = 0
    while True:
        end = min(start + window, total)
        chunks.append((start, end))
        if start + window >= total:
            return chunks
        start += step


def _chunk_char_ranges(scope: str, window: int, doc_stride: int) -> list[tuple[int, int]]:
    """Character ranges of the token chunks, exact substrings of the scope."""
    words = list(_WORD.finditer(scope))
    ranges = []
    for token_start, token_end in chunk_context(words, window, doc_stride):
        if token_end == token_start:
            ranges.append((0, 0))
        else:
            ranges.append((words[token_start].start(), words[token_end - 1].end()))
    return ranges


def _parse_answers(
    payload: object, chunk_index: int, chunk_text: str, offset: int
) -> list[AnswerCandidate]:
    if not isinstance(payload, dict) or not isinstance(payload.get("answers"), list):
        raise TransportError(
            f"chunk {chunk_index}: response is not an object with an 'answers' list",
            chunk_index=chunk_index,
        )
    candidates = []
    for answer in payload["answers"]:
        try:
            text = str(answer["text"])
            start = int(answer["start"])
            end = int(answer["end"])
            confidence = float(answer["confidence"])
        except (KeyError, TypeError, ValueError) as exc:
            raise TransportError(
                f"chunk {chunk_index}: malformed answer entry: {exc}",
                chunk_index=chunk_index,
            ) from exc
        if not text or start == end:
            # no-answer signal, nothing to merge
            continue
        if not 0 <= start <= end <= len(chunk_text):
            raise TransportError(
                f"chunk {chunk_index}: span ({start}, {end}) out of bounds",
                chunk_index=chunk_index,
            )
        if chunk_text[start:end] != text:
            raise TransportError(
                f"chunk {chunk_index}: answer text does not equal the context slice",
                chunk_index=chunk_index,
            )
        if not 0.0 <= confidence <= 1.0:
            raise TransportError(
                f"chunk {chunk_index}: confidence {confidence} outside [0, 1]",
                chunk_index=chunk_index,
            )
        candidates.append(
            AnswerCandidate(
                text=text,
                confidence=confidence,
                chunk_index=chunk_index,
                char_span=(start + offset, end + offset),
            )
        )
    return candidates


def query_model(
    endpoint: str,
    question: str,
    scope: str,
    config: QueryConfig = QueryConfig(),
    *,
    client: httpx.Client | None = None,
) -> QueryResult:
    """Chunk the scope and query the endpoint once per chunk.

    Spans come back in scope coordinates. A chunk that times out is
    skipped and the result marked partial; an unreachable endpoint or a
    non-conforming response raises TransportError with the chunk index.
    """
    ranges = _chunk_char_ranges(scope, config.window, config.doc_stride)
    url = endpoint.rstrip("/") + "/answer"
    owned = client is None
    session = client if client is not None else httpx.Client()

    def fetch(index: int) -> list[AnswerCandidate] | None:
        start, end = ranges[index]
        chunk_text = scope[start:end]
        try:
            response = session.post(
                url,
                json={"question": question, "context": chunk_text, "top_k": config.top_k},
                timeout=config.timeout,
            )
        except httpx.TimeoutException:
            return None
        except httpx.HTTPError as exc:
            raise TransportError(
                f"chunk {index}: endpoint unreachable: {exc}", chunk_index=index
            ) from exc
        if response.status_code != 200:
            raise TransportError(
                f"chunk {index}: endpoint returned HTTP {response.status_code}",
                chunk_index=index,
            )
        try:
            payload = response.json()
        except (json.JSONDecodeError, ValueError) as exc:
            raise TransportError(
                f"chunk {index}: response is not valid JSON", chunk_index=index
            ) from exc
        return _parse_answers(payload, index, chunk_text, start)

    try:
        if config.parallelism <= 1:
            outcomes = [fetch(i) for i in range(len(ranges))]
        else:
            with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
                outcomes = list(pool.map(fetch, range(len(ranges))))
    finally:
        if owned:
            session.close()

    candidates: list[AnswerCandidate] = []
    partial = False
    for outcome in outcomes:
        if outcome is None:
            partial = True
        else:
            candidates.extend(outcome)
    return QueryResult(
        candidates=tuple(candidates),
        partial=partial,
        request_count=len(ranges),
    )


def candidates_merge(a: AnswerCandidate, b: AnswerCandidate) -> bool:
    """Two candidates merge when their normalized texts are equal or spans overlap."""
    if normalize(a.text) == normalize(b.text):
        return True
    return a.char_span[0] < b.char_span[1] and b.char_span[0] < a.char_span[1]


def merge_predictions(candidates: Sequence[AnswerCandidate]) -> list[AnswerCandidate]:
    """Collapse duplicate and overlapping candidates, best confidence first.

    Candidates are ranked by confidence (descending), then earlier span
    start, then text, then chunk index; each is kept only if it does not
    merge with an already-kept one. The empty list is the no-answer result.
    """
    ranked = sorted(
        candidates,
        key=lambda c: (-c.confidence, c.char_span[0], c.text, c.chunk_index),
    )
    kept: list[AnswerCandidate] = []
    for candidate in ranked:
        if not any(candidates_merge(candidate, keeper) for keeper in kept):
            kept.append(candidate)
    return kept


def validate_answer(answer: str, rule: ValidationRule) -> ValidationResult:
    """Check an answer against the configured constraints; reject is a value."""
    if rule.must_match is not None and not re.search(rule.must_match, answer):
        return ValidationResult(
            False,
            rule.must_match_reason
            or f"answer does not match required pattern {rule.must_match!r}",
        )
    if rule.must_not_match is not None and re.search(rule.must_not_match, answer):
        return ValidationResult(
            False,
            rule.must_not_match_reason
            or f"answer matches forbidden pattern {rule.must_not_match!r}",
        )
    if rule.min_length is not None and len(answer) < rule.min_length:
        return ValidationResult(
            False, f"answer shorter than {rule.min_length} characters"
        )
    if rule.max_length is not None and len(answer) > rule.max_length:
        return ValidationResult(
            False, f"answer longer than {rule.max_length} characters"
        )
    return ValidationResult(True, None)


def _read_config(path: str | Path, what: str) -> object:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataValidationError(f"cannot read {what} file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataValidationError(
            f"malformed {what} file {path}: line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc


def parse_rules(payload: object, source: str = "<inline>") -> dict[str, RuleEntry]:
    """Parse the per-question-key config: question text, scope, validation, criteria."""
    if not isinstance(payload, dict):
        raise DataValidationError(f"rules file {source} must be a JSON object")
    entries: dict[str, RuleEntry] = {}
    for key, raw in payload.items():
        if not isinstance(raw, dict):
            raise DataValidationError(
                f"rules file {source}: entry {key!r} must be an object"
            )
        scope = None
        if "scope" in raw:
            scope = ScopeRule(
                question_key=key,
                keywords=tuple(raw["scope"].get("keywords", ())),
                match_target=raw["scope"].get("match_target", "both"),
            )
        validation = None
        if "validation" in raw:
            v = raw["validation"]
            validation = ValidationRule(
                question_key=key,
                must_match=v.get("must_match"),
                must_not_match=v.get("must_not_match"),
                min_length=v.get("min_length"),
                max_length=v.get("max_length"),
                must_match_reason=v.get("must_match_reason"),
                must_not_match_reason=v.get("must_not_match_reason"),
            )
        entries[key] = RuleEntry(
            question_key=key,
            question=raw.get("question"),
            scope=scope,
            validation=validation,
            criteria=raw.get("criteria"),
        )
    return entries


def load_rules(path: str | Path) -> dict[str, RuleEntry]:
    return parse_rules(_read_config(path, "rules"), source=str(path))


def parse_documents(payload: object, source: str = "<inline>") -> list[DocumentRegions]:
    """Parse structured documents: {"documents": [{document_id, regions: [...]}]}."""
    if not isinstance(payload, dict) or not isinstance(payload.get("documents"), list):
        raise DataValidationError(
            f"documents file {source} must be an object with a 'documents' list"
        )
    documents = []
    for doc in payload["documents"]:
        try:
            regions = tuple(
                Region(
                    region_id=str(r["region_id"]),
                    text=str(r["text"]),
                    heading=r.get("heading"),
                    category=r.get("category"),
                )
                for r in doc["regions"]
            )
            documents.append(
                DocumentRegions(document_id=str(doc["document_id"]), regions=regions)
            )
        except (KeyError, TypeError) as exc:
            raise DataValidationError(
                f"documents file {source}: malformed document entry: {exc}"
            ) from exc
    return documents


def load_documents(path: str | Path) -> list[DocumentRegions]:
    return parse_documents(_read_config(path, "documents"), source=str(path))
