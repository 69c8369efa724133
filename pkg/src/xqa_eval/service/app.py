"""HTTP service exposing evaluation, calibration, and human rating.

The app wraps the core package. Rating endpoints manage interactive
sessions backed by an append-only verdict log; batch endpoints run one
evaluation, calibration, split, or extraction per request. The bundled CLI
talks to this same app in-process, so every capability lives here once.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import httpx
from fastapi import FastAPI, Query, Request, Response
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from .. import __version__
from ..calibration import FitReport, comparison_csv, compare_weights, cross_validate, fit_weights
from ..datamodel import (
    PredictionRecord,
    QAInstance,
    load_annotations,
    load_ratings,
    make_splits,
    parse_annotations,
    parse_predictions,
    parse_rating,
    read_predictions,
)
from ..errors import DataValidationError, TransportError
from ..qaclient import (
    QueryConfig,
    RuleEntry,
    ScopeResult,
    load_documents,
    load_rules,
    merge_predictions,
    parse_documents,
    parse_rules,
    query_model,
    restrict_scope,
    validate_answer,
)
from ..reporting import (
    RENDERERS,
    attach_verdicts,
    build_report,
    load_scores,
    parse_scores,
    render_json,
    score_dataset,
)
from .schemas import (
    CalibrateRequest,
    CalibrateResponse,
    CalibrationEntry,
    EvaluateRequest,
    EvaluateResponse,
    ExtractRequest,
    ExtractResponse,
    HealthResponse,
    NextTaskResponse,
    ProgressResponse,
    SessionCreated,
    SessionCreateRequest,
    SplitRequest,
    TaskPayload,
    VerdictAck,
    VerdictRequest,
)
from .sessions import RatingSession, SessionConfig, SessionManager, build_tasks

_PLACEHOLDER_PAGE = """<!doctype html>
<html lang="en">
<head><meta charset="utf-8"><title>rating service</title></head>
<body>
<h1>Rating service is running</h1>
<p>No frontend build was found. The API is live under <code>/api</code>;
build the frontend and restart, or point --ui-dir at a build directory.</p>
</body>
</html>
"""


# ---------------------------------------------------------------------------
# input resolution


def _resolve_annotations(
    inline: dict[str, Any] | None, path: str | None
) -> list[QAInstance]:
    if inline is not None:
        return parse_annotations(inline)
    if path:
        return load_annotations(path)
    raise DataValidationError("pass annotations inline or as annotations_path")


def _resolve_prediction_sets(
    inline: list[dict[str, Any]], paths: list[str]
) -> list[tuple[str, list[PredictionRecord]]]:
    sets = [parse_predictions(payload) for payload in inline]
    sets.extend(read_predictions(path) for path in paths)
    if not sets:
        raise DataValidationError("pass predictions inline or as predictions_paths")
    return sets


def _resolve_ratings(inline: list[dict[str, Any]] | None, path: str | None):
    if inline is not None:
        return [parse_rating(entry, f"entry #{i}") for i, entry in enumerate(inline)]
    if path:
        return load_ratings(path)
    return None


def _resolve_rules(
    inline: dict[str, Any] | None, path: str | None
) -> dict[str, RuleEntry] | None:
    if inline is not None:
        return parse_rules(inline)
    if path:
        return load_rules(path)
    return None


def _resolve_documents(inline: list[dict[str, Any]] | None, path: str | None):
    if inline is not None:
        return parse_documents({"documents": inline})
    if path:
        return load_documents(path)
    raise DataValidationError("pass documents inline or as documents_path")


def _find_ui_dir(explicit: str | Path | None) -> Path | None:
    if explicit is not None:
        path = Path(explicit)
        if not (path / "index.html").is_file():
            raise DataValidationError(f"UI directory {path} has no index.html")
        return path
    candidates = (
        Path.cwd() / "frontend" / "dist",
        Path(__file__).resolve().parents[3] / "frontend" / "dist",
    )
    for candidate in candidates:
        if (candidate / "index.html").is_file():
            return candidate
    return None


# ---------------------------------------------------------------------------
# batch operations, shared by HTTP handlers and usable in-process


def run_evaluate(request: EvaluateRequest) -> EvaluateResponse:
    if request.scores is not None or request.scores_path:
        if request.scores is not None:
            scored = parse_scores(request.scores)
        else:
            scored = load_scores(request.scores_path)
        missing: tuple[str, ...] = ()
        orphans: tuple[str, ...] = ()
    else:
        instances = _resolve_annotations(request.annotations, request.annotations_path)
        prediction_sets = _resolve_prediction_sets(
            request.predictions, request.predictions_paths
        )
        scored = []
        missing_all: list[str] = []
        orphans_all: list[str] = []
        for model_id, records in prediction_sets:
            part, part_missing, part_orphans = score_dataset(
                instances, records, model_id=model_id, normalized=request.normalized
            )
            scored.extend(part)
            missing_all.extend(part_missing)
            orphans_all.extend(part_orphans)
        missing = tuple(missing_all)
        orphans = tuple(orphans_all)
    ratings = _resolve_ratings(request.ratings, request.ratings_path)
    if ratings is not None:
        scored = attach_verdicts(scored, ratings, aggregation=request.aggregation)
    report = build_report(scored, missing, orphans, group_by=request.group_by)
    rendered = RENDERERS[request.format](report)
    payload = json.loads(render_json(report))
    return EvaluateResponse(
        rows=payload["rows"],
        total_instances=payload["total_instances"],
        missing_predictions=payload["missing_predictions"],
        orphan_predictions=payload["orphan_predictions"],
        rendered=rendered,
        format=request.format,
    )


def run_calibrate(request: CalibrateRequest) -> CalibrateResponse:
    instances = _resolve_annotations(request.annotations, request.annotations_path)
    prediction_sets = _resolve_prediction_sets(
        request.predictions, request.predictions_paths
    )
    ratings = _resolve_ratings(request.ratings, request.ratings_path)
    if ratings is None:
        raise DataValidationError("calibration needs ratings or ratings_path")
    entries: list[CalibrationEntry] = []
    fits: list[FitReport] = []
    for model_id, records in prediction_sets:
        scored, _, _ = score_dataset(
            instances, records, model_id=model_id, normalized=request.normalized
        )
        with_verdicts = attach_verdicts(scored, ratings, aggregation=request.aggregation)
        samples = [
            (item.scores, float(item.human))
            for item in with_verdicts
            if item.human is not None
        ]
        if not samples:
            raise DataValidationError(f"no rated answers for model '{model_id}'")
        dataset_id = scored[0].dataset_id if scored else "default"
        fit = fit_weights(samples, dataset_id=dataset_id, model_id=model_id)
        fits.append(fit)
        cv_payload = None
        if request.folds is not None:
            cv = cross_validate(
                samples,
                request.folds,
                request.seed,
                dataset_id=dataset_id,
                model_id=model_id,
            )
            cv_payload = cv.to_payload()
        entries.append(CalibrationEntry(fit=fit.to_payload(), cross_validation=cv_payload))
    max_deviation = None
    if len(fits) >= 2:
        max_deviation = compare_weights(fits).max_deviation
    return CalibrateResponse(
        reports=entries,
        comparison_csv=comparison_csv(fits),
        max_deviation=max_deviation,
    )


def run_split(request: SplitRequest) -> dict[str, Any]:
    if request.documents is not None:
        documents = request.documents
    else:
        instances = _resolve_annotations(request.annotations, request.annotations_path)
        documents = [instance.document_id for instance in instances]
    plan = make_splits(documents, request.k, request.test_fraction, request.seed)
    return plan.to_payload()


def run_extract(request: ExtractRequest) -> ExtractResponse:
    documents = _resolve_documents(request.documents, request.documents_path)
    rules = _resolve_rules(request.rules, request.rules_path)
    if rules is None:
        raise DataValidationError("pass rules inline or as rules_path")
    askable = {key: entry for key, entry in rules.items() if entry.question}
    if not askable:
        raise DataValidationError("no rule defines a question to ask")
    config = QueryConfig(
        window=request.window,
        doc_stride=request.doc_stride,
        top_k=request.top_k,
        timeout=request.timeout,
        parallelism=request.parallelism,
    )
    predictions: dict[str, Any] = {"model_id": request.model_id}
    errors: list[dict[str, str]] = []
    partial: list[str] = []
    with httpx.Client() as client:
        for document in documents:
            for key, entry in askable.items():
                question_id = f"{document.document_id}:{key}"
                if entry.scope is not None:
                    scope = restrict_scope(document, entry.scope)
                else:
                    scope = ScopeResult(
                        text=document.full_text(),
                        region_ids=tuple(r.region_id for r in document.regions),
                        fallback=False,
                    )
                try:
                    result = query_model(
                        request.endpoint, entry.question, scope.text, config, client=client
                    )
                except TransportError as exc:
                    errors.append(
                        {
                            "document_id": document.document_id,
                            "question_key": key,
                            "error": str(exc),
                        }
                    )
                    continue
                if result.partial:
                    partial.append(question_id)
                merged = merge_predictions(result.candidates)
                top = merged[0] if merged else None
                if top is None:
                    predictions[question_id] = {"text": "", "confidence": 0.0}
                    continue
                entry_payload: dict[str, Any] = {
                    "text": top.text,
                    "confidence": top.confidence,
                }
                if entry.validation is not None:
                    verdict = validate_answer(top.text, entry.validation)
                    if not verdict.accepted:
                        entry_payload = {
                            "text": "",
                            "confidence": top.confidence,
                            "rejection_reason": verdict.reason,
                        }
                predictions[question_id] = entry_payload
    return ExtractResponse(predictions=predictions, errors=errors, partial=partial)


# ---------------------------------------------------------------------------
# app factory


def create_app(
    *, manager: SessionManager | None = None, ui_dir: str | Path | None = None
) -> FastAPI:
    app = FastAPI(title="extractive QA evaluation service", version=__version__)
    app.state.manager = manager if manager is not None else SessionManager()

    @app.exception_handler(DataValidationError)
    def handle_data_error(request: Request, exc: DataValidationError) -> JSONResponse:
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.exception_handler(TransportError)
    def handle_transport_error(request: Request, exc: TransportError) -> JSONResponse:
        return JSONResponse(status_code=502, content={"detail": str(exc)})

    @app.exception_handler(LookupError)
    def handle_lookup_error(request: Request, exc: LookupError) -> JSONResponse:
        detail = exc.args[0] if exc.args and isinstance(exc.args[0], str) else str(exc)
        return JSONResponse(status_code=404, content={"detail": detail})

    @app.exception_handler(ValueError)
    def handle_value_error(request: Request, exc: ValueError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    def sessions() -> SessionManager:
        return app.state.manager

    @app.get("/api/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    # -- rating workflow ------------------------------------------------

    @app.post("/api/sessions", response_model=SessionCreated, status_code=201)
    def create_session(request: SessionCreateRequest) -> SessionCreated:
        instances = _resolve_annotations(request.annotations, request.annotations_path)
        prediction_sets = _resolve_prediction_sets(
            request.predictions, request.predictions_paths
        )
        rules = _resolve_rules(request.rules, request.rules_path)
        tasks = build_tasks(instances, prediction_sets, rules)
        config = SessionConfig(
            seed=request.seed,
            excerpt_margin=request.excerpt_margin,
            blind=request.blind,
            full_context=request.full_context,
        )
        session = sessions().create(
            tasks,
            request.ratings_path,
            session_id=request.session_id,
            config=config,
        )
        return SessionCreated(
            session_id=session.session_id, items=len(session), models=session.models
        )

    @app.get("/api/session/{session_id}/next", response_model=NextTaskResponse)
    def next_task(
        session_id: str, rater: str = Query(min_length=1)
    ) -> NextTaskResponse:
        session: RatingSession = sessions().get(session_id)
        payload = session.next_for(rater)
        if payload is None:
            return NextTaskResponse(done=True, task=None)
        return NextTaskResponse(done=False, task=TaskPayload(**payload))

    @app.get("/api/session/{session_id}/task", response_model=NextTaskResponse)
    def one_task(
        session_id: str,
        rater: str = Query(min_length=1),
        question_id: str = Query(min_length=1),
        model_id: str = Query(min_length=1),
    ) -> NextTaskResponse:
        session = sessions().get(session_id)
        payload = session.task_for(question_id, model_id, rater)
        return NextTaskResponse(done=False, task=TaskPayload(**payload))

    @app.post("/api/session/{session_id}/verdict", response_model=VerdictAck)
    def submit_verdict(session_id: str, request: VerdictRequest) -> VerdictAck:
        session = sessions().get(session_id)
        ack = session.submit(
            request.rater_id, request.question_id, request.model_id, request.verdict
        )
        return VerdictAck(**ack)

    @app.get("/api/session/{session_id}/progress", response_model=ProgressResponse)
    def progress(session_id: str) -> ProgressResponse:
        return ProgressResponse(**sessions().get(session_id).progress())

    @app.get("/api/session/{session_id}/export")
    def export(session_id: str) -> Response:
        session = sessions().get(session_id)
        return Response(
            content=session.export_bytes(),
            media_type="application/x-ndjson",
            headers={
                "Content-Disposition": f'attachment; filename="{session_id}-ratings.jsonl"'
            },
        )

    # -- batch operations ------------------------------------------------

    @app.post("/api/evaluate", response_model=EvaluateResponse)
    def evaluate(request: EvaluateRequest) -> EvaluateResponse:
        return run_evaluate(request)

    @app.post("/api/calibrate", response_model=CalibrateResponse)
    def calibrate(request: CalibrateRequest) -> CalibrateResponse:
        return run_calibrate(request)

    @app.post("/api/split")
    def split(request: SplitRequest) -> dict[str, Any]:
        return run_split(request)

    @app.post("/api/extract", response_model=ExtractResponse)
    def extract(request: ExtractRequest) -> ExtractResponse:
        return run_extract(request)

    # -- frontend ---------------------------------------------------------

    ui = _find_ui_dir(ui_dir)
    if ui is not None:
        app.mount("/", StaticFiles(directory=ui, html=True), name="ui")
    else:

        @app.get("/", response_class=HTMLResponse, include_in_schema=False)
        def placeholder() -> str:
            return _PLACEHOLDER_PAGE

    return app
