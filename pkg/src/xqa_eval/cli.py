"""Command line client for the evaluation service.

Every subcommand is a thin wrapper around one service endpoint. By default
the app is created in-process, so the CLI works standalone with no running
server; --server redirects the same requests to a remote instance instead.

Exit codes: 0 success, 1 usage error, 2 invalid data, 3 transport failure.
"""

from __future__ import annotations

import asyncio
import json
import sys
from pathlib import Path

import click
import httpx

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_TRANSPORT = 3

FORMAT_CHOICES = click.Choice(["text", "csv", "json"])


class ServiceFailure(Exception):
    """A service response that maps to a non-zero exit code."""

    def __init__(self, exit_code: int, message: str):
        super().__init__(message)
        self.exit_code = exit_code


def _post_local(path: str, payload: dict) -> httpx.Response:
    from .service import create_app

    transport = httpx.ASGITransport(app=create_app())

    async def go() -> httpx.Response:
        async with httpx.AsyncClient(
            transport=transport, base_url="http://service", timeout=None
        ) as client:
            return await client.post(path, json=payload)

    return asyncio.run(go())


def _post_remote(server: str, path: str, payload: dict) -> httpx.Response:
    try:
        with httpx.Client(base_url=server.rstrip("/"), timeout=600.0) as client:
            return client.post(path, json=payload)
    except httpx.HTTPError as exc:
        raise ServiceFailure(EXIT_TRANSPORT, f"cannot reach {server}: {exc}") from exc


def _call(server: str | None, path: str, payload: dict) -> dict:
    if server:
        response = _post_remote(server, path, payload)
    else:
        response = _post_local(path, payload)
    if response.status_code in (200, 201):
        return response.json()
    try:
        detail = response.json().get("detail", response.text)
    except (json.JSONDecodeError, ValueError):
        detail = response.text
    if not isinstance(detail, str):
        detail = json.dumps(detail, ensure_ascii=False)
    if response.status_code == 502:
        raise ServiceFailure(EXIT_TRANSPORT, detail)
    raise ServiceFailure(EXIT_DATA, detail)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise click.UsageError(message)


@click.group()
@click.option(
    "--server",
    default=None,
    metavar="URL",
    help="Send requests to a running service instead of working in-process.",
)
@click.pass_context
def cli(ctx: click.Context, server: str | None) -> None:
    """Score, calibrate, extract, split, and serve for extractive QA."""
    ctx.obj = server


@cli.command()
@click.option("--annotations", type=click.Path(), help="Gold question/answer file.")
@click.option(
    "--predictions",
    multiple=True,
    type=click.Path(),
    help="Model predictions file; repeat for several models.",
)
@click.option("--ratings", type=click.Path(), help="Human verdicts log (JSONL).")
@click.option("--scores", type=click.Path(), help="Pre-scored rows; skips rescoring.")
@click.option(
    "--group-by",
    type=click.Choice(["question_key", "model", "dataset"]),
    default="question_key",
    show_default=True,
)
@click.option(
    "--aggregation",
    type=click.Choice(["majority", "any"]),
    default="majority",
    show_default=True,
    help="How verdicts from several raters combine.",
)
@click.option("--raw", is_flag=True, help="Score without text normalization.")
@click.option("--format", "fmt", type=FORMAT_CHOICES, default="text", show_default=True)
@click.option("--out", type=click.Path(), help="Write output here instead of stdout.")
@click.pass_obj
def evaluate(
    server: str | None,
    annotations: str | None,
    predictions: tuple[str, ...],
    ratings: str | None,
    scores: str | None,
    group_by: str,
    aggregation: str,
    raw: bool,
    fmt: str,
    out: str | None,
) -> int:
    """Score predictions against gold answers and render a report."""
    _require(
        bool(scores) or (bool(annotations) and bool(predictions)),
        "pass --scores, or --annotations together with at least one --predictions",
    )
    payload: dict = {
        "group_by": group_by,
        "aggregation": aggregation,
        "normalized": not raw,
        "format": fmt,
    }
    if scores:
        payload["scores_path"] = scores
    else:
        payload["annotations_path"] = annotations
        payload["predictions_paths"] = list(predictions)
    if ratings:
        payload["ratings_path"] = ratings
    body = _call(server, "/api/evaluate", payload)
    _emit(body["rendered"], out)
    return EXIT_OK


def _fmt3(value: float) -> str:
    # round first so that tiny negatives do not render as -0.000
    return f"{round(value, 3) + 0.0:.3f}"


def _calibration_text(body: dict) -> str:
    lines = []
    for entry in body["reports"]:
        fit = entry["fit"]
        weights = fit["weights"]
        lines.append(
            f"{fit['dataset_id']}/{fit['model_id']}: "
            f"em={_fmt3(weights['w_em'])} lev={_fmt3(weights['w_lev'])} "
            f"f1={_fmt3(weights['w_f1'])} rouge={_fmt3(weights['w_rge'])} "
            f"intercept={_fmt3(weights['intercept'])} "
            f"r2={_fmt3(fit['r_squared'])} accuracy={_fmt3(fit['accuracy'])} "
            f"n={fit['sample_count']}"
        )
        cv = entry.get("cross_validation")
        if cv:
            lines.append(
                f"  {cv['fold_count']}-fold: in-sample accuracy "
                f"{_fmt3(cv['in_sample_accuracy'])}, held-out accuracy "
                f"{_fmt3(cv['out_of_sample_accuracy'])}"
            )
    if body.get("max_deviation") is not None:
        lines.append(
            f"max weight deviation across fits: {_fmt3(body['max_deviation'])}"
        )
    return "\n".join(lines) + "\n"


@cli.command()
@click.option("--annotations", type=click.Path(), required=True)
@click.option(
    "--predictions",
    multiple=True,
    type=click.Path(),
    required=True,
    help="Predictions file; repeat to fit and compare several models.",
)
@click.option("--ratings", type=click.Path(), required=True)
@click.option(
    "--aggregation",
    type=click.Choice(["majority", "any"]),
    default="majority",
    show_default=True,
)
@click.option("--k", type=int, default=None, help="Cross-validation folds.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--raw", is_flag=True, help="Score without text normalization.")
@click.option("--format", "fmt", type=FORMAT_CHOICES, default="text", show_default=True)
@click.option("--out", type=click.Path())
@click.pass_obj
def calibrate(
    server: str | None,
    annotations: str,
    predictions: tuple[str, ...],
    ratings: str,
    aggregation: str,
    k: int | None,
    seed: int,
    raw: bool,
    fmt: str,
    out: str | None,
) -> int:
    """Fit metric weights against human verdicts."""
    payload: dict = {
        "annotations_path": annotations,
        "predictions_paths": list(predictions),
        "ratings_path": ratings,
        "aggregation": aggregation,
        "normalized": not raw,
        "seed": seed,
    }
    if k is not None:
        payload["folds"] = k
    body = _call(server, "/api/calibrate", payload)
    if fmt == "json":
        rendered = json.dumps(body, ensure_ascii=False, indent=2, sort_keys=True) + "\n"
    elif fmt == "csv":
        rendered = body["comparison_csv"]
    else:
        rendered = _calibration_text(body)
    _emit(rendered, out)
    return EXIT_OK


@cli.command()
@click.option("--annotations", type=click.Path(), help="Derive document ids from here.")
@click.option(
    "--documents",
    type=click.Path(),
    help="JSON file: either a list of document ids or a structured documents file.",
)
@click.option("--k", type=int, default=1, show_default=True, help="Fold count; 1 = holdout.")
@click.option("--test-fraction", type=float, default=0.2, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), help="Write the plan here instead of stdout.")
@click.pass_obj
def split(
    server: str | None,
    annotations: str | None,
    documents: str | None,
    k: int,
    test_fraction: float,
    seed: int,
    out: str | None,
) -> int:
    """Produce a deterministic document-level train/test split plan."""
    _require(
        bool(annotations) != bool(documents),
        "pass exactly one of --annotations or --documents",
    )
    payload: dict = {"k": k, "test_fraction": test_fraction, "seed": seed}
    if annotations:
        payload["annotations_path"] = annotations
    else:
        try:
            parsed = json.loads(Path(documents).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ServiceFailure(EXIT_DATA, f"cannot read documents file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ServiceFailure(EXIT_DATA, f"malformed documents file: {exc}") from exc
        if isinstance(parsed, dict) and isinstance(parsed.get("documents"), list):
            payload["documents"] = [
                str(doc.get("document_id")) for doc in parsed["documents"]
            ]
        elif isinstance(parsed, list):
            payload["documents"] = [str(doc) for doc in parsed]
        else:
            raise ServiceFailure(
                EXIT_DATA,
                "documents file must be a JSON list of ids or contain a 'documents' list",
            )
    body = _call(server, "/api/split", payload)
    rendered = json.dumps(body, ensure_ascii=False, indent=2, sort_keys=True) + "\n"
    _emit(rendered, out)
    return EXIT_OK


@cli.command()
@click.option("--documents", type=click.Path(), required=True)
@click.option("--rules", type=click.Path(), required=True)
@click.option("--endpoint", required=True, metavar="URL", help="QA inference endpoint.")
@click.option("--model-id", required=True)
@click.option("--window", type=int, default=512, show_default=True)
@click.option("--doc-stride", type=int, default=128, show_default=True)
@click.option("--top-k", type=int, default=3, show_default=True)
@click.option("--timeout", type=float, default=30.0, show_default=True)
@click.option("--parallelism", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(), help="Write predictions here instead of stdout.")
@click.pass_obj
def extract(
    server: str | None,
    documents: str,
    rules: str,
    endpoint: str,
    model_id: str,
    window: int,
    doc_stride: int,
    top_k: int,
    timeout: float,
    parallelism: int,
    out: str | None,
) -> int:
    """Query a QA endpoint over scoped documents and collect predictions."""
    payload = {
        "documents_path": documents,
        "rules_path": rules,
        "endpoint": endpoint,
        "model_id": model_id,
        "window": window,
        "doc_stride": doc_stride,
        "top_k": top_k,
        "timeout": timeout,
        "parallelism": parallelism,
    }
    body = _call(server, "/api/extract", payload)
    rendered = json.dumps(body["predictions"], ensure_ascii=False, indent=2) + "\n"
    _emit(rendered, out)
    for question_id in body["partial"]:
        click.echo(f"partial: {question_id} (chunk skipped after timeout)", err=True)
    if body["errors"]:
        for error in body["errors"]:
            click.echo(
                f"error: {error['document_id']}/{error['question_key']}: {error['error']}",
                err=True,
            )
        return EXIT_TRANSPORT
    return EXIT_OK


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option(
    "--ui-dir",
    type=click.Path(),
    default=None,
    help="Frontend build directory; autodetected when omitted.",
)
@click.pass_obj
def serve(server: str | None, host: str, port: int, ui_dir: str | None) -> int:
    """Run the rating service until interrupted."""
    import uvicorn

    from .service import create_app

    _require(server is None, "serve starts its own instance; --server does not apply")
    uvicorn.run(create_app(ui_dir=ui_dir), host=host, port=port, log_level="info")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    try:
        result = cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except ServiceFailure as exc:
        click.echo(f"error: {exc}", err=True)
        return exc.exit_code
    return result if isinstance(result, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
