"""Stand-in QA inference endpoint for tests.

The app answers by substring lookup: each route owns a bank mapping
question text to candidate answer strings, and every bank string found in
the posted context comes back as a span answer with rank-based confidence.
Behavior is fully deterministic, so tests built on it are too.

run_server starts any ASGI app on an ephemeral localhost port in a daemon
thread, for code paths that insist on real HTTP.
"""

from __future__ import annotations

import threading
import time
from contextlib import contextmanager
from typing import Iterator

import uvicorn
from fastapi import FastAPI

# base deliberately errs on four items: a dose instead of the substance for
# leaflet-002, clipped appearance phrases for 003 and 005, and the street
# instead of the company for 004 (the street occurs in every document, but
# ranks below the company names wherever those match). tuned errs mildly on
# three items (clipped or over-long spans for 001 appearance, 003 ingredient,
# 005 manufacturer) so that fitting its scores against verdicts sees a
# full-rank feature matrix instead of near-constant columns.
BASE_BANK = {
    "Welcher Wirkstoff ist enthalten?": [
        "Metoprololtartrat",
        "400 mg",
        "Omeprazol",
        "Cetirizindihydrochlorid",
        "Simvastatin",
    ],
    "Wie sieht das Arzneimittel aus?": [
        "weiße, runde Tabletten mit beidseitiger Bruchkerbe",
        "rosa, ovale Filmtabletten",
        "magensaftresistente Hartkapseln",
        "weiße, längliche Filmtabletten mit Bruchrille",
        "runde Filmtabletten",
    ],
    "Wer stellt das Arzneimittel her?": [
        "Arzneimittelwerk Havelstadt GmbH",
        "Pharma Union Berlin AG",
        "Nordmedica GmbH & Co. KG",
        "Hanse Pharma Bremen GmbH",
        "Industriestraße 12",
    ],
}

TUNED_BANK = {
    "Welcher Wirkstoff ist enthalten?": [
        "Metoprololtartrat",
        "Ibuprofen",
        "ist Omeprazol",
        "Cetirizindihydrochlorid",
        "Simvastatin",
    ],
    "Wie sieht das Arzneimittel aus?": [
        "runde Tabletten mit beidseitiger Bruchkerbe",
        "rosa, ovale Filmtabletten",
        "gelbe, magensaftresistente Hartkapseln",
        "weiße, längliche Filmtabletten mit Bruchrille",
        "hellrote, runde Filmtabletten",
    ],
    "Wer stellt das Arzneimittel her?": [
        "Arzneimittelwerk Havelstadt GmbH",
        "Pharma Union Berlin AG",
        "Nordmedica GmbH & Co. KG",
        "Laborchemie Falkensee GmbH",
        "Pharma Bremen GmbH",
    ],
}


def build_mock_qa_app(banks: dict[str, dict[str, list[str]]] | None = None) -> FastAPI:
    """One POST /{name}/answer route per bank; default banks: base, tuned."""
    if banks is None:
        banks = {"base": BASE_BANK, "tuned": TUNED_BANK}
    app = FastAPI()

    def make_handler(bank: dict[str, list[str]]):
        def answer(payload: dict) -> dict:
            question = str(payload.get("question", ""))
            context = str(payload.get("context", ""))
            top_k = int(payload.get("top_k", 3))
            answers = []
            for rank, text in enumerate(bank.get(question, [])):
                position = context.find(text)
                if position < 0:
                    continue
                answers.append(
                    {
                        "text": text,
                        "start": position,
                        "end": position + len(text),
                        "confidence": round(0.9 - 0.05 * rank, 6),
                    }
                )
            if not answers:
                answers.append({"text": "", "start": 0, "end": 0, "confidence": 0.08})
            return {"answers": answers[:top_k]}

        return answer

    for name, bank in banks.items():
        app.post(f"/{name}/answer")(make_handler(bank))
    return app


@contextmanager
def run_server(app) -> Iterator[str]:
    """Serve an ASGI app on 127.0.0.1 with an OS-assigned port; yield its URL."""
    config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 10
    while not server.started:
        if time.monotonic() > deadline:
            raise RuntimeError("mock server did not start within 10s")
        time.sleep(0.01)
    port = server.servers[0].sockets[0].getsockname()[1]
    try:
        yield f"http://127.0.0.1:{port}"
    finally:
        server.should_exit = True
        thread.join(timeout=5)
