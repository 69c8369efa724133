"""Text normalization and tokenization shared by all answer metrics."""

from __future__ import annotations

import unicodedata


def _stripped(ch: str) -> bool:
    cat = unicodedata.category(ch)
    return cat == "Cc" or cat.startswith("P")


def normalize(raw: str) -> str:
    """Canonical lowercase form of ``raw`` for answer comparison.

    NFC-composes, lowercases, replaces control characters (Cc) and all
    punctuation (P*) with spaces, collapses whitespace runs and trims.
    Total and idempotent for arbitrary input.
    """
    # Second NFC pass: lowercasing can emit combining marks out of canonical
    # order (e.g. U+0130 becomes "i" + U+0307).
    text = unicodedata.normalize("NFC", unicodedata.normalize("NFC", raw).lower())
    replaced = "".join(" " if _stripped(ch) else ch for ch in text)
    return " ".join(replaced.split())


def tokenize(text: str) -> list[str]:
    """Split normalized text into words on whitespace."""
    return text.split()


def word_set(tokens: list[str]) -> set[str]:
    """Distinct words of a token sequence."""
    return set(tokens)
