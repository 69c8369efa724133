"""Independent reference implementations used to freeze expected values.

These deliberately use different algorithms than the package (plain
recursion, exhaustive enumeration, pseudo-inverse) so that agreement is
meaningful.
"""

from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np


def lev_recursive(a: str, b: str) -> int:
    """Exponential recursive edit distance, no memoization."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    if a[0] == b[0]:
        return lev_recursive(a[1:], b[1:])
    return 1 + min(
        lev_recursive(a[1:], b),
        lev_recursive(a, b[1:]),
        lev_recursive(a[1:], b[1:]),
    )


def _is_subsequence(needle: Sequence[str], haystack: Sequence[str]) -> bool:
    it = iter(haystack)
    return all(token in it for token in needle)


def lcs_brute(a: Sequence[str], b: Sequence[str]) -> int:
    """LCS length by enumerating every subsequence of the shorter sequence."""
    short, long_ = (a, b) if len(a) <= len(b) else (b, a)
    best = 0
    for r in range(len(short), 0, -1):
        if r <= best:
            break
        for combo in itertools.combinations(short, r):
            if _is_subsequence(combo, long_):
                best = r
                break
    return best


def ols_pinv(features: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Least-squares coefficients via the Moore-Penrose pseudo-inverse."""
    return np.linalg.pinv(features) @ targets


def chunk_starts(total: int, window: int, stride: int) -> list[tuple[int, int]]:
    """Sliding-window chunk ranges by straightforward simulation."""
    starts = [0]
    while starts[-1] + window < total:
        starts.append(starts[-1] + (window - stride))
    return [(s, min(s + window, total)) for s in starts]


def merge_brute(candidates, *, related, priority):
    """Pairwise merging, always resolving the highest-priority related pair.

    ``related(x, y)`` says whether two candidates merge; ``priority(x)``
    orders candidates best-first (lower sorts first). Repeatedly finds the
    best candidate that still has a related partner and deletes that
    partner, until no related pair remains.
    """
    pool = list(candidates)
    while True:
        pool.sort(key=priority)
        victim = None
        for i, keeper in enumerate(pool):
            partners = [c for c in pool[i + 1:] if related(keeper, c)]
            if partners:
                victim = min(partners, key=priority)
                break
        if victim is None:
            return pool
        pool.remove(victim)
