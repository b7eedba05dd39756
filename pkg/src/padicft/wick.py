"""Perfect matchings and Isserlis moments of centred Gaussian vectors."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import TooLarge

MAX_WICK_POINTS = 12


def pairing_count(two_n: int) -> int:
    """(2n)! / (2^n n!), the number of perfect matchings of 2n labels."""
    if two_n % 2:
        return 0
    n = two_n // 2
    return math.factorial(two_n) // (2**n * math.factorial(n))


def _check_size(two_n: int) -> None:
    if two_n > MAX_WICK_POINTS:
        raise TooLarge(
            f"{two_n} points need {pairing_count(two_n)} matchings; the cap is "
            f"{MAX_WICK_POINTS} points ({pairing_count(MAX_WICK_POINTS)} matchings)"
        )


@lru_cache(maxsize=None)
def _matchings(labels: tuple[int, ...]) -> tuple[tuple[tuple[int, int], ...], ...]:
    if not labels:
        return ((),)
    first, rest = labels[0], labels[1:]
    out = []
    for k, partner in enumerate(rest):
        remaining = rest[:k] + rest[k + 1 :]
        for tail in _matchings(remaining):
            out.append(((first, partner),) + tail)
    return tuple(out)


def wick_pairings(two_n: int) -> list[tuple[tuple[int, int], ...]]:
    """All perfect matchings of 0..two_n-1.

    Each matching is a tuple of pairs (a, b) with a < b, pairs sorted by
    their first element; matchings come out in lexicographic order.
    """
    if two_n < 0 or two_n % 2:
        raise ValueError(f"need a non-negative even count, got {two_n}")
    _check_size(two_n)
    return list(_matchings(tuple(range(two_n))))


def isserlis_from_counts(cov: np.ndarray, counts: tuple[int, ...]) -> float:
    """E[prod_a X_a^{counts[a]}] for X ~ N(0, cov).

    Points are grouped into labels with multiplicities, so repeated points
    cost nothing extra: the first remaining copy of the lowest label is
    paired with every class in turn, weighted by that class's multiplicity.
    """
    total = sum(counts)
    if total % 2:
        return 0.0
    _check_size(total)
    cov = np.asarray(cov, dtype=float)
    memo: dict[tuple[int, ...], float] = {}

    def rec(c: tuple[int, ...]) -> float:
        hit = memo.get(c)
        if hit is not None:
            return hit
        a = next((i for i, v in enumerate(c) if v), None)
        if a is None:
            return 1.0
        acc = 0.0
        base = list(c)
        base[a] -= 1
        for b, mult in enumerate(base):
            if mult == 0:
                continue
            nxt = base.copy()
            nxt[b] -= 1
            acc += mult * cov[a, b] * rec(tuple(nxt))
        memo[c] = acc
        return acc

    return rec(tuple(int(v) for v in counts))


def isserlis(cov: np.ndarray, indices) -> float:
    """E[prod_k X_{indices[k]}] for X ~ N(0, cov); indices may repeat."""
    indices = list(indices)
    if len(indices) % 2:
        return 0.0
    _check_size(len(indices))
    labels, counts = np.unique(np.asarray(indices, dtype=np.int64), return_counts=True)
    sub = np.asarray(cov)[np.ix_(labels, labels)]
    return isserlis_from_counts(sub, tuple(int(c) for c in counts))
