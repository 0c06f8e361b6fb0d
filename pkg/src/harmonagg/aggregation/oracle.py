"""Exhaustive search over ``A'^k``; the reference optimum for small instances."""

from __future__ import annotations

import numpy as np

from ..errors import BudgetExceeded
from .profile import Solution

DEFAULT_BUDGET = 10**6


def all_sequences(alphabet_subset, k: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Rows ``start..stop`` of the lexicographic enumeration of ``alphabet_subset**k``."""
    alpha = np.asarray(sorted(set(int(a) for a in alphabet_subset)), dtype=np.intp)
    total = len(alpha) ** k
    stop = total if stop is None else min(stop, total)
    idx = np.arange(start, stop, dtype=np.int64)
    powers = len(alpha) ** np.arange(k - 1, -1, -1, dtype=np.int64)
    return alpha[(idx[:, None] // powers[None, :]) % len(alpha)]


def brute_force_optimum(objective, alphabet_subset, k: int, maximize: bool = False,
                        budget: int = DEFAULT_BUDGET, vectorized: bool = False,
                        chunk: int = 65536):
    """Best sequence over ``alphabet_subset**k`` and its objective value.

    ``objective`` maps one sequence to a number, or, with ``vectorized=True``,
    an ``(N, k)`` batch to ``N`` numbers. The first optimum in lexicographic
    order wins ties.
    """
    size = len(set(alphabet_subset))
    total = size**k
    if total > budget:
        raise BudgetExceeded(f"{size}^{k} = {total} sequences exceed the budget of {budget}")
    best_W, best_value = None, None
    for start in range(0, total, chunk):
        block = all_sequences(alphabet_subset, k, start, start + chunk)
        if vectorized:
            values = np.asarray(objective(block), dtype=np.float64)
        else:
            values = np.array([objective(W) for W in block], dtype=np.float64)
        i = int(np.argmax(values) if maximize else np.argmin(values))
        v = float(values[i])
        if best_value is None or (v > best_value if maximize else v < best_value):
            best_W, best_value = block[i], v
    return Solution(best_W, {"objective": best_value}), best_value
