"""Dynamic time warping over a precomputed local-cost matrix."""
from __future__ import annotations

from typing import List, Tuple

import numpy as np


def accumulated_cost(cost: np.ndarray) -> np.ndarray:
    """Accumulated cost table with steps match / insert / delete.

    ``acc[i, j] = cost[i, j] + min(acc[i-1, j], acc[i, j-1], acc[i-1, j-1])``
    """
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2 or cost.shape[0] == 0 or cost.shape[1] == 0:
        raise ValueError("DTW needs two non-empty sequences")
    n, m = cost.shape
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(1, n + 1):
        row_prev = acc[i - 1]
        row = acc[i]
        c = cost[i - 1]
        for j in range(1, m + 1):
            row[j] = c[j - 1] + min(row_prev[j], row[j - 1], row_prev[j - 1])
    return acc[1:, 1:]


def warp_path(acc: np.ndarray) -> List[Tuple[int, int]]:
    """Backtrack an optimal warp from an accumulated table.

    Prefers the diagonal step, then the step that keeps the column, on ties.
    """
    i, j = acc.shape[0] - 1, acc.shape[1] - 1
    path = [(i, j)]
    while i > 0 or j > 0:
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            steps = ((acc[i - 1, j - 1], i - 1, j - 1), (acc[i - 1, j], i - 1, j), (acc[i, j - 1], i, j - 1))
            _, i, j = min(steps, key=lambda s: s[0])
        path.append((i, j))
    return path[::-1]


def dtw(cost: np.ndarray) -> Tuple[float, List[Tuple[int, int]]]:
    acc = accumulated_cost(cost)
    return float(acc[-1, -1]), warp_path(acc)
