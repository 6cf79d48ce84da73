"""Exhaustive warping-path oracle for DTW tests.

Enumerates every monotone path through the cost lattice and takes the
minimum path cost directly, with no dynamic-programming recurrence, so
it stays independent of the implementation it checks.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def enumerate_paths(n: int, m: int) -> tuple[tuple[tuple[int, int], ...], ...]:
    """All warping paths from (0,0) to (n-1,m-1) with steps right/down/diag."""
    paths: list[tuple[tuple[int, int], ...]] = []

    def walk(i: int, j: int, acc: list[tuple[int, int]]) -> None:
        if i == n - 1 and j == m - 1:
            paths.append(tuple(acc))
            return
        if i + 1 < n:
            acc.append((i + 1, j))
            walk(i + 1, j, acc)
            acc.pop()
        if j + 1 < m:
            acc.append((i, j + 1))
            walk(i, j + 1, acc)
            acc.pop()
        if i + 1 < n and j + 1 < m:
            acc.append((i + 1, j + 1))
            walk(i + 1, j + 1, acc)
            acc.pop()

    walk(0, 0, [(0, 0)])
    return tuple(paths)


@lru_cache(maxsize=None)
def paths_by_length(n: int, m: int) -> tuple[np.ndarray, ...]:
    """Paths grouped by cell count, as arrays of flattened (i*m + j) indices."""
    groups: dict[int, list[list[int]]] = {}
    for path in enumerate_paths(n, m):
        flat = [i * m + j for i, j in path]
        groups.setdefault(len(flat), []).append(flat)
    return tuple(np.array(groups[k], dtype=np.int64) for k in sorted(groups))


def dtw_bruteforce(x, y) -> float:
    """Minimum |x_i - y_j| path cost over every enumerated warping path."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    cost = np.abs(x[:, None] - y[None, :]).ravel()
    best = np.inf
    for paths in paths_by_length(len(x), len(y)):
        best = min(best, float(cost[paths].sum(axis=1).min()))
    return best


def bruteforce_matrix_halfunits(a_codes: np.ndarray, b_codes: np.ndarray) -> np.ndarray:
    """Oracle DTW (in half-units) for every pair of coded sequences.

    ``a_codes``/``b_codes`` hold values doubled to small ints (0, 1, 2),
    one row per sequence; result [s, t] is twice the DTW distance of row
    s against row t, computed by explicit path enumeration: each path
    becomes a 0/1 cell-incidence column, a path's cost is the product of
    the pair's |a-b| cell row with that column, and the oracle value is
    the minimum over all paths.  All quantities are small whole numbers,
    exact in float32.
    """
    n = a_codes.shape[1]
    m = b_codes.shape[1]
    diff = np.abs(
        a_codes[:, None, :, None].astype(np.int16) - b_codes[None, :, None, :].astype(np.int16)
    )
    flat = diff.reshape(a_codes.shape[0] * b_codes.shape[0], n * m).astype(np.float32)
    paths = enumerate_paths(n, m)
    incidence = np.zeros((n * m, len(paths)), dtype=np.float32)
    for col, path in enumerate(paths):
        for i, j in path:
            incidence[i * m + j, col] = 1.0
    best = np.empty(flat.shape[0], dtype=np.float32)
    chunk = 32768
    for lo in range(0, flat.shape[0], chunk):
        best[lo : lo + chunk] = (flat[lo : lo + chunk] @ incidence).min(axis=1)
    return best.reshape(a_codes.shape[0], b_codes.shape[0])
