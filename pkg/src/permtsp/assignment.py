"""Minimum-cost linear assignment and hard decoding of logits."""

from __future__ import annotations

import numpy as np

from .permutation import PermMatrix
from .relaxation import Logits, NumericInputError

_TIE_RTOL = 1e-10


def _shortest_augmenting_path(c: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """O(n^3) Hungarian method with row and column potentials.

    Returns ``(col_of_row, u, v)`` where ``c[i, j] - u[i] - v[j] >= 0`` for all
    cells and equals 0 on the assigned cells (up to rounding).
    Index 0 of the internal arrays is a virtual column, as in the usual
    Jonker-Volgenant style formulation.
    """
    n = c.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    row_of_col = np.zeros(n + 1, dtype=np.intp)
    way = np.zeros(n + 1, dtype=np.intp)
    for i in range(1, n + 1):
        row_of_col[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = row_of_col[j0]
            free = ~used
            free[0] = False
            reduced = c[i0 - 1] - u[i0] - v[1:]
            better = free[1:] & (reduced < minv[1:])
            minv[1:][better] = reduced[better]
            way[1:][better] = j0
            masked = np.where(free, minv, np.inf)
            j1 = int(np.argmin(masked))
            delta = masked[j1]
            u[row_of_col[used]] += delta
            v[used] -= delta
            minv[free] -= delta
            j0 = j1
            if row_of_col[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            row_of_col[j0] = row_of_col[j1]
            j0 = j1
    col_of_row = np.empty(n, dtype=np.intp)
    col_of_row[row_of_col[1:] - 1] = np.arange(n)
    return col_of_row, u[1:], v[1:]


def _lexicographic_min(col_of_row: np.ndarray, tight: np.ndarray) -> np.ndarray:
    """Smallest perfect matching, in row-major lexicographic order, inside ``tight``.

    ``tight[i, j]`` marks zero reduced cost; every perfect matching on those
    cells is an optimal assignment. Rows are fixed in order; row ``i`` takes
    the smallest column reachable by an alternating cycle through the
    still-free rows.
    """
    n = len(col_of_row)
    col_of_row = col_of_row.copy()
    row_of_col = np.empty(n, dtype=np.intp)
    row_of_col[col_of_row] = np.arange(n)
    neighbours = [np.flatnonzero(tight[i]) for i in range(n)]
    for i in range(n):
        target = col_of_row[i]
        for j in neighbours[i]:
            if j >= target:
                break
            start = row_of_col[j]
            if start < i:
                continue
            # free column `target` by re-routing the row that holds `j`
            parent = {start: None}  # row -> (previous row, column it takes)
            stack = [start]
            found = None
            while stack and found is None:
                r = stack.pop()
                for col in neighbours[r]:
                    if col == j:
                        continue
                    if col == target:
                        found = (r, col)
                        break
                    nxt = row_of_col[col]
                    if nxt > i and nxt not in parent:
                        parent[nxt] = (r, col)
                        stack.append(nxt)
            if found is None:
                continue
            r, col = found
            while True:
                col_of_row[r] = col
                row_of_col[col] = r
                if parent[r] is None:
                    break
                r, col = parent[r]
            col_of_row[i] = j
            row_of_col[j] = i
            break
    return col_of_row


def hungarian(c) -> PermMatrix:
    """Assignment minimizing ``sum_i c[i, map[i]]``.

    Among optimal assignments the lexicographically smallest map is returned.
    Costs within a relative ``1e-10`` of each other count as ties.
    """
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] < 1:
        raise ValueError(f"cost matrix must be square and non-empty, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise NumericInputError("cost matrix contains non-finite entries")
    col_of_row, u, v = _shortest_augmenting_path(c)
    reduced = c - u[:, None] - v[None, :]
    tol = _TIE_RTOL * max(1.0, float(np.abs(c).max()))
    tight = reduced <= tol
    tight[np.arange(len(c)), col_of_row] = True
    return PermMatrix(tuple(_lexicographic_min(col_of_row, tight).tolist()))


def assignment_cost(c, p: PermMatrix) -> float:
    c = np.asarray(c, dtype=np.float64)
    return float(c[np.arange(p.n), p.map].sum())


def decode(lg: Logits) -> PermMatrix:
    """Hard permutation maximizing ``sum_i (F + gamma * noise)[i, map[i]]``."""
    return hungarian(-lg.perturbed())
