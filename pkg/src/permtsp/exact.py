"""Exact optimal tours for small instances and the optimality-gap formula."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .instances import Tour, TspInstance, make_tour

BRUTE_FORCE_MAX_N = 11
HELD_KARP_MAX_N = 22


class SizeLimitError(ValueError):
    """Raised when an exact method is asked to solve an instance that is too large."""


@dataclass(frozen=True)
class ExactResult:
    tour: Tour
    method: str
    optimal: bool = True
    # Held-Karp only: the table value, summed left to right along the tour
    dp_value: float | None = None

    @property
    def length(self) -> float:
        return self.tour.length


def _pick_shortest(inst: TspInstance, orders: list[tuple[int, ...]]) -> Tour:
    tours = [make_tour(inst, o) for o in orders]
    return min(tours, key=lambda t: (t.length, t.order))


def brute_force(inst: TspInstance, chunk: int = 200_000) -> ExactResult:
    """Enumerate all ``(n-1)!/2`` undirected tours that start at city 0."""
    n = inst.n
    if n > BRUTE_FORCE_MAX_N:
        raise SizeLimitError(f"brute force supports n <= {BRUTE_FORCE_MAX_N}, got {n}")
    dist = inst.dist
    best_len = math.inf
    near: list[tuple[int, ...]] = []
    perms = itertools.permutations(range(1, n))
    while True:
        block = np.array(list(itertools.islice(perms, chunk)), dtype=np.intp)
        if block.size == 0:
            break
        # each undirected tour once: fix the orientation
        block = block[block[:, 0] < block[:, -1]]
        if block.size == 0:
            continue
        lengths = dist[0, block[:, 0]] + dist[block[:, -1], 0]
        lengths = lengths + dist[block[:, :-1], block[:, 1:]].sum(axis=1)
        lo = lengths.min()
        slack = 1e-9 * max(1.0, lo)
        if lo < best_len + slack:
            keep = [tuple([0] + row.tolist()) for row in block[lengths <= lo + slack]]
            if lo < best_len - slack:
                near = keep
            else:
                near += keep
            best_len = min(best_len, lo)
    # re-rank the near-optimal candidates with correctly rounded lengths
    tour = _pick_shortest(inst, near)
    return ExactResult(tour, "brute_force")


def held_karp(inst: TspInstance) -> ExactResult:
    """Subset dynamic program over tours that start and end at city 0.

    ``best[mask, j]`` is the shortest path from city 0 through the cities in
    ``mask`` ending at city ``j + 1`` (bit ``j`` stands for city ``j + 1``).
    Masks are processed one popcount layer at a time so every layer is a
    handful of array operations.
    """
    n = inst.n
    if n > HELD_KARP_MAX_N:
        raise SizeLimitError(f"Held-Karp supports n <= {HELD_KARP_MAX_N}, got {n}")
    m = n - 1
    dist = inst.dist
    inner = dist[1:, 1:]
    size = 1 << m
    best = np.full((size, m), np.inf)
    parent = np.full((size, m), -1, dtype=np.int8)
    bits = 1 << np.arange(m)
    best[bits, np.arange(m)] = dist[0, 1:]

    masks = np.arange(size)
    popcount = np.zeros(size, dtype=np.int8)
    for j in range(m):
        popcount += ((masks >> j) & 1).astype(np.int8)
    order = np.argsort(popcount, kind="stable")
    bounds = np.searchsorted(popcount[order], np.arange(m + 2))

    for layer in range(2, m + 1):
        layer_masks = order[bounds[layer] : bounds[layer + 1]]
        for j in range(m):
            sel = layer_masks[(layer_masks >> j) & 1 == 1]
            cand = best[sel ^ (1 << j)] + inner[:, j]
            arg = cand.argmin(axis=1)
            best[sel, j] = cand[np.arange(len(sel)), arg]
            parent[sel, j] = arg

    full = size - 1
    closing = best[full] + dist[1:, 0]
    last = int(closing.argmin())
    value = float(closing[last])
    path = []
    mask = full
    while last >= 0:
        path.append(last + 1)
        prev = int(parent[mask, last])
        mask ^= 1 << last
        last = prev
    order_ = [0] + path[::-1]
    if order_[1] > order_[-1]:
        order_ = [0] + order_[:0:-1]
    return ExactResult(make_tour(inst, order_), "held_karp", dp_value=value)


def solve_exact(inst: TspInstance) -> ExactResult:
    if inst.n <= 9:
        return brute_force(inst)
    return held_karp(inst)


def optimality_gap(method_len: float, optimal_len: float, tol: float = 1e-9) -> float:
    """Percentage excess of ``method_len`` over ``optimal_len``."""
    if not optimal_len > 0:
        raise ValueError(f"optimal length must be positive, got {optimal_len}")
    if method_len < optimal_len - tol * max(1.0, optimal_len):
        warnings.warn(
            f"method length {method_len} is below the optimum {optimal_len}; "
            "the reference is not optimal",
            RuntimeWarning,
            stacklevel=2,
        )
    return 100.0 * (method_len - optimal_len) / optimal_len
