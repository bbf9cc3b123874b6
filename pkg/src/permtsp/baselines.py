"""Classical construction heuristics used as reference points.

Every heuristic breaks ties towards the smallest city index, so results are
reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .instances import Tour, TspInstance, make_tour

BASELINE_TAGS = ("nn", "nn_all_starts", "farthest_insertion", "beam", "christofides_approx")


@dataclass(frozen=True)
class ChristofidesTour(Tour):
    approximate_matching: bool = True


@dataclass(frozen=True)
class BaselineKind:
    tag: str
    beam_width: int = 1280

    def __post_init__(self):
        if self.tag not in BASELINE_TAGS:
            raise ValueError(f"unknown baseline {self.tag!r}; expected one of {BASELINE_TAGS}")
        if self.beam_width < 1:
            raise ValueError("beam width must be positive")


def nearest_neighbor(inst: TspInstance, start: int = 0) -> Tour:
    n = inst.n
    if not 0 <= start < n:
        raise ValueError(f"start city {start} out of range for n={n}")
    dist = inst.dist
    visited = np.zeros(n, dtype=bool)
    order = [start]
    visited[start] = True
    cur = start
    for _ in range(n - 1):
        cur = int(np.argmin(np.where(visited, np.inf, dist[cur])))
        visited[cur] = True
        order.append(cur)
    return make_tour(inst, order)


def nn_all_starts(inst: TspInstance) -> Tour:
    """Shortest greedy tour over all start cities (all starts advance together)."""
    n = inst.n
    dist = inst.dist
    starts = np.arange(n)
    visited = np.zeros((n, n), dtype=bool)
    visited[starts, starts] = True
    orders = np.empty((n, n), dtype=np.intp)
    orders[:, 0] = starts
    cur = starts
    for step in range(1, n):
        cur = np.argmin(np.where(visited, np.inf, dist[cur]), axis=1)
        visited[starts, cur] = True
        orders[:, step] = cur
    tours = [make_tour(inst, row) for row in orders.tolist()]
    return min(tours, key=lambda t: t.length)


def farthest_insertion(inst: TspInstance) -> Tour:
    """Grow a cycle from the two farthest cities, inserting the city farthest
    from the cycle where it lengthens the cycle least."""
    n = inst.n
    dist = inst.dist
    a, b = np.unravel_index(np.argmax(dist), dist.shape)
    tour = [int(a), int(b)]
    in_tour = np.zeros(n, dtype=bool)
    in_tour[tour] = True
    to_tour = np.minimum(dist[a], dist[b])
    for _ in range(n - 2):
        c = int(np.argmax(np.where(in_tour, -np.inf, to_tour)))
        t = np.asarray(tour)
        nxt = np.roll(t, -1)
        increase = dist[t, c] + dist[c, nxt] - dist[t, nxt]
        pos = int(np.argmin(increase))
        tour.insert(pos + 1, c)
        in_tour[c] = True
        to_tour = np.minimum(to_tour, dist[c])
    return make_tour(inst, tour)


def beam_search(inst: TspInstance, width: int = 1280) -> Tour:
    """Breadth-first construction from city 0 keeping the ``width`` partial
    tours of smallest partial length at every depth."""
    if width < 1:
        raise ValueError("beam width must be >= 1")
    n = inst.n
    dist = inst.dist
    paths = np.zeros((1, 1), dtype=np.intp)
    visited = np.zeros((1, n), dtype=bool)
    visited[0, 0] = True
    cost = np.zeros(1)
    for _ in range(n - 1):
        last = paths[:, -1]
        cand = np.where(visited, np.inf, cost[:, None] + dist[last]).ravel()
        keep = np.argsort(cand, kind="stable")
        n_open = int(np.isfinite(cand).sum())
        keep = keep[: min(width, n_open)]
        state, city = np.divmod(keep, n)
        paths = np.column_stack([paths[state], city])
        visited = visited[state]
        visited[np.arange(len(keep)), city] = True
        cost = cand[keep]
    closed = cost + dist[paths[:, -1], 0]
    return make_tour(inst, paths[int(np.argmin(closed))].tolist())


def minimum_spanning_tree(dist: np.ndarray) -> list[tuple[int, int]]:
    """Prim's algorithm on a dense distance matrix, rooted at city 0."""
    n = len(dist)
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best = dist[0].copy()
    link = np.zeros(n, dtype=np.intp)
    edges = []
    for _ in range(n - 1):
        v = int(np.argmin(np.where(in_tree, np.inf, best)))
        edges.append((int(link[v]), v))
        in_tree[v] = True
        closer = dist[v] < best
        best = np.where(closer, dist[v], best)
        link = np.where(closer, v, link)
    return edges


def greedy_matching(odd: Sequence[int], dist: np.ndarray) -> list[tuple[int, int]]:
    """Perfect matching on ``odd`` by repeatedly taking the shortest free pair."""
    pairs = sorted(
        (dist[u, v], u, v) for i, u in enumerate(odd) for v in odd[i + 1 :]
    )
    matched = set()
    out = []
    for _, u, v in pairs:
        if u not in matched and v not in matched:
            matched.update((u, v))
            out.append((u, v))
    return out


def eulerian_circuit(n: int, edges: Sequence[tuple[int, int]], start: int = 0) -> list[int]:
    """Hierholzer's algorithm on a connected multigraph with even degrees."""
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for idx, (u, v) in enumerate(edges):
        adj[u].append((v, idx))
        adj[v].append((u, idx))
    for nbrs in adj:
        nbrs.sort(reverse=True)  # pop() takes the smallest neighbour first
    used = [False] * len(edges)
    stack = [start]
    circuit = []
    while stack:
        v = stack[-1]
        while adj[v] and used[adj[v][-1][1]]:
            adj[v].pop()
        if adj[v]:
            w, idx = adj[v].pop()
            used[idx] = True
            stack.append(w)
        else:
            circuit.append(stack.pop())
    return circuit[::-1]


def christofides_approx(
    inst: TspInstance,
    matching: Callable[[Sequence[int], np.ndarray], list[tuple[int, int]]] = greedy_matching,
) -> ChristofidesTour:
    """MST, a perfect matching on its odd-degree vertices, an Euler circuit,
    then shortcuts past repeated cities.

    The default matching is greedy, not minimum weight, so the classic 1.5
    bound does not apply to the default output.
    """
    n = inst.n
    dist = inst.dist
    tree = minimum_spanning_tree(dist)
    degree = np.zeros(n, dtype=np.intp)
    for u, v in tree:
        degree[u] += 1
        degree[v] += 1
    odd = [int(v) for v in np.flatnonzero(degree % 2)]
    assert len(odd) % 2 == 0, "handshake lemma violated"
    pairs = matching(odd, dist)
    circuit = eulerian_circuit(n, tree + list(pairs))
    seen = set()
    order = [c for c in circuit if not (c in seen or seen.add(c))]
    tour = make_tour(inst, order)
    return ChristofidesTour(tour.order, tour.length, matching is greedy_matching)


def run_baseline(inst: TspInstance, kind: BaselineKind) -> Tour:
    if kind.tag == "nn":
        return nearest_neighbor(inst, 0)
    if kind.tag == "nn_all_starts":
        return nn_all_starts(inst)
    if kind.tag == "farthest_insertion":
        return farthest_insertion(inst)
    if kind.tag == "beam":
        return beam_search(inst, kind.beam_width)
    return christofides_approx(inst)
