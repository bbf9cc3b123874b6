import numpy as np
import pytest

from oracles import min_weight_matching
from permtsp.baselines import (
    BaselineKind,
    ChristofidesTour,
    beam_search,
    christofides_approx,
    eulerian_circuit,
    farthest_insertion,
    greedy_matching,
    minimum_spanning_tree,
    nearest_neighbor,
    nn_all_starts,
    run_baseline,
)
from permtsp.exact import brute_force, held_karp
from permtsp.instances import generate_uniform

ALL = [
    lambda i: nearest_neighbor(i, 0),
    nn_all_starts,
    farthest_insertion,
    lambda i: beam_search(i, 16),
    christofides_approx,
]


@pytest.mark.parametrize("solve", ALL)
def test_square(square, solve):
    assert solve(square).length == 4.0


@pytest.mark.parametrize("solve", ALL)
def test_valid_tours(solve):
    for inst in generate_uniform(17, 9, count=5):
        tour = solve(inst)
        assert sorted(tour.order) == list(range(17))


def test_nearest_neighbor_start():
    inst = generate_uniform(10, 2)[0]
    assert nearest_neighbor(inst, 4).order[0] == 4
    with pytest.raises(ValueError):
        nearest_neighbor(inst, 10)


def test_nn_all_starts_dominates_every_start():
    for inst in generate_uniform(15, 4, count=10):
        best = nn_all_starts(inst).length
        each = [nearest_neighbor(inst, s).length for s in range(15)]
        assert best == min(each)


def test_beam_width_one_is_nearest_neighbor():
    for inst in generate_uniform(20, 6, count=20):
        assert beam_search(inst, 1).order == nearest_neighbor(inst, 0).order


def test_wide_beam_is_exact():
    for inst in generate_uniform(9, 12, count=3):
        assert beam_search(inst, 100_000).length == pytest.approx(brute_force(inst).length, abs=1e-12)


def test_beam_improves_with_width():
    insts = generate_uniform(15, 21, count=20)
    means = [np.mean([beam_search(i, w).length for i in insts]) for w in (1, 10, 100, 1000)]
    assert all(b <= a + 1e-12 for a, b in zip(means, means[1:]))


def test_mst_is_spanning_tree_of_minimum_weight():
    inst = generate_uniform(12, 3)[0]
    tree = minimum_spanning_tree(inst.dist)
    assert len(tree) == 11
    weight = sum(inst.dist[u, v] for u, v in tree)
    # compare with a plain Kruskal
    edges = sorted((inst.dist[u, v], u, v) for u in range(12) for v in range(u + 1, 12))
    parent = list(range(12))

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    total = 0.0
    for w, u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            total += w
    assert weight == pytest.approx(total, rel=1e-12)


def test_matching_covers_odd_vertices():
    inst = generate_uniform(16, 8)[0]
    odd = [1, 4, 6, 9, 12, 15]
    pairs = greedy_matching(odd, inst.dist)
    assert sorted(v for p in pairs for v in p) == odd


def test_eulerian_circuit_uses_every_edge():
    edges = [(0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 0)]
    circuit = eulerian_circuit(5, edges)
    assert circuit[0] == circuit[-1] == 0
    walked = sorted(tuple(sorted(e)) for e in zip(circuit, circuit[1:]))
    assert walked == sorted(tuple(sorted(e)) for e in edges)


def test_christofides_flag():
    inst = generate_uniform(10, 0)[0]
    tour = christofides_approx(inst)
    assert isinstance(tour, ChristofidesTour) and tour.approximate_matching
    assert not christofides_approx(inst, matching=min_weight_matching).approximate_matching


def test_christofides_exact_matching_bound():
    for inst in generate_uniform(10, 77, count=20):
        tour = christofides_approx(inst, matching=min_weight_matching)
        assert tour.length <= 1.5 * held_karp(inst).length


def test_run_baseline_dispatch():
    inst = generate_uniform(12, 1)[0]
    assert run_baseline(inst, BaselineKind("nn")) == nearest_neighbor(inst)
    assert run_baseline(inst, BaselineKind("beam", 4)) == beam_search(inst, 4)
    with pytest.raises(ValueError):
        BaselineKind("two_opt")
    with pytest.raises(ValueError):
        BaselineKind("beam", 0)


@pytest.mark.slow
def test_beam_and_christofides_reference_means():
    insts = generate_uniform(20, 2024, count=1000)
    beam = np.mean([beam_search(i, 1280).length for i in insts])
    chris = np.mean([christofides_approx(i).length for i in insts])
    assert abs(beam - 4.06) <= 0.05 * 4.06
    assert abs(chris - 4.17) <= 0.05 * 4.17
