"""Euclidean TSP via a Gumbel-Sinkhorn relaxation of permutations of Hamiltonian cycles."""

__version__ = "0.1.0"

from .assignment import decode, hungarian
from .baselines import (
    BaselineKind,
    beam_search,
    christofides_approx,
    farthest_insertion,
    nearest_neighbor,
    nn_all_starts,
)
from .exact import brute_force, held_karp, optimality_gap
from .instances import (
    Tour,
    TspInstance,
    generate_uniform,
    make_tour,
    read_instances,
    tour_length,
    write_instances,
)
from .permutation import (
    CyclicShift,
    PermMatrix,
    conjugate,
    coprime_shifts,
    cycle_objective,
    extract_tour,
    is_hamiltonian,
    shift_matrix,
)
from .relaxation import AdjKernel, Logits, SoftPerm, gs_forward, gumbel_sample, loss, loss_grad, sinkhorn
from .solver import (
    SolveResult,
    SolverConfig,
    shift_budget_lengths,
    solve_ensemble,
    solve_single,
    solve_with_shift_budget,
)
