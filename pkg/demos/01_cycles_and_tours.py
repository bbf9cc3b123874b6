# Tours as relabelled cycles.
#
# A tour on n cities is the cycle 0 -> 1 -> ... -> n-1 -> 0 with the cities
# renamed by a permutation. Stepping k positions at a time instead of one
# still visits everything exactly when gcd(k, n) == 1.
import math

import numpy as np

from permtsp import (
    CyclicShift,
    PermMatrix,
    conjugate,
    coprime_shifts,
    cycle_objective,
    extract_tour,
    generate_uniform,
    is_hamiltonian,
    shift_matrix,
    tour_length,
)

# Which step sizes give a single cycle on 12 positions?
n = 12
for k in range(1, n + 1):
    print(f"k={k:2d} gcd={math.gcd(k, n)} single cycle: {is_hamiltonian(shift_matrix(n, k))}")
print("coprime shifts of 12:", coprime_shifts(12))
print("coprime shifts of 20:", coprime_shifts(20), "count", len(coprime_shifts(20)))

# Step 3 on 5 positions, identity labels
print("\norbit of k=3, n=5:", extract_tour(PermMatrix.identity(5), 3))

# Any permutation conjugated with a coprime shift is still one cycle
rng = np.random.default_rng(0)
(inst,) = generate_uniform(9, seed=1)
p = PermMatrix(tuple(rng.permutation(9).tolist()))
for k in coprime_shifts(9):
    h = conjugate(p, CyclicShift(9, k))
    order = extract_tour(p, k)
    print(f"k={k}: hamiltonian={is_hamiltonian(h)} tour={order} "
          f"objective={cycle_objective(inst, p, k):.4f} length={tour_length(inst, order):.4f}")

# k and n - k walk the same cycle in opposite directions
print("\nk=1:", extract_tour(p, 1))
print("k=8:", extract_tour(p, 8))
