# Per-instance optimization against classical heuristics on small instances,
# where the exact optimum is cheap to compute.
import time

import numpy as np

from permtsp import (
    SolverConfig,
    beam_search,
    christofides_approx,
    farthest_insertion,
    generate_uniform,
    held_karp,
    nearest_neighbor,
    nn_all_starts,
    optimality_gap,
    solve_ensemble,
    solve_single,
)

instances = generate_uniform(16, seed=11, count=8)
optimal = [held_karp(inst).length for inst in instances]
print(f"mean optimal length on {len(instances)} instances of n=16: {np.mean(optimal):.4f}")

cfg = SolverConfig(restarts=4)
methods = {
    "greedy": lambda i: nearest_neighbor(i, 0),
    "greedy, all starts": nn_all_starts,
    "farthest insertion": farthest_insertion,
    "beam 1280": lambda i: beam_search(i, 1280),
    "christofides (greedy matching)": christofides_approx,
    "solver k=1": lambda i: solve_single(i, 1, cfg).tour,
    "solver ensemble": lambda i: solve_ensemble(i, cfg).tour,
}
for name, solve in methods.items():
    start = time.perf_counter()
    lengths = [solve(inst).length for inst in instances]
    gaps = [optimality_gap(a, b) for a, b in zip(lengths, optimal)]
    print(f"{name:32s} mean {np.mean(lengths):.4f}  gap {np.mean(gaps):6.2f}%  "
          f"({time.perf_counter() - start:.1f} s)")

# What one run looks like
res = solve_single(instances[0], 1, cfg)
print("\nwinning restart", res.restart_index, "after", res.steps_run, "steps")
print("relaxed loss every 50 steps:", np.round(res.loss_trace[::50], 4))
print("decoded length", res.decoded_length, "optimum", optimal[0])
