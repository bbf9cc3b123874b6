# Each coprime k gives a different starting cycle, and optimizing against
# each one lands on different tours. Keeping the best of the first m shifts
# traces how quality improves with the ensemble size.
import numpy as np

from permtsp import SolverConfig, coprime_shifts, generate_uniform, shift_budget_lengths, solve_ensemble

n = 20
instances = generate_uniform(n, seed=5, count=6)
cfg = SolverConfig(restarts=2)
print("shifts used:", coprime_shifts(n))

curves = []
for idx, inst in enumerate(instances):
    res = solve_ensemble(inst, cfg)
    members = " ".join(f"{k}:{v:.3f}" for k, v in sorted(res.member_lengths.items()))
    print(f"instance {idx}: best k={res.k} length={res.decoded_length:.4f}  [{members}]")
    curves.append(shift_budget_lengths(res.member_lengths))

means = np.mean(curves, axis=0)
for m, value in enumerate(means, start=1):
    print(f"m={m}  mean length {value:.4f}")
