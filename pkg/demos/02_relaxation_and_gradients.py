# The relaxed objective and its hand-written gradient.
#
# A soft permutation T (rows: cities, columns: positions) comes out of
# Sinkhorn normalization. The loss sum_ij D[i,j] (T V^k T^T)[i,j] reduces to
# the tour length when T is a hard permutation.
import numpy as np

from permtsp import (
    Logits,
    PermMatrix,
    cycle_objective,
    decode,
    generate_uniform,
    gs_forward,
    gumbel_sample,
    loss,
    loss_grad,
    sinkhorn,
)

(inst,) = generate_uniform(6, seed=3)
rng = np.random.default_rng(3)

# Sinkhorn of zeros is the uniform matrix; a strong diagonal approaches identity
print(sinkhorn(np.zeros((3, 3)), 60).t.round(4))
print(sinkhorn(30 * np.eye(3), 60).t.round(4))

lg = Logits(raw=rng.standard_normal((6, 6)), noise=gumbel_sample(6, seed=7), tau=3.0, iters=60)
t = gs_forward(lg)
print("\nmarginal error after 60 sweeps:", t.max_marginal_error())
print("relaxed loss:", loss(inst, t, 1))

# At a vertex of the polytope the relaxation is tight
p = decode(lg)
print("decoded:", p.map)
print("loss at hard P:", loss(inst, p.to_dense(), 1), " tour objective:", cycle_objective(inst, p, 1))

# Compare the analytic gradient with central differences on one entry
g = loss_grad(inst, lg, 1)
h = 1e-5
raw_p, raw_m = lg.raw.copy(), lg.raw.copy()
raw_p[2, 4] += h
raw_m[2, 4] -= h
f = lambda raw: loss(inst, gs_forward(Logits(raw, lg.noise, lg.alpha, lg.gamma, lg.tau, lg.iters)), 1)
print("\nanalytic d/draw[2,4]:", g[2, 4])
print("numeric  d/draw[2,4]:", (f(raw_p) - f(raw_m)) / (2 * h))
