import numpy as np
import pytest

from oracles import dense_relaxed_loss, finite_difference, generic_low_temperature_logits
from permtsp.assignment import decode
from permtsp.instances import TspInstance, generate_uniform
from permtsp.permutation import NonHamiltonianError, PermMatrix, cycle_objective
from permtsp.relaxation import (
    AdjKernel,
    Logits,
    NumericInputError,
    gs_forward,
    gumbel_from_uniform,
    gumbel_sample,
    loss,
    loss_grad,
    relaxed_loss_and_grad,
    sinkhorn,
)


def random_logits(rng, n, iters=20, tau=None):
    return Logits(
        raw=rng.normal(size=(n, n)),
        noise=gumbel_sample(n, int(rng.integers(2**32))),
        tau=float(rng.uniform(2, 5)) if tau is None else tau,
        iters=iters,
    )


def test_gumbel_deterministic():
    assert np.array_equal(gumbel_sample(6, 11), gumbel_sample(6, 11))
    assert not np.array_equal(gumbel_sample(6, 11), gumbel_sample(6, 12))
    assert gumbel_sample(4, 0, size=(3,)).shape == (3, 4, 4)


def test_gumbel_mean_is_euler_mascheroni():
    draws = gumbel_sample(1000, 5)  # 10**6 draws
    assert abs(draws.mean() - 0.5772156649) < 0.01


def test_gumbel_clamp_is_finite():
    out = gumbel_from_uniform(np.array([0.0, 1.0, 0.5]))
    assert np.all(np.isfinite(out))


def test_sinkhorn_zero_is_uniform():
    for n in (3, 7):
        t = sinkhorn(np.zeros((n, n)), 60).t
        assert np.abs(t - 1.0 / n).max() < 1e-12


def test_sinkhorn_large_diagonal_is_identity():
    t = sinkhorn(30.0 * np.eye(3), 60).t
    assert np.abs(t - np.eye(3)).max() < 1e-3
    # against a much longer run
    assert np.abs(t - sinkhorn(30.0 * np.eye(3), 2000).t).max() < 1e-3


def test_sinkhorn_marginals(rng):
    for _ in range(20):
        sp = sinkhorn(rng.normal(size=(5, 5)), 80)
        assert sp.max_marginal_error() < 1e-6
        assert np.all(sp.t > 0)


def test_sinkhorn_large_magnitudes_stable(rng):
    for tau in (2.0, 5.0):
        x = rng.uniform(-1e4, 1e4, size=(6, 6)) / tau
        t = sinkhorn(x, 60).t
        assert np.all(np.isfinite(t))


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_sinkhorn_rejects_non_finite(bad):
    x = np.zeros((3, 3))
    x[1, 2] = bad
    with pytest.raises(NumericInputError):
        sinkhorn(x, 10)


def test_sinkhorn_rejects_zero_iters():
    with pytest.raises(ValueError):
        sinkhorn(np.zeros((3, 3)), 0)


def test_gs_forward_zero_logits_uniform():
    lg = Logits(np.zeros((4, 4)), np.ones((4, 4)), gamma=0.0)
    assert np.abs(gs_forward(lg).t - 0.25).max() < 1e-12


def test_gs_forward_ratio_invariance(rng):
    raw = rng.normal(size=(5, 5))
    noise = gumbel_sample(5, 1)
    a = gs_forward(Logits(raw, noise, alpha=4.0, gamma=0.1, tau=2.0)).t
    b = gs_forward(Logits(raw, noise, alpha=8.0, gamma=0.2, tau=4.0)).t
    assert np.allclose(a, b, rtol=0, atol=1e-14)


def test_low_temperature_argmax_matches_decode(rng):
    # convergence slows as tau shrinks, so give Sinkhorn a longer run here
    for lg in generic_low_temperature_logits(rng, 6, 50, tau=0.05, iters=500):
        assert tuple(gs_forward(lg).t.argmax(axis=1)) == decode(lg).map


def test_logits_validation():
    with pytest.raises(ValueError):
        Logits(np.zeros((3, 3)), np.zeros((3, 4)))
    with pytest.raises(ValueError):
        Logits(np.zeros((3, 3)), np.zeros((3, 3)), tau=0.0)
    with pytest.raises(NumericInputError):
        Logits(np.full((3, 3), np.nan), np.zeros((3, 3)))


def test_adj_kernel(square):
    a = AdjKernel.from_instance(square, 2.0)
    assert np.all(np.diag(a.a) == 1.0)
    assert np.all((a.a > 0) & (a.a <= 1))
    assert np.allclose(a.logits(), -square.dist / 2.0)
    with pytest.raises(ValueError):
        AdjKernel.from_instance(square, 0.0)


def test_loss_at_hard_permutation_is_exact(rng):
    (inst,) = generate_uniform(9, 8)
    for k in (1, 2, 4, 5):
        p = PermMatrix(tuple(rng.permutation(9).tolist()))
        assert loss(inst, p.to_dense(), k) == cycle_objective(inst, p, k)


def test_loss_zero_distances(rng):
    inst = TspInstance(np.zeros((5, 2)))
    assert loss(inst, sinkhorn(rng.normal(size=(5, 5)), 30), 2) == 0.0


def test_loss_matches_dense_oracle(rng):
    (inst,) = generate_uniform(7, 2)
    for k in range(1, 7):
        t = sinkhorn(rng.normal(size=(7, 7)) * 2, 80).t
        assert loss(inst, t, k) == pytest.approx(dense_relaxed_loss(inst.dist, t, k), rel=1e-12)


def test_loss_rejects_non_coprime(square):
    with pytest.raises(NonHamiltonianError):
        loss(square, np.full((4, 4), 0.25), 2)


def _fd_check(inst, lg, k, method="auto"):
    def f(raw):
        return float(relaxed_loss_and_grad(inst.dist, raw, lg.noise, k, lg.alpha, lg.gamma, lg.tau, lg.iters, method)[0])

    _, grad = relaxed_loss_and_grad(inst.dist, lg.raw, lg.noise, k, lg.alpha, lg.gamma, lg.tau, lg.iters, method)
    fd = finite_difference(f, lg.raw)
    return np.abs(grad - fd).max() / max(np.abs(fd).max(), 1e-12)


@pytest.mark.parametrize("method", ["numpy", "compiled"])
def test_gradient_finite_differences(rng, method):
    for n in (4, 5, 8):
        (inst,) = generate_uniform(n, n)
        lg = random_logits(rng, n)
        assert _fd_check(inst, lg, 1, method) <= 1e-4
        assert _fd_check(inst, lg, n - 1, method) <= 1e-4


def test_loss_grad_matches_forward(rng):
    (inst,) = generate_uniform(5, 0)
    lg = random_logits(rng, 5)

    def f(raw):
        return loss(inst, gs_forward(Logits(raw, lg.noise, lg.alpha, lg.gamma, lg.tau, lg.iters)), 2)

    fd = finite_difference(f, lg.raw)
    grad = loss_grad(inst, lg, 2)
    assert np.abs(grad - fd).max() / np.abs(fd).max() <= 1e-4


def test_compiled_and_numpy_paths_agree(rng):
    (inst,) = generate_uniform(12, 3)
    raw = rng.normal(size=(3, 12, 12))
    noise = gumbel_sample(12, 4, size=(3,))
    a = relaxed_loss_and_grad(inst.dist, raw, noise, 5, 10.0, 0.05, 3.0, 60, "numpy")
    b = relaxed_loss_and_grad(inst.dist, raw, noise, 5, 10.0, 0.05, 3.0, 60, "compiled")
    assert np.allclose(a[0], b[0], rtol=1e-12, atol=0)
    assert np.allclose(a[1], b[1], rtol=0, atol=1e-10)


def test_zero_distance_gives_zero_gradient(rng):
    inst = TspInstance(np.ones((6, 2)))
    assert np.all(loss_grad(inst, random_logits(rng, 6), 1) == 0.0)


def test_square_symmetric_saddle(square):
    # uniform T is a stationary point: every city and position looks alike
    lg = Logits(np.zeros((4, 4)), np.zeros((4, 4)), gamma=0.0, iters=20)
    g = loss_grad(square, lg, 1)
    assert np.allclose(g.sum(axis=1), g.sum(axis=0), atol=1e-12)
    assert np.abs(g).max() < 1e-12


def test_loss_grad_rejects_mismatch(square, rng):
    with pytest.raises(ValueError):
        loss_grad(square, random_logits(rng, 5), 1)


def test_near_tied_assignments_blend_at_low_temperature():
    # two assignments with equal score: the converged plan splits mass between them
    x = np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]]) / 0.05
    t = sinkhorn(x, 500).t
    assert np.allclose(t[:2, :2], 0.5, atol=1e-6)
