import numpy as np
import pytest

import permtsp.solver as solver_mod
from permtsp.baselines import nearest_neighbor
from permtsp.instances import generate_uniform
from permtsp.permutation import NonHamiltonianError, coprime_shifts
from permtsp.solver import (
    SolverConfig,
    shift_budget_lengths,
    solve_ensemble,
    solve_single,
    solve_with_shift_budget,
)

FAST = SolverConfig(steps=60, restarts=2)


def test_square_is_solved(square):
    res = solve_single(square, 1)
    assert res.decoded_length == 4.0
    assert res.tour.length == res.decoded_length
    assert res.k == 1


def test_valid_tour_for_any_config():
    (inst,) = generate_uniform(10, 5)
    for cfg in (SolverConfig(steps=0, restarts=1), FAST, SolverConfig(steps=20, patience=20, tau=2.0, gamma=0.3, restarts=3)):
        res = solve_single(inst, 3, cfg)
        assert sorted(res.tour.order) == list(range(10))
        assert 0 <= res.restart_index < cfg.restarts


def test_zero_steps_decodes_initial_logits():
    (inst,) = generate_uniform(9, 1)
    res = solve_single(inst, 1, SolverConfig(steps=0, restarts=2))
    assert res.loss_trace == ()
    assert res.steps_run == 0


def test_deterministic():
    (inst,) = generate_uniform(11, 3)
    a = solve_single(inst, 2, FAST)
    b = solve_single(inst, 2, FAST)
    assert a == b
    c = solve_single(inst, 2, FAST.replace(seed=1))
    assert c.loss_trace != a.loss_trace


def test_rejects_non_coprime():
    (inst,) = generate_uniform(10, 0)
    with pytest.raises(NonHamiltonianError):
        solve_single(inst, 5, FAST)


def test_loss_trace_best_so_far_non_increasing():
    (inst,) = generate_uniform(12, 7)
    trace = np.array(solve_single(inst, 1, FAST).loss_trace)
    best = np.minimum.accumulate(trace)
    assert np.all(np.diff(best) <= 0)
    # the optimizer actually makes progress on the relaxed objective
    assert trace[-1] < trace[0]


def test_early_stopping_respects_patience():
    (inst,) = generate_uniform(8, 2)
    res = solve_single(inst, 1, SolverConfig(steps=2000, patience=20, decode_every=10, restarts=1))
    assert res.steps_run < 2000


def test_non_finite_loss_aborts_only_that_restart(monkeypatch, caplog):
    (inst,) = generate_uniform(9, 4)
    real = solver_mod.relaxed_loss_and_grad

    def flaky(dist, raw, noise, *args, **kwargs):
        loss, grad = real(dist, raw, noise, *args, **kwargs)
        if len(loss) == 3:
            loss = loss.copy()
            loss[0] = np.nan
        return loss, grad

    monkeypatch.setattr(solver_mod, "relaxed_loss_and_grad", flaky)
    res = solve_single(inst, 1, SolverConfig(steps=30, patience=30, restarts=3))
    assert res.failed_restarts == (0,)
    assert res.restart_index != 0
    assert sorted(res.tour.order) == list(range(9))
    assert "aborted" in caplog.text


def test_budget_of_one_is_single_k1():
    (inst,) = generate_uniform(10, 6)
    a = solve_with_shift_budget(inst, FAST, 1)
    b = solve_single(inst, 1, FAST)
    assert a.tour == b.tour and a.k == 1 and a.loss_trace == b.loss_trace


def test_full_budget_is_ensemble():
    (inst,) = generate_uniform(10, 6)
    a = solve_with_shift_budget(inst, FAST, len(coprime_shifts(10)))
    b = solve_ensemble(inst, FAST)
    assert a == b
    assert set(b.member_lengths) == set(coprime_shifts(10))
    assert b.decoded_length == min(b.member_lengths.values())
    assert b.k == min(k for k, v in b.member_lengths.items() if v == b.decoded_length)


def test_budget_out_of_range():
    (inst,) = generate_uniform(10, 6)
    for m in (0, 5):
        with pytest.raises(ValueError):
            solve_with_shift_budget(inst, FAST, m)


def test_budget_monotone_pointwise():
    (inst,) = generate_uniform(14, 8)
    lengths = [solve_with_shift_budget(inst, FAST, m).decoded_length for m in range(1, 7)]
    assert all(b <= a for a, b in zip(lengths, lengths[1:]))
    full = solve_ensemble(inst, FAST)
    assert shift_budget_lengths(full.member_lengths)[:6] == lengths


def test_four_city_members_are_reversals(square):
    res = solve_ensemble(square)
    assert set(res.member_lengths) == {1, 3}
    assert res.member_lengths[1] == res.member_lengths[3] == res.decoded_length == 4.0


def test_config_round_trip(tmp_path):
    cfg = SolverConfig(tau=2.0, gamma=0.3, s=1.5, restarts=2, seed=9)
    assert SolverConfig.loads(cfg.dumps()) == cfg
    path = tmp_path / "cfg.txt"
    path.write_text("# tuned\ntau = 4.0\nsteps = 100\n")
    loaded = SolverConfig.from_file(path)
    assert loaded.tau == 4.0 and loaded.steps == 100 and loaded.gamma == SolverConfig().gamma


@pytest.mark.parametrize(
    "changes",
    [{"tau": 0.0}, {"gamma": -1.0}, {"iters": 0}, {"restarts": 0}, {"patience": 700}, {"lr": -0.1}],
)
def test_config_validation(changes):
    with pytest.raises(ValueError):
        SolverConfig(**changes)


def test_config_rejects_unknown_key():
    with pytest.raises(ValueError):
        SolverConfig.loads("temperature = 3")


def test_kernel_scale_default():
    (inst,) = generate_uniform(10, 1)
    assert SolverConfig().kernel_scale(inst) == pytest.approx(2 * inst.dist.mean())
    assert SolverConfig(s=0.7).kernel_scale(inst) == 0.7


def test_kernel_initialization_is_usable():
    (inst,) = generate_uniform(12, 1)
    res = solve_single(inst, 1, FAST.replace(init_kernel_weight=1.0))
    assert sorted(res.tour.order) == list(range(12))


@pytest.mark.slow
def test_beats_greedy_on_small_instances():
    wins = sum(
        solve_single(inst, 1).decoded_length <= nearest_neighbor(inst).length
        for inst in generate_uniform(12, 99, count=100)
    )
    assert wins >= 60
