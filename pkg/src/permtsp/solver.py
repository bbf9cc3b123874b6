"""Per-instance optimization of Gumbel-Sinkhorn logits and the coprime-shift ensemble.

For a fixed shift exponent ``k`` the solver minimizes the relaxed objective
``<D, T V^k T^T>`` directly over the logit matrix of one instance, using Adam
with linear warmup, global-norm clipping, L2 weight decay and early stopping
on the decoded tour length. Every decoded tour is a Hamiltonian cycle, whatever
state the optimization is in.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .assignment import hungarian
from .instances import Tour, TspInstance, make_tour
from .permutation import PermMatrix, coprime_shifts, extract_tour, require_coprime
from .relaxation import AdjKernel, gumbel_from_uniform, relaxed_loss_and_grad

log = logging.getLogger(__name__)

_ADAM_BETAS = (0.9, 0.999)
_ADAM_EPS = 1e-8


@dataclass(frozen=True)
class SolverConfig:
    tau: float = 3.0
    gamma: float = 0.05
    alpha: float = 10.0
    s: float | None = None  # kernel scale; None means 2 * mean(D)
    init_kernel_weight: float = 0.0
    init_noise: float = 0.1
    iters: int = 60
    steps: int = 600
    lr: float = 0.05
    weight_decay: float = 1e-4
    warmup_steps: int = 15
    clip_norm: float = 1.0
    patience: int = 50
    decode_every: int = 10
    restarts: int = 4
    seed: int = 0

    def __post_init__(self):
        positive = ("tau", "alpha", "lr", "clip_norm")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.s is not None and not self.s > 0:
            raise ValueError("s must be positive")
        if min(self.gamma, self.weight_decay, self.init_kernel_weight, self.init_noise) < 0:
            raise ValueError("gamma, weight_decay and the init scales must be non-negative")
        if self.iters < 1 or self.restarts < 1 or self.decode_every < 1:
            raise ValueError("iters, restarts and decode_every must be >= 1")
        if self.steps < 0 or self.warmup_steps < 0 or self.patience < 1:
            raise ValueError("steps and warmup_steps must be >= 0, patience >= 1")
        if self.steps and self.patience > self.steps:
            raise ValueError("patience must not exceed steps")

    def kernel_scale(self, inst: TspInstance) -> float:
        return self.s if self.s is not None else 2.0 * float(inst.dist.mean())

    def replace(self, **changes) -> "SolverConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    # flat ``key = value`` files; unknown keys are an error, missing keys keep defaults

    def dumps(self) -> str:
        return "".join(f"{k} = {'none' if v is None else v}\n" for k, v in self.to_dict().items())

    @classmethod
    def loads(cls, text: str) -> "SolverConfig":
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        values = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = (part.strip() for part in line.partition("="))
            if not sep or key not in types:
                raise ValueError(f"line {lineno}: expected '<key> = <value>' with a known key, got {line!r}")
            if value.lower() == "none":
                values[key] = None
            elif "int" in str(types[key]):
                values[key] = int(value)
            else:
                values[key] = float(value)
        return cls(**values)

    @classmethod
    def from_file(cls, path) -> "SolverConfig":
        return cls.loads(Path(path).read_text())


@dataclass(frozen=True)
class SolveResult:
    tour: Tour
    k: int
    loss_trace: tuple[float, ...]
    decoded_length: float
    restart_index: int
    steps_run: int = 0
    failed_restarts: tuple[int, ...] = ()
    member_lengths: dict[int, float] = field(default_factory=dict)


def _decode(perturbed: np.ndarray, k: int) -> tuple[int, ...]:
    return tuple(extract_tour(hungarian(-perturbed), k))


def solve_single(inst: TspInstance, k: int, cfg: SolverConfig = SolverConfig()) -> SolveResult:
    """Optimize ``cfg.restarts`` independent logit matrices for the cycle ``V^k``.

    Restart ``r`` starts from ``init_kernel_weight * log(A) + init_noise * z``
    with ``A = exp(-D / s)`` and standard normal ``z``; ``z`` and the Gumbel
    noise come from the generator seeded with ``(cfg.seed, k, r)``. The
    restarts advance together as one stacked array; a restart that stops
    early is frozen.
    """
    n = inst.n
    require_coprime(n, k)
    dist = inst.dist
    R = cfg.restarts
    raw = np.empty((R, n, n))
    noise = np.empty((R, n, n))
    if cfg.init_kernel_weight:
        base = cfg.init_kernel_weight * AdjKernel.from_instance(inst, cfg.kernel_scale(inst)).logits()
    else:
        base = np.zeros((n, n))
    for r in range(R):
        rng = np.random.default_rng([cfg.seed, k, r])
        noise[r] = gumbel_from_uniform(rng.random((n, n)))
        raw[r] = base + cfg.init_noise * rng.standard_normal((n, n))
    scaled_noise = cfg.gamma * noise
    m1 = np.zeros_like(raw)
    m2 = np.zeros_like(raw)
    beta1, beta2 = _ADAM_BETAS

    active = np.ones(R, dtype=bool)
    failed: list[int] = []
    best_len = np.full(R, np.inf)
    best_order: list[tuple[int, ...] | None] = [None] * R
    last_gain = np.zeros(R, dtype=int)
    traces: list[list[float]] = [[] for _ in range(R)]

    def check(step: int, idx) -> None:
        perturbed = (cfg.alpha * np.tanh(raw) + scaled_noise) / cfg.tau
        for r in idx:
            order = _decode(perturbed[r], k)
            length = make_tour(inst, order).length
            if length < best_len[r]:
                best_len[r] = length
                best_order[r] = order
                last_gain[r] = step

    check(0, range(R))
    step = 0
    for step in range(1, cfg.steps + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            step -= 1
            break
        x = raw[idx]
        loss, grad = relaxed_loss_and_grad(
            dist, x, noise[idx], k, cfg.alpha, cfg.gamma, cfg.tau, cfg.iters
        )
        bad = ~(np.isfinite(loss) & np.all(np.isfinite(grad), axis=(1, 2)))
        for j, r in enumerate(idx):
            if bad[j]:
                log.warning("restart %d for k=%d aborted: non-finite loss at step %d", r, k, step)
                failed.append(int(r))
                active[r] = False
            else:
                traces[r].append(float(loss[j]))
        keep = ~bad
        idx, x, grad = idx[keep], x[keep], grad[keep]
        if idx.size == 0:
            continue
        norms = np.sqrt(np.einsum("bij,bij->b", grad, grad))
        grad = grad * np.minimum(1.0, cfg.clip_norm / np.maximum(norms, 1e-300))[:, None, None]
        grad = grad + cfg.weight_decay * x
        lr = cfg.lr * min(1.0, step / cfg.warmup_steps) if cfg.warmup_steps else cfg.lr
        m1[idx] = beta1 * m1[idx] + (1 - beta1) * grad
        m2[idx] = beta2 * m2[idx] + (1 - beta2) * grad * grad
        m_hat = m1[idx] / (1 - beta1**step)
        v_hat = m2[idx] / (1 - beta2**step)
        raw[idx] = x - lr * m_hat / (np.sqrt(v_hat) + _ADAM_EPS)

        if step % cfg.decode_every == 0 or step == cfg.steps:
            check(step, idx)
            stalled = idx[step - last_gain[idx] >= cfg.patience]
            active[stalled] = False

    ok = [r for r in range(R) if r not in failed] or list(range(R))
    winner = min(ok, key=lambda r: (best_len[r], r))
    tour = make_tour(inst, best_order[winner])
    return SolveResult(
        tour=tour,
        k=k,
        loss_trace=tuple(traces[winner]),
        decoded_length=tour.length,
        restart_index=winner,
        steps_run=step,
        failed_restarts=tuple(failed),
        member_lengths={k: tour.length},
    )


def solve_with_shift_budget(inst: TspInstance, cfg: SolverConfig = SolverConfig(), m: int | None = None) -> SolveResult:
    """Best decoded tour over the first ``m`` coprime shifts in ascending order."""
    shifts = coprime_shifts(inst.n)
    if m is None:
        m = len(shifts)
    if not 1 <= m <= len(shifts):
        raise ValueError(f"shift budget must be in 1..{len(shifts)}, got {m}")
    results = {}
    for k in shifts[:m]:
        try:
            results[k] = solve_single(inst, k, cfg)
        except (ArithmeticError, ValueError) as exc:  # pragma: no cover - defensive
            warnings.warn(f"ensemble member k={k} failed: {exc}", RuntimeWarning, stacklevel=2)
    if not results:
        raise RuntimeError("every ensemble member failed")
    best_k = min(results, key=lambda k: (results[k].decoded_length, k))
    return dataclasses.replace(
        results[best_k], member_lengths={k: r.decoded_length for k, r in results.items()}
    )


def solve_ensemble(inst: TspInstance, cfg: SolverConfig = SolverConfig()) -> SolveResult:
    """Run one member per coprime shift and keep the shortest decoded tour."""
    return solve_with_shift_budget(inst, cfg, None)


def shift_budget_lengths(member_lengths: dict[int, float]) -> list[float]:
    """Running minimum of member lengths in ascending ``k``: entry ``m - 1`` is the
    result of a budget of ``m`` shifts."""
    out = []
    best = math.inf
    for k in sorted(member_lengths):
        best = min(best, member_lengths[k])
        out.append(best)
    return out
