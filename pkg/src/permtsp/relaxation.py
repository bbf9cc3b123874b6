"""Gumbel-Sinkhorn relaxation of the cycle objective, with exact gradients.

The soft permutation ``T`` has cities on rows and tour positions on columns.
The relaxed objective for a shift exponent ``k`` is::

    loss(T) = <D, T V^k T^T> = sum_ij D[i, j] sum_m T[i, m] T[j, (m + k) % n]

and ``T = sinkhorn((alpha * tanh(raw) + gamma * noise) / tau, iters)``.
Gradients with respect to ``raw`` are obtained by a hand-written reverse
pass over the stored Sinkhorn intermediates.

The private helpers operate on stacks of matrices (shape ``(..., n, n)``) so
the solver can advance several restarts with one set of array operations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .instances import TspInstance
from .permutation import require_coprime

try:
    from . import _kernels
except ImportError:  # pragma: no cover - numba missing
    _kernels = None

_U_EPS = np.finfo(np.float64).eps


class NumericInputError(ValueError):
    """Raised when an input matrix contains NaN or infinite entries."""


def _check_finite(x: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(x)):
        raise NumericInputError(f"{what} contains non-finite entries")


def gumbel_from_uniform(u: np.ndarray) -> np.ndarray:
    """``-log(-log(u))`` with ``u`` clamped to ``[eps, 1 - eps]``."""
    u = np.clip(u, _U_EPS, 1.0 - _U_EPS)
    return -np.log(-np.log(u))


def gumbel_sample(n: int, seed, size: tuple[int, ...] = ()) -> np.ndarray:
    """Standard Gumbel noise of shape ``size + (n, n)``, deterministic in ``seed``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    return gumbel_from_uniform(rng.random(tuple(size) + (n, n)))


def _normalize(logt: np.ndarray, axis: int, tape: list | None) -> np.ndarray:
    m = logt.max(axis=axis, keepdims=True)
    e = np.exp(logt - m)
    total = e.sum(axis=axis, keepdims=True)
    if tape is not None:
        tape.append(e / total)
    return logt - (m + np.log(total))


def _sinkhorn_log(x: np.ndarray, iters: int, tape: list | None = None) -> np.ndarray:
    """Log of the Sinkhorn-normalized matrix; ``tape`` collects ``exp`` of every half-step."""
    logt = x
    for _ in range(iters):
        logt = _normalize(logt, -1, tape)
        logt = _normalize(logt, -2, tape)
    return logt


def _sinkhorn_backward(grad_t: np.ndarray, tape: list) -> np.ndarray:
    """Pull ``dloss/dT`` back to the Sinkhorn input through the stored half-steps.

    Each half-step is ``L' = L - logsumexp(L, axis)``, whose vector-Jacobian
    product is ``g - softmax(L, axis) * g.sum(axis)`` with ``softmax(L) = exp(L')``.
    """
    g = grad_t * tape[-1]
    for step in range(len(tape) - 1, -1, -1):
        axis = -1 if step % 2 == 0 else -2
        g = g - tape[step] * g.sum(axis=axis, keepdims=True)
    return g


@dataclass(frozen=True)
class SoftPerm:
    t: np.ndarray

    @property
    def n(self) -> int:
        return self.t.shape[-1]

    def max_marginal_error(self) -> float:
        rows = np.abs(self.t.sum(axis=-1) - 1.0).max()
        cols = np.abs(self.t.sum(axis=-2) - 1.0).max()
        return float(max(rows, cols))


def sinkhorn(x: np.ndarray, iters: int) -> SoftPerm:
    """Log-domain Sinkhorn normalization: ``iters`` row/column sweeps, then ``exp``."""
    x = np.asarray(x, dtype=np.float64)
    _check_finite(x, "sinkhorn input")
    if iters < 1:
        raise ValueError(f"iters must be >= 1, got {iters}")
    return SoftPerm(np.exp(_sinkhorn_log(x, iters)))


@dataclass(frozen=True)
class AdjKernel:
    """``exp(-D / s)``; only used here to seed the logits."""

    a: np.ndarray
    s: float

    @classmethod
    def from_instance(cls, inst: TspInstance, s: float) -> "AdjKernel":
        if not s > 0:
            raise ValueError(f"kernel scale must be positive, got {s}")
        return cls(np.exp(-inst.dist / s), float(s))

    def logits(self) -> np.ndarray:
        """``log(A) = -D / s``."""
        return np.log(self.a)


@dataclass(frozen=True)
class Logits:
    raw: np.ndarray
    noise: np.ndarray
    alpha: float = 10.0
    gamma: float = 0.05
    tau: float = 3.0
    iters: int = 60
    F: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        raw = np.asarray(self.raw, dtype=np.float64)
        noise = np.asarray(self.noise, dtype=np.float64)
        if raw.shape != noise.shape or raw.ndim != 2 or raw.shape[0] != raw.shape[1]:
            raise ValueError(f"raw {raw.shape} and noise {noise.shape} must be equal square matrices")
        _check_finite(raw, "raw logits")
        _check_finite(noise, "noise")
        if not self.alpha > 0 or not self.tau > 0 or self.gamma < 0 or self.iters < 1:
            raise ValueError("need alpha > 0, tau > 0, gamma >= 0, iters >= 1")
        object.__setattr__(self, "raw", raw)
        object.__setattr__(self, "noise", noise)
        object.__setattr__(self, "F", self.alpha * np.tanh(raw))

    @property
    def n(self) -> int:
        return self.raw.shape[0]

    def perturbed(self) -> np.ndarray:
        """``(F + gamma * noise) / tau``, the Sinkhorn input and negated decoding cost."""
        return (self.F + self.gamma * self.noise) / self.tau


def gs_forward(lg: Logits) -> SoftPerm:
    return sinkhorn(lg.perturbed(), lg.iters)


def _loss_grad_t(dist: np.ndarray, t: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Batched loss and ``dloss/dT``; ``V^k`` enters only as a column roll of ``T``."""
    t_next = np.roll(t, -k, axis=-1)  # t_next[j, m] = T[j, m + k]
    t_prev = np.roll(t, k, axis=-1)  # t_prev[i, m] = T[i, m - k]
    d_tnext = dist @ t_next
    loss = np.einsum("...im,...im->...", t, d_tnext)
    grad = d_tnext + dist.T @ t_prev
    return loss, grad


def relaxed_loss_and_grad(
    dist: np.ndarray,
    raw: np.ndarray,
    noise: np.ndarray,
    k: int,
    alpha: float,
    gamma: float,
    tau: float,
    iters: int,
    method: str = "auto",
) -> tuple[np.ndarray, np.ndarray]:
    """Loss and gradient w.r.t. ``raw`` for a stack of logit matrices.

    ``method`` selects the compiled linear-domain kernel (``"compiled"``), the
    NumPy log-domain reference (``"numpy"``), or the kernel whenever the
    input spread allows it (``"auto"``).
    """
    if method not in ("auto", "compiled", "numpy"):
        raise ValueError(f"unknown method {method!r}")
    if method != "numpy" and _kernels is not None:
        spread = 2.0 * (alpha + gamma * float(np.abs(noise).max())) / tau
        if method == "compiled" or spread <= _kernels.LINEAR_SPREAD_LIMIT:
            stack = np.ascontiguousarray(raw, dtype=np.float64)
            single = stack.ndim == 2
            if single:
                stack = stack[None]
            eps = np.ascontiguousarray(np.broadcast_to(noise, stack.shape), dtype=np.float64)
            loss, grad = _kernels.loss_and_grad_linear(
                np.ascontiguousarray(dist, dtype=np.float64), stack, eps,
                int(k), float(alpha), float(gamma), float(tau), int(iters),
            )
            return (loss[0], grad[0]) if single else (loss, grad)
    elif method == "compiled":
        raise RuntimeError("numba is not available")
    tanh = np.tanh(raw)
    x = (alpha * tanh + gamma * noise) / tau
    tape: list[np.ndarray] = []
    _sinkhorn_log(x, iters, tape)
    loss, grad_t = _loss_grad_t(dist, tape[-1], k)
    grad_x = _sinkhorn_backward(grad_t, tape)
    return loss, grad_x * (alpha / tau) * (1.0 - tanh * tanh)


def loss(inst: TspInstance, t: SoftPerm | np.ndarray, k: int) -> float:
    """``<D, T V^k T^T>``, summed with :func:`math.fsum`.

    At a hard permutation this equals the tour length bit for bit.
    """
    t = np.asarray(getattr(t, "t", t), dtype=np.float64)
    n = inst.n
    if t.shape != (n, n):
        raise ValueError(f"soft permutation shape {t.shape} does not match n={n}")
    require_coprime(n, k)
    adjacency = t @ np.roll(t, -k, axis=1).T
    return math.fsum((inst.dist * adjacency).ravel())


def loss_grad(inst: TspInstance, lg: Logits, k: int) -> np.ndarray:
    """Exact gradient of ``loss(inst, gs_forward(lg), k)`` with respect to ``lg.raw``."""
    if lg.n != inst.n:
        raise ValueError(f"logits size {lg.n} does not match n={inst.n}")
    require_coprime(inst.n, k)
    _, grad = relaxed_loss_and_grad(
        inst.dist, lg.raw, lg.noise, k, lg.alpha, lg.gamma, lg.tau, lg.iters
    )
    return grad
