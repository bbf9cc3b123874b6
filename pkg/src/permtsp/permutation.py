"""Index-map algebra for permutation matrices and cyclic shifts.

A permutation matrix ``P`` is stored as ``map`` with ``P[i, map[i]] == 1``.
Rows are cities and columns are tour positions, so ``map[city]`` is the
position of ``city`` and the inverse map lists the cities in visiting order.
The cyclic shift ``V**k`` is the map ``i -> (i + k) % n``; it is a single
Hamiltonian cycle exactly when ``gcd(k, n) == 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .instances import TspInstance


class NonHamiltonianError(ValueError):
    """Raised when a shift exponent is not coprime with the instance size."""


@dataclass(frozen=True)
class PermMatrix:
    map: tuple[int, ...]

    def __post_init__(self):
        m = tuple(int(j) for j in self.map)
        if sorted(m) != list(range(len(m))):
            raise ValueError(f"not a bijection on 0..{len(m) - 1}: {list(m)}")
        object.__setattr__(self, "map", m)

    @property
    def n(self) -> int:
        return len(self.map)

    @classmethod
    def identity(cls, n: int) -> "PermMatrix":
        return cls(tuple(range(n)))

    def inverse(self) -> tuple[int, ...]:
        inv = [0] * self.n
        for i, j in enumerate(self.map):
            inv[j] = i
        return tuple(inv)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        out[np.arange(self.n), self.map] = 1.0
        return out


@dataclass(frozen=True)
class CyclicShift:
    n: int
    k: int

    def __post_init__(self):
        if self.n < 3:
            raise ValueError(f"shift size must be >= 3, got {self.n}")
        if self.k < 1:
            raise ValueError(f"shift exponent must be >= 1, got {self.k}")

    def as_perm(self) -> PermMatrix:
        return shift_matrix(self.n, self.k)


def shift_matrix(n: int, k: int) -> PermMatrix:
    CyclicShift(n, k)
    return PermMatrix(tuple((i + k) % n for i in range(n)))


def is_hamiltonian(p: PermMatrix) -> bool:
    """True iff following ``p.map`` from 0 visits every index before returning."""
    n = p.n
    seen = 0
    i = 0
    while True:
        i = p.map[i]
        seen += 1
        if i == 0:
            return seen == n


def coprime_shifts(n: int) -> list[int]:
    if n < 3:
        raise ValueError(f"size must be >= 3, got {n}")
    return [k for k in range(1, n + 1) if math.gcd(k, n) == 1]


def require_coprime(n: int, k: int) -> None:
    if k < 1 or math.gcd(k, n) != 1:
        raise NonHamiltonianError(f"V^{k} is not a Hamiltonian cycle for n={n} (gcd={math.gcd(k, n)})")


def conjugate(p: PermMatrix, shift: CyclicShift) -> PermMatrix:
    """Map of ``P V^k P^T``: the city at position ``t`` is followed by the
    city at position ``t + k``."""
    if p.n != shift.n:
        raise ValueError(f"size mismatch: permutation {p.n}, shift {shift.n}")
    n, k = p.n, shift.k
    inv = p.inverse()
    return PermMatrix(tuple(inv[(pos + k) % n] for pos in p.map))


def cycle_objective(inst: TspInstance, p: PermMatrix, k: int) -> float:
    """``<D, P V^k P^T>``, the length of the tour encoded by ``p`` and ``k``."""
    n = inst.n
    if p.n != n:
        raise ValueError(f"size mismatch: permutation {p.n}, instance {n}")
    require_coprime(n, k)
    inv = np.asarray(p.inverse())
    return math.fsum(inst.dist[inv, np.roll(inv, -k)])


def extract_tour(p: PermMatrix, k: int) -> list[int]:
    """Visit order of the cycle ``P V^k P^T``, starting from the city at position 0."""
    n = p.n
    require_coprime(n, k)
    inv = p.inverse()
    return [inv[(t * k) % n] for t in range(n)]


def perm_from_order(order: Sequence[int]) -> PermMatrix:
    """The permutation placing ``order[t]`` at position ``t``.

    ``extract_tour(perm_from_order(order), 1) == list(order)``.
    """
    out = [0] * len(order)
    for t, city in enumerate(order):
        out[city] = t
    return PermMatrix(tuple(out))
