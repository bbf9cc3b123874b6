"""Euclidean TSP instances, tours, and the plain-text instance file format.

An instance file is a sequence of blocks::

    # optional comment lines
    tsp 4
    0.0 0.0
    1.0 0.0
    1.0 1.0
    0.0 1.0

    tsp 3
    ...

Coordinates are written with ``repr`` so that reading a file back gives
bit-identical floats.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

MASK64 = (1 << 64) - 1


class InvalidSizeError(ValueError):
    """Raised when an instance has fewer than three cities."""


class InvalidTourError(ValueError):
    """Raised when a city order is not a permutation of ``0..n-1``."""


class InstanceParseError(ValueError):
    """Raised for a malformed instance file; carries the 1-based line number."""

    def __init__(self, message: str, line: int, column: int | None = None):
        where = f"line {line}" if column is None else f"line {line}, token {column}"
        super().__init__(f"{where}: {message}")
        self.line = line
        self.column = column


def mix_seed(seed: int, index: int) -> int:
    """Derive the seed of element ``index`` from a dataset seed.

    SplitMix64 finalizer applied to ``seed + (index + 1) * 0x9E3779B97F4A7C15``
    (mod 2**64). Each instance of a dataset can be regenerated on its own.
    """
    z = (seed + (index + 1) * 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def distance_matrix(coords: np.ndarray) -> np.ndarray:
    diff = coords[:, None, :] - coords[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    # exact symmetry regardless of rounding in the subtraction order
    dist = np.triu(dist, 1)
    return dist + dist.T


@dataclass(frozen=True, eq=False)
class TspInstance:
    """A set of cities in the plane with their Euclidean distance matrix.

    ``dist`` is always derived from ``coords``; both arrays are read-only.
    """

    coords: np.ndarray
    dist: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        coords = np.array(self.coords, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise ValueError(f"coords must have shape (n, 2), got {coords.shape}")
        if coords.shape[0] < 3:
            raise InvalidSizeError(f"instance too small: {coords.shape[0]} cities (need >= 3)")
        if not np.all(np.isfinite(coords)):
            raise ValueError("coords must be finite")
        coords.setflags(write=False)
        dist = distance_matrix(coords)
        dist.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "dist", dist)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    def __eq__(self, other):
        if not isinstance(other, TspInstance):
            return NotImplemented
        return np.array_equal(self.coords, other.coords)

    def __hash__(self):
        return hash(self.coords.tobytes())


@dataclass(frozen=True)
class Tour:
    order: tuple[int, ...]
    length: float

    def to_json(self) -> str:
        return json.dumps({"order": list(self.order), "length": self.length})

    @classmethod
    def from_json(cls, text: str) -> "Tour":
        data = json.loads(text)
        return cls(tuple(int(c) for c in data["order"]), float(data["length"]))


def check_order(order: Sequence[int], n: int) -> tuple[int, ...]:
    order = tuple(int(c) for c in order)
    if len(order) != n or sorted(order) != list(range(n)):
        raise InvalidTourError(f"order is not a permutation of 0..{n - 1}: {list(order)}")
    return order


def tour_length(inst: TspInstance, order: Sequence[int]) -> float:
    """Length of the closed tour visiting ``order`` and returning to its start.

    The edge lengths are summed with :func:`math.fsum`, so the result is the
    correctly rounded sum and does not depend on where the cycle starts or
    which way it is traversed.
    """
    order = np.asarray(check_order(order, inst.n))
    return math.fsum(inst.dist[order, np.roll(order, -1)])


def make_tour(inst: TspInstance, order: Sequence[int]) -> Tour:
    order = check_order(order, inst.n)
    return Tour(order, tour_length(inst, order))


def generate_uniform(n: int, seed: int, count: int = 1) -> list[TspInstance]:
    """``count`` instances of ``n`` cities drawn uniformly from the unit square.

    Instance ``i`` is drawn from ``numpy.random.default_rng(mix_seed(seed, i))``.
    """
    if n < 3:
        raise InvalidSizeError(f"instance too small: {n} cities (need >= 3)")
    if count < 1:
        raise ValueError("count must be >= 1")
    return [
        TspInstance(np.random.default_rng(mix_seed(seed, i)).random((n, 2)))
        for i in range(count)
    ]


def format_instances(instances: Iterable[TspInstance]) -> str:
    blocks = []
    for inst in instances:
        lines = [f"tsp {inst.n}"]
        lines += [f"{x!r} {y!r}" for x, y in inst.coords.tolist()]
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def write_instances(path, instances: Iterable[TspInstance]) -> None:
    Path(path).write_text(format_instances(instances))


def parse_instances(text: str) -> list[TspInstance]:
    instances = []
    expected = 0
    header_line = 0
    rows: list[tuple[float, float]] = []

    def finish():
        if len(rows) < expected:
            raise InstanceParseError(
                f"instance declares {expected} cities but has {len(rows)}", header_line
            )
        instances.append(TspInstance(np.array(rows, dtype=np.float64)))

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if tokens[0] == "tsp":
            if expected and len(rows) < expected:
                finish()
            if len(tokens) != 2:
                raise InstanceParseError("header must be 'tsp <n>'", lineno)
            try:
                expected = int(tokens[1])
            except ValueError:
                raise InstanceParseError(f"non-integer city count {tokens[1]!r}", lineno, 2) from None
            if expected < 3:
                raise InstanceParseError(f"instance too small: {expected} cities", lineno, 2)
            header_line = lineno
            rows = []
            continue
        if not expected or len(rows) >= expected:
            raise InstanceParseError("coordinate line outside an instance block", lineno)
        if len(tokens) != 2:
            raise InstanceParseError(f"expected 2 coordinates, got {len(tokens)}", lineno)
        point = []
        for col, tok in enumerate(tokens, start=1):
            try:
                value = float(tok)
            except ValueError:
                raise InstanceParseError(f"non-numeric token {tok!r}", lineno, col) from None
            if not math.isfinite(value):
                raise InstanceParseError(f"non-finite token {tok!r}", lineno, col)
            point.append(value)
        rows.append((point[0], point[1]))
        if len(rows) == expected:
            finish()
            expected = 0
    if expected:
        finish()
    return instances


def read_instances(path) -> list[TspInstance]:
    return parse_instances(Path(path).read_text())
