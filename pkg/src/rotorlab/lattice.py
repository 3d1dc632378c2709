"""Points, direction labels, and boxes of Z^d.

Points are plain tuples of ints. Label ``i < d`` is the unit step along
``+X_{i+1}``; label ``i >= d`` is the unit step along ``-X_{i-d+1}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterator, Sequence

import numpy as np

from .errors import ContractViolation, CoordinateOverflow

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1

Point = tuple[int, ...]


def check_dimension(d: int) -> int:
    if not isinstance(d, (int, np.integer)) or d < 1:
        raise ContractViolation(f"dimension must be a positive integer, got {d!r}")
    return int(d)


def direction_count(d: int) -> int:
    return 2 * check_dimension(d)


def check_label(label: int, d: int) -> int:
    if not isinstance(label, (int, np.integer)) or not 0 <= label < 2 * d:
        raise ContractViolation(f"label {label!r} out of range for d={d} (need 0..{2 * d - 1})")
    return int(label)


def axis_and_sign(label: int, d: int) -> tuple[int, int]:
    check_label(label, d)
    return (label, 1) if label < d else (label - d, -1)


def unit_vector(label: int, d: int) -> Point:
    axis, sign = axis_and_sign(label, d)
    v = [0] * d
    v[axis] = sign
    return tuple(v)


def opposite(label: int, d: int) -> int:
    return (check_label(label, d) + d) % (2 * d)


def translate(p: Sequence[int], label: int) -> Point:
    """Move ``p`` one step along ``label``; raises on 64-bit overflow."""
    d = len(p)
    axis, sign = axis_and_sign(label, d)
    moved = p[axis] + sign
    if not INT64_MIN <= moved <= INT64_MAX:
        raise CoordinateOverflow(f"coordinate {axis} overflowed moving from {tuple(p)}")
    out = list(p)
    out[axis] = moved
    return tuple(out)


def infinity_norm(p: Sequence[int]) -> int:
    return max((abs(v) for v in p), default=0)


def origin(d: int) -> Point:
    return (0,) * check_dimension(d)


@dataclass(frozen=True)
class Box:
    """The box ``[-radius, radius]^d``."""

    radius: int
    d: int

    def __post_init__(self):
        check_dimension(self.d)
        if self.radius < 0:
            raise ContractViolation(f"box radius must be non-negative, got {self.radius}")

    @property
    def side(self) -> int:
        return 2 * self.radius + 1

    @property
    def site_count(self) -> int:
        return self.side**self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.side,) * self.d

    def contains(self, p: Sequence[int]) -> bool:
        return len(p) == self.d and infinity_norm(p) <= self.radius

    __contains__ = contains

    def points(self) -> Iterator[Point]:
        """Sites in dense-index (row-major) order."""
        r = self.radius
        return product(range(-r, r + 1), repeat=self.d)

    def point_array(self) -> np.ndarray:
        """All sites as an ``(site_count, d)`` int64 array, dense-index order."""
        r = self.radius
        grids = np.indices(self.shape, dtype=np.int64).reshape(self.d, -1).T
        return grids - r

    def dense_index(self, p: Sequence[int]) -> int:
        if not self.contains(p):
            raise ContractViolation(f"point {tuple(p)} is outside B[0,{self.radius}] in d={self.d}")
        idx = 0
        for v in p:
            idx = idx * self.side + (v + self.radius)
        return idx

    def point_at(self, index: int) -> Point:
        if not 0 <= index < self.site_count:
            raise ContractViolation(f"dense index {index} out of range for {self.site_count} sites")
        coords = []
        for _ in range(self.d):
            index, rem = divmod(index, self.side)
            coords.append(rem - self.radius)
        return tuple(reversed(coords))

    def strides(self) -> tuple[int, ...]:
        return tuple(self.side ** (self.d - 1 - i) for i in range(self.d))


def dense_index(p: Sequence[int], box: Box) -> int:
    return box.dense_index(p)


def point_at(index: int, box: Box) -> Point:
    return box.point_at(index)
