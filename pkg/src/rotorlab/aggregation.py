"""Rotor-router aggregation and its random counterpart, IDLA.

Each particle starts at the origin and walks until it first steps off the
occupied cluster; that site joins the cluster. In the rotor version the
rotor field persists from one particle to the next, and freshly adjoined
sites keep whatever label the configuration rule gives them.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction
from statistics import mean

import numpy as np

from .config import ConfigRule
from .engine import RotorField, RotorOrder, WalkState
from .errors import ContractViolation
from .lattice import Point, infinity_norm, origin, unit_vector


@dataclass
class AggregationState:
    occupied: set[Point]
    field: RotorField | None
    particles_released: int = 0

    @property
    def d(self) -> int:
        return len(next(iter(self.occupied)))


@dataclass(frozen=True)
class ShapeReport:
    inradius: int
    outradius: int

    @property
    def sphericity(self) -> Fraction:
        if self.outradius == 0:
            return Fraction(1)
        return Fraction(self.inradius, self.outradius)


def aggregate(k: int, rule: ConfigRule, order: RotorOrder | None = None) -> AggregationState:
    if k < 0:
        raise ContractViolation(f"particle count must be non-negative, got {k}")
    d = rule.d
    walk = WalkState.start(rule, order)
    occupied = {origin(d)}
    for _ in range(k):
        walk.position = origin(d)
        walk.run_until_exit(occupied)
        occupied.add(walk.position)
    return AggregationState(occupied, walk.field, k)


def _shell(r: int, d: int):
    if r == 0:
        yield (0,) * d
        return
    for p in np.ndindex(*(2 * r + 1,) * d):
        q = tuple(v - r for v in p)
        if max(abs(v) for v in q) == r:
            yield q


def shell_capacity(r: int, d: int) -> int:
    return 1 if r == 0 else (2 * r + 1) ** d - (2 * r - 1) ** d


def shape_report(state: AggregationState) -> ShapeReport:
    occ = state.occupied
    d = state.d
    outradius = max(infinity_norm(p) for p in occ)
    inradius = 0
    while inradius < outradius and all(p in occ for p in _shell(inradius + 1, d)):
        inradius += 1
    return ShapeReport(inradius, outradius)


def shell_counts(state: AggregationState) -> list[tuple[int, int, int]]:
    """``(radius, occupied, capacity)`` for every inf-norm shell up to the outradius."""
    d = state.d
    counts: dict[int, int] = {}
    for p in state.occupied:
        r = infinity_norm(p)
        counts[r] = counts.get(r, 0) + 1
    top = max(counts)
    return [(r, counts.get(r, 0), shell_capacity(r, d)) for r in range(top + 1)]


def cluster_json(state: AggregationState) -> str:
    doc = {"d": state.d, "k": state.particles_released,
           "sites": [list(p) for p in sorted(state.occupied)]}
    return json.dumps(doc) + "\n"


def shells_csv(state: AggregationState) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["radius", "occupied", "capacity"])
    w.writerows(shell_counts(state))
    return buf.getvalue()


@dataclass(frozen=True)
class IdlaSummary:
    k: int
    d: int
    seed: int
    trials: int
    reports: tuple[ShapeReport, ...]

    @property
    def sphericities(self) -> list[float]:
        return [float(r.sphericity) for r in self.reports]

    @property
    def mean_sphericity(self) -> float:
        return mean(self.sphericities)

    @property
    def min_sphericity(self) -> float:
        return min(self.sphericities)

    @property
    def max_sphericity(self) -> float:
        return max(self.sphericities)


def idla_cluster(k: int, d: int, rng: np.random.Generator, block: int = 4096) -> AggregationState:
    """One IDLA cluster of ``k`` particles driven by ``rng``."""
    steps = [unit_vector(i, d) for i in range(2 * d)]
    home = origin(d)
    occupied = {home}
    moves = rng.integers(0, 2 * d, size=block)
    j = 0
    for _ in range(k):
        p = home
        while p in occupied:
            if j == block:
                moves = rng.integers(0, 2 * d, size=block)
                j = 0
            s = steps[moves[j]]
            j += 1
            p = tuple(a + b for a, b in zip(p, s))
        occupied.add(p)
    return AggregationState(occupied, None, k)


def idla_baseline(k: int, seed: int, trials: int, d: int = 2) -> IdlaSummary:
    """Seeded Monte Carlo IDLA; trial ``i`` uses the ``i``-th spawned PCG64 stream."""
    if trials < 1:
        raise ContractViolation(f"need at least one trial, got {trials}")
    streams = np.random.SeedSequence(seed).spawn(trials)
    reports = tuple(shape_report(idla_cluster(k, d, np.random.Generator(np.random.PCG64(s))))
                    for s in streams)
    return IdlaSummary(k, d, seed, trials, reports)
