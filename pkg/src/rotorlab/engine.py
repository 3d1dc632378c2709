"""The rotor walk engine.

A step reads the rotor at the walker's site, moves one unit along it, then
advances that rotor to its successor label (move-then-rotate). Origin visits
count the initial placement at t=0 as the first visit.

Rotor labels live in a :class:`RotorField`: an initial-configuration rule
for untouched sites, a sparse dict for touched sites, and optionally a dense
uint8 grid over a declared box so long runs can go through the compiled
kernel. The dense grid is a storage choice only; lookups agree exactly with
the sparse semantics.
"""

from __future__ import annotations

import copy
import json
import os
import tempfile
from dataclasses import asdict, dataclass
from dataclasses import field as dc_field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import _kernel
from .config import ConfigRule, initial_labels
from .errors import (
    CapExhausted,
    CheckpointCorruptError,
    CheckpointDimensionError,
    CheckpointVersionError,
    ContractViolation,
    InstrumentationDisabled,
)
from .lattice import Box, Point, check_dimension, check_label, infinity_norm, translate

CHECKPOINT_FORMAT = "rotorlab-ckpt"
CHECKPOINT_VERSION = 1
MAX_STEPS = 2**63 - 1

# Dense grids beyond B[0,300] in d=3 are refused.
DENSE_SITE_LIMIT = 601**3


@dataclass(frozen=True)
class RotorOrder:
    """Successor permutation on labels; must be a single cycle through all 2d labels."""

    successor: tuple[int, ...]

    def __post_init__(self):
        k = len(self.successor)
        if k < 2 or k % 2:
            raise ContractViolation(f"rotor order needs an even number >= 2 of labels, got {k}")
        if sorted(self.successor) != list(range(k)):
            raise ContractViolation(f"rotor order {self.successor} is not a permutation of 0..{k - 1}")
        seen, c = set(), 0
        while c not in seen:
            seen.add(c)
            c = self.successor[c]
        if len(seen) != k:
            raise ContractViolation(f"rotor order {self.successor} is not a single {k}-cycle")

    @classmethod
    def default(cls, d: int) -> RotorOrder:
        k = 2 * check_dimension(d)
        return cls(tuple((i + 1) % k for i in range(k)))

    @classmethod
    def from_cycle(cls, cycle: Sequence[int]) -> RotorOrder:
        """Build from the rotation sequence, e.g. ``(0, 1, 2, 3, 4, 5)``."""
        succ = [0] * len(cycle)
        for a, b in zip(cycle, list(cycle[1:]) + [cycle[0]]):
            if not 0 <= a < len(cycle):
                raise ContractViolation(f"label {a} out of range in cycle {tuple(cycle)}")
            succ[a] = b
        return cls(tuple(succ))

    @property
    def d(self) -> int:
        return len(self.successor) // 2

    @property
    def is_default(self) -> bool:
        return self == RotorOrder.default(self.d)

    def advance(self, label: int, k: int = 1) -> int:
        for _ in range(k % len(self.successor)):
            label = self.successor[label]
        return label

    def cycle_from(self, label: int) -> list[int]:
        out = [label]
        while len(out) < len(self.successor):
            out.append(self.successor[out[-1]])
        return out

    def describe(self) -> str:
        if self.is_default:
            return "default"
        return "cycle:" + ",".join(map(str, self.cycle_from(0)))

    def to_json(self):
        return "default" if self.is_default else list(self.successor)

    @classmethod
    def from_json(cls, obj, d: int) -> RotorOrder:
        if obj == "default":
            return cls.default(d)
        return cls(tuple(int(v) for v in obj))


def parse_order(text: str, d: int) -> RotorOrder:
    """Parse ``default`` or ``cycle:<l0>,<l1>,...`` (the rotation sequence)."""
    if text == "default":
        return RotorOrder.default(d)
    if text.startswith("cycle:"):
        try:
            cycle = [int(v) for v in text[6:].split(",")]
        except ValueError:
            raise ContractViolation(f"bad rotor order {text!r}") from None
        if len(cycle) != 2 * d:
            raise ContractViolation(f"rotor order {text!r} must list all {2 * d} labels")
        return RotorOrder.from_cycle(cycle)
    raise ContractViolation(f"unknown rotor order {text!r}; use default or cycle:<labels>")


class DenseGrid:
    """Contiguous label storage for every site of a box."""

    def __init__(self, box: Box, rule: ConfigRule, instrument: bool):
        self.box = box
        self.labels = np.empty(box.site_count, dtype=np.uint8)
        self.modified = np.zeros(box.site_count, dtype=np.uint8)
        k = 2 * box.d
        self.uses = np.zeros((box.site_count if instrument else 0, k), dtype=np.int64)
        self.strides = np.array(box.strides(), dtype=np.int64)
        # Fill slab by slab along the first axis to bound temporary memory.
        r, d = box.radius, box.d
        slab = box.site_count // box.side
        tail = Box(r, d - 1).point_array() if d > 1 else np.zeros((1, 0), dtype=np.int64)
        for i, x0 in enumerate(range(-r, r + 1)):
            pts = np.hstack([np.full((tail.shape[0], 1), x0, dtype=np.int64), tail])
            self.labels[i * slab:(i + 1) * slab] = initial_labels(pts, rule)

    def index(self, p: Sequence[int]) -> int | None:
        r = self.box.radius
        idx = 0
        for v, s in zip(p, self.strides):
            if not -r <= v <= r:
                return None
            idx += (v + r) * int(s)
        return idx

    def modified_sites(self) -> Iterator[tuple[Point, int, list[int] | None]]:
        instrumented = self.uses.shape[0] > 0
        for idx in np.flatnonzero(self.modified):
            idx = int(idx)
            uses = self.uses[idx].tolist() if instrumented else None
            yield self.box.point_at(idx), int(self.labels[idx]), uses


class RotorField:
    """Total labeling of Z^d: rule for untouched sites plus modified sites."""

    def __init__(self, rule: ConfigRule, dense_radius: int | None = None, instrument: bool = False):
        self.rule = rule
        self.d = rule.d
        self.instrument = instrument
        self._sparse: dict[Point, int] = {}
        self._sparse_uses: dict[Point, list[int]] = {}
        self.dense: DenseGrid | None = None
        if dense_radius is not None:
            box = Box(dense_radius, self.d)
            if box.site_count > DENSE_SITE_LIMIT:
                raise ContractViolation(
                    f"dense grid of {box.site_count} sites exceeds the limit of {DENSE_SITE_LIMIT}")
            self.dense = DenseGrid(box, rule, instrument)

    def label(self, p: Sequence[int]) -> int:
        if self.dense is not None:
            idx = self.dense.index(p)
            if idx is not None:
                return int(self.dense.labels[idx])
        p = tuple(p)
        lab = self._sparse.get(p)
        return self.rule(p) if lab is None else lab

    def depart(self, p: Point, successor: Sequence[int]) -> int:
        """Return the label used to leave ``p`` and rotate it."""
        if self.dense is not None:
            idx = self.dense.index(p)
            if idx is not None:
                c = int(self.dense.labels[idx])
                self.dense.labels[idx] = successor[c]
                self.dense.modified[idx] = 1
                if self.instrument:
                    self.dense.uses[idx, c] += 1
                return c
        c = self._sparse.get(p)
        if c is None:
            c = self.rule(p)
        self._sparse[p] = successor[c]
        if self.instrument:
            self._sparse_uses.setdefault(p, [0] * (2 * self.d))[c] += 1
        return c

    def restore(self, p: Point, label: int, uses: list[int] | None = None):
        check_label(label, self.d)
        if self.dense is not None:
            idx = self.dense.index(p)
            if idx is not None:
                self.dense.labels[idx] = label
                self.dense.modified[idx] = 1
                if self.instrument and uses is not None:
                    self.dense.uses[idx] = uses
                return
        self._sparse[p] = label
        if self.instrument and uses is not None:
            self._sparse_uses[p] = list(uses)

    def modified_sites(self) -> Iterator[tuple[Point, int, list[int] | None]]:
        """Yield ``(site, current_label, per-label departures or None)``, sorted."""
        items = []
        if self.dense is not None:
            items.extend(self.dense.modified_sites())
        for p, lab in self._sparse.items():
            items.append((p, lab, self._sparse_uses.get(p) if self.instrument else None))
        items.sort(key=lambda t: t[0])
        return iter(items)

    @property
    def overlay(self) -> dict[Point, int]:
        return {p: lab for p, lab, _ in self.modified_sites()}

    def overlay_size(self) -> int:
        n = len(self._sparse)
        if self.dense is not None:
            n += int(self.dense.modified.sum())
        return n

    def snapshot(self, box: Box) -> np.ndarray:
        if box.d != self.d:
            raise ContractViolation(f"box dimension {box.d} does not match field dimension {self.d}")
        dense = self.dense
        if dense is not None and box.radius <= dense.box.radius:
            off = dense.box.radius - box.radius
            block = dense.labels.reshape(dense.box.shape)
            sl = tuple(slice(off, off + box.side) for _ in range(self.d))
            return block[sl].ravel().copy()
        out = initial_labels(box.point_array(), self.rule)
        if dense is not None:
            off = box.radius - dense.box.radius
            sl = tuple(slice(off, off + dense.box.side) for _ in range(self.d))
            out.reshape(box.shape)[sl] = dense.labels.reshape(dense.box.shape)
        for p, lab in self._sparse.items():
            if box.contains(p):
                out[box.dense_index(p)] = lab
        return out


@dataclass
class ExitRecord:
    """First exit of B[0,n]: step index, origin visits so far, snapshot digest."""

    n: int
    first_exit_step: int
    origin_visits: int
    digest: int | None
    position: Point

    def to_json(self) -> dict:
        out = asdict(self)
        out["position"] = list(self.position)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> ExitRecord:
        return cls(int(obj["n"]), int(obj["first_exit_step"]), int(obj["origin_visits"]),
                   None if obj.get("digest") is None else int(obj["digest"]),
                   tuple(int(v) for v in obj["position"]))


def default_cap(region_size: int, diameter: int, d: int) -> int:
    """Generous defensive bound ``2d * |A|^2 * (diam(A) + 1)``, clamped to 64 bits."""
    return min(2 * d * region_size**2 * (diameter + 1), MAX_STEPS)


@dataclass
class WalkState:
    """Walker position, rotor field, and counters."""

    field: RotorField
    order: RotorOrder
    position: Point
    step_count: int = 0
    origin_visits: int = 0
    max_norm_seen: int = 0
    exit_records: list[ExitRecord] = dc_field(default_factory=list)

    @classmethod
    def start(cls, rule: ConfigRule, order: RotorOrder | None = None,
              position: Sequence[int] | None = None, dense_radius: int | None = None,
              instrument: bool = False) -> WalkState:
        d = rule.d
        order = order or RotorOrder.default(d)
        if order.d != d:
            raise ContractViolation(f"rotor order is for d={order.d}, rule is for d={d}")
        pos = tuple(int(v) for v in position) if position is not None else (0,) * d
        if len(pos) != d:
            raise ContractViolation(f"start position {pos} does not live in d={d}")
        return cls(RotorField(rule, dense_radius, instrument), order, pos,
                   origin_visits=0 if any(pos) else 1, max_norm_seen=infinity_norm(pos))

    @property
    def d(self) -> int:
        return self.field.d

    @property
    def rule(self) -> ConfigRule:
        return self.field.rule

    @property
    def instrumented(self) -> bool:
        return self.field.instrument

    def label_at(self, p: Sequence[int]) -> int:
        return self.field.label(p)

    def copy(self) -> WalkState:
        return copy.deepcopy(self)

    def step(self) -> WalkState:
        p = self.position
        c = self.field.depart(p, self.order.successor)
        q = translate(p, c)
        self.position = q
        self.step_count += 1
        norm = infinity_norm(q)
        if norm == 0:
            self.origin_visits += 1
        if norm > self.max_norm_seen:
            self.max_norm_seen = norm
        return self

    def _advance(self, target: int, budget: int) -> tuple[int, bool]:
        """Step until the norm exceeds ``target`` or ``budget`` steps pass."""
        taken = 0
        if infinity_norm(self.position) > target:
            return 0, True
        dense = self.field.dense
        while taken < budget:
            if dense is not None and infinity_norm(self.position) <= dense.box.radius:
                pos = np.array(self.position, dtype=np.int64)
                counters = np.array([self.step_count, self.origin_visits, self.max_norm_seen],
                                    dtype=np.int64)
                k, status = _kernel.run_dense(
                    pos, dense.labels, dense.modified, dense.uses, self.instrumented,
                    np.array(self.order.successor, dtype=np.uint8), dense.box.radius,
                    dense.strides, target, budget - taken, counters)
                taken += k
                self.position = tuple(int(v) for v in pos)
                self.step_count, self.origin_visits, self.max_norm_seen = (int(v) for v in counters)
                if status == _kernel.PASSED_TARGET:
                    return taken, True
                continue
            self.step()
            taken += 1
            if infinity_norm(self.position) > target:
                return taken, True
        return taken, False

    def run_until_exit(self, region: Box | Iterable[Sequence[int]], step_cap: int | None = None,
                       trajectory: list | None = None) -> int:
        """Walk until the position leaves ``region``; return the number of steps taken."""
        if isinstance(region, Box):
            if region.d != self.d:
                raise ContractViolation("region dimension does not match the walk")
            if not region.contains(self.position):
                raise ContractViolation(f"start {self.position} is not inside the region")
            cap = default_cap(region.site_count, 2 * region.radius, self.d) if step_cap is None else step_cap
            if trajectory is None:
                taken, done = self._advance(region.radius, cap)
                if not done:
                    raise CapExhausted(cap)
                return taken
            inside = region.contains
        else:
            members = region if isinstance(region, (set, frozenset)) else {tuple(p) for p in region}
            if self.position not in members:
                raise ContractViolation(f"start {self.position} is not inside the region")
            if step_cap is None:
                pts = np.array(list(members), dtype=np.int64)
                diam = int((pts.max(axis=0) - pts.min(axis=0)).max())
                step_cap = default_cap(len(members), diam, self.d)
            cap = step_cap
            inside = members.__contains__
        if trajectory is not None and not trajectory:
            trajectory.append(self.position)
        taken = 0
        while inside(self.position):
            if taken >= cap:
                raise CapExhausted(cap)
            self.step()
            taken += 1
            if trajectory is not None:
                trajectory.append(self.position)
        return taken

    def _record_exit(self, n: int, digest: bool) -> ExitRecord:
        dig = snapshot_digest(self.snapshot(Box(n, self.d))) if digest else None
        rec = ExitRecord(n, self.step_count, self.origin_visits, dig, self.position)
        self.exit_records.append(rec)
        return rec

    def run_until_norm_exceeds(self, n: int, step_cap: int | None = None, digest: bool = True,
                               trajectory: list | None = None) -> ExitRecord:
        """Walk until the position first leaves B[0,n]; record and return the exit."""
        if infinity_norm(self.position) > n:
            raise ContractViolation(f"position {self.position} is already outside B[0,{n}]")
        self.run_until_exit(Box(n, self.d), step_cap, trajectory)
        return self._record_exit(n, digest)

    def advance_toward_exit(self, n: int, budget: int, digest: bool = True) -> ExitRecord | None:
        """Like :meth:`run_until_norm_exceeds` but stop quietly after ``budget`` steps."""
        _, done = self._advance(n, budget)
        return self._record_exit(n, digest) if done else None

    def snapshot(self, box: Box) -> np.ndarray:
        return self.field.snapshot(box)

    def departures(self) -> dict[Point, list[int]]:
        """Per-site, per-label departure counts (needs instrumentation)."""
        if not self.instrumented:
            raise InstrumentationDisabled("departure counters were not enabled for this walk")
        return {p: uses for p, _, uses in self.field.modified_sites()}


def step(state: WalkState) -> WalkState:
    return state.step()


def run_until_exit(state: WalkState, region, step_cap: int | None = None) -> tuple[WalkState, int]:
    taken = state.run_until_exit(region, step_cap)
    return state, taken


def run_until_norm_exceeds(state: WalkState, n: int, step_cap: int | None = None) -> tuple[WalkState, ExitRecord]:
    rec = state.run_until_norm_exceeds(n, step_cap)
    return state, rec


def snapshot(state: WalkState, box: Box) -> np.ndarray:
    return state.snapshot(box)


def snapshot_digest(labels) -> int:
    """64-bit FNV-1a over the label bytes in dense-index order."""
    arr = np.ascontiguousarray(np.asarray(labels, dtype=np.uint8)).ravel()
    return int(_kernel.fnv1a64(arr))


def _atomic_write_text(path: Path, text: str):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def checkpoint_save(state: WalkState, path: str | Path):
    f = state.field
    overlay = []
    for p, lab, uses in f.modified_sites():
        entry = [list(p), lab]
        if uses is not None:
            entry.append(uses)
        overlay.append(entry)
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "d": state.d,
        "rule": state.rule.to_json(),
        "order": state.order.to_json(),
        "step_count": state.step_count,
        "position": list(state.position),
        "origin_visits": state.origin_visits,
        "max_norm_seen": state.max_norm_seen,
        "instrument": f.instrument,
        "dense_radius": None if f.dense is None else f.dense.box.radius,
        "exit_records": [r.to_json() for r in state.exit_records],
        "overlay": overlay,
    }
    _atomic_write_text(Path(path), json.dumps(doc, separators=(",", ":")))


def checkpoint_load(path: str | Path, d: int | None = None, dense_radius: int | None | str = "saved") -> WalkState:
    """Restore a walk. ``d`` checks the dimension; ``dense_radius`` overrides storage."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CheckpointCorruptError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict) or doc.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointCorruptError(f"{path}: not a {CHECKPOINT_FORMAT} file")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointVersionError(
            f"{path}: checkpoint version {doc.get('version')!r}, expected {CHECKPOINT_VERSION}")
    try:
        saved_d = int(doc["d"])
        if d is not None and saved_d != d:
            raise CheckpointDimensionError(f"{path}: checkpoint has d={saved_d}, expected d={d}")
        rule = ConfigRule.from_json(doc["rule"])
        order = RotorOrder.from_json(doc["order"], saved_d)
        if dense_radius == "saved":
            dense_radius = doc.get("dense_radius")
        state = WalkState.start(rule, order, doc["position"], dense_radius, bool(doc.get("instrument")))
        state.step_count = int(doc["step_count"])
        state.origin_visits = int(doc["origin_visits"])
        state.max_norm_seen = int(doc["max_norm_seen"])
        state.exit_records = [ExitRecord.from_json(r) for r in doc["exit_records"]]
        for entry in doc["overlay"]:
            p = tuple(int(v) for v in entry[0])
            if len(p) != saved_d:
                raise CheckpointCorruptError(f"{path}: overlay site {p} has wrong dimension")
            state.field.restore(p, int(entry[1]), entry[2] if len(entry) > 2 else None)
    except CheckpointDimensionError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise CheckpointCorruptError(f"{path}: malformed checkpoint ({exc})") from exc
    return state
