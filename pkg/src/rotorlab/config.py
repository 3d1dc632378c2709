"""Initial rotor configurations: total maps from lattice points to labels.

``toward-origin`` sends a first-time visitor one step toward the origin along
its unique largest coordinate, and falls back to label 1 on ties and at the
origin. ``paper-literal`` is the same table except on two loci, where the
published case table prints a different label: a strictly dominant negative
first coordinate gets ``2d-1`` and a strictly dominant positive last
coordinate gets ``2d-2``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ContractViolation
from .lattice import Point, check_dimension, check_label

KINDS = ("toward-origin", "paper-literal", "uniform", "table")


@dataclass(frozen=True)
class ConfigRule:
    kind: str
    d: int
    label: int | None = None
    default: int | None = None
    entries: Mapping[Point, int] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        check_dimension(self.d)
        if self.kind not in KINDS:
            raise ContractViolation(f"unknown rule kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "uniform":
            check_label(self.label, self.d)
        if self.kind == "table":
            check_label(self.default, self.d)
            for p, lab in self.entries.items():
                if len(p) != self.d:
                    raise ContractViolation(f"table entry {p} has wrong dimension for d={self.d}")
                check_label(lab, self.d)

    def __eq__(self, other):
        if not isinstance(other, ConfigRule):
            return NotImplemented
        return (self.kind, self.d, self.label, self.default, dict(self.entries)) == (
            other.kind, other.d, other.label, other.default, dict(other.entries))

    def __hash__(self):
        return hash((self.kind, self.d, self.label, self.default, len(self.entries)))

    @classmethod
    def toward_origin(cls, d: int) -> ConfigRule:
        return cls("toward-origin", d)

    @classmethod
    def paper_literal(cls, d: int) -> ConfigRule:
        return cls("paper-literal", d)

    @classmethod
    def uniform(cls, label: int, d: int) -> ConfigRule:
        return cls("uniform", d, label=label)

    @classmethod
    def table(cls, entries: Mapping[Sequence[int], int], default: int, d: int) -> ConfigRule:
        return cls("table", d, default=default,
                   entries={tuple(int(v) for v in p): int(lab) for p, lab in entries.items()})

    def __call__(self, p: Sequence[int]) -> int:
        return initial_label(p, self)

    def describe(self) -> str:
        if self.kind == "uniform":
            return f"uniform:{self.label}"
        if self.kind == "table":
            return f"table({len(self.entries)} entries, default {self.default})"
        return self.kind

    def to_json(self) -> dict:
        out = {"kind": self.kind, "d": self.d}
        if self.kind == "uniform":
            out["label"] = self.label
        if self.kind == "table":
            out["default"] = self.default
            out["entries"] = [[list(p), lab] for p, lab in sorted(self.entries.items())]
        return out

    @classmethod
    def from_json(cls, obj: dict) -> ConfigRule:
        kind, d = obj["kind"], int(obj["d"])
        if kind == "uniform":
            return cls.uniform(int(obj["label"]), d)
        if kind == "table":
            return cls.table({tuple(p): lab for p, lab in obj["entries"]}, int(obj["default"]), d)
        return cls(kind, d)


def _strict_max_axis(p: Sequence[int]) -> int | None:
    mags = [abs(v) for v in p]
    top = max(mags)
    if top == 0 or mags.count(top) != 1:
        return None
    return mags.index(top)


def initial_label(p: Sequence[int], rule: ConfigRule) -> int:
    d = rule.d
    if len(p) != d:
        raise ContractViolation(f"point {tuple(p)} does not live in d={d}")
    if rule.kind == "uniform":
        return rule.label
    if rule.kind == "table":
        return rule.entries.get(tuple(p), rule.default)
    axis = _strict_max_axis(p)
    if axis is None:
        return 1
    negative = p[axis] < 0
    if rule.kind == "paper-literal":
        if axis == 0 and negative:
            return 2 * d - 1
        if axis == d - 1 and not negative:
            return 2 * d - 2
    return axis if negative else d + axis


def initial_labels(points: np.ndarray, rule: ConfigRule) -> np.ndarray:
    """Vectorized ``initial_label`` over an ``(N, d)`` integer array; returns uint8."""
    pts = np.asarray(points, dtype=np.int64)
    if pts.ndim != 2 or pts.shape[1] != rule.d:
        raise ContractViolation(f"expected an (N, {rule.d}) array, got shape {pts.shape}")
    n, d = pts.shape
    if rule.kind == "uniform":
        return np.full(n, rule.label, dtype=np.uint8)
    if rule.kind == "table":
        out = np.full(n, rule.default, dtype=np.uint8)
        if rule.entries and n:
            lookup = rule.entries
            for i, row in enumerate(map(tuple, pts.tolist())):
                lab = lookup.get(row)
                if lab is not None:
                    out[i] = lab
        return out
    mags = np.abs(pts)
    top = mags.max(axis=1) if d else np.zeros(n, dtype=np.int64)
    unique = ((mags == top[:, None]).sum(axis=1) == 1) & (top > 0)
    axis = mags.argmax(axis=1)
    negative = pts[np.arange(n), axis] < 0
    out = np.where(negative, axis, d + axis)
    if rule.kind == "paper-literal":
        out = np.where(unique & negative & (axis == 0), 2 * d - 1, out)
        out = np.where(unique & ~negative & (axis == d - 1), 2 * d - 2, out)
    return np.where(unique, out, 1).astype(np.uint8)


def load_table(path: str | Path, d: int) -> ConfigRule:
    """Read a ``{"default": label, "entries": [[[coords], label], ...]}`` file."""
    with open(path) as fh:
        obj = json.load(fh)
    try:
        entries = {tuple(int(v) for v in coords): int(lab) for coords, lab in obj["entries"]}
        default = int(obj["default"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ContractViolation(f"malformed table file {path}: {exc}") from exc
    return ConfigRule.table(entries, default, d)


def parse_rule(text: str, d: int) -> ConfigRule:
    """Parse ``toward-origin | paper-literal | uniform:<label> | table:<path>``."""
    if text in ("toward-origin", "paper-literal"):
        return ConfigRule(text, d)
    if text.startswith("uniform:"):
        try:
            label = int(text.split(":", 1)[1])
        except ValueError:
            raise ContractViolation(f"bad uniform label in rule {text!r}") from None
        return ConfigRule.uniform(label, d)
    if text.startswith("table:"):
        return load_table(text.split(":", 1)[1], d)
    raise ContractViolation(
        f"unknown rule {text!r}; use toward-origin, paper-literal, uniform:<label> or table:<path>")
