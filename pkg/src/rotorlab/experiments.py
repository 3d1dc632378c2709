"""Experiments on the rotor walk from the origin.

All box-exit measurements for radii ``0..n_max`` come from one walk: the
boxes are nested and the walk is deterministic, so restarting for each
radius would only retrace the same path.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator

import numpy as np

from .config import ConfigRule
from .engine import (
    DENSE_SITE_LIMIT,
    MAX_STEPS,
    ExitRecord,
    RotorOrder,
    WalkState,
    checkpoint_load,
    checkpoint_save,
    default_cap,
)
from .errors import CapExhausted, CheckpointMismatchError, ContractViolation, SweepInterrupted
from .lattice import Box, Point

log = logging.getLogger(__name__)

COUNTING_CONVENTION = "origin visits include the initial placement at t=0"
PROGRESS_EVERY = 10**8


@dataclass(frozen=True)
class ConjectureRow:
    n: int
    origin_visits: int
    expected: int
    first_exit_step: int
    elapsed: float | None = None

    @property
    def match(self) -> bool:
        return self.origin_visits == self.expected


def expected_visits(n: int, d: int) -> int:
    """``2d*n + 1``; the 6n+1 law in three dimensions."""
    return 2 * d * n + 1


def _dense_radius_for(n_max: int, d: int, dense: bool) -> int | None:
    if not dense or (2 * n_max + 1) ** d > DENSE_SITE_LIMIT:
        return None
    return n_max


def walk_exits(n_max: int, rule: ConfigRule, order: RotorOrder | None = None, *,
               resume: str | Path | None = None, checkpoint_path: str | Path | None = None,
               checkpoint_every: int | None = None, halt_after: int | None = None,
               step_cap: int | None = None, dense: bool = True, instrument: bool = False,
               digest: bool = True) -> Iterator[tuple[ExitRecord, WalkState]]:
    """Yield ``(record, state)`` at the first exit of each B[0,m], m = 0..n_max.

    Records already held in a resumed checkpoint are yielded first. With
    ``checkpoint_every`` the state is saved to ``checkpoint_path`` at that step
    interval; ``halt_after`` saves and raises :class:`SweepInterrupted` once the
    step count reaches it.
    """
    if n_max < 0:
        raise ContractViolation(f"n_max must be non-negative, got {n_max}")
    d = rule.d
    order = order or RotorOrder.default(d)
    radius = _dense_radius_for(n_max, d, dense)
    if resume is not None:
        state = checkpoint_load(resume, d=d, dense_radius=radius)
        if state.rule != rule or state.order != order:
            raise CheckpointMismatchError(
                f"{resume}: checkpoint was written for rule {state.rule.describe()} "
                f"order {state.order.describe()}")
        if instrument and not state.instrumented:
            raise ContractViolation(f"{resume}: checkpoint was saved without instrumentation")
    else:
        state = WalkState.start(rule, order, dense_radius=radius, instrument=instrument)
    if (checkpoint_every is not None or halt_after is not None) and checkpoint_path is None:
        raise ContractViolation("checkpointing needs a checkpoint path")

    for rec in state.exit_records[: n_max + 1]:
        yield rec, state
    next_ckpt = state.step_count + checkpoint_every if checkpoint_every else None
    next_progress = (state.step_count // PROGRESS_EVERY + 1) * PROGRESS_EVERY

    for n in range(len(state.exit_records), n_max + 1):
        cap = step_cap if step_cap is not None else default_cap((2 * n + 1) ** d, 2 * n, d)
        started = state.step_count
        while True:
            if halt_after is not None and state.step_count >= halt_after:
                checkpoint_save(state, checkpoint_path)
                raise SweepInterrupted(checkpoint_path, state.step_count)
            budget = min(MAX_STEPS, started + cap - state.step_count, next_progress - state.step_count)
            if next_ckpt is not None:
                budget = min(budget, next_ckpt - state.step_count)
            if halt_after is not None:
                budget = min(budget, halt_after - state.step_count)
            if budget <= 0:
                raise CapExhausted(cap, f"step cap of {cap} exhausted before leaving B[0,{n}]")
            rec = state.advance_toward_exit(n, budget, digest=digest)
            if state.step_count >= next_progress:
                log.info("step %d, radius %d, origin visits %d",
                         state.step_count, state.max_norm_seen, state.origin_visits)
                next_progress += PROGRESS_EVERY
            if next_ckpt is not None and state.step_count >= next_ckpt:
                checkpoint_save(state, checkpoint_path)
                next_ckpt += checkpoint_every
            if rec is not None:
                break
        yield rec, state


def conjecture_sweep(n_max: int, rule: ConfigRule, order: RotorOrder | None = None, *,
                     on_row: Callable[[ConjectureRow], None] | None = None, **kwargs) -> list[ConjectureRow]:
    """Origin visits before the first exit of each B[0,n], n = 0..n_max."""
    t0 = time.perf_counter()
    rows = []
    for rec, _ in walk_exits(n_max, rule, order, **kwargs):
        row = ConjectureRow(rec.n, rec.origin_visits, expected_visits(rec.n, rule.d),
                            rec.first_exit_step, time.perf_counter() - t0)
        rows.append(row)
        if on_row is not None:
            on_row(row)
    return rows


@dataclass(frozen=True)
class StabilizationRow:
    site: Point
    labels_at_exits: tuple[int, ...]
    stabilized_at: int | None


def stabilization_radius(labels) -> int | None:
    """Smallest m0 after which the label never changes again.

    ``None`` means the final label was seen only once, at the last exit, so
    nothing within range confirms it.
    """
    last = len(labels) - 1
    m0 = last
    while m0 > 0 and labels[m0 - 1] == labels[last]:
        m0 -= 1
    if m0 == last and last > 0:
        return None
    return m0


def stabilization_study(n_max: int, inner_radius: int, rule: ConfigRule,
                        order: RotorOrder | None = None, **kwargs) -> list[StabilizationRow]:
    """Labels of every site of B[0,inner_radius] at each box-exit event."""
    if not 0 <= inner_radius <= n_max:
        raise ContractViolation(f"need 0 <= inner_radius <= n_max, got {inner_radius}, {n_max}")
    inner = Box(inner_radius, rule.d)
    snaps = [state.snapshot(inner) for _, state in walk_exits(n_max, rule, order, **kwargs)]
    table = np.stack(snaps, axis=1)
    return [StabilizationRow(p, tuple(int(v) for v in table[i]), stabilization_radius(table[i]))
            for i, p in enumerate(inner.points())]


@dataclass(frozen=True)
class BalanceRow:
    site: Point
    initial_label: int
    departures: int
    counts: tuple[int, ...]
    current_label: int
    ok: bool


def expected_counts(initial: int, k: int, order: RotorOrder) -> list[int]:
    size = len(order.successor)
    out = [k // size] * size
    for lab in order.cycle_from(initial)[: k % size]:
        out[lab] += 1
    return out


def balance_report(state: WalkState) -> list[BalanceRow]:
    """Check every departed site against the successor cycle from its initial label."""
    rows = []
    for p, counts in state.departures().items():
        init = state.rule(p)
        k = sum(counts)
        if k == 0:
            continue
        cur = state.label_at(p)
        ok = (counts == expected_counts(init, k, state.order)
              and max(counts) - min(counts) <= 1
              and cur == state.order.advance(init, k))
        if not ok:
            log.warning("direction balance violated at %s: counts %s, label %d", p, counts, cur)
        rows.append(BalanceRow(p, init, k, tuple(counts), cur, ok))
    return rows


@dataclass(frozen=True)
class SrwSummary:
    n: int
    trials: int
    seed: int
    mean_origin_visits: float
    min: int
    max: int
    std_error: float


def srw_origin_visits(n: int, trials: int, seed: int, d: int = 3) -> np.ndarray:
    """Origin visits (t=0 included) of simple random walks before leaving B[0,n].

    Walks are advanced in lockstep from one PCG64 stream seeded with ``seed``.
    """
    if trials < 1:
        raise ContractViolation(f"need at least one trial, got {trials}")
    rng = np.random.Generator(np.random.PCG64(seed))
    pos = np.zeros((trials, d), dtype=np.int64)
    visits = np.ones(trials, dtype=np.int64)
    active = np.arange(trials)
    while active.size:
        moves = rng.integers(0, 2 * d, size=active.size)
        axis = moves % d
        sign = np.where(moves < d, 1, -1)
        pos[active, axis] += sign
        here = pos[active]
        visits[active[~here.any(axis=1)]] += 1
        active = active[np.abs(here).max(axis=1) <= n]
    return visits


def srw_comparison(n: int, trials: int, seed: int, d: int = 3) -> SrwSummary:
    v = srw_origin_visits(n, trials, seed, d)
    se = float(v.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return SrwSummary(n, trials, seed, float(v.mean()), int(v.min()), int(v.max()), se)


# CSV output. Every file opens with one comment line describing the run.

def header_line(fields: dict) -> str:
    from . import __version__
    parts = [f"rotorlab {__version__}"] + [f"{k}={v}" for k, v in fields.items()]
    parts.append(f"counting={COUNTING_CONVENTION}")
    return "# " + "; ".join(parts) + "\n"


def _csv(header: str, columns: list[str], rows) -> str:
    buf = io.StringIO()
    buf.write(header)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def coord_names(d: int) -> list[str]:
    return ["x", "y", "z"] if d == 3 else [f"x{i + 1}" for i in range(d)]


def conjecture_csv(rows: list[ConjectureRow], header: str, timing: bool = False) -> str:
    return _csv(header, ["n", "origin_visits", "expected", "match", "first_exit_step", "elapsed_s"],
                ([r.n, r.origin_visits, r.expected, str(r.match).lower(), r.first_exit_step,
                  f"{r.elapsed:.3f}" if timing and r.elapsed is not None else ""] for r in rows))


def stabilization_csv(rows: list[StabilizationRow], header: str) -> str:
    d = len(rows[0].site)
    m = len(rows[0].labels_at_exits)
    cols = coord_names(d) + ["stabilized_at"] + [f"label_n{i}" for i in range(m)]
    return _csv(header, cols, ([*r.site, "unstable" if r.stabilized_at is None else r.stabilized_at,
                                *r.labels_at_exits] for r in rows))


def balance_csv(rows: list[BalanceRow], d: int, header: str) -> str:
    cols = coord_names(d) + ["initial_label", "departures"] + [f"count_{i}" for i in range(2 * d)]
    cols += ["current_label", "ok"]
    return _csv(header, cols, ([*r.site, r.initial_label, r.departures, *r.counts, r.current_label,
                                str(r.ok).lower()] for r in rows))


def srw_csv(summary: SrwSummary, header: str) -> str:
    s = summary
    return _csv(header, ["n", "trials", "seed", "mean", "min", "max"],
                [[s.n, s.trials, s.seed, repr(s.mean_origin_visits), s.min, s.max]])
