"""Acceptance criteria; a pass/fail line per criterion is printed in the summary."""

import random
import time

import numpy as np
import pytest

import oracle
from rotorlab import Box, CapExhausted, ConfigRule, RotorOrder, WalkState, checkpoint_load, checkpoint_save
from rotorlab.aggregation import aggregate, shape_report
from rotorlab.cli import EXIT_INTERRUPTED, main
from rotorlab.experiments import (
    balance_report,
    conjecture_sweep,
    srw_comparison,
    stabilization_csv,
    stabilization_study,
    walk_exits,
)

TOWARD3 = ConfigRule.toward_origin(3)

# Sphericity of the d=2, k=500 rotor cluster from the naive oracle was 9/12 = 0.75.
SPHERICITY_T0 = 0.75 - 0.05

# Seeded SRW fixture: n=20, 10^4 trials, seed 42, PCG64.
SRW_MEAN, SRW_MIN, SRW_MAX = 1.5025, 1, 9


def g(x, l, d):
    """One-line evaluation of the step map on (position, labeling)."""
    return (tuple(v + (l(x) == i) - (l(x) == i + d) for i, v in enumerate(x)),
            lambda y: (l(y) + 1) % (2 * d) if y == x else l(y))


@pytest.mark.criterion(1, "step function conformance, 1e5 random single steps, exact")
def test_step_function_conformance():
    rng = random.Random(2024)
    walks = {d: [(WalkState.start(ConfigRule.toward_origin(d)), {}),
                 (WalkState.start(ConfigRule.toward_origin(d), dense_radius=3), {})]
             for d in (1, 2, 3, 4)}
    engine_time = 0.0
    for _ in range(10**5):
        d = rng.randint(1, 4)
        state, mirror = rng.choice(walks[d])
        x = tuple(rng.randint(-5, 5) for _ in range(d))
        probe = tuple(rng.randint(-5, 5) for _ in range(d))
        l = lambda y, m=mirror: m.get(y, oracle.toward_origin(y))
        x_next, l_next = g(x, l, d)
        state.position = x
        t = time.perf_counter()
        state.step()
        engine_time += time.perf_counter() - t
        assert state.position == x_next
        assert state.label_at(x) == l_next(x)
        assert state.label_at(probe) == l_next(probe)
        mirror[x] = l_next(x)
    print(f"engine time for 1e5 steps: {engine_time:.3f}s")
    assert engine_time < 1.0


@pytest.mark.criterion(2, "6n+1 origin visits for n=0..20 in d=3, plus interrupted/resumed sweep byte-identical")
def test_six_n_plus_one_and_resume(tmp_path, capsys):
    rows = conjecture_sweep(20, TOWARD3)
    assert [r.n for r in rows] == list(range(21))
    assert [r.origin_visits for r in rows] == [6 * n + 1 for n in range(21)]
    assert all(r.match for r in rows)
    literal = conjecture_sweep(20, ConfigRule.paper_literal(3))
    print("toward-origin visits:", [r.origin_visits for r in rows])
    print("paper-literal visits:", [r.origin_visits for r in literal])

    a, b, ck = tmp_path / "a", tmp_path / "b", tmp_path / "ck.json"
    assert main(["conjecture", "--n-max", "20", "--out", str(a), "--quiet"]) == 0
    code = main(["conjecture", "--n-max", "20", "--checkpoint-every", "10^5", "--checkpoint", str(ck),
                 "--halt-after", "1000000", "--out", str(b), "--quiet"])
    assert code == EXIT_INTERRUPTED
    assert main(["conjecture", "--n-max", "20", "--checkpoint-every", "10^5",
                 "--resume", str(ck), "--out", str(b), "--quiet"]) == 0
    capsys.readouterr()
    assert (a / "conjecture.csv").read_bytes() == (b / "conjecture.csv").read_bytes()


@pytest.mark.criterion(3, "1000 random regions in B[0,4], d in {1,2,3}: zero cap exhaustions")
def test_lemma_termination():
    rng = random.Random(7)
    exhausted = 0
    for _ in range(1000):
        d = rng.randint(1, 3)
        box = list(Box(4, d).points())
        entries = {p: rng.randrange(2 * d) for p in rng.sample(box, rng.randint(0, len(box)))}
        rule = ConfigRule.table(entries, rng.randrange(2 * d), d)
        region = {p for p in box if rng.random() < rng.uniform(0.2, 1.0)}
        start = rng.choice(box)
        region.add(start)
        state = WalkState.start(rule, RotorOrder.from_cycle(rng.sample(range(2 * d), 2 * d)), start)
        try:
            state.run_until_exit(region)
        except CapExhausted:
            exhausted += 1
        assert state.position not in region
    assert exhausted == 0


@pytest.mark.criterion(4, "direction balance after the n=10 sweep, zero violations")
def test_direction_balance():
    state = None
    for _, state in walk_exits(10, TOWARD3, instrument=True):
        pass
    order = state.order
    rows = balance_report(state)
    assert rows and all(r.ok for r in rows)
    assert sum(r.departures for r in rows) == state.step_count
    for r in rows:
        seq = order.cycle_from(r.initial_label)
        expected = [0] * 6
        for j in range(r.departures):
            expected[seq[j % 6]] += 1
        assert list(r.counts) == expected
        assert max(r.counts) - min(r.counts) <= 1
        assert r.current_label == order.advance(r.initial_label, r.departures)


@pytest.mark.criterion(5, "optimized vs naive engine after 1e6 steps, d=3 toward-origin, exact")
def test_oracle_equivalence():
    steps = 10**6
    fast = WalkState.start(TOWARD3, dense_radius=12)
    assert fast.advance_toward_exit(10**9, steps) is None
    naive = oracle.NaiveWalk(3, oracle.toward_origin)
    for _ in range(steps):
        naive.step()
    assert fast.position == naive.pos
    assert fast.step_count == naive.steps == steps
    assert fast.origin_visits == naive.origin_visits
    assert fast.max_norm_seen == naive.max_norm
    assert fast.snapshot(Box(3, 3)).tolist() == naive.box_labels(3)


@pytest.mark.criterion(6, "stabilization of B[0,3] with n_max=15 matches frozen fixture, deterministic")
def test_stabilization(oracle_fixtures):
    rows = stabilization_study(15, 3, TOWARD3)
    again = stabilization_study(15, 3, TOWARD3)
    assert len(rows) == 343
    assert all(r.stabilized_at is not None and r.stabilized_at <= 15 for r in rows)
    assert [r.stabilized_at for r in rows] == oracle_fixtures["stabilization_n15_r3"]
    assert stabilization_csv(rows, "") == stabilization_csv(again, "")


@pytest.mark.criterion(7, "seeded SRW at n=20, 1e4 trials: reproducible, mean < 121")
def test_srw_contrast():
    t = time.perf_counter()
    a = srw_comparison(20, 10**4, 42)
    b = srw_comparison(20, 10**4, 42)
    elapsed = time.perf_counter() - t
    assert a == b
    assert (a.mean_origin_visits, a.min, a.max) == (SRW_MEAN, SRW_MIN, SRW_MAX)
    assert a.mean_origin_visits < 121
    print(f"SRW mean {a.mean_origin_visits} (two runs {elapsed:.2f}s)")


@pytest.mark.criterion(8, "aggregation sizes, d=2 k=500 sphericity >= T0, checkpoint continuation")
def test_aggregation_and_checkpoint(tmp_path):
    for k in (0, 1, 10, 500):
        assert len(aggregate(k, ConfigRule.toward_origin(2)).occupied) == k + 1
    rep = shape_report(aggregate(500, ConfigRule.toward_origin(2)))
    print(f"rotor aggregation k=500: inradius {rep.inradius}, outradius {rep.outradius}, "
          f"sphericity {float(rep.sphericity):.3f}")
    assert float(rep.sphericity) >= SPHERICITY_T0

    s = WalkState.start(TOWARD3, dense_radius=6)
    for n in range(5):
        s.run_until_norm_exceeds(n)
    checkpoint_save(s, tmp_path / "ck.json")
    t = checkpoint_load(tmp_path / "ck.json", d=3)
    for _ in range(10**4):
        s.step()
        t.step()
        assert (s.position, s.step_count, s.origin_visits) == (t.position, t.step_count, t.origin_visits)
    assert np.array_equal(s.snapshot(Box(6, 3)), t.snapshot(Box(6, 3)))
