import pytest

import oracle
from rotorlab import ConfigRule, ContractViolation, InstrumentationDisabled, RotorOrder, WalkState
from rotorlab.errors import CheckpointMismatchError, SweepInterrupted
from rotorlab.experiments import (
    balance_csv,
    balance_report,
    conjecture_csv,
    conjecture_sweep,
    expected_counts,
    header_line,
    srw_comparison,
    srw_csv,
    srw_origin_visits,
    stabilization_csv,
    stabilization_radius,
    stabilization_study,
    walk_exits,
)

TOWARD3 = ConfigRule.toward_origin(3)


def test_sweep_n0():
    (row,) = conjecture_sweep(0, TOWARD3)
    assert (row.n, row.origin_visits, row.match) == (0, 1, True)


def test_sweep_n5(oracle_fixtures):
    rows = conjecture_sweep(5, TOWARD3)
    assert [r.origin_visits for r in rows[1:]] == [7, 13, 19, 25, 31]
    assert all(r.match for r in rows)
    assert [[r.n, r.origin_visits, r.first_exit_step] for r in rows] == oracle_fixtures["sweep_n5"]


def test_sweep_uniform0(oracle_fixtures):
    rows = conjecture_sweep(5, ConfigRule.uniform(0, 3))
    assert [[r.n, r.origin_visits, r.first_exit_step] for r in rows] == oracle_fixtures["uniform0_n5"]
    assert sum(r.match for r in rows) == 1


def test_sweep_paper_literal(oracle_fixtures):
    rows = conjecture_sweep(5, ConfigRule.paper_literal(3))
    assert [[r.n, r.origin_visits, r.first_exit_step] for r in rows] == oracle_fixtures["literal_n5"]
    assert not all(r.match for r in rows)


@pytest.mark.parametrize("dense", [True, False])
def test_sweep_prefix_property(dense):
    full = conjecture_sweep(9, TOWARD3, dense=dense)
    for m in (0, 3, 6):
        part = conjecture_sweep(m, TOWARD3, dense=dense)
        assert [(r.n, r.origin_visits, r.first_exit_step) for r in part] == [
            (r.n, r.origin_visits, r.first_exit_step) for r in full[: m + 1]]


@pytest.mark.parametrize("d", [1, 2, 4])
def test_other_dimensions_against_oracle(d):
    n_max = {1: 8, 2: 8, 4: 3}[d]
    rows = conjecture_sweep(n_max, ConfigRule.toward_origin(d))
    ref, _ = oracle.sweep(d, oracle.toward_origin, n_max)
    assert [(r.n, r.origin_visits, r.first_exit_step) for r in rows] == ref


def _key(rows):
    return [(r.n, r.origin_visits, r.first_exit_step) for r in rows]


def test_resume_after_interruptions(tmp_path):
    ck = tmp_path / "ck.json"
    baseline = conjecture_sweep(8, TOWARD3)
    halts = [500, 20_000, 40_000]
    for i, h in enumerate(halts):
        with pytest.raises(SweepInterrupted):
            conjecture_sweep(8, TOWARD3, resume=ck if i else None, checkpoint_path=ck,
                             checkpoint_every=7_000, halt_after=h)
    rows = conjecture_sweep(8, TOWARD3, resume=ck, checkpoint_path=ck, checkpoint_every=7_000)
    assert _key(rows) == _key(baseline)


def test_resume_rejects_other_rule(tmp_path):
    ck = tmp_path / "ck.json"
    with pytest.raises(SweepInterrupted):
        conjecture_sweep(5, TOWARD3, checkpoint_path=ck, halt_after=100)
    with pytest.raises(CheckpointMismatchError):
        conjecture_sweep(5, ConfigRule.paper_literal(3), resume=ck)


def test_checkpoint_needs_path():
    with pytest.raises(ContractViolation):
        conjecture_sweep(3, TOWARD3, checkpoint_every=10)


def test_periodic_checkpoints_written(tmp_path):
    ck = tmp_path / "ck.json"
    conjecture_sweep(4, TOWARD3, checkpoint_path=ck, checkpoint_every=1000)
    assert ck.exists()


def test_conjecture_csv_format():
    rows = conjecture_sweep(2, TOWARD3)
    text = conjecture_csv(rows, header_line({"rule": "toward-origin"}))
    lines = text.split("\n")
    assert lines[0].startswith("# rotorlab") and "t=0" in lines[0]
    assert lines[1] == "n,origin_visits,expected,match,first_exit_step,elapsed_s"
    assert lines[3] == "1,7,7,true,15,"
    assert "\r" not in text and text.isascii()
    assert conjecture_csv(rows, "", timing=True).split("\n")[1].split(",")[-1] != ""


def test_stabilization_structure():
    rows = stabilization_study(5, 0, TOWARD3)
    assert len(rows) == 1
    assert rows[0].site == (0, 0, 0) and len(rows[0].labels_at_exits) == 6


def test_stabilization_matches_oracle_fixture(oracle_fixtures):
    rows = stabilization_study(15, 3, TOWARD3)
    labels = oracle_fixtures["stabilization_labels_n15_r3"]
    for j, r in enumerate(rows):
        assert list(r.labels_at_exits) == [snap[j] for snap in labels]
    assert [r.stabilized_at for r in rows] == oracle_fixtures["stabilization_n15_r3"]


def test_stabilization_radius_rule():
    assert stabilization_radius([3]) == 0
    assert stabilization_radius([1, 1, 1]) == 0
    assert stabilization_radius([1, 2, 2, 2]) == 1
    assert stabilization_radius([1, 2, 3]) is None


def test_stabilization_bad_radius():
    with pytest.raises(ContractViolation):
        stabilization_study(2, 3, TOWARD3)


def test_stabilization_csv():
    text = stabilization_csv(stabilization_study(3, 1, TOWARD3), "")
    head = text.split("\n")[0].split(",")
    assert head[:4] == ["x", "y", "z", "stabilized_at"] and len(head) == 8


def test_expected_counts_examples():
    order = RotorOrder.default(3)
    assert expected_counts(2, 7, order) == [1, 1, 2, 1, 1, 1]
    assert expected_counts(4, 6, order) == [1] * 6


def test_balance_seven_departures():
    # Force seven departures from the origin, whose initial label is 2.
    s = WalkState.start(ConfigRule.table({(0, 0, 0): 2}, 0, 3), instrument=True)
    for _ in range(7):
        s.position = (0, 0, 0)
        s.step()
    (row,) = [r for r in balance_report(s) if r.site == (0, 0, 0)]
    assert row.counts == (1, 1, 2, 1, 1, 1) and row.ok and row.current_label == 3


def test_balance_against_oracle():
    state = None
    for _, state in walk_exits(5, TOWARD3, instrument=True):
        pass
    rows = balance_report(state)
    _, w = oracle.sweep(3, oracle.toward_origin, 5)
    assert {r.site: list(r.counts) for r in rows} == w.used
    assert all(r.ok for r in rows)
    text = balance_csv(rows, 3, "")
    assert text.split("\n")[0].startswith("x,y,z,initial_label,departures,count_0")


def test_balance_needs_instrumentation():
    s = WalkState.start(TOWARD3)
    s.step()
    with pytest.raises(InstrumentationDisabled):
        balance_report(s)


def test_srw_n0():
    for seed in (0, 1, 99):
        s = srw_comparison(0, 50, seed)
        assert s.mean_origin_visits == 1 and s.min == s.max == 1


def test_srw_seeded_reproducible():
    assert srw_comparison(8, 2000, 5) == srw_comparison(8, 2000, 5)
    assert srw_csv(srw_comparison(8, 2000, 5), "").split("\n")[1].startswith("8,2000,5,")


def test_srw_different_seeds_agree():
    a, b = srw_comparison(10, 4000, 1), srw_comparison(10, 4000, 2)
    assert a != b
    se = (a.std_error**2 + b.std_error**2) ** 0.5
    assert abs(a.mean_origin_visits - b.mean_origin_visits) < 3 * se
    assert a.min <= a.mean_origin_visits <= a.max


def test_srw_counts_are_visits():
    v = srw_origin_visits(1, 500, 3, d=1)
    # In d=1 inside [-1,1] the walk is at the origin every other step.
    assert v.min() >= 1
    assert srw_origin_visits(2, 10, 3, d=2).shape == (10,)
