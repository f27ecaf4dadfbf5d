"""Checker behavior on constructed and extracted histories."""

from regsim.config import parse_scenario
from regsim.engine import run
from regsim.history import (
    History,
    OpRecord,
    check_claims,
    check_linearizable,
    check_termination,
    checkers_agree,
    extract_history,
)


def w(op_id, invoke, respond, seqno, process=1):
    return OpRecord(op_id, process, "write", invoke, respond, bytes([96 + seqno]), seqno)


def r(op_id, process, invoke, respond, seqno):
    value = None if seqno == 0 else bytes([96 + seqno])
    return OpRecord(op_id, process, "read", invoke, respond, value, seqno)


def hist(ops, crashed=None, n=3):
    h = History(n=n)
    h.ops = list(ops)
    h.crashed = dict(crashed or {})
    return h


# --- termination ---------------------------------------------------------


def test_termination_pass_when_all_respond():
    h = hist([w(0, 0, 5, 1), r(1, 2, 6, 9, 1)])
    assert check_termination(h).ok


def test_crashed_writer_excused_for_last_write():
    h = hist([w(0, 0, None, 1)], crashed={1: 2})
    assert check_termination(h).ok


def test_pending_read_of_correct_process_fails():
    h = hist([r(0, 2, 0, None, 0)])
    verdict = check_termination(h)
    assert not verdict.ok
    assert "op 0" in verdict.violations[0]


def test_faulty_process_not_excused_for_earlier_ops():
    h = hist([r(0, 2, 0, None, 0), r(1, 2, 9, None, 0)], crashed={2: 10})
    assert not check_termination(h).ok


# --- claims ----------------------------------------------------------------


def test_read_after_write_must_see_it():
    h = hist([w(0, 0, 5, 1), r(1, 2, 6, 9, 0)])
    verdict = check_claims(h)
    assert not verdict.ok
    assert "started after" in verdict.violations[0]


def test_sequential_reads_cannot_invert():
    # The second write stays concurrent with both reads, so the only claim
    # broken is the read/read one.
    h = hist(
        [
            w(0, 0, 4, 1),
            w(1, 5, 20, 2),
            r(2, 2, 6, 8, 2),
            r(3, 3, 9, 11, 1),
        ]
    )
    verdict = check_claims(h)
    assert not verdict.ok
    assert all("inversion" in v for v in verdict.violations)


def test_read_from_the_future_rejected():
    h = hist([r(0, 2, 0, 1, 1), w(1, 2, 5, 1)])
    assert not check_claims(h).ok


def test_read_of_unwritten_seqno_rejected():
    h = hist([r(0, 2, 0, 3, 7)])
    verdict = check_claims(h)
    assert not verdict.ok
    assert "no write produced" in verdict.violations[0]


def test_concurrent_read_may_return_old_value():
    h = hist([w(0, 0, 10, 1), r(1, 2, 2, 8, 0)])
    assert check_claims(h).ok
    assert check_linearizable(h).ok


# --- linearizable ----------------------------------------------------------


def test_empty_history_linearizable():
    assert check_linearizable(hist([])).ok


def test_concurrent_write_and_initial_read():
    h = hist([w(0, 0, 10, 1), r(1, 2, 1, 9, 0)])
    assert check_linearizable(h).ok


def test_pending_write_value_may_be_read():
    h = hist([w(0, 0, None, 1), r(1, 2, 5, 20, 1)], crashed={1: 1})
    assert check_linearizable(h).ok
    assert check_claims(h).ok


def test_pending_write_may_also_never_happen():
    h = hist([w(0, 0, None, 1), r(1, 2, 5, 20, 0)], crashed={1: 1})
    assert check_linearizable(h).ok


def test_inverted_reads_not_linearizable():
    h = hist(
        [
            w(0, 0, 4, 1),
            w(1, 5, 9, 2),
            r(2, 2, 10, 12, 2),
            r(3, 3, 13, 15, 1),
        ]
    )
    assert not check_linearizable(h).ok


def test_size_guard_reports_skip():
    ops = [w(i, 10 * i, 10 * i + 5, i + 1) for i in range(10)]
    verdict = check_linearizable(hist(ops))
    assert verdict.status == "skipped"


def test_agreement_on_simulated_histories():
    for seed in range(30):
        cfg = parse_scenario(
            {
                "n": 3,
                "t": 1,
                "algorithm": "teff",
                "network": {"kind": "async", "Dmax": 40},
                "ops": [
                    {"time": 0, "process": 1, "op": "write", "value": "a"},
                    {"time": 10, "process": 2, "op": "read"},
                    {"time": 400, "process": 1, "op": "write", "value": "b"},
                    {"time": 410, "process": 3, "op": "read"},
                ],
                "seed": seed,
            }
        )
        h = extract_history(run(cfg).trace, 3)
        assert check_claims(h).ok and check_linearizable(h).ok
        assert checkers_agree(h)


def test_extraction_assigns_pending_write_seqnos():
    cfg = parse_scenario(
        {
            "n": 3,
            "t": 1,
            "algorithm": "teff",
            "network": {"kind": "bounded_delay", "Delta": 10},
            "ops": [
                {"time": 0, "process": 1, "op": "write", "value": "a"},
                {"time": 50, "process": 1, "op": "write", "value": "b"},
            ],
            "crashes": [
                {"process": 1, "during_broadcast": {"op_index": 1, "deliver_to": []}}
            ],
            "seed": 4,
        }
    )
    h = extract_history(run(cfg).trace, 3)
    assert [op.seqno for op in h.ops] == [1, 2]
    assert h.ops[1].pending
    assert h.crashed == {1: 50}
