import pytest

from conftest import i64, run_threads
from regc import trace as tr
from regc.config import SimConfig
from regc.errors import TraceIntegrityError
from regc.litmus import load_corpus, run_once
from regc.oracle import OK, RACE, VIOLATION, attribute, check_integrity, check_regc, happens_before
from regc.scheduler import ScriptedScheduler, explore

E = tr.Event


def _lock_handoff(value=b"\x01" + b"\x00" * 7):
    return [
        E(0, 0, tr.FLUSH, log_seq=0),
        E(1, 0, tr.ACQUIRE, lock="m", aseq=1),
        E(2, 0, tr.STORE, addr=0, length=8, value=b"\x01" + b"\x00" * 7, tag=tr.CONSISTENT, lock="m"),
        E(3, 0, tr.RELEASE, lock="m"),
        E(4, 1, tr.FLUSH, log_seq=1),
        E(5, 1, tr.ACQUIRE, lock="m", aseq=2),
        E(6, 1, tr.LOAD, addr=0, length=8, value=value),
        E(7, 1, tr.RELEASE, lock="m"),
    ]


def test_handwritten_lock_trace_is_ok():
    assert check_regc(_lock_handoff()).status == OK


def test_stale_read_is_rule2_violation():
    v = check_regc(_lock_handoff(value=bytes(8)))
    assert v.status == VIOLATION and v.rule == "rule2"
    assert v.load.seq == 6 and v.store.seq == 2
    assert "rule2" in v.describe()


def test_happens_before_per_class():
    ev = _lock_handoff()
    assert happens_before(ev, 2, 6)
    assert happens_before(ev, 2, 6, frozenset(["rule2"]))
    assert not happens_before(ev, 2, 6, frozenset(["rule3"]))
    assert not happens_before(ev, 6, 2)
    assert attribute(ev, 6, 2) == "rule2"


def test_unsynchronized_stores_race():
    def w(val):
        def body(ctx, base):
            yield ctx.store(base, i64(val))
        return body

    _, res, _ = run_threads(w(1), w(2))
    v = check_regc(res.events)
    assert v.status == RACE and v.race_count == 1
    assert "race" in v.describe()


def test_racy_bytes_are_not_value_checked():
    # P1 reads without synchronization; whatever it sees is not a violation
    ev = [
        E(0, 0, tr.STORE, addr=0, length=8, value=i64(5), tag=tr.ORDINARY),
        E(1, 1, tr.LOAD, addr=0, length=8, value=bytes(8)),
    ]
    assert check_regc(ev).status == RACE


@pytest.mark.parametrize("bad", [
    [E(1, 0, tr.EXIT), E(0, 0, tr.EXIT)],
    [E(0, 0, tr.ACQUIRE, lock="m", aseq=2)],
    [E(0, 0, tr.ACQUIRE, lock="m", aseq=1), E(1, 1, tr.ACQUIRE, lock="m", aseq=2)],
    [E(0, 0, tr.ACQUIRE, lock="m", aseq=1), E(1, 0, tr.ACQUIRE, lock="n", aseq=2), E(2, 0, tr.RELEASE, lock="m")],
    [E(0, 0, tr.STORE, addr=0, length=1, value=b"\x01", tag=tr.CONSISTENT, lock="m")],
    [E(0, 0, tr.EXIT), E(1, 0, tr.LOAD, addr=0, length=1, value=b"\x00")],
    [E(0, 0, tr.BARRIER_ARRIVE, barrier="b", episode=0, parties=(0, 1)),
     E(1, 0, tr.BARRIER_DEPART, barrier="b", episode=0, parties=(0, 1))],
])
def test_integrity_errors(bad):
    with pytest.raises(TraceIntegrityError):
        check_integrity(bad)


@pytest.mark.parametrize("mutant,prog", [
    ("drop_rule1", "rule1-cross-lock"),
    ("drop_rule2", "rule2-cached-reader"),
    ("drop_rule3", "rule3-cached-reader"),
])
def test_mutant_violation_is_attributed(mutant, prog):
    p = {q.name: q for q in load_corpus()}[prog]
    cfg = SimConfig(mutant=mutant)
    rules = {r.verdict.rule for r in explore(lambda s: run_once(p, cfg, s)) if r.verdict.status == VIOLATION}
    assert rules == {mutant.replace("drop_", "")}


def test_engine_traces_pass_on_corpus():
    for p in load_corpus():
        for policy in ("page", "finegrain"):
            r = run_once(p, SimConfig(policy=policy), ScriptedScheduler([]))
            assert r.verdict.status != VIOLATION, (p.name, r.verdict.describe())
