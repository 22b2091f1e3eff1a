import pytest

from regc.config import SimConfig
from regc.errors import UsageError
from regc.litmus import (MAX_OPS, check_program, load_corpus, matches, mutant_kills, parse_litmus, project,
                         runs, sc_outcomes)

MP = """
name: mp
class: rule2
racy: no
P0: acq m | st x 1 | rel m
P1: acq m | ld x r0 | rel m
sc: r0=0 ; r0=1
forbid: r0=2
"""


def test_parse_fields():
    p = parse_litmus(MP)
    assert p.name == "mp" and p.cls == "rule2" and p.racy == "no"
    assert len(p.procs) == 2 and [o.kind for o in p.procs[0]] == ["acq", "st", "rel"]
    assert p.sc == [{"r0": 0}, {"r0": 1}]
    assert p.forbid == [{"r0": 2}]
    assert p.within_bounds()


@pytest.mark.parametrize("text", [
    "P0: jump x",
    "P1: st x 1",
    "racy: perhaps\nP0: st x 1",
    "bogus: 1\nP0: st x 1",
    "P0: ld x r0\nP1: ld y r0",
    "kills: drop_rule9\nP0: st x 1",
    "P0 st x 1",
])
def test_parse_errors(text):
    with pytest.raises(UsageError):
        parse_litmus(text)


def test_sc_unsynchronized_message_passing():
    p = parse_litmus("P0: st x 1 | st y 1\nP1: ld y r0 | ld x r1")
    got = project(sc_outcomes(p), ["r0", "r1"])
    assert got == {(("r0", 0), ("r1", 0)), (("r0", 0), ("r1", 1)), (("r0", 1), ("r1", 1))}


def test_sc_single_load():
    p = parse_litmus("P0: st x 1\nP1: ld x r")
    assert project(sc_outcomes(p), ["r"]) == {(("r", 0),), (("r", 1),)}


def test_sc_lock_example():
    assert project(sc_outcomes(parse_litmus(MP)), ["r0"]) == {(("r0", 0),), (("r0", 1),)}


def test_sc_barrier_forces_value():
    p = parse_litmus("P0: st x 1 | bar b\nP1: bar b | ld x r")
    assert project(sc_outcomes(p), ["r"]) == {(("r", 1),)}


def test_sc_bounds():
    ops = " | ".join(["st x 1"] * (MAX_OPS + 1))
    with pytest.raises(UsageError):
        sc_outcomes(parse_litmus(f"P0: {ops}"))


def test_matches():
    assert matches((("r0", 1), ("x", 2)), {"r0": 1})
    assert not matches((("r0", 1),), {"r0": 0})


def test_corpus_composition():
    corpus = load_corpus()
    assert len(corpus) >= 15
    by = {}
    for p in corpus:
        by.setdefault(p.cls, []).append(p)
        assert p.within_bounds(), p.name
    for cls in ("rule1", "rule2", "rule3"):
        assert len(by[cls]) >= 3
    assert len(by["nested"]) >= 2
    assert len(by["racy"]) >= 2
    assert sum(1 for p in corpus if p.discriminates) >= 3
    assert {m for p in corpus for m in p.kills} == {"drop_rule1", "drop_rule2", "drop_rule3"}
    assert len({p.name for p in corpus}) == len(corpus)


@pytest.mark.parametrize("policy", ["page", "finegrain"])
def test_check_program_exhaustive(policy):
    rep = check_program(parse_litmus(MP), policy)
    assert rep.ok, rep.failures
    assert rep.schedules > 1 and rep.races == 0


def test_check_program_flags_bad_declaration():
    bad = MP.replace("forbid: r0=2", "witness: r0=2")
    rep = check_program(parse_litmus(bad), "page")
    assert not rep.ok and "witness" in rep.failures[0]


def test_racy_program_reports_race():
    p = parse_litmus("racy: yes\nP0: st x 1\nP1: ld x r")
    assert check_program(p, "finegrain").ok


def test_seeded_path_for_large_program():
    ops = " | ".join(["acq m", "st x 1", "rel m"] * 3)
    p = parse_litmus(f"P0: {ops}\nP1: acq m | ld x r | rel m")
    assert not p.within_bounds()
    rep = check_program(p, "finegrain", exhaustive=True, seeds=25)
    assert rep.schedules == 25 and rep.ok
    assert sum(1 for _ in runs(p, SimConfig(), exhaustive=False, seeds=3)) == 3


def test_mutant_not_killed_by_unrelated_program():
    p = parse_litmus("P0: st x 1")
    assert mutant_kills(p, "drop_rule2") == []
