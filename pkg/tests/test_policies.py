import pytest

from conftest import as_int, i64, run_threads
from regc.policies import (ConsistencySpan, DiffEntry, DiffLog, InvalidationSet, PolicyKind,
                           merge_payloads, payload_bytes)


def test_payload_bytes_formulas():
    assert payload_bytes(DiffLog([DiffEntry(0, b"\0" * 8)])) == 48
    assert payload_bytes(InvalidationSet(frozenset({1, 2, 3}))) == 48
    assert payload_bytes(DiffLog()) == 24


def test_merge_concatenates_or_unions():
    a = DiffLog([DiffEntry(0, b"a")], ConsistencySpan("m", 0))
    b = DiffLog([DiffEntry(0, b"b")], ConsistencySpan("m", 1))
    merged = merge_payloads([a, b], PolicyKind.FINEGRAIN)
    assert [e.data for e in merged.entries] == [b"a", b"b"]
    u = merge_payloads([InvalidationSet(frozenset({1})), InvalidationSet(frozenset({1, 4}))], PolicyKind.PAGE)
    assert u.pages == {1, 4}


def test_policy_parse():
    assert PolicyKind.parse("PAGE") is PolicyKind.PAGE
    with pytest.raises(ValueError):
        PolicyKind.parse("twin")


def _one_word_span(ctx, base):
    yield ctx.lock("m")
    yield ctx.store(base, i64(5))
    yield ctx.unlock("m")


def test_release_finegrain_one_entry_eight_bytes():
    sim, res, base = run_threads(_one_word_span, policy="finegrain")
    (payload,) = sim.locks.get("m").history
    assert isinstance(payload, DiffLog)
    assert len(payload.entries) == 1 and payload.entries[0].length == 8
    assert res.metrics.page_writebacks == 0
    # write-through made the server authoritative
    assert as_int(sim.read_memory(base, 8)) == 5


def test_release_page_policy_writes_back_whole_page():
    sim, res, base = run_threads(_one_word_span, policy="page")
    (payload,) = sim.locks.get("m").history
    assert isinstance(payload, InvalidationSet) and payload.pages == {0}
    assert res.metrics.bytes_flushed == 4096
    assert as_int(sim.read_memory(base, 8)) == 5


def test_empty_span_has_no_payload(policy):
    def body(ctx, base):
        yield ctx.lock("m")
        yield ctx.unlock("m")

    sim, res, _ = run_threads(body, policy=policy)
    assert sim.locks.get("m").history == []
    assert res.metrics.consistency_bytes == 0


def _reader_writer(script_first_reader=True):
    seen = {}

    def writer(ctx, base):
        yield ctx.lock("m")
        yield ctx.store(base, i64(5))
        yield ctx.unlock("m")

    def reader(ctx, base):
        yield ctx.load(base + 8, 8)  # bring the page into the cache
        yield ctx.lock("m")
        seen["v"] = as_int((yield ctx.load(base, 8)))
        yield ctx.unlock("m")

    # reader starts and caches the page, writer runs its whole span, reader acquires
    return (writer, reader), [1, 0, 0, 0, 1, 1], seen


def test_acquire_finegrain_patches_without_refetch():
    bodies, script, seen = _reader_writer()
    sim, res, _ = run_threads(*bodies, policy="finegrain", script=script)
    assert seen["v"] == 5
    reader_fetches = sim.fetch_counts[0]
    # one fetch by the reader before the acquire, one by the writer; none after the grant
    assert reader_fetches == 2
    assert res.metrics.diff_entries_applied == 1


def test_acquire_page_policy_refetches_once():
    bodies, script, seen = _reader_writer()
    sim, res, _ = run_threads(*bodies, policy="page", script=script)
    assert seen["v"] == 5
    assert sim.fetch_counts[0] == 3
    assert res.metrics.invalidations_applied >= 1


def test_first_acquire_has_empty_payload(policy):
    sim, res, _ = run_threads(_one_word_span, policy=policy)
    assert res.metrics.messages["AcquireGrant"] == 1
    # the grant carried only its header: no log entries, no pending payload
    assert res.metrics.message_bytes["AcquireGrant"] == 24
