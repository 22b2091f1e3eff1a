"""Event records and the tab-separated trace dump format.

One event per line, fields in ``Event`` order, ``-`` for an absent field and
lowercase hex for byte values::

    seq proc kind addr length value tag lock aseq barrier episode parties other log_seq
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Iterable

from .errors import TraceIntegrityError

LOAD = "Load"
STORE = "Store"
ACQUIRE = "Acquire"
RELEASE = "Release"
FLUSH = "FlushPublish"
BARRIER_ARRIVE = "BarrierArrive"
BARRIER_DEPART = "BarrierDepart"
FORK = "Fork"
JOIN = "JoinEdge"
EXIT = "Exit"
DIFF = "DiffApplied"

KINDS = (LOAD, STORE, ACQUIRE, RELEASE, FLUSH, BARRIER_ARRIVE, BARRIER_DEPART, FORK, JOIN, EXIT, DIFF)

ORDINARY = "ord"
CONSISTENT = "con"


@dataclass(frozen=True, slots=True)
class Event:
    seq: int
    proc: int
    kind: str
    addr: int | None = None
    length: int | None = None
    value: bytes | None = None
    tag: str | None = None
    lock: str | None = None
    aseq: int | None = None
    barrier: str | None = None
    episode: int | None = None
    parties: tuple[int, ...] | None = None
    other: int | None = None
    log_seq: int | None = None


_FIELDS = [f.name for f in fields(Event)]
_INT_FIELDS = {"seq", "proc", "addr", "length", "aseq", "episode", "other", "log_seq"}


def _fmt(name: str, v) -> str:
    if v is None:
        return "-"
    if name == "value":
        return v.hex()
    if name == "parties":
        return ",".join(map(str, v))
    return str(v)


def format_event(e: Event) -> str:
    return "\t".join(_fmt(n, getattr(e, n)) for n in _FIELDS)


def parse_event(line: str) -> Event:
    parts = line.rstrip("\n").split("\t")
    if len(parts) != len(_FIELDS):
        raise TraceIntegrityError(f"expected {len(_FIELDS)} fields, got {len(parts)}: {line!r}")
    kw = {}
    for name, raw in zip(_FIELDS, parts):
        if raw == "-":
            kw[name] = None
        elif name == "value":
            kw[name] = bytes.fromhex(raw)
        elif name == "parties":
            kw[name] = tuple(int(x) for x in raw.split(",")) if raw else ()
        elif name in _INT_FIELDS:
            kw[name] = int(raw)
        else:
            kw[name] = raw
    if kw["kind"] not in KINDS:
        raise TraceIntegrityError(f"unknown event kind {kw['kind']!r}")
    return Event(**kw)


def dump_trace(events: Iterable[Event]) -> str:
    return "".join(format_event(e) + "\n" for e in events)


def load_trace(text: str) -> list[Event]:
    return [parse_event(line) for line in text.splitlines() if line.strip() and not line.startswith("#")]


def write_trace(events: Iterable[Event], path) -> None:
    with open(path, "w") as fh:
        fh.write(dump_trace(events))


def read_trace(path) -> list[Event]:
    with open(path) as fh:
        return load_trace(fh.read())
