"""Deterministic schedulers and the exhaustive DFS explorer.

A scheduler is asked at every scheduling point to pick one processor out of
the runnable set (always passed in ascending pid order).
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Iterator


class Scheduler:
    def choose(self, runnable: list[int]) -> int:
        raise NotImplementedError


class RandomScheduler(Scheduler):
    def __init__(self, seed: int = 0):
        self.seed = seed
        self.rng = random.Random(seed)

    def choose(self, runnable):
        return runnable[self.rng.randrange(len(runnable))]


class RoundRobinScheduler(Scheduler):
    def __init__(self):
        self.last = -1

    def choose(self, runnable):
        for pid in runnable:
            if pid > self.last:
                self.last = pid
                return pid
        self.last = runnable[0]
        return runnable[0]


class ScriptedScheduler(Scheduler):
    """Follows a fixed pid script while the scripted pid is runnable, then
    falls back to the lowest runnable pid. Handy for pinning litmus orders."""

    def __init__(self, script):
        self.script = list(script)
        self.pos = 0

    def choose(self, runnable):
        while self.pos < len(self.script):
            pid = self.script[self.pos]
            self.pos += 1
            if pid in runnable:
                return pid
        return runnable[0]


class ReplayScheduler(Scheduler):
    """Replays a prefix of choice indices, then always takes index 0.

    Records ``(index, options)`` for every decision so the explorer can find
    the next unexplored branch."""

    def __init__(self, prefix):
        self.prefix = list(prefix)
        self.choices: list[tuple[int, int]] = []

    def choose(self, runnable):
        i = len(self.choices)
        idx = self.prefix[i] if i < len(self.prefix) else 0
        self.choices.append((idx, len(runnable)))
        return runnable[idx]


def make_scheduler(mode: str, seed: int = 0) -> Scheduler:
    mode = mode.replace("_", "-")
    if mode in ("random", "seeded-random"):
        return RandomScheduler(seed)
    if mode == "round-robin":
        return RoundRobinScheduler()
    raise ValueError(f"unknown scheduler mode {mode!r}")


@dataclass
class SchedulerConfig:
    mode: str = "seeded-random"  # seeded-random | round-robin | dfs-exhaustive
    seed: int = 0

    def build(self) -> Scheduler:
        return make_scheduler(self.mode, self.seed)


def explore(run: Callable[[Scheduler], object], limit: int | None = None) -> Iterator[object]:
    """Depth-first enumeration of every schedule.

    ``run`` executes one complete run with the scheduler it is given and
    returns anything; each result is yielded. Stateless: every schedule is
    re-executed from scratch."""
    prefix: list[int] = []
    count = 0
    while True:
        sched = ReplayScheduler(prefix)
        yield run(sched)
        count += 1
        if limit is not None and count >= limit:
            return
        choices = sched.choices
        i = len(choices) - 1
        while i >= 0 and choices[i][0] + 1 >= choices[i][1]:
            i -= 1
        if i < 0:
            return
        prefix = [c[0] for c in choices[:i]] + [choices[i][0] + 1]
