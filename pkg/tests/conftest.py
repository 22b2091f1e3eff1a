import pytest

from regc.config import SimConfig
from regc.scheduler import RandomScheduler, ScriptedScheduler
from regc.sim import Simulator


def i64(v: int) -> bytes:
    return int(v).to_bytes(8, "little", signed=True)


def as_int(raw: bytes) -> int:
    return int.from_bytes(raw, "little", signed=True)


def run_threads(*bodies, policy="finegrain", script=None, seed=0, words=8, **cfg):
    """Spawn one root processor per body; every body gets the base address
    of a fresh ``words``-word allocation as its argument."""
    sched = ScriptedScheduler(script) if script is not None else RandomScheduler(seed)
    sim = Simulator(SimConfig(policy=policy, **cfg), sched)
    base = sim.alloc(8 * words).base
    for body in bodies:
        sim.spawn(body, base)
    return sim, sim.run(), base


@pytest.fixture(params=["page", "finegrain"])
def policy(request):
    return request.param


# -- acceptance summary -------------------------------------------------------

ACCEPTANCE: list[str] = []


class Criterion:
    """Context manager recording one PASS/FAIL line for the terminal summary."""

    def __init__(self, number: int, title: str):
        self.number, self.title = number, title
        self.detail = ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        mark = "PASS" if exc_type is None else "FAIL"
        line = f"[{mark}] criterion {self.number}: {self.title}"
        if self.detail:
            line += f" ({self.detail})"
        if exc_type is not None and exc is not None:
            line += f" -- {str(exc).splitlines()[0] if str(exc) else exc_type.__name__}"
        ACCEPTANCE.append(line)
        print(line)
        return False


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
