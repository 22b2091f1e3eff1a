"""Regional-consistency DSM simulator with a trace oracle and benchmarks."""
from .address_space import AddressSpace, Allocation
from .bench import BenchSpec, make_spec, run_bench
from .config import CostModel, SimConfig
from .errors import (DeadlockError, OutOfBoundsError, OutOfSpaceError, RegcError,
                     TraceIntegrityError, UsageError)
from .litmus import load_corpus, parse_litmus, run_litmus_corpus, sc_outcomes
from .oracle import check_regc
from .policies import PolicyKind
from .scheduler import RandomScheduler, RoundRobinScheduler, ScriptedScheduler
from .sim import RunResult, Simulator

__version__ = "0.1.0"

__all__ = [
    "AddressSpace", "Allocation", "BenchSpec", "CostModel", "DeadlockError", "OutOfBoundsError",
    "OutOfSpaceError", "PolicyKind", "RandomScheduler", "RegcError", "RoundRobinScheduler",
    "RunResult", "ScriptedScheduler", "SimConfig", "Simulator", "TraceIntegrityError",
    "UsageError", "check_regc", "load_corpus", "make_spec", "parse_litmus", "run_bench",
    "run_litmus_corpus", "sc_outcomes",
]
