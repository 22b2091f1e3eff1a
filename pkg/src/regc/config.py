"""Run configuration and the ``key=value`` config-file reader."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .errors import UsageError
from .policies import PolicyKind

MUTANTS = ("drop_rule1", "drop_rule2", "drop_rule3")


@dataclass
class CostModel:
    """Simulated-time charges in nanoseconds. Only ratios are meaningful."""

    latency_ns: float = 1000.0
    per_byte_ns: float = 1.0
    instrumented_store_ns: float = 0.0
    cache_hit_ns: float = 0.0

    def __post_init__(self):
        for f in dataclasses.fields(self):
            if getattr(self, f.name) < 0:
                raise UsageError(f"cost {f.name} must be non-negative")

    def message(self, nbytes: int) -> float:
        return self.latency_ns + self.per_byte_ns * nbytes


@dataclass
class SimConfig:
    total_size_bytes: int = 16 << 20
    page_size_bytes: int = 4096
    server_count: int = 1
    cache_capacity_pages: int = 1024
    prefetch_enabled: bool = True
    policy: PolicyKind = PolicyKind.FINEGRAIN
    cost: CostModel = field(default_factory=CostModel)
    record_trace: bool = True
    # protocol mutant used by mutation testing; None in normal runs
    mutant: str | None = None

    def __post_init__(self):
        self.policy = PolicyKind.parse(self.policy)
        if self.cache_capacity_pages < 1:
            raise UsageError("cache_capacity_pages must be >= 1")
        if self.server_count < 1:
            raise UsageError("server_count must be >= 1")
        if self.mutant is not None and self.mutant not in MUTANTS:
            raise UsageError(f"unknown mutant {self.mutant!r}")

    def replace(self, **kw) -> "SimConfig":
        return dataclasses.replace(self, **kw)


_BOOL = {"1": True, "true": True, "yes": True, "on": True, "0": False, "false": False, "no": False, "off": False}
_COST_KEYS = {f.name for f in dataclasses.fields(CostModel)}
_SIM_KEYS = {f.name for f in dataclasses.fields(SimConfig)} - {"cost"}


def parse_kv(text: str) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _coerce(raw: str, like):
    if isinstance(like, bool):
        try:
            return _BOOL[raw.lower()]
        except KeyError:
            raise UsageError(f"not a boolean: {raw!r}") from None
    if isinstance(like, int):
        return int(raw)
    if isinstance(like, float):
        return float(raw)
    return raw


def config_from_kv(kv: dict[str, str], base: SimConfig | None = None) -> tuple[SimConfig, dict[str, str]]:
    """Split a key/value mapping into a SimConfig and the leftover keys
    (benchmark parameters such as ``iterations`` or ``tol``)."""
    base = base or SimConfig()
    sim_kw, cost_kw, rest = {}, {}, {}
    for k, v in kv.items():
        if k in _COST_KEYS:
            cost_kw[k] = _coerce(v, getattr(base.cost, k))
        elif k in _SIM_KEYS:
            like = getattr(base, k)
            if k == "policy":
                sim_kw[k] = PolicyKind.parse(v)
            elif k == "mutant":
                sim_kw[k] = None if v in ("", "none") else v
            else:
                sim_kw[k] = _coerce(v, like)
        else:
            rest[k] = v
    cost = dataclasses.replace(base.cost, **cost_kw)
    return dataclasses.replace(base, cost=cost, **sim_kw), rest


def load_config(path, base: SimConfig | None = None):
    with open(path) as fh:
        return config_from_kv(parse_kv(fh.read()), base)
