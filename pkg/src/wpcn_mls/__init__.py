"""Discrete-rate minimum length scheduling for full-duplex wireless powered networks."""

__version__ = "0.1.0"

from .model import (
    EhCircuit,
    InfeasibleError,
    NetworkConfig,
    RateTable,
    UserState,
    earliest_rate_time,
    harvest_rate,
    max_rate_at,
    min_power_for_rate,
    rate_feasible,
    transmission_time,
)
from .mls import MlsSlot, UserProfile, mls_slot
from .schedulers import (
    Assignment,
    AuditReport,
    ProblemSizeError,
    Schedule,
    audit,
    bfa,
    check_nonoverlap,
    emsa,
    generic,
    opca,
    osns,
    pdo,
    psca,
)
from .netgen import PathLossParams, ScenarioConfig, channel_gain, generate_realization

__all__ = [
    "EhCircuit",
    "InfeasibleError",
    "NetworkConfig",
    "RateTable",
    "UserState",
    "earliest_rate_time",
    "harvest_rate",
    "max_rate_at",
    "min_power_for_rate",
    "rate_feasible",
    "transmission_time",
    "MlsSlot",
    "UserProfile",
    "mls_slot",
    "Assignment",
    "AuditReport",
    "ProblemSizeError",
    "Schedule",
    "audit",
    "bfa",
    "check_nonoverlap",
    "emsa",
    "generic",
    "opca",
    "osns",
    "pdo",
    "psca",
    "PathLossParams",
    "ScenarioConfig",
    "channel_gain",
    "generate_realization",
]
