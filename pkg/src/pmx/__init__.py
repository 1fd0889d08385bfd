"""Partial mutual exclusion protocol: executable model, invariant checker,
state-space explorer, fair simulator and trace analysis."""

from .core import (
    Alternative,
    ConfigurationError,
    ContractViolation,
    DomainError,
    GlobalState,
    Protocol,
    ProtocolError,
    Universe,
    alt,
    apply,
    conflict,
    enabled,
    enabled_alternatives,
    env11,
    initial_state,
)
from .invariants import CATALOG, Violation, check, check_all, prio_acyclic
from .explorer import ExploreConfig, ExploreResult, explore, shortest_violation
from .sim import ReplayIntegrityError, Scenario, Trace, fairness_audit, load_trace, replay, run

__version__ = "0.1.0"

__all__ = [
    "Alternative", "ConfigurationError", "ContractViolation", "DomainError", "GlobalState",
    "Protocol", "ProtocolError", "Universe", "alt", "apply", "conflict", "enabled",
    "enabled_alternatives", "env11", "initial_state",
    "CATALOG", "Violation", "check", "check_all", "prio_acyclic",
    "ExploreConfig", "ExploreResult", "explore", "shortest_violation",
    "ReplayIntegrityError", "Scenario", "Trace", "fairness_audit", "load_trace", "replay", "run",
]
