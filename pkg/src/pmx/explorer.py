"""Breadth-first exploration of the reachable state space of small instances."""

from __future__ import annotations

import hashlib
import random
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .core import (
    Alternative,
    ConfigurationError,
    GlobalState,
    Protocol,
    Universe,
    all_subsets_policy,
    initial_state,
)
from .invariants import CATALOG, Violation, check, check_all, failing


@dataclass
class ExploreConfig:
    """What to explore.

    ``nbh_choices`` maps each process to the neighbour sets Env11 may
    pick; ``None`` means every subset of the other processes.
    ``order_seed`` shuffles successor order (used to audit that results do
    not depend on exploration order).
    """

    universe: Sequence[int]
    ae: frozenset[int] = frozenset()
    nbh_choices: Mapping[int, Sequence[Iterable[int]]] | None = None
    max_states: int = 2_000_000
    max_depth: int | None = None
    mutations: frozenset[str] = frozenset()
    order_seed: int | None = None
    max_reports: int = 100

    def __post_init__(self):
        u = Universe(self.universe)
        self.universe = list(u.ids)
        self.ae = frozenset(self.ae)
        self.mutations = frozenset(self.mutations)
        if not self.ae <= set(u.ids):
            raise ConfigurationError(f"ae {sorted(self.ae)} not within universe {self.universe}")
        if self.max_states < 1:
            raise ConfigurationError("max_states must be positive")
        if self.max_depth is not None and self.max_depth < 0:
            raise ConfigurationError("max_depth must be non-negative")
        if self.nbh_choices is None:
            s0 = initial_state(u)
            self.nbh_choices = {p: all_subsets_policy(s0, p) for p in u.ids}
        else:
            choices = {}
            for p in u.ids:
                sets = [frozenset(c) for c in self.nbh_choices.get(p, [frozenset()])]
                if not sets:
                    raise ConfigurationError(f"nbh_choices for {p} must be non-empty")
                for c in sets:
                    if p in c:
                        raise ConfigurationError(f"nbh choice {sorted(c)} for {p} contains itself")
                    u.mask(c)
                choices[p] = sets
            self.nbh_choices = choices

    @property
    def protocol(self) -> Protocol:
        return Protocol(self.ae, self.mutations)

    @classmethod
    def from_dict(cls, d: Mapping) -> "ExploreConfig":
        known = {"universe", "ae", "nbh_choices", "max_states", "max_depth", "mutations", "order_seed"}
        extra = set(d) - known
        if extra:
            raise ConfigurationError(f"unknown config keys: {sorted(extra)}")
        if "universe" not in d:
            raise ConfigurationError("config needs a universe")
        nbh = d.get("nbh_choices")
        if nbh == "all_subsets":
            nbh = None
        elif nbh is not None:
            if not isinstance(nbh, Mapping):
                raise ConfigurationError("nbh_choices must be 'all_subsets' or a mapping")
            nbh = {int(p): [frozenset(c) for c in sets] for p, sets in nbh.items()}
        return cls(
            universe=d["universe"],
            ae=frozenset(d.get("ae", ())),
            nbh_choices=nbh,
            max_states=d.get("max_states", 2_000_000),
            max_depth=d.get("max_depth"),
            mutations=frozenset(d.get("mutations", ())),
            order_seed=d.get("order_seed"),
        )


@dataclass
class ExploreResult:
    state_count: int
    depth_reached: int
    violations: list[tuple[Violation, list[Alternative]]]
    silent_nonidle: list[tuple[GlobalState, list[Alternative]]]
    truncated: bool
    edges: int = 0
    violating_states: int = 0
    violated_labels: dict[str, int] = field(default_factory=dict)
    state_set_hash: str = ""
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.violations and not self.silent_nonidle

    def report_line(self) -> str:
        return (
            f"states={self.state_count} depth={self.depth_reached} "
            f"violations={self.violating_states} silent_nonidle={len(self.silent_nonidle)} "
            f"truncated={str(self.truncated).lower()}"
        )


class _Search:
    def __init__(self, cfg: ExploreConfig):
        self.cfg = cfg
        self.proto = cfg.protocol
        self.rng = random.Random(cfg.order_seed) if cfg.order_seed is not None else None
        self.s0 = initial_state(cfg.universe)
        self.parent: dict = {self.s0.key(): None}

    def successors(self, s: GlobalState):
        succ = self.proto.successors(s, self.cfg.nbh_choices)
        if self.rng is not None:
            self.rng.shuffle(succ)
        return succ

    def path_to(self, key) -> list[Alternative]:
        path = []
        entry = self.parent[key]
        while entry is not None:
            key, a = entry
            path.append(a)
            entry = self.parent[key]
        path.reverse()
        return path


def explore(cfg: ExploreConfig) -> ExploreResult:
    """Visit every reachable state (within the bounds), checking each one.

    Each new state is checked against the whole invariant catalog and for
    deadlock (silent but not all idle).  Since every successor of a
    visited state is itself visited, the per-state check also covers the
    inductive step for every explored edge.
    """
    t0 = time.perf_counter()
    search = _Search(cfg)
    proto = search.proto
    parent = search.parent
    violations: list = []
    silent: list = []
    labels: dict[str, int] = {}
    violating = 0
    edges = 0
    depth_reached = 0
    truncated = False

    def visit(s: GlobalState, key):
        nonlocal violating
        bad = failing(s)
        if bad:
            violating += 1
            for label in bad:
                labels[label] = labels.get(label, 0) + 1
                if len(violations) < cfg.max_reports:
                    path = search.path_to(key)
                    for v in check(label, s)[:1]:
                        violations.append((v, path))
        if not proto.fair_alternatives(s) and any(loc.pc != 11 for loc in s.locals):
            if len(silent) < cfg.max_reports:
                silent.append((s, search.path_to(key)))
            else:
                silent.append((s, []))

    k0 = next(iter(parent))
    visit(search.s0, k0)
    frontier = [(search.s0, k0)]
    depth = 0
    while frontier and not truncated:
        if cfg.max_depth is not None and depth >= cfg.max_depth:
            truncated = _frontier_has_new(search, frontier)
            break
        nxt = []
        for s, skey in frontier:
            for a, t in search.successors(s):
                edges += 1
                k = t.key()
                if k in parent:
                    continue
                parent[k] = (skey, a)
                visit(t, k)
                nxt.append((t, k))
                if len(parent) >= cfg.max_states:
                    truncated = True
                    break
            if truncated:
                break
        if nxt:
            depth += 1
        frontier = nxt
    depth_reached = depth

    return ExploreResult(
        state_count=len(parent),
        depth_reached=depth_reached,
        violations=violations,
        silent_nonidle=silent,
        truncated=bool(truncated),
        edges=edges,
        violating_states=violating,
        violated_labels=labels,
        state_set_hash=_set_hash(parent.keys()),
        seconds=time.perf_counter() - t0,
    )


def _frontier_has_new(search: _Search, frontier) -> bool:
    """Whether the depth bound cut off any unvisited state."""
    for s, _ in frontier:
        for _, t in search.successors(s):
            if t.key() not in search.parent:
                return True
    return False


def _set_hash(keys: Iterable) -> str:
    h = hashlib.sha256()
    for k in sorted(keys, key=lambda k: (isinstance(k, tuple), k)):
        h.update(repr(k).encode() if isinstance(k, tuple) else k)
        h.update(b"\n")
    return h.hexdigest()


def shortest_violation(cfg: ExploreConfig, inv: str) -> list[Alternative] | None:
    """Minimum-length path from the initial state to a state violating ``inv``.

    ``inv`` may also be ``"deadlock"`` (a silent state with a non-idle
    process).  Returns None when no such state exists within the bounds.
    """
    if inv != "deadlock" and inv not in CATALOG:
        raise KeyError(f"unknown invariant {inv!r}")
    search = _Search(cfg)
    proto = search.proto

    def bad(s: GlobalState) -> bool:
        if inv == "deadlock":
            return not proto.fair_alternatives(s) and any(loc.pc != 11 for loc in s.locals)
        return bool(check(inv, s))

    if bad(search.s0):
        return []
    parent = search.parent
    frontier = deque([(search.s0, next(iter(parent)), 0)])
    while frontier:
        s, skey, d = frontier.popleft()
        if cfg.max_depth is not None and d >= cfg.max_depth:
            continue
        for a, t in search.successors(s):
            k = t.key()
            if k in parent:
                continue
            parent[k] = (skey, a)
            if bad(t):
                return search.path_to(k)
            if len(parent) >= cfg.max_states:
                return None
            frontier.append((t, k, d + 1))
    return None


def replay_path(cfg: ExploreConfig, path: Sequence[Alternative]) -> GlobalState:
    """Re-execute a counterexample path; raises if any step is disabled."""
    s = initial_state(cfg.universe)
    proto = cfg.protocol
    for a in path:
        s = proto.apply(a, s)
    return s


def inductive_audit(cfg: ExploreConfig) -> tuple[int, list[tuple[Alternative, list[Violation]]]]:
    """Re-check the successor of every edge explicitly (slow; small configs).

    Honors ``max_depth`` and ``max_states``: edges leaving states at the
    depth bound are still checked, their targets are not expanded.
    Returns the number of edges checked and the failing ones.
    """
    search = _Search(cfg)
    seen = {search.s0.key()}
    frontier = deque([(search.s0, 0)])
    edges = 0
    failures = []
    while frontier:
        s, d = frontier.popleft()
        for a, t in search.successors(s):
            edges += 1
            vs = check_all(t)
            if vs:
                failures.append((a, vs))
            k = t.key()
            if k in seen or len(seen) >= cfg.max_states:
                continue
            seen.add(k)
            if cfg.max_depth is None or d + 1 < cfg.max_depth:
                frontier.append((t, d + 1))
    return edges, failures
