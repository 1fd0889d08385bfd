"""Behavioral verdicts on recorded traces.

Every check returns a :class:`Verdict` whose ``result`` is ``pass``,
``fail`` or ``inapplicable``.  Temporal properties are judged on finite
traces: "eventually always" reads as "from some step through the end of
the trace", and verdicts that rely on it say so in their detail.
"""

from __future__ import annotations

import json
from collections import defaultdict, deque
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

from .core import DomainError, GlobalState, ProtocolError, conflict
from .invariants import check_all
from .sim import Trace, fairness_audit

PASS, FAIL, INAPPLICABLE = "pass", "fail", "inapplicable"
CHECKS = ("invariants", "fcfs", "complexity", "starvation", "maxconc", "vf")


class TraceIntegrityError(ProtocolError):
    """Events are ordered in a way no execution can produce."""


@dataclass(frozen=True)
class Verdict:
    name: str
    result: str
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.result != FAIL

    def render(self) -> str:
        return f"check={self.name} result={self.result} detail={self.detail}"


# ---------------------------------------------------------------------------
# sessions

@dataclass
class Session:
    process: int
    index: int
    nbh: frozenset[int]
    triggered_at: int
    entry_start_at: int | None = None
    cs_enter_at: int | None = None
    ended_at: int | None = None
    outcome: str = "unfinished"

    @property
    def key(self) -> tuple[int, int]:
        return (self.process, self.index)

    @property
    def completed(self) -> bool:
        return self.outcome == "completed"

    @property
    def aborted(self) -> bool:
        return self.outcome == "aborted"


def sessions(trace: Trace) -> list[Session]:
    """One Session per Env11 firing, in trigger order."""
    out: list[Session] = []
    open_: dict[int, Session] = {}
    for e in trace.events:
        k = e.kind
        if k == "trigger":
            p, nbh, idx = e.args
            if p in open_:
                raise TraceIntegrityError(f"step {e.step}: {p} triggered with session {open_[p].index} still open")
            s = Session(p, idx, frozenset(nbh), e.step)
            open_[p] = s
            out.append(s)
            continue
        if k not in ("entry_start", "cs_enter", "cs_exit", "abort", "idle"):
            continue
        p = e.args[0]
        s = open_.get(p)
        if s is None:
            raise TraceIntegrityError(f"step {e.step}: {k} for {p} outside any session")
        if k == "entry_start":
            if s.entry_start_at is not None:
                raise TraceIntegrityError(f"step {e.step}: second entry_start in session {s.key}")
            s.entry_start_at = e.step
        elif k == "cs_enter":
            if s.entry_start_at is None or s.cs_enter_at is not None:
                raise TraceIntegrityError(f"step {e.step}: cs_enter out of order in session {s.key}")
            s.cs_enter_at = e.step
        elif k == "abort":
            if s.cs_enter_at is not None:
                raise TraceIntegrityError(f"step {e.step}: abort after cs_enter in session {s.key}")
            s.outcome = "aborted"
        elif k == "cs_exit":
            if s.cs_enter_at is None:
                raise TraceIntegrityError(f"step {e.step}: cs_exit without cs_enter in session {s.key}")
        else:  # idle
            if not s.aborted:
                if s.cs_enter_at is None:
                    raise TraceIntegrityError(f"step {e.step}: {p} idle without entering CS")
                s.outcome = "completed"
            s.ended_at = e.step
            del open_[p]
    return out


def _by_process(ss: Iterable[Session]) -> dict[int, list[Session]]:
    out: dict[int, list[Session]] = defaultdict(list)
    for s in ss:
        out[s.process].append(s)
    return out


# ---------------------------------------------------------------------------
# FCFS

@dataclass(frozen=True)
class FcfsViolation:
    early: tuple[int, int]     # (q, session) whose notify arrived first
    late: tuple[int, int]      # (r, session) that nevertheless entered CS first
    notified_at: int
    late_cs_at: int
    early_cs_at: int | None

    def render(self) -> str:
        q, i = self.early
        r, j = self.late
        when = "never" if self.early_cs_at is None else f"at step {self.early_cs_at}"
        return (
            f"notify of {q}#{i} reached {r} at step {self.notified_at}, yet {r}#{j} entered CS at "
            f"step {self.late_cs_at} and {q}#{i} {when}"
        )


def notify_arrivals(trace: Trace) -> dict[tuple[int, int, int], int]:
    """(q, session of q, r) -> step at which r received that session's notify."""
    pending: dict[tuple[int, int], deque] = defaultdict(deque)
    arrivals = {}
    for e in trace.events:
        if e.kind == "send" and e.args[0] == "notify":
            _, q, r = e.args
            pending[q, r].append(e.session)
        elif e.kind == "receive" and e.args[0] == "notify":
            _, q, r = e.args
            if not pending[q, r]:
                raise TraceIntegrityError(f"step {e.step}: notify {q}->{r} received but never sent")
            arrivals[q, pending[q, r].popleft(), r] = e.step
    return arrivals


def fcfs_obligations(trace: Trace, anchor: str = "entry_start"):
    """Yield ``(early, late, notified_at)`` for every constrained session pair.

    If q's notify reaches r before r starts its entry protocol and the two
    sessions conflict, a non-aborting q must enter CS before r.  ``anchor``
    picks the event that marks the start of r's entry protocol:
    ``entry_start`` (Fwd12, the default) or ``trigger`` (Env11).  Every
    pair constrained under ``trigger`` is also constrained under
    ``entry_start``.
    """
    if anchor not in ("entry_start", "trigger"):
        raise ValueError(f"unknown anchor {anchor!r}")
    ss = sessions(trace)
    index = {s.key: s for s in ss}
    by_proc = _by_process(ss)
    for (q, i, r), t in sorted(notify_arrivals(trace).items(), key=lambda kv: kv[1]):
        early = index.get((q, i))
        if early is None or early.aborted or r not in early.nbh:
            continue
        for late in by_proc.get(r, ()):
            start = late.entry_start_at if anchor == "entry_start" else late.triggered_at
            if start is not None and start > t and q in late.nbh:
                yield early, late, t


def check_fcfs(trace: Trace, anchor: str = "entry_start") -> list[FcfsViolation]:
    """Constrained pairs where the later session still reached CS first."""
    out = []
    for early, late, t in fcfs_obligations(trace, anchor):
        if late.cs_enter_at is None:
            continue
        if early.cs_enter_at is None or late.cs_enter_at < early.cs_enter_at:
            out.append(FcfsViolation(early.key, late.key, t, late.cs_enter_at, early.cs_enter_at))
    return out


# ---------------------------------------------------------------------------
# message complexity

TALLY_FIELDS = ("notify_sent", "withdraw_sent", "ack_received", "req_sent", "gra_received", "gra_sent")


@dataclass
class EdgeTally:
    process: int
    session: int
    neighbour: int
    notify_sent: int = 0
    withdraw_sent: int = 0
    ack_received: int = 0
    req_sent: int = 0
    gra_received: int = 0
    gra_sent: int = 0
    outcome: str = "unfinished"
    settled: bool = True

    @property
    def total(self) -> int:
        return sum(getattr(self, f) for f in TALLY_FIELDS)

    @property
    def expected(self) -> int:
        return 6 if self.process < self.neighbour else 3

    @property
    def judged(self) -> bool:
        return self.outcome == "completed" and self.settled

    @property
    def ok(self) -> bool:
        return not self.judged or self.total == self.expected

    def render(self) -> str:
        counts = " ".join(f"{f}={getattr(self, f)}" for f in TALLY_FIELDS)
        return (
            f"session={self.process}#{self.session} neighbour={self.neighbour} total={self.total} "
            f"expected={self.expected} outcome={self.outcome} settled={str(self.settled).lower()} {counts}"
        )


def message_complexity(trace: Trace) -> list[EdgeTally]:
    """Messages each session exchanges with each neighbour (sender-side attribution).

    A session of ``p`` owns the notify and withdraw it sends to ``q`` and
    the ack answering that withdraw; if ``p < q`` also its req to ``q``, the
    gra that answers the req and the gra returning the fork.  Acks and
    gras that arrive after the session ended are matched by order of the
    request on that edge.  A tally is *unsettled* when a reply is still
    in flight at the end of the trace; only completed, settled sessions
    are judged.
    """
    ss = sessions(trace)
    tallies: dict[tuple[int, int, int], EdgeTally] = {}
    for s in ss:
        for q in sorted(s.nbh):
            tallies[s.process, s.index, q] = EdgeTally(s.process, s.index, q, outcome=s.outcome)

    def bump(p, sess, q, name):
        t = tallies.get((p, sess, q))
        if t is None:
            t = tallies[p, sess, q] = EdgeTally(p, sess, q, outcome="stray")
        setattr(t, name, getattr(t, name) + 1)

    awaiting_ack: dict[tuple[int, int], deque] = defaultdict(deque)
    awaiting_gra: dict[tuple[int, int], deque] = defaultdict(deque)
    for e in trace.events:
        if e.kind == "send":
            kind, p, q = e.args
            if kind == "notify":
                bump(p, e.session, q, "notify_sent")
            elif kind == "withdraw":
                bump(p, e.session, q, "withdraw_sent")
                awaiting_ack[p, q].append(e.session)
            elif kind == "req":
                bump(p, e.session, q, "req_sent")
                awaiting_gra[p, q].append(e.session)
            elif kind == "gra" and p < q:
                bump(p, e.session, q, "gra_sent")
        elif e.kind == "receive":
            kind, q, p = e.args
            if kind == "ack":
                if not awaiting_ack[p, q]:
                    raise TraceIntegrityError(f"step {e.step}: ack {q}->{p} answers no withdraw")
                bump(p, awaiting_ack[p, q].popleft(), q, "ack_received")
            elif kind == "gra" and p < q:
                if not awaiting_gra[p, q]:
                    raise TraceIntegrityError(f"step {e.step}: gra {q}->{p} answers no req")
                bump(p, awaiting_gra[p, q].popleft(), q, "gra_received")
    for queue in (awaiting_ack, awaiting_gra):
        for (p, q), sessions_left in queue.items():
            for sess in sessions_left:
                if (p, sess, q) in tallies:
                    tallies[p, sess, q].settled = False
    return [tallies[k] for k in sorted(tallies)]


# ---------------------------------------------------------------------------
# progress

def default_bound(trace: Trace) -> int:
    sc = trace.scenario
    return 50 * len(sc.universe) * sc.K


def _judge_completion(trace: Trace, ss: Sequence[Session], bound: int):
    """Split sessions into (late, unjudged) by the completion bound."""
    # A run that stopped before max_steps stopped because nothing more
    # could happen, so an unfinished session there is stuck for good.
    closed = trace.steps < trace.scenario.max_steps
    late, unjudged = [], []
    for s in ss:
        if s.aborted:
            continue
        if s.completed:
            if s.ended_at - s.triggered_at > bound:
                late.append(s)
        elif closed or s.triggered_at + bound <= trace.steps:
            late.append(s)
        else:
            unjudged.append(s)
    return late, unjudged


def check_starvation_freedom(trace: Trace, bound: int | None = None) -> Verdict:
    """Every triggered session completes within ``bound`` steps (globally fair, abort-free runs)."""
    name = "starvation"
    sc = trace.scenario
    bound = default_bound(trace) if bound is None else bound
    if sc.policy != "fair-round-robin":
        return Verdict(name, INAPPLICABLE, f"scheduler {sc.policy} is not globally fair")
    if sc.ae and sc.env.abort_prob > 0:
        return Verdict(name, INAPPLICABLE, "aborts are possible")
    debts = fairness_audit(trace)
    if debts:
        return Verdict(name, INAPPLICABLE, f"fairness audit found {len(debts)} debts")
    ss = sessions(trace)
    late, unjudged = _judge_completion(trace, ss, bound)
    judged = len(ss) - len(unjudged)
    if late:
        s = late[0]
        what = "never completed" if s.ended_at is None else f"took {s.ended_at - s.triggered_at} steps"
        return Verdict(name, FAIL, f"{len(late)} of {judged} sessions exceed bound={bound}; first {s.process}#{s.index} {what}")
    return Verdict(name, PASS, f"{judged} sessions within bound={bound}, {len(unjudged)} unjudged near trace end")


def eternal_conflict(states: Sequence[GlobalState], p: int) -> dict[int, int]:
    """q -> first step from which conflict(p, q) holds through the final state."""
    if not states:
        return {}
    final = states[-1]
    out = {}
    for q in final.universe.ids:
        if q == p or not conflict(p, q, final):
            continue
        onset = len(states) - 1
        while onset > 0 and conflict(p, q, states[onset - 1]):
            onset -= 1
        out[q] = onset
    return out


def check_maximal_concurrency(trace: Trace, p: int, bound: int | None = None) -> Verdict:
    """p completes every session unless it ends up in an eternal conflict (finite-horizon reading)."""
    name = f"maxconc[{p}]"
    sc = trace.scenario
    if p not in sc.universe:
        raise DomainError(f"process {p} not in the universe")
    bound = default_bound(trace) if bound is None else bound
    if any(fz.process == p for fz in sc.freeze):
        return Verdict(name, INAPPLICABLE, f"{p} itself is frozen")
    debts = fairness_audit(trace, processes=[p])
    if debts:
        return Verdict(name, INAPPLICABLE, f"{p} not treated fairly: {debts[0].render()}")
    mine = [s for s in sessions(trace) if s.process == p]
    late, unjudged = _judge_completion(trace, mine, bound)
    if not late:
        return Verdict(name, PASS, f"{len(mine) - len(unjudged)} sessions completed within bound={bound}")
    eternal = eternal_conflict(trace.state_sequence(), p)
    if eternal:
        q, onset = min(eternal.items(), key=lambda kv: kv[1])
        return Verdict(
            name, PASS,
            f"{len(late)} sessions outstanding but {p} conflicts with {q} from step {onset} to trace end (finite horizon)",
        )
    s = late[0]
    return Verdict(name, FAIL, f"session {p}#{s.index} outstanding with no eternal conflict")


# ---------------------------------------------------------------------------
# variant function

def vf(q: int, p: int, s: GlobalState) -> int:
    if p == q:
        raise DomainError("vf needs two distinct processes")
    u = s.universe
    i, j = u.pos(p), u.pos(q)
    lp, lq = s.locals[i], s.locals[j]
    vf0 = lp.need >> j & 1
    vf1 = int(q < p and s.forks(q, p) + s.count("gra", p, q) == 0)
    vf2 = int(lq.pc >= 13 and bool(lq.nbh >> i & 1) and not lq.prio >> i & 1)
    return vf0 + 2 * vf1 + 4 * vf2


def _snapshots(trace: Trace) -> list[GlobalState] | None:
    """Per-step states if the trace kept them all."""
    snaps = trace.states
    if not snaps or len(snaps) != trace.steps + 1:
        return None
    return [s for _, s in snaps]


def vf_monotonic(trace: Trace, p: int, q: int) -> Verdict:
    """While p is at 14 with p in before.q, vf(q, p) never increases."""
    name = f"vf_monotonic[{q},{p}]"
    states = _snapshots(trace)
    if states is None:
        return Verdict(name, INAPPLICABLE, "per-step snapshots unavailable")
    return _vf_monotonic_states(name, states, p, q)


def _vf_monotonic_states(name: str, states: Sequence[GlobalState], p: int, q: int) -> Verdict:
    prev = None
    intervals = 0
    for step, s in enumerate(states):
        inside = s.pc(p) == 14 and p in s.set_of(q, "before")
        if not inside:
            prev = None
            continue
        v = vf(q, p, s)
        if prev is None:
            intervals += 1
        elif v > prev:
            return Verdict(name, FAIL, f"vf rose from {prev} to {v} at step {step}")
        prev = v
    return Verdict(name, PASS, f"{intervals} intervals")


def vf_parity_holds(s: GlobalState) -> bool:
    ids = s.universe.ids
    return all(
        (q in s.set_of(p, "need")) == bool(vf(q, p, s) & 1)
        for p in ids for q in ids if p != q
    )


def check_vf(trace: Trace) -> Verdict:
    name = "vf"
    snaps = [s for _, s in trace.states or ()]
    if not snaps:
        return Verdict(name, INAPPLICABLE, "no snapshots")
    for k, s in enumerate(snaps):
        if not vf_parity_holds(s):
            return Verdict(name, FAIL, f"parity broken at snapshot {k}")
    states = _snapshots(trace)
    if states is None:
        return Verdict(name, PASS, f"parity on {len(snaps)} snapshots; monotonicity inapplicable (sparse snapshots)")
    ids = trace.scenario.universe
    intervals = 0
    for p in ids:
        for q in ids:
            if p == q:
                continue
            v = _vf_monotonic_states(f"vf_monotonic[{q},{p}]", states, p, q)
            if v.result == FAIL:
                return Verdict(name, FAIL, f"{v.name}: {v.detail}")
            intervals += int(v.detail.split()[0])
    return Verdict(name, PASS, f"parity on {len(snaps)} snapshots; monotone on {intervals} intervals")


# ---------------------------------------------------------------------------
# driver

def check_invariants(trace: Trace) -> Verdict:
    name = "invariants"
    states = trace.state_sequence()
    for k, s in enumerate(states):
        vs = check_all(s)
        if vs:
            return Verdict(name, FAIL, f"step {k}: {vs[0].render()}")
    return Verdict(name, PASS, f"{len(states)} states clean")


def check_fcfs_verdict(trace: Trace) -> Verdict:
    vs = check_fcfs(trace)
    if vs:
        return Verdict("fcfs", FAIL, f"{len(vs)} violations; first: {vs[0].render()}")
    pairs = sum(1 for _ in fcfs_obligations(trace))
    return Verdict("fcfs", PASS, f"{pairs} constrained session pairs respected")


def check_complexity(trace: Trace) -> Verdict:
    tallies = message_complexity(trace)
    bad = [t for t in tallies if not t.ok]
    judged = sum(t.judged for t in tallies)
    unsettled = sum(not t.settled for t in tallies)
    if bad:
        return Verdict("complexity", FAIL, f"{len(bad)} of {judged} edges off; first: {bad[0].render()}")
    return Verdict("complexity", PASS, f"{judged} edges exact, {unsettled} unsettled")


def check_maxconc_all(trace: Trace) -> Verdict:
    verdicts = [check_maximal_concurrency(trace, p) for p in trace.scenario.universe]
    failed = [v for v in verdicts if v.result == FAIL]
    applicable = [v for v in verdicts if v.result == PASS]
    if failed:
        return Verdict("maxconc", FAIL, "; ".join(f"{v.name}: {v.detail}" for v in failed))
    if not applicable:
        return Verdict("maxconc", INAPPLICABLE, "no process was treated fairly")
    return Verdict("maxconc", PASS, f"{len(applicable)} processes pass (finite horizon)")


_DRIVERS = {
    "invariants": check_invariants,
    "fcfs": check_fcfs_verdict,
    "complexity": check_complexity,
    "starvation": check_starvation_freedom,
    "maxconc": check_maxconc_all,
    "vf": check_vf,
}


def analyze(trace: Trace, checks: Iterable[str] = CHECKS) -> list[Verdict]:
    checks = list(checks)
    unknown = [c for c in checks if c not in _DRIVERS]
    if unknown or not checks:
        raise ValueError(f"checks must be a non-empty subset of {CHECKS}; got {checks}")
    return [_DRIVERS[c](trace) for c in checks]


def summary_json(verdicts: Sequence[Verdict]) -> str:
    return json.dumps(
        {
            "ok": all(v.ok for v in verdicts),
            "verdicts": [asdict(v) for v in verdicts],
        },
        sort_keys=True,
    )
