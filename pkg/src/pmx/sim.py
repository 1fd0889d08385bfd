"""Seeded, replayable executions of the protocol.

A run proceeds in *rounds*.  Each round first gives the environment a
chance to trigger idle processes or abort abort-enabled ones, then lets
the scheduler fire forward/receive alternatives:

``fair-round-robin``
    visits every fairness slot once per round in a seeded random order and
    fires it if enabled.  A slot may be skipped (``delay_prob``) to model
    message delay, but never once it has been enabled for ``K - 1`` rounds,
    so every continuously enabled slot fires within ``K`` rounds.
``adversarial-freeze``
    the same, except that frozen (process, component) pairs never fire.
``random``
    fires one uniformly chosen enabled alternative per round.
``scripted``
    fires a fixed list of alternatives, one per round (counterexamples).

A fairness slot is ``forward(p)`` or one receive alternative ``(name, q, p)``;
``After`` and ``Prom`` count as receive alternatives.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .core import (
    ENV,
    FWD,
    RCV,
    Alternative,
    ConfigurationError,
    ContractViolation,
    GlobalState,
    ProtocolError,
    Protocol,
    Universe,
    alternative_count,
    channel_delta,
    initial_state,
    MUTATIONS,
    RCV_NAMES,
)
from .invariants import Violation, check_all

POLICIES = ("fair-round-robin", "random", "adversarial-freeze", "scripted")
COMPONENTS = (FWD, RCV)
NBH_DISTS = ("all", "empty", "uniform", "dense")
TRACE_MAGIC = "# pmx-trace v1"


class ReplayIntegrityError(ProtocolError):
    """A re-execution diverged from the recorded events."""


class TraceFormatError(ProtocolError):
    """A trace file could not be parsed."""


# ---------------------------------------------------------------------------
# scenarios

@dataclass(frozen=True)
class Freeze:
    """Stop scheduling ``component`` of ``process``; from the first state with
    ``pc == when_pc`` if given, otherwise from the start."""

    process: int
    component: str
    when_pc: int | None = None

    def to_dict(self) -> dict:
        d = {"process": self.process, "component": self.component}
        if self.when_pc is not None:
            d["when_pc"] = self.when_pc
        return d


@dataclass(frozen=True)
class EnvPolicy:
    trigger_prob: float = 0.5
    nbh_dist: Any = "uniform"
    abort_prob: float = 0.0
    max_sessions: int | None = None

    def to_dict(self) -> dict:
        return {
            "trigger_prob": self.trigger_prob,
            "nbh_dist": self.nbh_dist,
            "abort_prob": self.abort_prob,
            "max_sessions": self.max_sessions,
        }


@dataclass(frozen=True)
class Scenario:
    universe: tuple[int, ...]
    ae: frozenset[int] = frozenset()
    env: EnvPolicy = field(default_factory=EnvPolicy)
    policy: str = "fair-round-robin"
    seed: int = 0
    K: int | None = None
    freeze: tuple[Freeze, ...] = ()
    delay_prob: float = 0.0
    dwell: int = 0
    script: tuple[str, ...] = ()
    max_steps: int = 10_000
    max_rounds: int | None = None
    snapshot_every: int = 1
    check_invariants: bool = True
    mutations: frozenset[str] = frozenset()

    def __post_init__(self):
        u = Universe(self.universe)
        object.__setattr__(self, "universe", u.ids)
        object.__setattr__(self, "ae", frozenset(self.ae))
        object.__setattr__(self, "mutations", frozenset(self.mutations))
        object.__setattr__(self, "freeze", tuple(self.freeze))
        object.__setattr__(self, "script", tuple(self.script))
        if not self.ae <= set(u.ids):
            raise ConfigurationError(f"ae {sorted(self.ae)} is not within the universe")
        if self.policy not in POLICIES:
            raise ConfigurationError(f"unknown scheduler policy {self.policy!r}; expected one of {POLICIES}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must be a 64-bit unsigned integer")
        if self.K is None:
            object.__setattr__(self, "K", 4 * alternative_count(u.n))
        if self.K < 1:
            raise ConfigurationError("fairness bound K must be >= 1")
        if self.max_steps < 1:
            raise ConfigurationError("max_steps must be >= 1")
        if self.snapshot_every < 0:
            raise ConfigurationError("snapshot_every must be >= 0 (0 disables snapshots)")
        if not 0 <= self.delay_prob < 1:
            raise ConfigurationError("delay_prob must be in [0, 1)")
        if not 0 <= self.dwell < self.K:
            raise ConfigurationError("dwell must be in [0, K)")
        for fz in self.freeze:
            if fz.process not in u.index:
                raise ConfigurationError(f"freeze names process {fz.process} outside the universe")
            if fz.component not in COMPONENTS:
                raise ConfigurationError(f"freeze component must be one of {COMPONENTS}")
        if self.freeze and self.policy != "adversarial-freeze":
            raise ConfigurationError(
                f"policy {self.policy} asserts fairness for every component; freezing needs adversarial-freeze"
            )
        unknown = self.mutations - MUTATIONS.keys()
        if unknown:
            raise ConfigurationError(f"unknown mutations {sorted(unknown)}")
        env = self.env
        if not 0 <= env.trigger_prob <= 1 or not 0 <= env.abort_prob <= 1:
            raise ConfigurationError("probabilities must lie in [0, 1]")
        _check_nbh_dist(env.nbh_dist, u)
        if self.policy == "scripted":
            for text in self.script:
                Alternative.parse(text)

    @property
    def protocol(self) -> Protocol:
        return Protocol(self.ae, self.mutations)

    def to_dict(self) -> dict:
        return {
            "universe": list(self.universe),
            "ae": sorted(self.ae),
            "env": self.env.to_dict(),
            "scheduler": {
                "policy": self.policy,
                "seed": self.seed,
                "K": self.K,
                "freeze": [fz.to_dict() for fz in self.freeze],
                "delay_prob": self.delay_prob,
                "dwell": self.dwell,
                "script": list(self.script),
            },
            "max_steps": self.max_steps,
            "max_rounds": self.max_rounds,
            "snapshot_every": self.snapshot_every,
            "check_invariants": self.check_invariants,
            "mutations": sorted(self.mutations),
        }

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    @classmethod
    def from_dict(cls, d: Mapping) -> "Scenario":
        known = {"universe", "ae", "env", "scheduler", "max_steps", "max_rounds",
                 "snapshot_every", "check_invariants", "mutations"}
        extra = set(d) - known
        if extra:
            raise ConfigurationError(f"unknown scenario keys: {sorted(extra)}")
        if "universe" not in d:
            raise ConfigurationError("scenario needs a universe")
        env = dict(d.get("env", {}))
        env_extra = set(env) - {"trigger_prob", "nbh_dist", "abort_prob", "max_sessions"}
        if env_extra:
            raise ConfigurationError(f"unknown env keys: {sorted(env_extra)}")
        sch = dict(d.get("scheduler", {}))
        sch_extra = set(sch) - {"policy", "seed", "K", "freeze", "delay_prob", "dwell", "script"}
        if sch_extra:
            raise ConfigurationError(f"unknown scheduler keys: {sorted(sch_extra)}")
        try:
            freeze = tuple(
                Freeze(int(f["process"]), f.get("component", FWD), f.get("when_pc"))
                for f in sch.get("freeze", ())
            )
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"bad freeze entry: {exc}") from None
        nbh_dist = env.get("nbh_dist", "uniform")
        return cls(
            universe=tuple(d["universe"]),
            ae=frozenset(d.get("ae", ())),
            env=EnvPolicy(
                trigger_prob=env.get("trigger_prob", 0.5),
                nbh_dist=nbh_dist,
                abort_prob=env.get("abort_prob", 0.0),
                max_sessions=env.get("max_sessions"),
            ),
            policy=sch.get("policy", "fair-round-robin"),
            seed=sch.get("seed", 0),
            K=sch.get("K"),
            freeze=freeze,
            delay_prob=sch.get("delay_prob", 0.0),
            dwell=sch.get("dwell", 0),
            script=tuple(sch.get("script", ())),
            max_steps=d.get("max_steps", 10_000),
            max_rounds=d.get("max_rounds"),
            snapshot_every=d.get("snapshot_every", 1),
            check_invariants=d.get("check_invariants", True),
            mutations=frozenset(d.get("mutations", ())),
        )

    @classmethod
    def load(cls, path: str | Path) -> "Scenario":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(data)


def _check_nbh_dist(dist, u: Universe) -> None:
    if isinstance(dist, str):
        if dist not in NBH_DISTS:
            raise ConfigurationError(f"unknown nbh_dist {dist!r}")
        return
    if isinstance(dist, Mapping) and len(dist) == 1:
        (kind, arg), = dist.items()
        if kind == "fixed" and isinstance(arg, Mapping):
            for p, sets in arg.items():
                p = int(p)
                u.pos(p)
                if p in sets:
                    raise ConfigurationError(f"fixed nbh for {p} contains itself")
                u.mask(sets)
            return
        if kind == "size" and isinstance(arg, int) and arg >= 0:
            return
    raise ConfigurationError(f"bad nbh_dist {dist!r}")


def _choose_nbh(dist, p: int, u: Universe, rng: random.Random) -> frozenset[int]:
    others = [q for q in u.ids if q != p]
    if dist == "all":
        return frozenset(others)
    if dist == "empty":
        return frozenset()
    if dist == "uniform":
        return frozenset(q for q in others if rng.random() < 0.5)
    if dist == "dense":
        lo = min(2, len(others))
        k = rng.randint(lo, len(others)) if others else 0
        return frozenset(rng.sample(others, k))
    (kind, arg), = dist.items()
    if kind == "fixed":
        return frozenset(arg.get(str(p), arg.get(p, ())))
    k = min(arg, len(others))
    return frozenset(rng.sample(others, k))


# ---------------------------------------------------------------------------
# events and traces

@dataclass(frozen=True)
class Event:
    step: int
    alt: Alternative
    kind: str
    args: tuple
    session: int
    round: int = 0

    def render(self) -> str:
        return (
            f"step={self.step} alt={self.alt} kind={self.kind}({_render_args(self.args)}) "
            f"session={self.session} round={self.round}"
        )

    @classmethod
    def parse(cls, line: str) -> "Event":
        fields = {}
        for token in line.split():
            name, sep, value = token.partition("=")
            if not sep:
                raise TraceFormatError(f"malformed token {token!r} in {line!r}")
            fields[name] = value
        try:
            kind_text = fields["kind"]
            kind, _, rest = kind_text.partition("(")
            return cls(
                step=int(fields["step"]),
                alt=Alternative.parse(fields["alt"]),
                kind=kind,
                args=_parse_args(rest[:-1]),
                session=int(fields["session"]),
                round=int(fields.get("round", 0)),
            )
        except (KeyError, ValueError, ProtocolError) as exc:
            raise TraceFormatError(f"cannot parse event {line!r}: {exc}") from None


def _render_args(args: tuple) -> str:
    out = []
    for a in args:
        if isinstance(a, frozenset):
            out.append("{" + ",".join(str(x) for x in sorted(a)) + "}")
        else:
            out.append(str(a))
    return ",".join(out)


def _parse_args(text: str) -> tuple:
    out = []
    depth = 0
    cur = ""
    for ch in text + ",":
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
        if ch == "," and depth == 0:
            if cur:
                if cur.startswith("{"):
                    out.append(frozenset(int(x) for x in cur[1:-1].split(",") if x))
                elif cur.isdigit():
                    out.append(int(cur))
                else:
                    out.append(cur)
            cur = ""
        else:
            cur += ch
    return tuple(out)


@dataclass
class Trace:
    scenario: Scenario
    events: list[Event]
    alts: list[Alternative]
    step_rounds: list[int]
    rounds_completed: int
    states: list[tuple[int, GlobalState]] | None = None
    final_state: GlobalState | None = None
    violations: list[tuple[int, Violation]] = field(default_factory=list)

    @property
    def steps(self) -> int:
        return len(self.alts)

    def lines(self) -> list[str]:
        sc = self.scenario
        out = [
            f"{TRACE_MAGIC} seed={sc.seed} scenario_sha256={sc.digest()}",
            f"# scenario {sc.canonical_json()}",
        ]
        out.extend(e.render() for e in self.events)
        final = self.final_state.digest() if self.final_state is not None else "-"
        out.append(f"# end steps={self.steps} rounds={self.rounds_completed} final={final}")
        return out

    def dump(self, path: str | Path) -> None:
        Path(path).write_text("\n".join(self.lines()) + "\n")

    def state_sequence(self) -> list[GlobalState]:
        """Every state of the run (initial plus one per step), recomputed."""
        proto = self.scenario.protocol
        s = initial_state(self.scenario.universe)
        out = [s]
        for a in self.alts:
            s = proto.apply(a, s)
            out.append(s)
        return out


def load_trace(path: str | Path) -> Trace:
    """Parse a trace file.  States are not stored; use ``replay`` to rebuild them."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigurationError(f"cannot read trace {path}: {exc}") from None
    if len(lines) < 3 or not lines[0].startswith(TRACE_MAGIC):
        raise TraceFormatError(f"{path}: not a trace file")
    header = dict(tok.split("=", 1) for tok in lines[0][len(TRACE_MAGIC):].split())
    if not lines[1].startswith("# scenario "):
        raise TraceFormatError(f"{path}: missing scenario line")
    try:
        scenario = Scenario.from_dict(json.loads(lines[1][len("# scenario "):]))
    except json.JSONDecodeError as exc:
        raise TraceFormatError(f"{path}: bad scenario JSON ({exc})") from None
    if header.get("scenario_sha256") != scenario.digest() or header.get("seed") != str(scenario.seed):
        raise ReplayIntegrityError(f"{path}: header does not match the embedded scenario")
    if not lines[-1].startswith("# end "):
        raise TraceFormatError(f"{path}: truncated (no end line)")
    footer = dict(tok.split("=", 1) for tok in lines[-1][len("# end "):].split())
    events = [Event.parse(line) for line in lines[2:-1] if line.strip()]
    alts: list[Alternative] = []
    step_rounds: list[int] = []
    for e in events:
        if e.step == len(alts):
            alts.append(e.alt)
            step_rounds.append(e.round)
        elif e.step != len(alts) - 1 or e.alt != alts[-1]:
            raise TraceFormatError(f"{path}: events out of order at step {e.step}")
    if int(footer.get("steps", -1)) != len(alts):
        raise TraceFormatError(f"{path}: footer step count {footer.get('steps')} != {len(alts)}")
    return Trace(
        scenario=scenario,
        events=events,
        alts=alts,
        step_rounds=step_rounds,
        rounds_completed=int(footer.get("rounds", 0)),
    )


# ---------------------------------------------------------------------------
# fairness bookkeeping (shared by the scheduler and the audit)

def _slot_table(u: Universe) -> list[tuple]:
    slots = [(FWD, p) for p in u.ids]
    for p in u.ids:
        for q in u.ids:
            if q != p:
                slots.extend((name, q, p) for name in RCV_NAMES)
    return slots


def _slot_process(slot: tuple) -> int:
    return slot[1] if slot[0] == FWD else slot[2]


def _slot_component(slot: tuple) -> str:
    return FWD if slot[0] == FWD else RCV


class _Tracker:
    """Tracks which fairness slots are enabled and since which round."""

    def __init__(self, scenario: Scenario):
        self.proto = scenario.protocol
        self.freeze = scenario.freeze
        self.active_freeze: set[tuple[int, str]] = set()
        self.enabled: dict[tuple, Alternative] = {}
        self.since: dict[tuple, int] = {}

    def observe(self, s: GlobalState, rnd: int, fired: tuple | None = None) -> None:
        for fz in self.freeze:
            key = (fz.process, fz.component)
            if key not in self.active_freeze and (fz.when_pc is None or s.pc(fz.process) == fz.when_pc):
                self.active_freeze.add(key)
        if fired is not None:
            self.since.pop(fired, None)
        enabled = {a.slot: a for a in self.proto.fair_alternatives(s)}
        since = {}
        for slot in enabled:
            since[slot] = self.since.get(slot, rnd)
        self.enabled = enabled
        self.since = since

    def frozen(self, slot: tuple) -> bool:
        return (_slot_process(slot), _slot_component(slot)) in self.active_freeze

    def live(self) -> bool:
        """Some non-frozen fairness slot is enabled."""
        return any(not self.frozen(slot) for slot in self.enabled)


# ---------------------------------------------------------------------------
# running

def _step_events(alt: Alternative, pre: GlobalState, post: GlobalState, step: int,
                 rnd: int, sessions: dict[int, int]) -> list[Event]:
    p = alt.proc
    name = alt.name
    out = []

    def ev(kind, *args, sess=None):
        out.append(Event(step, alt, kind, args, sessions[p] if sess is None else sess, rnd))

    if name == "Env11":
        sessions[p] += 1
        ev("trigger", p, alt.nbh, sessions[p])
    elif name in ("Env12", "Env13", "Env14"):
        ev("abort", p, sessions[p], pre.pc(p))
        ev("idle", p, sessions[p])
    elif name == "Fwd12":
        ev("entry_start", p, sessions[p])
    elif name == "Fwd15":
        ev("cs_enter", p, sessions[p])
    elif name == "Fwd16":
        ev("cs_exit", p, sessions[p])
        ev("idle", p, sessions[p])
    sent, received = channel_delta(pre, post)
    for kind, q, r in received:
        ev("receive", kind.label, q, r)
    for kind, q, r in sent:
        ev("send", kind.label, q, r)
    if not out:
        ev("step")
    return out


def run(scenario: Scenario) -> Trace:
    """Execute ``scenario`` and record its trace."""
    proto = scenario.protocol
    u = Universe(scenario.universe)
    rng = random.Random(scenario.seed)
    env = scenario.env
    s = initial_state(u)
    sessions = {p: 0 for p in u.ids}
    budget = {p: env.max_sessions for p in u.ids}
    tracker = _Tracker(scenario)
    tracker.observe(s, 0)
    slots = _slot_table(u)
    script = [Alternative.parse(t) for t in scenario.script]
    max_rounds = scenario.max_rounds if scenario.max_rounds is not None else 4 * scenario.max_steps

    events: list[Event] = []
    alts: list[Alternative] = []
    step_rounds: list[int] = []
    snaps: list[tuple[int, GlobalState]] | None = [] if scenario.snapshot_every else None
    violations: list[tuple[int, Violation]] = []
    if snaps is not None:
        snaps.append((0, s))

    rnd = 0

    def fire(a: Alternative) -> None:
        nonlocal s
        pre = s
        s = proto.apply(a, pre)
        step = len(alts)
        alts.append(a)
        step_rounds.append(rnd)
        events.extend(_step_events(a, pre, s, step, rnd, sessions))
        if a.name == "Env11" and budget[a.proc] is not None:
            budget[a.proc] -= 1
        if scenario.check_invariants:
            for v in check_all(s):
                violations.append((step, v))
        if snaps is not None and len(alts) % scenario.snapshot_every == 0:
            snaps.append((len(alts), s))
        tracker.observe(s, rnd, a.slot if a.component != ENV else None)

    def env_can_act() -> bool:
        if scenario.policy == "scripted":
            return False
        for i, p in enumerate(u.ids):
            pc = s.locals[i].pc
            if pc == 11 and env.trigger_prob > 0 and (budget[p] is None or budget[p] > 0):
                return True
            if p in scenario.ae and env.abort_prob > 0 and pc in (12, 13, 14):
                if proto.enabled(Alternative(f"Env{pc}", p), s):
                    return True
        return False

    def done() -> bool:
        return len(alts) >= scenario.max_steps

    while not done() and rnd < max_rounds:
        if scenario.policy == "scripted":
            if len(alts) >= len(script):
                break
            a = script[len(alts)]
            if not proto.enabled(a, s):
                raise ContractViolation(f"scripted step {len(alts)}: {a} is not enabled")
            fire(a)
            rnd += 1
            continue

        # environment phase
        for i, p in enumerate(u.ids):
            if done():
                break
            pc = s.locals[i].pc
            if pc == 11:
                if (budget[p] is None or budget[p] > 0) and env.trigger_prob > 0 and rng.random() < env.trigger_prob:
                    fire(Alternative("Env11", p, nbh=_choose_nbh(env.nbh_dist, p, u, rng)))
            elif p in scenario.ae and pc in (12, 13, 14) and env.abort_prob > 0:
                a = Alternative(f"Env{pc}", p)
                if proto.enabled(a, s) and rng.random() < env.abort_prob:
                    fire(a)

        # scheduler phase
        if scenario.policy == "random":
            if not done() and tracker.enabled:
                choices = sorted(tracker.enabled.values(), key=str)
                fire(rng.choice(choices))
        else:
            order = list(slots)
            rng.shuffle(order)
            for slot in order:
                if done():
                    break
                a = tracker.enabled.get(slot)
                if a is None or tracker.frozen(slot):
                    continue
                waited = rnd - tracker.since[slot]
                if waited < scenario.K - 1:
                    if a.name == "Fwd15" and waited < scenario.dwell:
                        continue
                    if scenario.delay_prob and rng.random() < scenario.delay_prob:
                        continue
                fire(a)
        rnd += 1
        if not tracker.live() and not env_can_act():
            break

    if snaps is not None and (not snaps or snaps[-1][0] != len(alts)):
        snaps.append((len(alts), s))
    return Trace(
        scenario=scenario,
        events=events,
        alts=alts,
        step_rounds=step_rounds,
        rounds_completed=rnd,
        states=snaps,
        final_state=s,
        violations=violations,
    )


def replay(trace: Trace) -> Trace:
    """Re-run the trace's scenario and insist on an identical event sequence."""
    again = run(trace.scenario)
    old = [e.render() for e in trace.events]
    new = [e.render() for e in again.events]
    if old != new:
        for idx, (x, y) in enumerate(zip(old, new)):
            if x != y:
                raise ReplayIntegrityError(f"event {idx} differs: recorded {x!r}, replayed {y!r}")
        raise ReplayIntegrityError(f"event count differs: recorded {len(old)}, replayed {len(new)}")
    if trace.rounds_completed != again.rounds_completed:
        raise ReplayIntegrityError(
            f"round count differs: recorded {trace.rounds_completed}, replayed {again.rounds_completed}"
        )
    if trace.final_state is not None and trace.final_state != again.final_state:
        raise ReplayIntegrityError("final state differs")
    return again


def scripted_scenario(universe: Iterable[int], path: Sequence[Alternative], ae: Iterable[int] = (),
                      mutations: Iterable[str] = ()) -> Scenario:
    """Scenario that replays an explicit sequence of alternatives."""
    return Scenario(
        universe=tuple(universe),
        ae=frozenset(ae),
        policy="scripted",
        script=tuple(str(a) for a in path),
        max_steps=max(1, len(path)),
        mutations=frozenset(mutations),
    )


def trace_from_path(universe: Iterable[int], path: Sequence[Alternative], ae: Iterable[int] = (),
                    mutations: Iterable[str] = ()) -> Trace:
    return run(scripted_scenario(universe, path, ae, mutations))


# ---------------------------------------------------------------------------
# fairness audit

@dataclass(frozen=True)
class FairnessDebt:
    slot: tuple
    alt: Alternative
    since_round: int
    until_round: int

    def render(self) -> str:
        return f"{self.alt} enabled from round {self.since_round} to {self.until_round} without firing"


def fairness_audit(trace: Trace, processes: Iterable[int] | None = None) -> list[FairnessDebt]:
    """Slots continuously enabled for more than K rounds without firing.

    Frozen slots are excluded.  With ``processes`` given, only slots of
    those processes' forward components and of messages to or from them
    are audited (per-process fairness).
    """
    sc = trace.scenario
    proto = sc.protocol
    tracker = _Tracker(sc)
    s = initial_state(sc.universe)
    tracker.observe(s, 0)
    focus = set(processes) if processes is not None else None
    debts: dict[tuple, FairnessDebt] = {}

    def relevant(slot) -> bool:
        if tracker.frozen(slot):
            return False
        if focus is None:
            return True
        if slot[0] == FWD:
            return slot[1] in focus
        return slot[1] in focus or slot[2] in focus

    def audit(rnd: int) -> None:
        for slot, since in tracker.since.items():
            if rnd - since > sc.K and relevant(slot) and slot not in debts:
                debts[slot] = FairnessDebt(slot, tracker.enabled[slot], since, rnd)

    for a, rnd in zip(trace.alts, trace.step_rounds):
        audit(rnd)
        s = proto.apply(a, s)
        tracker.observe(s, rnd, a.slot if a.component != ENV else None)
    audit(trace.rounds_completed)
    return sorted(debts.values(), key=lambda d: (d.since_round, str(d.alt)))
