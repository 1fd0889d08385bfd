"""Transition system for the partial mutual exclusion protocol.

Each process runs three components (environment, forward, receive) whose
guarded alternatives are atomic.  States are immutable values; ``apply``
returns a fresh state and never mutates its argument.

Process sets are stored as integer bitmasks over the *positions* of the
processes in the sorted universe, so ``1 << i`` stands for ``universe[i]``.
Because the universe is sorted, position order and id order coincide,
which is what the lower/higher asymmetry of the fork layer relies on.
"""

from __future__ import annotations

import functools
import hashlib
import itertools
import re
from dataclasses import dataclass
from enum import IntEnum
from typing import Callable, Iterable, Iterator, Mapping, NamedTuple, Sequence

IDLE = 11
LINES = (11, 12, 13, 14, 15, 16)


class ProtocolError(Exception):
    """Base class for errors raised by the transition system."""


class ConfigurationError(ProtocolError):
    """Invalid universe or scenario parameters."""


class DomainError(ProtocolError):
    """A process id outside the universe, or an ill-formed argument."""


class ContractViolation(ProtocolError):
    """``apply`` was called with a disabled alternative."""


class MsgKind(IntEnum):
    REQ = 0
    GRA = 1
    NOTIFY = 2
    WITHDRAW = 3
    ACK = 4

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, text: str) -> "MsgKind":
        try:
            return cls[text.upper()]
        except KeyError:
            raise DomainError(f"unknown message kind {text!r}") from None


REQ, GRA, NOTIFY, WITHDRAW, ACK = MsgKind


# ---------------------------------------------------------------------------
# bitmask helpers

def bits(mask: int) -> Iterator[int]:
    """Yield the positions set in ``mask`` in increasing order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def popcount(mask: int) -> int:
    return bin(mask).count("1")


# ---------------------------------------------------------------------------
# universe and states

class Universe:
    """Sorted, finite set of process ids with a position index."""

    __slots__ = ("ids", "index", "n")

    def __init__(self, ids: Iterable[int]):
        ids = list(ids)
        if not ids:
            raise ConfigurationError("universe must be non-empty")
        for p in ids:
            if isinstance(p, bool) or not isinstance(p, int) or p < 0:
                raise ConfigurationError(f"process ids must be naturals, got {p!r}")
        if len(set(ids)) != len(ids):
            raise ConfigurationError(f"duplicate process ids in {ids}")
        self.ids: tuple[int, ...] = tuple(sorted(ids))
        self.index: dict[int, int] = {p: i for i, p in enumerate(self.ids)}
        self.n = len(self.ids)

    def pos(self, p: int) -> int:
        try:
            return self.index[p]
        except (KeyError, TypeError):
            raise DomainError(f"process {p!r} is not in universe {list(self.ids)}") from None

    def mask(self, procs: Iterable[int]) -> int:
        m = 0
        for p in procs:
            m |= 1 << self.pos(p)
        return m

    def members(self, mask: int) -> frozenset[int]:
        return frozenset(self.ids[i] for i in bits(mask))

    def __iter__(self):
        return iter(self.ids)

    def __len__(self):
        return self.n

    def __eq__(self, other):
        return isinstance(other, Universe) and self.ids == other.ids

    def __hash__(self):
        return hash(self.ids)

    def __repr__(self):
        return f"Universe({list(self.ids)})"


SET_FIELDS = ("nbh", "prio", "before", "after", "wack", "away", "need", "prom")


class LocalState(NamedTuple):
    """Program counter plus the eight private sets (as position bitmasks)."""

    pc: int = IDLE
    nbh: int = 0
    prio: int = 0
    before: int = 0
    after: int = 0
    wack: int = 0
    away: int = 0
    need: int = 0
    prom: int = 0


_IDLE_LOCAL = LocalState()


@dataclass(frozen=True)
class GlobalState:
    """Complete protocol configuration.

    ``chan`` is a flat tuple indexed by ``(kind * n + sender) * n + receiver``
    and ``fork`` by ``holder * n + peer`` (all positions, not ids).
    """

    universe: Universe
    locals: tuple[LocalState, ...]
    chan: tuple[int, ...]
    fork: tuple[int, ...]

    # -- id-level accessors ------------------------------------------------
    def local(self, p: int) -> LocalState:
        return self.locals[self.universe.pos(p)]

    def pc(self, p: int) -> int:
        return self.local(p).pc

    def set_of(self, p: int, name: str) -> frozenset[int]:
        if name not in SET_FIELDS:
            raise DomainError(f"unknown private set {name!r}")
        return self.universe.members(getattr(self.local(p), name))

    def count(self, kind: MsgKind | str, q: int, r: int) -> int:
        if isinstance(kind, str):
            kind = MsgKind.parse(kind)
        u = self.universe
        return self.chan[(kind * u.n + u.pos(q)) * u.n + u.pos(r)]

    def forks(self, q: int, r: int) -> int:
        u = self.universe
        return self.fork[u.pos(q) * u.n + u.pos(r)]

    # -- construction helpers (mainly for tests and tools) ------------------
    def with_local(self, p: int, **changes) -> "GlobalState":
        """Return a copy with fields of ``p``'s local state replaced.

        Set-valued fields are given as iterables of process ids.
        """
        u = self.universe
        i = u.pos(p)
        fields = {}
        for name, value in changes.items():
            if name == "pc":
                fields[name] = value
            elif name in SET_FIELDS:
                fields[name] = u.mask(value)
            else:
                raise DomainError(f"unknown local field {name!r}")
        locals_ = list(self.locals)
        locals_[i] = locals_[i]._replace(**fields)
        return GlobalState(u, tuple(locals_), self.chan, self.fork)

    def with_count(self, kind: MsgKind | str, q: int, r: int, value: int) -> "GlobalState":
        if isinstance(kind, str):
            kind = MsgKind.parse(kind)
        u = self.universe
        chan = list(self.chan)
        chan[(kind * u.n + u.pos(q)) * u.n + u.pos(r)] = value
        return GlobalState(u, self.locals, tuple(chan), self.fork)

    def with_fork(self, q: int, r: int, value: int) -> "GlobalState":
        u = self.universe
        fork = list(self.fork)
        fork[u.pos(q) * u.n + u.pos(r)] = value
        return GlobalState(u, self.locals, self.chan, tuple(fork))

    # -- canonical encodings ------------------------------------------------
    def key(self):
        """Compact hashable encoding with a fixed field order.

        Byte encoding is used whenever every component fits; otherwise a
        plain tuple (e.g. large universes or corrupted counters).
        """
        try:
            return bytes(itertools.chain(itertools.chain.from_iterable(self.locals), self.chan, self.fork))
        except ValueError:
            return tuple(itertools.chain(itertools.chain.from_iterable(self.locals), self.chan, self.fork))

    def digest(self) -> str:
        return hashlib.sha256(repr((self.universe.ids, self.key())).encode()).hexdigest()

    def is_quiescent(self) -> bool:
        """All idle, no messages in transit, default forks in place."""
        return self == initial_state(self.universe.ids)

    def describe(self) -> str:
        u = self.universe
        parts = []
        for p in u.ids:
            loc = self.local(p)
            sets = " ".join(
                f"{name}={sorted(self.set_of(p, name))}"
                for name in SET_FIELDS
                if getattr(loc, name)
            )
            parts.append(f"[{p}] pc={loc.pc} {sets}".rstrip())
        msgs = [
            f"{k.label}.{q}.{r}={self.count(k, q, r)}"
            for k in MsgKind
            for q in u.ids
            for r in u.ids
            if self.count(k, q, r)
        ]
        if msgs:
            parts.append("msgs: " + " ".join(msgs))
        odd = [
            f"fork.{q}.{r}={self.forks(q, r)}"
            for q in u.ids
            for r in u.ids
            if q != r and self.forks(q, r) != (1 if r < q else 0)
        ]
        if odd:
            parts.append("forks: " + " ".join(odd))
        return "; ".join(parts)


def initial_state(universe: Iterable[int] | Universe) -> GlobalState:
    """All processes idle, empty sets, empty channels, default forks."""
    u = universe if isinstance(universe, Universe) else Universe(universe)
    n = u.n
    fork = tuple(1 if r < q else 0 for q in range(n) for r in range(n))
    return GlobalState(u, (_IDLE_LOCAL,) * n, (0,) * (5 * n * n), fork)


# ---------------------------------------------------------------------------
# alternatives

ENV, FWD, RCV = "env", "fwd", "rcv"

ENV_NAMES = ("Env11", "Env12", "Env13", "Env14")
FWD_NAMES = ("Fwd12", "Fwd13", "Fwd14", "Fwd15", "Fwd16")
RCV_NAMES = ("RcvNotify", "RcvWithdraw", "After", "RcvAck", "RcvReq", "RcvGra", "Prom")
ALL_NAMES = ENV_NAMES + FWD_NAMES + RCV_NAMES

_RCV_KIND = {
    "RcvNotify": NOTIFY,
    "RcvWithdraw": WITHDRAW,
    "RcvAck": ACK,
    "RcvReq": REQ,
    "RcvGra": GRA,
}


@dataclass(frozen=True)
class Alternative:
    """One guarded command, instantiated with its process parameters.

    ``proc`` is the process that executes the alternative (the receiver,
    for receive alternatives); ``peer`` is the sender ``q`` of a receive
    alternative.  Rendering puts the sender first: ``RcvNotify(q,p)``.
    """

    name: str
    proc: int
    peer: int | None = None
    nbh: frozenset[int] | None = None

    def __post_init__(self):
        if self.name not in ALL_NAMES:
            raise DomainError(f"unknown alternative {self.name!r}")
        if self.name == "Env11":
            if self.nbh is None:
                raise DomainError("Env11 needs a neighbour set")
            object.__setattr__(self, "nbh", frozenset(self.nbh))
            if self.proc in self.nbh:
                raise DomainError(f"Env11: process {self.proc} chose itself as neighbour")
        elif self.nbh is not None:
            raise DomainError(f"{self.name} takes no neighbour set")
        if self.name in RCV_NAMES:
            if self.peer is None:
                raise DomainError(f"{self.name} needs a sender")
        elif self.peer is not None:
            raise DomainError(f"{self.name} takes no sender")

    @property
    def component(self) -> str:
        if self.name in ENV_NAMES:
            return ENV
        if self.name in FWD_NAMES:
            return FWD
        return RCV

    @property
    def slot(self) -> tuple:
        """Fairness slot: forward(p) as a whole, or one receive channel."""
        if self.component == FWD:
            return (FWD, self.proc)
        if self.component == RCV:
            return (self.name, self.peer, self.proc)
        return (ENV, self.proc)

    def __str__(self) -> str:
        if self.name == "Env11":
            inner = ",".join(str(q) for q in sorted(self.nbh))
            return f"Env11({self.proc},{{{inner}}})"
        if self.peer is not None:
            return f"{self.name}({self.peer},{self.proc})"
        return f"{self.name}({self.proc})"

    @classmethod
    def parse(cls, text: str) -> "Alternative":
        m = _ALT_RE.fullmatch(text.strip())
        if not m:
            raise DomainError(f"cannot parse alternative {text!r}")
        name, args = m.group(1), m.group(2)
        if name == "Env11":
            m2 = re.fullmatch(r"(\d+),\{([\d,]*)\}", args)
            if not m2:
                raise DomainError(f"cannot parse alternative {text!r}")
            nbh = frozenset(int(x) for x in m2.group(2).split(",") if x)
            return cls(name, int(m2.group(1)), nbh=nbh)
        parts = [int(x) for x in args.split(",")] if args else []
        if name in RCV_NAMES and len(parts) == 2:
            return cls(name, parts[1], peer=parts[0])
        if name not in RCV_NAMES and len(parts) == 1:
            return cls(name, parts[0])
        raise DomainError(f"wrong arity in {text!r}")


_ALT_RE = re.compile(r"([A-Za-z]+\d*)\((.*)\)")


def env11(p: int, nbh: Iterable[int]) -> Alternative:
    return Alternative("Env11", p, nbh=frozenset(nbh))


def alt(name: str, p: int, q: int | None = None) -> Alternative:
    """Shorthand: ``alt("Fwd12", 0)`` or ``alt("RcvNotify", 0, 1)`` (sender, receiver)."""
    if name in RCV_NAMES:
        return Alternative(name, q, peer=p)
    return Alternative(name, p)


# ---------------------------------------------------------------------------
# mutations (deliberately broken variants used to test the checkers)

MUTATIONS: dict[str, str] = {
    "skip_fwd13_prio_guard": "Fwd13 ignores its prio = {} guard",
    "omit_fork_decrement_fwd16": "Fwd16 sends gra but keeps the fork",
    "drop_prom_need_update": "Prom never adds the granted peer to need",
    "skip_wack_wait_fwd12": "Fwd12 ignores its wack = {} guard",
    "omit_withdraw_fwd14": "Fwd14 records wack but sends no withdraw",
    "no_gra_fwd16": "Fwd16 neither sends gra nor releases the fork",
}


# ---------------------------------------------------------------------------
# the protocol

NbhPolicy = Callable[[GlobalState, int], Iterable[Iterable[int]]]


def all_subsets_policy(s: GlobalState, p: int) -> list[frozenset[int]]:
    others = [q for q in s.universe.ids if q != p]
    return [
        frozenset(c)
        for k in range(len(others) + 1)
        for c in itertools.combinations(others, k)
    ]


def full_nbh_policy(s: GlobalState, p: int) -> list[frozenset[int]]:
    return [frozenset(q for q in s.universe.ids if q != p)]


@dataclass(frozen=True)
class Protocol:
    """Guards and effects of the sixteen alternatives.

    ``ae`` is the fixed set of abort-enabled processes.  ``mutations``
    selects intentionally broken variants (see ``MUTATIONS``); the default
    is the correct protocol.
    """

    ae: frozenset[int] = frozenset()
    mutations: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "ae", frozenset(self.ae))
        object.__setattr__(self, "mutations", frozenset(self.mutations))
        unknown = self.mutations - MUTATIONS.keys()
        if unknown:
            raise ConfigurationError(f"unknown mutations: {sorted(unknown)}")

    # -- guards -------------------------------------------------------------
    def enabled(self, a: Alternative, s: GlobalState) -> bool:
        u = s.universe
        i = u.pos(a.proc)
        loc = s.locals[i]
        name = a.name
        if a.component == RCV:
            j = u.pos(a.peer)
            jb = 1 << j
            kind = _RCV_KIND.get(name)
            if kind is not None:
                return s.chan[(kind * u.n + j) * u.n + i] > 0
            if name == "After":
                return bool(loc.after & loc.before & jb)
            # Prom
            return bool(loc.prom & ~loc.away & jb) and not (loc.pc >= 15 and loc.nbh & jb)
        if name == "Env11":
            for q in a.nbh:
                u.pos(q)
            return loc.pc == 11
        ae = a.proc in self.ae
        if name == "Env12":
            return loc.pc == 12 and ae
        if name == "Env13":
            return loc.pc == 13 and ae
        if name == "Env14":
            higher = ~((1 << (i + 1)) - 1)
            return loc.pc == 14 and not (loc.need & higher) and ae
        if name == "Fwd12":
            return loc.pc == 12 and (not loc.wack or "skip_wack_wait_fwd12" in self.mutations)
        if name == "Fwd13":
            return loc.pc == 13 and (not loc.prio or "skip_fwd13_prio_guard" in self.mutations)
        if name == "Fwd14":
            return loc.pc == 14 and not loc.need
        if name == "Fwd15":
            return loc.pc == 15
        return loc.pc == 16  # Fwd16

    # -- effects ------------------------------------------------------------
    def apply(self, a: Alternative, s: GlobalState) -> GlobalState:
        if not self.enabled(a, s):
            raise ContractViolation(f"{a} is not enabled")
        return self._effect(a, s)

    def _effect(self, a: Alternative, s: GlobalState) -> GlobalState:
        u = s.universe
        n = u.n
        i = u.pos(a.proc)
        loc = s.locals[i]
        name = a.name
        chan = s.chan
        fork = s.fork
        new_chan = None
        new_fork = None

        def send(kind: MsgKind, src: int, dst: int):
            nonlocal new_chan
            if new_chan is None:
                new_chan = list(chan)
            new_chan[(kind * n + src) * n + dst] += 1

        def take(kind: MsgKind, src: int, dst: int):
            nonlocal new_chan
            if new_chan is None:
                new_chan = list(chan)
            new_chan[(kind * n + src) * n + dst] -= 1

        def fork_add(holder: int, peer: int, delta: int):
            nonlocal new_fork
            if new_fork is None:
                new_fork = list(fork)
            new_fork[holder * n + peer] += delta

        def return_higher_forks(nbh: int):
            for j in bits(nbh):
                if j > i:
                    send(GRA, i, j)
                    fork_add(i, j, -1)

        if name == "Env11":
            loc = loc._replace(nbh=u.mask(a.nbh), pc=12)
        elif name == "Env12":
            loc = loc._replace(nbh=0, pc=11)
        elif name == "Env13":
            for j in bits(loc.nbh):
                send(WITHDRAW, i, j)
            loc = loc._replace(wack=loc.nbh, nbh=0, prio=0, pc=11)
        elif name == "Env14":
            return_higher_forks(loc.nbh)
            for j in bits(loc.nbh):
                send(WITHDRAW, i, j)
            loc = loc._replace(wack=loc.nbh, need=0, nbh=0, pc=11)
        elif name == "Fwd12":
            for j in bits(loc.nbh):
                send(NOTIFY, i, j)
            loc = loc._replace(prio=loc.nbh & loc.before & ~loc.after, pc=13)
        elif name == "Fwd13":
            higher = loc.nbh & ~((1 << (i + 1)) - 1)
            for j in bits(higher):
                send(REQ, i, j)
            loc = loc._replace(need=higher | (loc.nbh & loc.away), pc=14)
        elif name == "Fwd14":
            if "omit_withdraw_fwd14" not in self.mutations:
                for j in bits(loc.nbh):
                    send(WITHDRAW, i, j)
            loc = loc._replace(wack=loc.nbh, pc=15)
        elif name == "Fwd15":
            loc = loc._replace(pc=16)
        elif name == "Fwd16":
            if "no_gra_fwd16" not in self.mutations:
                for j in bits(loc.nbh):
                    if j > i:
                        send(GRA, i, j)
                        if "omit_fork_decrement_fwd16" not in self.mutations:
                            fork_add(i, j, -1)
            loc = loc._replace(nbh=0, pc=11)
        else:
            j = u.pos(a.peer)
            jb = 1 << j
            if name == "RcvNotify":
                take(NOTIFY, j, i)
                loc = loc._replace(before=loc.before | jb)
            elif name == "RcvWithdraw":
                take(WITHDRAW, j, i)
                loc = loc._replace(prio=loc.prio & ~jb, after=loc.after | jb)
            elif name == "After":
                loc = loc._replace(after=loc.after & ~jb, before=loc.before & ~jb)
                send(ACK, i, j)
            elif name == "RcvAck":
                take(ACK, j, i)
                loc = loc._replace(wack=loc.wack & ~jb)
            elif name == "RcvReq":
                take(REQ, j, i)
                loc = loc._replace(prom=loc.prom | jb)
            elif name == "RcvGra":
                take(GRA, j, i)
                fork_add(i, j, +1)
                loc = loc._replace(away=loc.away & ~jb, need=loc.need & ~jb)
            else:  # Prom
                send(GRA, i, j)
                fork_add(i, j, -1)
                need = loc.need
                if loc.pc == 14 and loc.nbh & jb and "drop_prom_need_update" not in self.mutations:
                    need |= jb
                loc = loc._replace(away=loc.away | jb, prom=loc.prom & ~jb, need=need)

        locals_ = s.locals[:i] + (loc,) + s.locals[i + 1:]
        return GlobalState(
            u,
            locals_,
            chan if new_chan is None else tuple(new_chan),
            fork if new_fork is None else tuple(new_fork),
        )

    # -- enumeration --------------------------------------------------------
    def enabled_alternatives(
        self, s: GlobalState, nbh_choices: NbhPolicy | Mapping[int, Sequence[Iterable[int]]] | None = None
    ) -> list[Alternative]:
        """Every enabled alternative, in a fixed deterministic order.

        ``nbh_choices`` supplies the candidate neighbour sets for Env11,
        either as a callable ``(state, p) -> sets`` or as a mapping from
        process id to sets.  ``None`` offers all subsets of the others.
        """
        out = []
        out.extend(self.env_alternatives(s, nbh_choices))
        out.extend(self.fair_alternatives(s))
        return out

    def env_alternatives(self, s: GlobalState, nbh_choices=None) -> list[Alternative]:
        u = s.universe
        out = []
        for i, p in enumerate(u.ids):
            pc = s.locals[i].pc
            if pc == 11:
                if nbh_choices is None:
                    choices = all_subsets_policy(s, p)
                elif callable(nbh_choices):
                    choices = nbh_choices(s, p)
                else:
                    choices = nbh_choices.get(p, [frozenset()])
                for c in choices:
                    out.append(_env11_cached(p, frozenset(c)))
            elif p in self.ae and pc in (12, 13, 14):
                a = Alternative(ENV_NAMES[pc - 11], p)
                if self.enabled(a, s):
                    out.append(a)
        return out

    def fair_alternatives(self, s: GlobalState) -> list[Alternative]:
        """Enabled forward and receive alternatives (the ones under weak fairness)."""
        u = s.universe
        n = u.n
        nn = n * n
        fwd, rcv = _alternative_table(u)
        chan = s.chan
        skip_wack = "skip_wack_wait_fwd12" in self.mutations
        skip_prio = "skip_fwd13_prio_guard" in self.mutations
        out = []
        for i, loc in enumerate(s.locals):
            pc = loc.pc
            if pc == 12:
                if not loc.wack or skip_wack:
                    out.append(fwd[i][12])
            elif pc == 13:
                if not loc.prio or skip_prio:
                    out.append(fwd[i][13])
            elif pc == 14:
                if not loc.need:
                    out.append(fwd[i][14])
            elif pc in (15, 16):
                out.append(fwd[i][pc])
            row = rcv[i]
            both = loc.after & loc.before
            promisable = loc.prom & ~loc.away
            if pc >= 15:
                promisable &= ~loc.nbh
            for j in range(n):
                base = j * n + i
                alts = row[j]
                if chan[NOTIFY * nn + base]:
                    out.append(alts[0])
                if chan[WITHDRAW * nn + base]:
                    out.append(alts[1])
                if both >> j & 1:
                    out.append(alts[2])
                if chan[ACK * nn + base]:
                    out.append(alts[3])
                if chan[REQ * nn + base]:
                    out.append(alts[4])
                if chan[GRA * nn + base]:
                    out.append(alts[5])
                if promisable >> j & 1:
                    out.append(alts[6])
        return out

    def successors(self, s: GlobalState, nbh_choices=None) -> list[tuple[Alternative, GlobalState]]:
        """``(alt, apply(alt, s))`` for every enabled alternative."""
        effect = self._effect
        return [(a, effect(a, s)) for a in self.enabled_alternatives(s, nbh_choices)]

    def is_silent(self, s: GlobalState) -> bool:
        return not self.fair_alternatives(s)


@functools.lru_cache(maxsize=4096)
def _env11_cached(p: int, nbh: frozenset[int]) -> Alternative:
    return Alternative("Env11", p, nbh=nbh)


_TABLES: dict[Universe, tuple] = {}


def _alternative_table(u: Universe):
    """Pre-built forward and receive alternatives, indexed by position."""
    table = _TABLES.get(u)
    if table is None:
        fwd = [{pc: Alternative(FWD_NAMES[pc - 12], p) for pc in range(12, 17)} for p in u.ids]
        rcv = [
            [tuple(Alternative(name, p, peer=q) for name in RCV_NAMES) for q in u.ids]
            for p in u.ids
        ]
        table = _TABLES[u] = (fwd, rcv)
    return table


DEFAULT = Protocol()


def enabled(a: Alternative, s: GlobalState, ae: Iterable[int] = frozenset()) -> bool:
    return Protocol(frozenset(ae)).enabled(a, s) if ae else DEFAULT.enabled(a, s)


def apply(a: Alternative, s: GlobalState, ae: Iterable[int] = frozenset()) -> GlobalState:
    return Protocol(frozenset(ae)).apply(a, s) if ae else DEFAULT.apply(a, s)


def enabled_alternatives(s: GlobalState, nbh_choices=None, ae: Iterable[int] = frozenset()) -> list[Alternative]:
    return Protocol(frozenset(ae)).enabled_alternatives(s, nbh_choices)


def conflict(p: int, q: int, s: GlobalState) -> bool:
    """``q in nbh.p and p in nbh.q``."""
    u = s.universe
    i, j = u.pos(p), u.pos(q)
    return bool(s.locals[i].nbh >> j & 1 and s.locals[j].nbh >> i & 1)


def channel_delta(before: GlobalState, after: GlobalState) -> tuple[list, list]:
    """Messages sent and received between two states, as (kind, q, r) triples."""
    u = before.universe
    n = u.n
    sent, received = [], []
    for idx, (x, y) in enumerate(zip(before.chan, after.chan)):
        if x == y:
            continue
        kind, rest = divmod(idx, n * n)
        src, dst = divmod(rest, n)
        msg = (MsgKind(kind), u.ids[src], u.ids[dst])
        if y > x:
            sent.extend([msg] * (y - x))
        else:
            received.extend([msg] * (x - y))
    return sent, received


def alternative_count(n: int) -> int:
    """Proper alternatives over ``n`` processes: 4 env + 5 forward each, 7 receive per ordered pair."""
    return 9 * n + 7 * n * (n - 1)
