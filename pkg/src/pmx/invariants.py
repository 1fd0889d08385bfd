"""Executable invariant catalog over concrete protocol states.

Every predicate is universally quantified over the (finite) universe.
Free variables are named ``q`` and ``r`` as in the catalog; a failing
instantiation yields one ``Violation`` whose witnesses are those ids.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator

from .core import ACK, GRA, NOTIFY, REQ, WITHDRAW, GlobalState, MsgKind, bits

MAX_WITNESSES = 100

CATALOG: tuple[str, ...] = (
    "PMX",
    "Iq0", "Iq1", "Iq2", "Iq3", "Iq4", "Iq5", "Iq6", "Iq7", "Iq8", "Iq9",
    "Jq0", "Jq1", "Jq2", "Jq3", "Jq4", "Jq5", "Jq6",
    "Kq0", "Kq1", "Kq2", "Kq3", "Kq4", "Kq5", "Kq6", "Kq7", "Kq8",
    "Lq0", "Lq1", "Lq2",
    "Mq0", "Mq1",
    "ChanBound",
)


@dataclass(frozen=True)
class Violation:
    invariant: str
    witnesses: tuple[int, ...]
    detail: str

    def render(self) -> str:
        names = ("q", "r")
        ws = " ".join(f"{names[k] if k < 2 else f'x{k}'}={w}" for k, w in enumerate(self.witnesses))
        head = f"{self.invariant} {ws}" if ws else self.invariant
        return f"{head}: {self.detail}"

    __str__ = render


_PAIR_CACHE: dict[int, list[tuple[int, int, int, int]]] = {}


def _pair_list(n: int) -> list[tuple[int, int, int, int]]:
    pairs = _PAIR_CACHE.get(n)
    if pairs is None:
        pairs = [(q, r, q * n + r, r * n + q) for q in range(n) for r in range(n)]
        _PAIR_CACHE[n] = pairs
    return pairs


class _View:
    """Position-level view of a state shared by the predicates below.

    ``req``, ``gra``, ... are the per-kind channel slices indexed by
    ``q * n + r``; ``pairs`` lists ``(q, r, q*n+r, r*n+q)``.
    """

    __slots__ = ("s", "n", "ids", "L", "chan", "fork", "pairs",
                 "req", "gra", "notify", "withdraw", "ack")

    def __init__(self, s: GlobalState):
        self.s = s
        n = self.n = s.universe.n
        self.ids = s.universe.ids
        self.L = s.locals
        self.chan = s.chan
        self.fork = s.fork
        self.pairs = _pair_list(n)
        nn = n * n
        c = s.chan
        self.req = c[REQ * nn:(REQ + 1) * nn]
        self.gra = c[GRA * nn:(GRA + 1) * nn]
        self.notify = c[NOTIFY * nn:(NOTIFY + 1) * nn]
        self.withdraw = c[WITHDRAW * nn:(WITHDRAW + 1) * nn]
        self.ack = c[ACK * nn:(ACK + 1) * nn]

    def m(self, kind: int, q: int, r: int) -> int:
        return self.chan[(kind * self.n + q) * self.n + r]

    def f(self, q: int, r: int) -> int:
        return self.fork[q * self.n + r]


def _has(mask: int, j: int) -> bool:
    return bool(mask >> j & 1)


# Each checker yields (witness positions, detail) for failing instantiations.
# Cheap whole-state prechecks short-circuit the common all-clear case.

def _pmx(v):
    L = v.L
    for q, r, qr, rq in v.pairs:
        if q < r and L[q].pc == 15 and L[r].pc == 15 and L[q].nbh >> r & 1 and L[r].nbh >> q & 1:
            yield (q, r), "conflicting processes both in CS"


def _iq0(v):
    for q, loc in enumerate(v.L):
        if not loc.nbh:
            continue
        if loc.nbh >> q & 1:
            yield (q, q), "process is its own neighbour"
        if loc.pc < 12:
            for r in bits(loc.nbh):
                yield (q, r), f"nbh non-empty at pc={loc.pc}"


def _iq1(v):
    f = v.fork
    for q, r, qr, rq in v.pairs:
        if q < r and f[qr] + f[rq] > 1:
            yield (q, r), f"fork.q.r + fork.r.q = {f[qr] + f[rq]}"


def _iq2(v):
    n, f = v.n, v.fork
    for q, loc in enumerate(v.L):
        if loc.pc >= 15:
            for r in bits(loc.nbh):
                if f[q * n + r] <= 0:
                    yield (q, r), f"pc={loc.pc}, neighbour fork missing"


def _iq3(v):
    L, f = v.L, v.fork
    for q, r, qr, rq in v.pairs:
        lhs = bool(L[r].away >> q & 1)
        rhs = q < r and f[rq] == 0
        if lhs != rhs:
            yield (q, r), f"q in away.r is {lhs} but (q<r and fork.r.q=0) is {rhs}"


def _iq4(v):
    f, g = v.fork, v.gra
    for q, r, qr, rq in v.pairs:
        if q < r:
            total = f[qr] + f[rq] + g[qr] + g[rq]
            if total != 1:
                yield (q, r), f"edge holds {total} forks"


def _iq5(v):
    n, f = v.n, v.fork
    for q, loc in enumerate(v.L):
        if loc.pc >= 14:
            for r in bits(loc.nbh & ~loc.need):
                if f[q * n + r] <= 0:
                    yield (q, r), "neighbour neither needed nor held"


def _iq6(v):
    for q, loc in enumerate(v.L):
        if loc.need:
            for r in bits(loc.need):
                if loc.pc != 14 or not loc.nbh >> r & 1:
                    yield (q, r), f"r in need.q with pc={loc.pc}, r in nbh.q={_has(loc.nbh, r)}"


def _iq7(v):
    f = v.fork
    if min(f) >= 0:
        return
    for q, r, qr, rq in v.pairs:
        if q != r and f[qr] < 0:
            yield (q, r), f"fork.q.r = {f[qr]}"


def _iq8(v):
    for r, loc in enumerate(v.L):
        for q in bits(loc.prom):
            if not q < r:
                yield (q, r), "promise to a process that is not lower"


def _iq9(v):
    req = v.req
    if not any(req):
        return
    for q, r, qr, rq in v.pairs:
        if req[qr] > 0 and not q < r:
            yield (q, r), "req sent to a process that is not higher"


def _jq0(v):
    for q, loc in enumerate(v.L):
        if not 11 <= loc.pc <= 16:
            yield (q,), f"pc={loc.pc}"


def _jq1(v):
    L, req, gra = v.L, v.req, v.gra
    for q, r, qr, rq in v.pairs:
        if q < r and L[q].need >> r & 1 and req[qr] == 0 and gra[rq] == 0 and not L[r].prom >> q & 1:
            yield (q, r), "need without req, gra or promise"


def _jq2(v):
    n, f = v.n, v.fork
    for q, loc in enumerate(v.L):
        for r in bits(loc.need):
            if f[q * n + r] != 0:
                yield (q, r), f"needed fork already held (fork.q.r={f[q * n + r]})"


def _jq3(v):
    L, f, gra = v.L, v.fork, v.gra
    for q, r, qr, rq in v.pairs:
        if q < r and f[qr] + gra[rq] > 0 and not (L[q].pc >= 14 and L[q].nbh >> r & 1):
            yield (q, r), f"lower process holds or receives fork at pc={L[q].pc}"


def _jq4(v):
    n, L, req, gra = v.n, v.L, v.req, v.gra
    for r, loc in enumerate(L):
        for q in bits(loc.prom):
            if not (L[q].need >> r & 1 and req[q * n + r] == 0 and gra[r * n + q] == 0):
                yield (q, r), "promise without matching need, or with req/gra in transit"


def _jq5(v):
    L, req, gra = v.L, v.req, v.gra
    if not any(req):
        return
    for q, r, qr, rq in v.pairs:
        if req[qr] > 0 and not (L[q].need >> r & 1 and gra[rq] == 0):
            yield (q, r), "req in transit without need, or with gra in transit"


def _jq6(v):
    req = v.req
    if max(req) <= 1:
        return
    for q, r, qr, rq in v.pairs:
        if req[qr] > 1:
            yield (q, r), f"req.q.r = {req[qr]}"


def _kq0(v):
    L, wd, ack = v.L, v.withdraw, v.ack
    for q, r, qr, rq in v.pairs:
        lhs = wd[qr] + ack[rq] + (L[r].after >> q & 1)
        rhs = L[q].wack >> r & 1
        if lhs != rhs:
            yield (q, r), f"withdraw.q.r + ack.r.q + [q in after.r] = {lhs}, [r in wack.q] = {rhs}"


def _kq1(v):
    n, notify = v.n, v.notify
    for r, loc in enumerate(v.L):
        for q in bits(loc.after & ~loc.before):
            if notify[q * n + r] <= 0:
                yield (q, r), "after without notify in transit or recorded"


def _kq2(v):
    for q, loc in enumerate(v.L):
        if loc.wack and loc.pc in (13, 14):
            yield (q,), f"wack non-empty at pc={loc.pc}"


def _kq3(v):
    L, wd, notify = v.L, v.withdraw, v.notify
    if not any(wd):
        return
    for q, r, qr, rq in v.pairs:
        if wd[qr] > 0 and notify[qr] == 0 and not L[r].before >> q & 1:
            yield (q, r), "withdraw in transit, notify neither in transit nor recorded"


def _kq4(v):
    n, L, notify = v.n, v.L, v.notify
    for q, loc in enumerate(L):
        if loc.pc in (13, 14):
            for r in bits(loc.nbh):
                if notify[q * n + r] == 0 and not L[r].before >> q & 1:
                    yield (q, r), "notify neither in transit nor recorded"


def _kq5(v):
    n, L, wd = v.n, v.L, v.withdraw
    for r, loc in enumerate(L):
        for q in bits(loc.before & ~loc.after):
            if wd[q * n + r] == 0 and not (L[q].pc in (13, 14) and L[q].nbh >> r & 1):
                yield (q, r), f"stale notification (pc.q={L[q].pc})"


def _kq6(v):
    L, wd, notify = v.L, v.withdraw, v.notify
    if not any(notify):
        return
    for q, r, qr, rq in v.pairs:
        if notify[qr] > 0 and wd[qr] == 0 and not L[r].after >> q & 1:
            if not (L[q].pc in (13, 14) and L[q].nbh >> r & 1):
                yield (q, r), f"notify in transit from a process at pc={L[q].pc}"


def _kq7(v):
    n, notify = v.n, v.notify
    for r, loc in enumerate(v.L):
        for q in bits(loc.before):
            if notify[q * n + r] != 0:
                yield (q, r), "notify recorded and still in transit"


def _kq8(v):
    notify = v.notify
    if max(notify) <= 1:
        return
    for q, r, qr, rq in v.pairs:
        if notify[qr] > 1:
            yield (q, r), f"notify.q.r = {notify[qr]}"


def _lq0(v):
    if not any(loc.prio for loc in v.L):
        return
    cycle = find_prio_cycle(v.s)
    if cycle:
        pos = {p: i for i, p in enumerate(v.ids)}
        yield tuple(pos[p] for p in cycle), "prio relation has a cycle " + "->".join(map(str, cycle + [cycle[0]]))


def _lq1(v):
    n, L, wd = v.n, v.L, v.withdraw
    for r, loc in enumerate(L):
        for q in bits(loc.prio):
            if wd[q * n + r] == 0 and L[q].pc < 13:
                yield (q, r), f"prio entry for process at pc={L[q].pc} with no withdraw in transit"


def _lq2(v):
    for q, loc in enumerate(v.L):
        extra = loc.prio & ~(loc.before & ~loc.after)
        for r in bits(extra):
            yield (q, r), "prio.q not within before.q minus after.q"


def _mq0(v):
    n, gra = v.n, v.gra
    for q in range(n):
        if gra[q * n + q] != 0:
            yield (q, q), f"gra.q.q = {gra[q * n + q]}"


def _mq1(v):
    for q, loc in enumerate(v.L):
        for r in bits(loc.prio):
            if loc.pc != 13 or not loc.nbh >> r & 1:
                yield (q, r), f"r in prio.q with pc={loc.pc}, r in nbh.q={_has(loc.nbh, r)}"


def _chanbound(v):
    if max(v.chan) <= 1:
        return
    nn = v.n * v.n
    for kind in MsgKind:
        for q, r, qr, rq in v.pairs:
            c = v.chan[kind * nn + qr]
            if c > 1:
                yield (q, r), f"{kind.label}.q.r = {c}"


_CHECKERS: dict[str, Callable[[_View], Iterator]] = {
    "PMX": _pmx,
    "Iq0": _iq0, "Iq1": _iq1, "Iq2": _iq2, "Iq3": _iq3, "Iq4": _iq4,
    "Iq5": _iq5, "Iq6": _iq6, "Iq7": _iq7, "Iq8": _iq8, "Iq9": _iq9,
    "Jq0": _jq0, "Jq1": _jq1, "Jq2": _jq2, "Jq3": _jq3, "Jq4": _jq4, "Jq5": _jq5, "Jq6": _jq6,
    "Kq0": _kq0, "Kq1": _kq1, "Kq2": _kq2, "Kq3": _kq3, "Kq4": _kq4,
    "Kq5": _kq5, "Kq6": _kq6, "Kq7": _kq7, "Kq8": _kq8,
    "Lq0": _lq0, "Lq1": _lq1, "Lq2": _lq2,
    "Mq0": _mq0, "Mq1": _mq1,
    "ChanBound": _chanbound,
}
assert tuple(_CHECKERS) == CATALOG


def _collect(label: str, v: _View) -> list[Violation]:
    out = []
    for wit, detail in _CHECKERS[label](v):
        out.append(Violation(label, tuple(v.ids[i] for i in wit), detail))
        if len(out) >= MAX_WITNESSES:
            break
    return out


def check(inv: str, s: GlobalState) -> list[Violation]:
    """Violations of one catalog invariant (empty iff it holds)."""
    if inv not in _CHECKERS:
        raise KeyError(f"unknown invariant {inv!r}; known: {', '.join(CATALOG)}")
    return _collect(inv, _View(s))


def check_all(s: GlobalState) -> list[Violation]:
    v = _View(s)
    out = []
    for label in CATALOG:
        out.extend(_collect(label, v))
    return out


def holds_all(s: GlobalState) -> bool:
    v = _View(s)
    for label in CATALOG:
        for _ in _CHECKERS[label](v):
            return False
    return True


def failing(s: GlobalState) -> list[str]:
    """Labels of the invariants violated in ``s``."""
    v = _View(s)
    return [label for label in CATALOG if next(_CHECKERS[label](v), None) is not None]


# ---------------------------------------------------------------------------
# the prio relation

def prio_relation(s: GlobalState) -> set[tuple[int, int]]:
    """Pairs (q, r) with q in prio.r, as process ids."""
    u = s.universe
    return {(u.ids[q], u.ids[r]) for r, loc in enumerate(s.locals) for q in bits(loc.prio)}


def find_prio_cycle(s: GlobalState) -> list[int] | None:
    """A cycle of the prio relation as a list of ids, or None if acyclic."""
    succ: dict[int, list[int]] = {}
    for q, r in sorted(prio_relation(s)):
        succ.setdefault(q, []).append(r)
    WHITE, GREY, BLACK = 0, 1, 2
    colour = {p: WHITE for p in s.universe.ids}
    for root in s.universe.ids:
        if colour[root] != WHITE:
            continue
        stack = [(root, iter(succ.get(root, ())))]
        path = [root]
        colour[root] = GREY
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                colour[node] = BLACK
                stack.pop()
                path.pop()
            elif colour[nxt] == GREY:
                return path[path.index(nxt):]
            elif colour[nxt] == WHITE:
                colour[nxt] = GREY
                stack.append((nxt, iter(succ.get(nxt, ()))))
                path.append(nxt)
    return None


def prio_acyclic(s: GlobalState) -> bool:
    """Well-foundedness of the prio relation (finite universe: acyclicity)."""
    return find_prio_cycle(s) is None
