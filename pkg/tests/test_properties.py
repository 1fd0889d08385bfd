from itertools import chain, combinations

from hypothesis import given, settings, strategies as st

from pmx.core import (
    ALL_NAMES, RCV_NAMES, Alternative, Protocol, initial_state,
)
from pmx.invariants import check_all, prio_acyclic
from pmx.sim import EnvPolicy, Event, Scenario, run

IDS = (0, 1, 2)
PROTO = Protocol(ae=frozenset({0, 2}))


def every_alternative(ids):
    """Brute-force list of all instantiated alternatives (Env11 over all subsets)."""
    out = []
    for p in ids:
        others = [q for q in ids if q != p]
        for nbh in chain.from_iterable(combinations(others, k) for k in range(len(others) + 1)):
            out.append(Alternative("Env11", p, nbh=frozenset(nbh)))
        for name in ALL_NAMES:
            if name == "Env11":
                continue
            if name in RCV_NAMES:
                out.extend(Alternative(name, p, peer=q) for q in others)
            else:
                out.append(Alternative(name, p))
    return out


ALL_ALTS = every_alternative(IDS)


@st.composite
def walks(draw, max_len=40):
    s = initial_state(IDS)
    states = [s]
    steps = []
    for _ in range(draw(st.integers(0, max_len))):
        options = PROTO.enabled_alternatives(s)
        a = draw(st.sampled_from(options))
        s = PROTO.apply(a, s)
        steps.append(a)
        states.append(s)
    return states, steps


@settings(max_examples=60, deadline=None)
@given(walks())
def test_walk_states_satisfy_catalog(walk):
    states, _ = walk
    for s in states:
        assert check_all(s) == []


@settings(max_examples=60, deadline=None)
@given(walks())
def test_enumeration_matches_brute_force(walk):
    for s in walk[0]:
        fast = set(PROTO.enabled_alternatives(s))
        slow = {a for a in ALL_ALTS if PROTO.enabled(a, s)}
        assert fast == slow


@settings(max_examples=60, deadline=None)
@given(walks())
def test_frame_and_purity(walk):
    states, steps = walk
    for s, a, t in zip(states, steps, states[1:]):
        assert PROTO.apply(a, s) == t  # deterministic, input untouched
        u = s.universe
        n = u.n
        i = u.pos(a.proc)
        for j in range(n):
            if j != i:
                assert s.locals[j] == t.locals[j]
        for idx, (x, y) in enumerate(zip(s.chan, t.chan)):
            if x != y:
                src, dst = divmod(idx % (n * n), n)
                assert i in (src, dst)
        for idx, (x, y) in enumerate(zip(s.fork, t.fork)):
            if x != y:
                assert idx // n == i, "only the actor's own fork entries change"


def brute_acyclic(nodes, edges):
    """Acyclic iff repeatedly removing a minimal element (no incoming edge) empties the set."""
    remaining = set(nodes)
    while remaining:
        minimal = [x for x in remaining if not any((y, x) in edges for y in remaining)]
        if not minimal:
            return False
        remaining.remove(minimal[0])
    return True


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 4).flatmap(
    lambda n: st.tuples(st.just(n), st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda e: e[0] != e[1])))
))
def test_prio_acyclic_matches_minimal_element_search(case):
    n, edges = case
    s = initial_state(range(n))
    for r in range(n):
        s = s.with_local(r, prio={q for q, rr in edges if rr == r})
    assert prio_acyclic(s) == brute_acyclic(range(n), edges)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**64 - 1), st.integers(2, 4))
def test_event_lines_round_trip(seed, n):
    tr = run(Scenario(universe=tuple(range(n)), env=EnvPolicy(0.5, "uniform", max_sessions=2),
                      seed=seed, max_steps=300, check_invariants=False))
    for e in tr.events:
        assert Event.parse(e.render()) == e


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from(["fair-round-robin", "random"]))
def test_no_policy_breaks_safety(seed, policy):
    tr = run(Scenario(universe=(0, 1, 2, 3), ae={1, 3}, env=EnvPolicy(0.5, "uniform", 0.2, 3),
                      policy=policy, seed=seed, max_steps=600))
    assert tr.violations == []
