import pytest

from pmx.core import (
    ACK, GRA, NOTIFY,
    Alternative, ConfigurationError, ContractViolation, DomainError, MsgKind, Protocol, Universe,
    alt, alternative_count, apply, channel_delta, conflict, enabled, enabled_alternatives,
    env11, full_nbh_policy, initial_state,
)
from conftest import FULL_RUN


def run_path(s, path, proto=Protocol()):
    for a in path:
        s = proto.apply(a, s)
    return s


class TestInitialState:
    def test_pair(self, s01):
        assert s01.pc(0) == s01.pc(1) == 11
        assert s01.forks(1, 0) == 1 and s01.forks(0, 1) == 0
        assert not any(s01.chan)

    def test_singleton(self):
        s = initial_state([5])
        assert s.pc(5) == 11 and s.universe.n == 1

    def test_three_processes_forks_sit_at_the_higher(self, s012):
        held = {(q, r) for q in (0, 1, 2) for r in (0, 1, 2) if q != r and s012.forks(q, r)}
        assert held == {(2, 0), (2, 1), (1, 0)}

    def test_all_sets_empty(self, s012):
        assert all(loc[1:] == (0,) * 8 for loc in s012.locals)

    def test_unsorted_universe_is_normalized(self):
        assert initial_state([2, 0, 1]) == initial_state([0, 1, 2])

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ConfigurationError):
            Universe([1, 1])


class TestEnabled:
    def test_initially_only_env11(self, s01):
        alts = enabled_alternatives(s01, full_nbh_policy)
        assert alts == [env11(0, {1}), env11(1, {0})]

    def test_fwd12_waits_for_acks(self, s01):
        s = s01.with_local(0, pc=12, wack={1})
        assert not enabled(alt("Fwd12", 0), s)
        assert enabled(alt("Fwd12", 0), s.with_local(0, wack=()))

    def test_prom_blocked_in_cs_for_neighbour(self, s01):
        s = s01.with_local(1, prom={0}, pc=15, nbh={0})
        assert not enabled(alt("Prom", 0, 1), s)
        assert enabled(alt("Prom", 0, 1), s.with_local(1, pc=14))
        assert enabled(alt("Prom", 0, 1), s.with_local(1, nbh=()))

    def test_positive_count_enables_receive(self, s01):
        s = s01.with_count("notify", 0, 1, 1)
        assert alt("RcvNotify", 0, 1) in enabled_alternatives(s, full_nbh_policy)

    def test_aborts_need_ae(self, s01):
        s = s01.with_local(0, pc=13, nbh={1})
        assert not enabled(alt("Env13", 0), s)
        assert enabled(alt("Env13", 0), s, ae={0})

    def test_env14_blocked_while_waiting_on_higher_fork(self, s01):
        s = s01.with_local(0, pc=14, nbh={1}, need={1})
        assert not enabled(alt("Env14", 0), s, ae={0})
        s = s01.with_local(1, pc=14, nbh={0}, need={0})
        assert enabled(alt("Env14", 1), s, ae={1})

    def test_unknown_process(self, s01):
        with pytest.raises(DomainError):
            enabled(alt("Fwd12", 7), s01)


class TestApply:
    def test_env11(self, s01):
        t = apply(env11(0, {1}), s01)
        assert t.set_of(0, "nbh") == {1} and t.pc(0) == 12
        assert t.locals[1] == s01.locals[1] and t.chan == s01.chan and t.fork == s01.fork

    def test_fwd12(self, s01):
        s = s01.with_local(0, pc=12, nbh={1})
        t = apply(alt("Fwd12", 0), s)
        assert t.count(NOTIFY, 0, 1) == 1 and t.set_of(0, "prio") == set() and t.pc(0) == 13

    def test_fwd12_prio_is_before_minus_after(self, s012):
        s = s012.with_local(0, pc=12, nbh={1, 2}, before={1, 2}, after={2})
        assert apply(alt("Fwd12", 0), s).set_of(0, "prio") == {1}

    def test_prom(self, s01):
        s = s01.with_local(1, prom={0}, pc=14, nbh={0})
        t = apply(alt("Prom", 0, 1), s)
        assert t.count(GRA, 1, 0) == 1 and t.forks(1, 0) == 0
        assert t.set_of(1, "away") == {0} and t.set_of(1, "prom") == set()
        assert 0 in t.set_of(1, "need")

    def test_prom_outside_entry_does_not_touch_need(self, s01):
        s = s01.with_local(1, prom={0})
        assert apply(alt("Prom", 0, 1), s).set_of(1, "need") == set()

    def test_disabled_alternative_raises(self, s01):
        with pytest.raises(ContractViolation):
            apply(alt("Fwd12", 0), s01)

    def test_full_two_process_run(self, s01):
        s = run_path(s01, FULL_RUN[:10])
        assert s.pc(0) == 11 and s.count(GRA, 0, 1) == 1
        s = run_path(s, FULL_RUN[10:])
        assert s.is_quiescent() and s.forks(1, 0) == 1 and s == s01

    def test_purity(self, s01):
        before = s01.key()
        apply(env11(0, {1}), s01)
        assert s01.key() == before


class TestAlternative:
    @pytest.mark.parametrize("text", ["Env11(0,{1,2})", "Env11(3,{})", "Fwd15(2)", "RcvGra(1,0)", "Prom(0,1)"])
    def test_round_trip(self, text):
        assert str(Alternative.parse(text)) == text

    def test_receive_renders_sender_first(self):
        a = alt("RcvNotify", 0, 1)
        assert a.proc == 1 and a.peer == 0 and str(a) == "RcvNotify(0,1)"

    def test_self_neighbour_rejected(self):
        with pytest.raises(DomainError):
            env11(0, {0})

    @pytest.mark.parametrize("text", ["Fwd99(0)", "Fwd12(0,1)", "RcvReq(1)", "nonsense"])
    def test_bad_text(self, text):
        with pytest.raises(DomainError):
            Alternative.parse(text)

    def test_slots(self):
        assert alt("Fwd12", 3).slot == alt("Fwd16", 3).slot
        assert alt("RcvReq", 0, 1).slot != alt("RcvReq", 1, 0).slot

    def test_alternative_count(self):
        assert alternative_count(2) == 32


def test_conflict(s01):
    s = s01.with_local(0, nbh={1}).with_local(1, nbh={0})
    assert conflict(0, 1, s) and conflict(1, 0, s)
    assert not conflict(0, 1, s.with_local(1, nbh=()))
    assert not conflict(0, 0, s01)


def test_channel_delta(s01):
    s = s01.with_local(0, pc=12, nbh={1})
    t = apply(alt("Fwd12", 0), s)
    assert channel_delta(s, t) == ([(NOTIFY, 0, 1)], [])
    assert channel_delta(t, apply(alt("RcvNotify", 0, 1), t)) == ([], [(NOTIFY, 0, 1)])


def test_msgkind_parse():
    assert MsgKind.parse("gra") is GRA and MsgKind.parse("ACK") is ACK
    with pytest.raises(DomainError):
        MsgKind.parse("ping")


def test_key_distinguishes_states(s01):
    assert s01.key() != apply(env11(0, {1}), s01).key()
    negative = s01.with_fork(0, 1, -1)
    assert negative.key() != s01.key()
