import pytest

from catalog import ASRV, ASRV_SCOPED, PHI6
from multirun.actors import (
    ActorAction,
    ActorConfig,
    ActorNode,
    Atom,
    Done,
    Ether,
    New,
    Pid,
    Receive,
    SNil,
    SPar,
    VarV,
    absent,
    actor_det,
    actor_ilts,
    actor_step,
    congruence_normalize,
    free_names,
    initial_state,
    match,
    par,
    parse_actor_file,
    parse_expr,
    parse_value,
    structurally_equivalent,
)
from multirun.analysis import reject
from multirun.semantics import explore, silent_confluence_failures, traces
from multirun.synthesis import synth
from multirun.syntax import ParseError, ext, internal, trace

REQ, ALLOC = Atom("req"), Atom("alloc")
T1 = trace("i?req ~k1:init ~k2:init j!ans k!alloc")
T2 = trace("i?req ~k1:init ~k2:init j!ans k!cls")
T3 = trace("i?req ~ncomm ~ncomm j!ans k!alloc")
T4 = trace("i?req ~ncomm ~ncomm j!ans k!cls")


def load(text, mailbox_bound=None):
    spec = parse_actor_file(text)
    return actor_ilts(spec.config, spec.inputs, mailbox_bound)


class TestMatch:
    def test_variable(self):
        assert match(VarV("X"), REQ) == {"X": REQ}

    def test_atom(self):
        assert match(REQ, REQ) == {}
        assert match(REQ, ALLOC) is None

    def test_tuple(self):
        assert match((VarV("X"), REQ), (ALLOC, REQ)) == {"X": ALLOC}
        assert match((VarV("X"), VarV("X")), (ALLOC, REQ)) is None
        assert match((VarV("X"),), (ALLOC, REQ)) is None

    def test_absent(self):
        assert not absent(REQ, (ALLOC, REQ))
        assert absent(REQ, (ALLOC,))
        assert absent(REQ, ())


class TestCongruence:
    A = ActorNode("i", Done())

    def test_nil_unit(self):
        assert congruence_normalize(SPar(self.A, SNil())) == congruence_normalize(self.A)

    def test_scope_swap(self):
        body = par(ActorNode("i", parse_expr("j!a", ["j"])), ActorNode("j", Done()))
        assert structurally_equivalent(New("i", New("j", body)), New("j", New("i", body)))

    def test_scope_extension(self):
        B = Ether(Pid("k"), Atom("x"))
        left = SPar(self.A, New("k", SPar(ActorNode("k", Done()), B)))
        right = New("k", SPar(self.A, SPar(ActorNode("k", Done()), B)))
        assert structurally_equivalent(left, right)

    def test_commutative(self):
        B = ActorNode("j", Done())
        assert structurally_equivalent(SPar(self.A, B), SPar(B, self.A))

    def test_different(self):
        assert not structurally_equivalent(ActorNode("i", Done()), ActorNode("i", Done(), (REQ,)))

    def test_alpha(self):
        left = New("x", ActorNode("x", Done()))
        right = New("y", ActorNode("y", Done()))
        assert structurally_equivalent(left, right)
        assert free_names(left) == frozenset()


class TestParsing:
    def test_expression_round_trip(self):
        e = parse_expr("rcv {req -> k1!init. j!ans, X -> done}", ["k1", "j"])
        assert isinstance(e, Receive) and len(e.branches) == 2

    def test_values(self):
        assert parse_value("{req, X, i}", ["i"]) == (REQ, VarV("X"), Pid("i"))

    def test_file(self):
        spec = parse_actor_file(ASRV)
        assert spec.inputs == {"i": (REQ,)}
        assert spec.config.observers == {"j", "k"}

    def test_bad_line(self):
        with pytest.raises(ParseError, match="line 2"):
            parse_actor_file("knowledge {i}\nbogus\n")


class TestServer:
    def test_traces(self):
        ilts, s0 = load(ASRV)
        ts = traces(ilts, s0, 5)
        assert T1 in ts and T2 in ts

    def test_always_receptive(self):
        ilts, s0 = load(ASRV)
        for _, s in ilts.step(s0):
            assert any(a == ext("i?req") for a, _ in ilts.step(s))

    def test_scoped_traces(self):
        ilts, s0 = load(ASRV_SCOPED)
        ts = traces(ilts, s0, 5)
        assert T3 in ts and T4 in ts
        assert T1 not in ts

    def test_rejection(self):
        m = synth(PHI6)
        assert reject(frozenset({T1, T2}), m, actor_det).rejected
        assert not reject(frozenset({T1}), m, actor_det).rejected

    def test_scoped_no_rejection(self):
        v = reject(frozenset({T3, T4}), synth(PHI6), actor_det, log=True)
        assert not v.rejected
        assert any("false, k!cls.no (+) k!alloc.no" in line for line in v.log)

    def test_mailbox_bound(self):
        ilts, s0 = load(ASRV, mailbox_bound=1)
        assert len(explore(ilts, s0, bound=1000)) == 164


class TestDeterminacy:
    def test_map(self):
        assert actor_det(ext("i?req")) and actor_det(ext("j!ans"))
        assert actor_det(internal("k1:init"))
        assert not actor_det(internal("ncomm"))
        assert not actor_det(ext("k!!n0"))

    def test_labels(self):
        assert ActorAction("comm", "k1", Atom("init")).to_action() == internal("k1:init")
        assert ActorAction("outbound", "k", Pid("n0")).to_action() == ext("k!!n0")

    def test_ncomm_nondeterministic(self):
        x = VarV("X")
        body = par(ActorNode("i", Receive(((x, parse_expr("j!X", ["j"])),))),
                   Ether(Pid("i"), Atom("v1")), Ether(Pid("i"), Atom("v2")))
        cfg = ActorConfig(frozenset({"j"}), frozenset({"j"}), New("i", body))
        steps = [s for a, s in actor_step(initial_state(cfg)) if a.kind == "ncomm"]
        assert len(steps) == 2 and steps[0] != steps[1]

    def test_double_extrusion(self):
        e1, e2 = parse_expr("k!a", ["k"]), parse_expr("k!b", ["k"])
        sys = par(New("i", par(ActorNode("i", e1), Ether(Pid("k"), Pid("i")))),
                  New("i", par(ActorNode("i", e2), Ether(Pid("k"), Pid("i")))))
        cfg = ActorConfig(frozenset({"k"}), frozenset({"k"}), sys)
        outs = [(a, s) for a, s in actor_step(initial_state(cfg)) if a.kind == "outbound"]
        assert len(outs) == 2
        assert outs[0][0] == outs[1][0]
        assert outs[0][1] != outs[1][1]

    def test_free_comm_deterministic(self):
        lts = explore(*load(ASRV, mailbox_bound=1))
        for state, out in lts.edges.items():
            by = {}
            for a, s in out:
                if actor_det(a) and not a.silent:
                    assert by.setdefault(a, s) == s

    def test_silent_confluence(self):
        ilts, s0 = load(ASRV, mailbox_bound=1)
        lts = explore(ilts, s0)
        assert silent_confluence_failures(ilts, lts) == []


def test_well_formedness_preserved():
    ilts, s0 = load(ASRV, mailbox_bound=2)
    lts = explore(ilts, s0)
    for s in lts.states:
        assert free_names(s.system()) <= s.knowledge
        ids = [c.pid for c in s.parts if isinstance(c, ActorNode)]
        assert len(ids) == len(set(ids))


def test_observers_must_be_known():
    with pytest.raises(ValueError):
        initial_state(ActorConfig(frozenset(), frozenset({"j"}), ActorNode("i", Done())))
