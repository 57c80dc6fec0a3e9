import pytest

from catalog import P1, P2, P3, P4, PHI2, PHI4
from multirun.ccs import CcsIlts, Nil, PRec, Prefix, PVar, parse_process
from multirun.semantics import (
    BoundExceeded,
    Det,
    Lts,
    as_det,
    eval_formula,
    explore,
    satisfies,
    traces,
    weak_step,
    weak_traceable_step,
)
from multirun.syntax import TAU, ext, internal, parse_formula, trace

a, c, r, s = (ext(x) for x in "acrs")
CCS = CcsIlts()


class TestDet:
    def test_labels(self):
        d = Det(["r", "~ut"])
        assert d(r) and d(internal("ut"))
        assert not d(s) and not d(internal("uf"))

    def test_defaults(self):
        d = Det(internal_default=True)
        assert d(internal("x")) and not d(a)

    def test_as_det(self):
        assert not as_det(None)(a)
        assert as_det(["a"])(a)
        assert as_det(lambda x: True)(c)

    def test_hashable(self):
        assert Det(["a", "b"]) == Det(["b", "a"])
        assert len({Det(["a"]), Det(["a"])}) == 1


class TestWeakSteps:
    def test_p2_a(self):
        assert P2 in weak_step(CCS, P2, a)

    def test_nil(self):
        assert weak_step(CCS, Nil(), a) == set()

    def test_prefix(self):
        assert weak_step(CCS, Prefix(a, Nil()), a) == {Nil()}

    def test_p2_r(self):
        assert Prefix(s, P2) in weak_traceable_step(CCS, P2, r)

    def test_internal_not_skipped_by_traceable(self):
        assert weak_traceable_step(CCS, P2, a) == set()

    def test_deadlock(self):
        assert weak_traceable_step(CCS, parse_process("c.nil"), a) == set()

    def test_loop(self):
        p = PRec("X", Prefix(a, PVar("X")))
        assert any(CCS.equiv(q, p) for q in weak_traceable_step(CCS, p, a))

    def test_silent_rejected(self):
        with pytest.raises(ValueError):
            weak_traceable_step(CCS, P2, TAU)


class TestTraces:
    def test_p2(self):
        expected = {trace(x) for x in ["", "r", "r s", "r s ~ut", "r s ~ut a", "r s ~uf", "r s ~uf c"]}
        assert expected <= traces(CCS, P2, 4)

    def test_nil(self):
        assert traces(CCS, Nil(), 3) == {()}

    def test_p1(self):
        expected = {trace(x) for x in ["", "r", "r s", "a", "a a", "a r", "a c", "c"]}
        assert traces(CCS, P1, 2) == expected

    def test_bound(self):
        with pytest.raises(BoundExceeded):
            traces(CCS, P1, 8, bound=5)


class TestEval:
    def test_p1_violates_phi4(self):
        assert not satisfies(CCS, P1, PHI4)

    def test_constants(self):
        states = explore(CCS, P1).states
        assert eval_formula(CCS, P1, parse_formula("tt")) == states
        assert eval_formula(CCS, P1, parse_formula("ff")) == frozenset()

    def test_phi2(self):
        assert not satisfies(CCS, P3, PHI2)
        assert satisfies(CCS, P4, PHI2)

    def test_box_of_nil(self):
        assert satisfies(CCS, Nil(), parse_formula("[a]ff"))

    def test_box_sees_through_internal(self):
        assert not satisfies(CCS, parse_process("~u.a.nil"), parse_formula("[a]ff"))

    def test_p2_violates_phi4(self):
        assert not satisfies(CCS, P2, PHI4)

    def test_least_fixpoint(self):
        # reachability of c: min X.(<c>tt | <a>X)
        phi = parse_formula("min X.(<c>tt | <a>X)")
        assert satisfies(CCS, parse_process("a.a.c.nil"), phi)
        assert not satisfies(CCS, parse_process("rec X.a.X"), phi)

    def test_duality(self):
        lts = explore(CCS, P1)
        box = eval_formula(CCS, P1, parse_formula("[a][c]ff"))
        dia = eval_formula(CCS, P1, parse_formula("<a><c>tt"))
        assert box == lts.states - dia

    def test_explicit_lts(self):
        lts = Lts("p", {"p": [(a, "q")], "q": []})
        from multirun.semantics import evaluate
        assert evaluate(lts, parse_formula("[a]ff")) == {"q"}
