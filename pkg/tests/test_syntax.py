import random

import pytest
from hypothesis import given, settings, strategies as st

from catalog import M1, M5, PHI0, PHI4, PHI8
from multirun.generate import random_formula, random_monitor
from multirun.syntax import (
    TAU,
    Act,
    And,
    Box,
    End,
    Ff,
    Max,
    MVar,
    No,
    Or,
    ParAnd,
    ParOr,
    ParseError,
    Rec,
    Tt,
    Var,
    alpha_equiv,
    ext,
    free_vars,
    history,
    internal,
    is_guarded,
    parse_action,
    parse_formula,
    parse_monitor,
    substitute,
    to_text,
    trace,
    unfold,
)

a, c, r, s = (ext(x) for x in "acrs")


class TestActions:
    def test_kinds(self):
        assert parse_action("a") == ext("a")
        assert parse_action("~ut") == internal("ut")
        assert parse_action("tau") == TAU
        assert str(internal("ut")) == "~ut"

    def test_trace_and_history(self):
        assert trace("r s ~ut a") == (r, s, internal("ut"), a)
        assert trace("") == ()
        assert history("a", "a", "") == frozenset({(a,), ()})
        with pytest.raises(ValueError):
            trace("a tau")


class TestParseFormula:
    def test_conjunction_of_boxes(self):
        assert PHI0 == And(And(Box(s, Ff()), Box(a, Ff())), Box(c, Ff()))

    def test_tt(self):
        assert parse_formula("tt") == Tt()

    def test_recursive(self):
        body = And(Box(r, Box(s, Var("X"))), Or(Box(c, Ff()), Box(a, Ff())))
        assert PHI4 == Max("X", body)

    def test_precedence(self):
        assert parse_formula("[a]ff & [c]ff | tt") == Or(And(Box(a, Ff()), Box(c, Ff())), Tt())
        assert parse_formula("tt | ff & ff") == Or(Tt(), And(Ff(), Ff()))

    def test_fixpoint_extends_right(self):
        phi = parse_formula("max X.[a]X & ff")
        assert phi == Max("X", And(Box(a, Var("X")), Ff()))

    def test_unicode_spellings(self):
        assert parse_formula("[a]ff ∧ [c]ff ∨ tt") == parse_formula("[a]ff & [c]ff | tt")

    @pytest.mark.parametrize("text", ["max X.X", "max X.(X & [a]X)", "max X.max Y.X"])
    def test_unguarded_rejected(self, text):
        with pytest.raises(ParseError, match="unguarded"):
            parse_formula(text)

    def test_unbound_rejected(self):
        with pytest.raises(ParseError, match="unbound"):
            parse_formula("[a]X")

    def test_internal_modality_rejected(self):
        with pytest.raises(ParseError):
            parse_formula("[~ut]ff")

    def test_alphabet(self):
        assert parse_formula("[a]ff", alphabet=["a"]) == Box(a, Ff())
        with pytest.raises(ParseError, match="undeclared"):
            parse_formula("[b]ff", alphabet=["a"])

    def test_syntax_error_position(self):
        with pytest.raises(ParseError) as info:
            parse_formula("[a]ff &")
        assert info.value.pos == 7

    def test_structured_labels(self):
        phi = parse_formula("[i?req][j!ans]ff & [k!!n0]ff")
        assert phi.left == Box(ext("i?req"), Box(ext("j!ans"), Ff()))


class TestParseMonitor:
    def test_m1(self):
        body = ParAnd(Act(r, Act(s, MVar("X"))), ParOr(Act(a, No()), Act(c, No())))
        assert M1 == Rec("X", body)

    def test_end(self):
        assert parse_monitor("end") == End()

    def test_m5(self):
        assert M5 == Act(r, ParOr(Act(s, No()), Act(a, No())))

    def test_unguarded(self):
        with pytest.raises(ParseError):
            parse_monitor("rec X.(X (*) a.no)")

    def test_internal_prefix_rejected(self):
        with pytest.raises(ParseError):
            parse_monitor("~ut.no")


class TestSubstitution:
    def test_unfolding_by_hand(self):
        phi = substitute(PHI4.body, "X", PHI4)
        expected = And(Box(r, Box(s, PHI4)), Or(Box(c, Ff()), Box(a, Ff())))
        assert phi == expected

    def test_trivial(self):
        assert substitute(Tt(), "X", Ff()) == Tt()
        assert substitute(Var("X"), "X", Ff()) == Ff()

    def test_capture_avoided(self):
        phi = Max("Y", Box(a, And(Var("X"), Var("Y"))))
        out = substitute(phi, "X", Var("Y"))
        assert "Y" in free_vars(out)
        assert isinstance(out, Max) and out.var != "Y"

    def test_bound_variable_untouched(self):
        phi = Max("X", Box(a, Var("X")))
        assert substitute(phi, "X", Ff()) == phi


class TestUnfold:
    def test_monitor(self):
        m = parse_monitor("rec X.a.X")
        assert unfold(m) == Act(a, m)

    def test_phi8(self):
        expected = Or(Box(a, Ff()), And(Box(c, Ff()), Box(r, Box(s, PHI8))))
        assert unfold(PHI8) == expected

    def test_m1(self):
        expected = ParAnd(Act(r, Act(s, M1)), ParOr(Act(a, No()), Act(c, No())))
        assert unfold(M1) == expected

    def test_not_fixpoint(self):
        with pytest.raises(TypeError):
            unfold(Tt())


class TestAlpha:
    def test_renamed_binders(self):
        assert alpha_equiv(parse_formula("max X.[a]X"), parse_formula("max Y.[a]Y"))
        assert not alpha_equiv(parse_formula("max X.[a]X"), parse_formula("max Y.[c]Y"))

    def test_shadowing(self):
        left = parse_monitor("rec X.a.(rec X.b.X)")
        right = parse_monitor("rec X.a.(rec Y.b.Y)")
        assert alpha_equiv(left, right)
        assert not alpha_equiv(left, parse_monitor("rec X.a.(rec Y.b.X)"))


ACTS = (a, c, r)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**9), st.integers(1, 5))
def test_formula_round_trip(seed, depth):
    phi = random_formula(random.Random(seed), ACTS, depth)
    assert parse_formula(to_text(phi)) == phi


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**9), st.integers(1, 5))
def test_monitor_round_trip(seed, depth):
    m = random_monitor(random.Random(seed), ACTS, depth)
    assert parse_monitor(to_text(m)) == m


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**9))
def test_unfold_keeps_closed_and_guarded(seed):
    phi = random_formula(random.Random(seed), ACTS, 5)
    fixpoints = [t for t in _subterms(phi) if isinstance(t, Max) and not free_vars(t)]
    for fp in fixpoints:
        out = unfold(fp)
        assert not free_vars(out)
        assert is_guarded(out)


def _subterms(t):
    yield t
    for k in t.KIDS:
        yield from _subterms(getattr(t, k))
