import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from catalog import DET_RS, M5, PHI0, PHI1, PHI2, PHI4, PHI5, PHI8, PHI9, PHI10
from multirun.fragments import (
    format_bound,
    in_mon_det,
    in_shml_det,
    in_shml_nf,
    is_shml,
    is_shml_or,
    lb,
)
from multirun.generate import random_formula, random_nf_formula
from multirun.semantics import Det
from multirun.syntax import End, Ff, No, Tt, ext, parse_formula, parse_monitor


def test_shml():
    assert is_shml(PHI0)
    assert not is_shml(PHI1)
    assert is_shml(Tt())
    assert not is_shml(parse_formula("<a>tt"))
    assert not is_shml(parse_formula("min X.[a]X"))


def test_shml_or():
    assert is_shml_or(PHI1) and is_shml_or(PHI4)
    assert not is_shml_or(parse_formula("<a>ff"))


class TestShmlDet:
    def test_phi2_witness(self):
        witness = []
        assert in_shml_det(PHI2, Det(["r", "s", "a"]), witness)
        expected = {PHI2, PHI2.body, PHI2.body.left, PHI2.body.right, Ff()}
        assert set(witness) == {(True, x) for x in expected}

    def test_phi2_witness_with_nondeterministic_a(self):
        witness = []
        assert in_shml_det(PHI2, DET_RS, witness)
        assert (False, Ff()) in witness and len(witness) == 6

    def test_phi2_nondeterministic_r(self):
        assert not in_shml_det(PHI2, Det(["s"]))

    def test_ff(self):
        assert in_shml_det(Ff(), Det())

    def test_phi4(self):
        assert in_shml_det(PHI4, DET_RS)
        assert not in_shml_det(PHI4, Det(["s"]))

    def test_conjunctions_need_no_determinacy(self):
        assert in_shml_det(PHI0, Det())

    def test_phi10(self):
        assert in_shml_det(PHI10, Det(["r", "s", "a"]))
        assert not in_shml_det(PHI10, DET_RS)


def test_nf():
    assert not in_shml_nf(PHI9)
    for phi in (PHI2, PHI4, PHI8, Ff()):
        assert in_shml_nf(phi)
    assert not in_shml_nf(parse_formula("[a]ff | tt"))
    assert not in_shml_nf(parse_formula("[a]ff | ff"))
    assert not in_shml_nf(parse_formula("[a]ff | ([c]ff & [a]ff)"))
    assert in_shml_nf(parse_formula("[a]ff | ([c]ff & [r]ff)"))


class TestLowerBound:
    def test_examples(self):
        assert lb(PHI2) == lb(PHI4) == lb(PHI8) == 1
        assert lb(Ff()) == 0
        assert lb(PHI5) == 2

    def test_tt(self):
        assert lb(Tt()) == math.inf
        assert format_bound(lb(Tt())) == "inf"

    def test_conjunction_takes_minimum(self):
        assert lb(parse_formula("[a]tt & ([a]ff | [c]ff)")) == 1

    def test_recursion(self):
        assert lb(parse_formula("max X.[a]X")) == math.inf
        assert lb(parse_formula("max X.([a]X & [c]ff)")) == 0


class TestMonDet:
    def test_m5(self):
        assert in_mon_det(M5, Det(["r"]))
        assert not in_mon_det(M5, Det())

    def test_end(self):
        assert in_mon_det(End(), Det())
        assert in_mon_det(No(), Det())

    def test_conjunction(self):
        assert in_mon_det(parse_monitor("r.(s.no (*) a.no)"), Det())


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**9))
def test_nf_generator_in_fragment(seed):
    acts = [ext(x) for x in "abc"]
    phi = random_nf_formula(random.Random(seed), acts, 4)
    assert in_shml_nf(phi)
    assert is_shml_or(phi)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**9))
def test_det_fragment_contains_shml(seed):
    phi = random_formula(random.Random(seed), [ext(x) for x in "abc"], 4, disjunction=False)
    assert is_shml(phi)
    assert in_shml_det(phi, Det())
