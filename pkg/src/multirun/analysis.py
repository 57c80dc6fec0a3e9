"""Offline analysis of aggregated histories: the rejection proof system,
the violation relations over formulas and derivation trees."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterator, List, Optional, Tuple, Union

from .fragments import in_shml_nf, is_shml_or
from .syntax import (
    Act,
    Action,
    And,
    Box,
    Ff,
    Formula,
    History,
    Max,
    Monitor,
    No,
    Or,
    ParAnd,
    ParOr,
    Rec,
    Term,
    Trace,
    format_history,
    unfold,
)

DetFn = Callable[[Action], bool]


def sub(H: History, eta: Action) -> History:
    """Continuations of the traces of ``H`` that start with ``eta``."""
    return frozenset(t[1:] for t in H if t and t[0] == eta)


def start(H: History, a: Action) -> History:
    """Traces whose first external action is ``a``, after any internal prefix."""
    out = []
    for t in H:
        for x in t:
            if not x.internal:
                if x == a:
                    out.append(t)
                break
    return frozenset(out)


def internal_heads(H: History) -> List[Action]:
    return sorted({t[0] for t in H if t and t[0].internal})


# --------------------------------------------------------------------------
# Derivations
# --------------------------------------------------------------------------


@dataclass(slots=True)
class Derivation:
    """A proof tree node; built by the search and never mutated afterwards."""

    rule: str
    relation: str
    history: History
    flag: bool
    term: Term
    premises: Tuple["Derivation", ...] = ()

    def conclusion(self) -> str:
        return f"{self.relation}({format_history(self.history)}, {str(self.flag).lower()}, {self.term})"

    def lines(self, indent: int = 0) -> Iterator[str]:
        yield "  " * indent + f"{self.rule} {self.conclusion()}"
        for p in self.premises:
            yield from p.lines(indent + 1)

    def to_text(self) -> str:
        return "\n".join(self.lines())

    def rules(self) -> List[str]:
        """Rule names in pre-order."""
        out = [self.rule]
        for p in self.premises:
            out.extend(p.rules())
        return out

    def nodes(self) -> Iterator["Derivation"]:
        yield self
        for p in self.premises:
            yield from p.nodes()


@dataclass
class Verdict:
    rejected: bool
    derivation: Optional[Derivation] = None
    goals: int = 0
    log: List[str] = field(default_factory=list)


_MISSING = object()
_ACTIVE = object()


class _Search:
    """Depth-first backtracking over rule choices with memoisation."""

    relation = "rej"

    def __init__(self, det: DetFn, log: Optional[List[str]] = None):
        self.det = det
        self.memo: Dict[tuple, object] = {}
        self.goals = 0
        self.log = log

    def prove(self, H: History, flag: bool, t: Term) -> Optional[Derivation]:
        key = (H, flag, t)
        memo = self.memo
        got = memo.get(key, _MISSING)
        if got is not _MISSING:
            # a goal still in progress fails when met again
            return None if got is _ACTIVE else got
        self.goals += 1
        if not H:
            # no rule concludes anything about the empty history
            self._fail(H, flag, t, "empty history")
            memo[key] = None
            return None
        memo[key] = _ACTIVE
        out = self.rules(H, flag, t)
        memo[key] = out
        if out is None:
            self._fail(H, flag, t, "no rule applies")
        return out

    def _fail(self, H, flag, t, why):
        if self.log is not None:
            self.log.append(f"fail {self.relation}({format_history(H)}, {str(flag).lower()}, {t}) [{why}]")

    def node(self, rule, H, flag, t, *premises) -> Derivation:
        return Derivation(rule, self.relation, H, flag, t, tuple(premises))

    def rules(self, H: History, flag: bool, t: Term) -> Optional[Derivation]:
        raise NotImplementedError


class _Reject(_Search):
    def rules(self, H, flag, m):
        if isinstance(m, No):
            return self.node("no", H, flag, m)
        if isinstance(m, Act):
            p = self.prove(sub(H, m.act), flag and self.det(m.act), m.body)
            if p is not None:
                return self.node("act", H, flag, m, p)
            for iota in internal_heads(H):
                p = self.prove(sub(H, iota), flag and self.det(iota), m)
                if p is not None:
                    return self.node("actI", H, flag, m, p)
            return None
        if isinstance(m, ParAnd):
            p = self.prove(H, flag, m.left)
            if p is not None:
                return self.node("parAL", H, flag, m, p)
            p = self.prove(H, flag, m.right)
            if p is not None:
                return self.node("parAR", H, flag, m, p)
            return None
        if isinstance(m, ParOr):
            if not flag:
                return None
            left = self.prove(H, flag, m.left)
            if left is None:
                return None
            right = self.prove(H, flag, m.right)
            if right is None:
                return None
            return self.node("parO", H, flag, m, left, right)
        if isinstance(m, Rec):
            p = self.prove(H, flag, unfold(m))
            return None if p is None else self.node("rec", H, flag, m, p)
        return None


def reject(H: History, m: Monitor, det: DetFn, log: bool = False, flag: bool = True) -> Verdict:
    """Decide whether ``m`` rejects the history ``H``.

    With ``log`` set, failed proof obligations are recorded in ``Verdict.log``."""
    lines: Optional[List[str]] = [] if log else None
    s = _Reject(det, lines)
    d = s.prove(frozenset(H), flag, m)
    return Verdict(d is not None, d, s.goals, lines or [])


class _Violates(_Search):
    relation = "viol"

    def rules(self, H, flag, phi):
        if isinstance(phi, Ff):
            return self.node("vF", H, flag, phi)
        if isinstance(phi, Max):
            p = self.prove(H, flag, unfold(phi))
            return None if p is None else self.node("vMax", H, flag, phi, p)
        if isinstance(phi, And):
            p = self.prove(H, flag, phi.left)
            if p is not None:
                return self.node("vAndL", H, flag, phi, p)
            p = self.prove(H, flag, phi.right)
            return None if p is None else self.node("vAndR", H, flag, phi, p)
        if isinstance(phi, Or):
            return self.disjunction(H, flag, phi)
        if isinstance(phi, Box):
            p = self.prove(sub(H, phi.act), flag and self.det(phi.act), phi.body)
            if p is not None:
                return self.node(self.box_rule, H, flag, phi, p)
            for iota in internal_heads(H):
                p = self.prove(sub(H, iota), flag and self.det(iota), phi)
                if p is not None:
                    return self.node(self.box_pre_rule, H, flag, phi, p)
            return None
        return None

    box_rule = "vUm"
    box_pre_rule = "vUmPre"

    def disjunction(self, H, flag, phi):
        if not flag:
            return None
        left = self.prove(H, flag, phi.left)
        if left is None:
            return None
        right = self.prove(H, flag, phi.right)
        return None if right is None else self.node("vOr", H, flag, phi, left, right)


class _SepViolates(_Violates):
    relation = "sviol"

    def node(self, rule, H, flag, t, *premises):
        if rule.startswith("v"):
            rule = "s" + rule
        return super().node(rule, H, flag, t, *premises)

    def disjunction(self, H, flag, phi):
        if not flag:
            return None
        items = sorted(H, key=lambda t: (len(t), t))
        for mask in range(1, 2 ** len(items) - 1):
            H1 = frozenset(t for i, t in enumerate(items) if mask >> i & 1)
            H2 = frozenset(H) - H1
            left = self.prove(H1, flag, phi.left)
            if left is None:
                continue
            right = self.prove(H2, flag, phi.right)
            if right is not None:
                return self.node("svOr", H, flag, phi, left, right)
        return None


def violates_derivation(H: History, phi: Formula, det: DetFn, flag: bool = True) -> Optional[Derivation]:
    if not is_shml_or(phi):
        raise ValueError(f"violation is defined on the safety grammar with disjunction: {phi}")
    return _Violates(det).prove(frozenset(H), flag, phi)


def violates(H: History, phi: Formula, det: DetFn, flag: bool = True) -> bool:
    """Whether ``H`` is enough evidence that ``phi`` is violated."""
    return violates_derivation(H, phi, det, flag) is not None


def sep_violates_derivation(H: History, phi: Formula, det: DetFn, flag: bool = True) -> Optional[Derivation]:
    if not in_shml_nf(phi):
        raise ValueError(f"separation violation needs a formula in normal form: {phi}")
    return _SepViolates(det).prove(frozenset(H), flag, phi)


def sep_violates(H: History, phi: Formula, det: DetFn, flag: bool = True) -> bool:
    """Violation where each disjunct must be refuted by its own part of ``H``."""
    return sep_violates_derivation(H, phi, det, flag) is not None


# --------------------------------------------------------------------------
# Derivation checking
# --------------------------------------------------------------------------


def validate_derivation(d: Derivation, det: DetFn) -> bool:
    """Check that every node instantiates its rule with the side conditions met."""
    try:
        _check(d, det)
    except AssertionError:
        return False
    return True


def _premise(d: Derivation, i: int) -> Derivation:
    assert len(d.premises) > i
    return d.premises[i]


def _check(d: Derivation, det: DetFn) -> None:
    H, b, t, r = d.history, d.flag, d.term, d.rule
    for p in d.premises:
        assert p.relation == d.relation
    if r in ("no", "vF", "svF"):
        assert H and isinstance(t, (No, Ff)) and not d.premises
        return
    if r in ("act", "vUm", "svUm"):
        p = _premise(d, 0)
        assert isinstance(t, (Act, Box)) and len(d.premises) == 1
        assert p.history == sub(H, t.act) and p.flag == (b and det(t.act)) and p.term == t.body
    elif r in ("actI", "actPre", "vUmPre", "svUmPre"):
        p = _premise(d, 0)
        assert isinstance(t, (Act, Box)) and len(d.premises) == 1 and p.term == t
        heads = [x for x in internal_heads(H) if sub(H, x) == p.history and p.flag == (b and det(x))]
        assert heads
    elif r in ("parAL", "parAR", "vAndL", "vAndR", "svAndL", "svAndR"):
        p = _premise(d, 0)
        assert isinstance(t, (ParAnd, And)) and len(d.premises) == 1
        side = t.left if r.endswith("L") else t.right
        assert p.history == H and p.flag == b and p.term == side
    elif r in ("parO", "vOr", "svOr"):
        assert isinstance(t, (ParOr, Or)) and b and len(d.premises) == 2
        left, right = d.premises
        assert left.term == t.left and right.term == t.right and left.flag and right.flag
        if r == "svOr":
            assert not (left.history & right.history) and left.history | right.history == H
        else:
            assert left.history == H and right.history == H
    elif r in ("rec", "vMax", "svMax"):
        p = _premise(d, 0)
        assert isinstance(t, (Rec, Max)) and len(d.premises) == 1
        assert p.history == H and p.flag == b and p.term == unfold(t)
    else:
        raise AssertionError(f"unknown rule {r}")
    for p in d.premises:
        _check(p, det)
