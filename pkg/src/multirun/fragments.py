"""Syntactic fragments of recHML and of monitors, and history lower bounds."""

from __future__ import annotations

import math
from typing import Callable, List, Optional, Set, Tuple, Union

from .syntax import (
    Act,
    Action,
    And,
    Box,
    Diamond,
    End,
    Ff,
    Formula,
    Max,
    Min,
    Monitor,
    MVar,
    No,
    Or,
    ParAnd,
    ParOr,
    Rec,
    Term,
    Tt,
    Var,
    canonical,
    unfold,
)

INFINITY = math.inf
BoundValue = Union[int, float]

DetFn = Callable[[Action], bool]


def is_shml(phi: Formula) -> bool:
    """Membership in the disjunction-free safety fragment."""
    if isinstance(phi, (Tt, Ff, Var)):
        return True
    if isinstance(phi, Box):
        return is_shml(phi.body)
    if isinstance(phi, And):
        return is_shml(phi.left) and is_shml(phi.right)
    if isinstance(phi, Max):
        return is_shml(phi.body)
    return False


def is_shml_or(phi: Formula) -> bool:
    """The safety grammar extended with disjunction (no diamonds, no least fixpoints)."""
    if isinstance(phi, (Tt, Ff, Var)):
        return True
    if isinstance(phi, (Box, Max)):
        return is_shml_or(phi.body)
    if isinstance(phi, (And, Or)):
        return is_shml_or(phi.left) and is_shml_or(phi.right)
    return False


class _Coinductive:
    """Greatest-fixpoint membership check: revisiting an assumption succeeds."""

    def __init__(self, det: DetFn, trace: Optional[List[Tuple[bool, Term]]] = None):
        self.det = det
        self.assumed: Set[Tuple[bool, Term]] = set()
        self.trace = trace

    def check(self, flag: bool, t: Term) -> bool:
        key = (flag, canonical(t))
        if key in self.assumed:
            return True
        self.assumed.add(key)
        if self.trace is not None:
            self.trace.append((flag, t))
        return self._rule(flag, t)

    def _rule(self, flag: bool, t: Term) -> bool:
        if isinstance(t, (Tt, Ff, Var, No, End, MVar)):
            return True
        if isinstance(t, (Box, Act)):
            return self.check(flag and self.det(t.act), t.body)
        if isinstance(t, (And, ParAnd)):
            return self.check(flag, t.left) and self.check(flag, t.right)
        if isinstance(t, (Or, ParOr)):
            return flag and self.check(flag, t.left) and self.check(flag, t.right)
        if isinstance(t, (Max, Rec)):
            return self.check(flag, unfold(t))
        return False


def in_shml_det(phi: Formula, det: DetFn, witness: Optional[list] = None) -> bool:
    """Whether ``phi`` belongs to the monitorable fragment for ``det``.

    Disjunctions are only allowed while every action above them is
    deterministic. If ``witness`` is a list it receives the visited
    (flag, formula) pairs, which form the coinductive witness on success."""
    if not is_shml_or(phi):
        return False
    return _Coinductive(det, witness).check(True, phi)


def in_mon_det(m: Monitor, det: DetFn) -> bool:
    """The monitor counterpart of :func:`in_shml_det`."""
    return _Coinductive(det).check(True, m)


def _disjuncts(phi: Formula) -> List[Formula]:
    if isinstance(phi, Or):
        return _disjuncts(phi.left) + _disjuncts(phi.right)
    return [phi]


def _guards(phi: Formula) -> Optional[Set[Action]]:
    """Leading box actions of a disjunct, or None when it is not a conjunction of boxes."""
    if isinstance(phi, Box):
        return {phi.act}
    if isinstance(phi, Tt):
        return set()
    if isinstance(phi, Max):
        return _guards(phi.body)
    if isinstance(phi, And):
        left, right = _guards(phi.left), _guards(phi.right)
        if left is None or right is None:
            return None
        return left | right
    return None


def in_shml_nf(phi: Formula) -> bool:
    """Normal form: the disjuncts of every disjunction are conjunctions of
    boxes whose leading actions are pairwise disjoint."""
    if isinstance(phi, (Tt, Ff, Var)):
        return True
    if isinstance(phi, Box):
        return in_shml_nf(phi.body)
    if isinstance(phi, And):
        return in_shml_nf(phi.left) and in_shml_nf(phi.right)
    if isinstance(phi, Max):
        return in_shml_nf(phi.body)
    if isinstance(phi, Or):
        seen: Set[Action] = set()
        for part in _disjuncts(phi):
            guards = _guards(part)
            if not guards or guards & seen:
                return False
            seen |= guards
            if not in_shml_nf(part):
                return False
        return True
    return False


def lb(phi: Formula) -> BoundValue:
    """Lower bound on the number of distinct traces needed to violate ``phi``.

    Returns ``math.inf`` for formulas that cannot be violated at all."""
    if isinstance(phi, Ff):
        return 0
    if isinstance(phi, (Tt, Var)):
        return INFINITY
    if isinstance(phi, (Box, Max)):
        return lb(phi.body)
    if isinstance(phi, And):
        return min(lb(phi.left), lb(phi.right))
    if isinstance(phi, Or):
        return lb(phi.left) + lb(phi.right) + 1
    raise ValueError(f"lower bounds are defined on the safety grammar only: {phi}")


def format_bound(value: BoundValue) -> str:
    return "inf" if value == INFINITY else str(int(value))
