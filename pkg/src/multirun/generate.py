"""Random and exhaustive generators for systems, formulas, monitors and histories."""

from __future__ import annotations

import itertools
import random
from typing import Iterator, List, Optional, Sequence, Set, Tuple

from .ccs import CcsIlts, Nil, PRec, Prefix, Process, PVar, Sum
from .semantics import BoundExceeded, explore
from .syntax import (
    Act,
    Action,
    And,
    Box,
    End,
    Ff,
    Formula,
    Max,
    Monitor,
    MVar,
    No,
    Or,
    ParAnd,
    ParOr,
    Rec,
    Trace,
    Tt,
    Var,
    ext,
    free_vars,
    internal,
)


def _sum(parts: List[Process]) -> Process:
    if not parts:
        return Nil()
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Sum(p, out)
    return out


def random_process(rng: random.Random, actions: Sequence[Action], depth: int = 3,
                   rec_prob: float = 0.3, _vars: Tuple[str, ...] = ()) -> Process:
    """A closed guarded process in which recursion is never a summand.

    Choices only combine prefixed terms, which keeps silent steps confluent."""
    roll = rng.random()
    if depth <= 0 or roll < 0.12:
        return Nil()
    if roll < 0.12 + rec_prob:
        var = f"X{len(_vars)}"
        body = _guarded_sum(rng, actions, depth, rec_prob, _vars + (var,), force=True)
        return PRec(var, body)
    return _guarded_sum(rng, actions, depth, rec_prob, _vars)


def _guarded_sum(rng, actions, depth, rec_prob, vars_, force=False) -> Process:
    n = rng.choice([1, 1, 2, 2, 3])
    parts = []
    for _ in range(n):
        a = rng.choice(actions)
        if vars_ and rng.random() < (0.45 if force else 0.25):
            body: Process = PVar(rng.choice(vars_))
        else:
            body = random_process(rng, actions, depth - 1, rec_prob, vars_)
        parts.append(Prefix(a, body))
    return _sum(parts)


def random_small_process(rng: random.Random, actions: Sequence[Action], max_states: int,
                         depth: int = 3, tries: int = 200) -> Process:
    """Retry :func:`random_process` until the state space has at most ``max_states`` states."""
    for _ in range(tries):
        p = random_process(rng, actions, depth)
        try:
            if len(explore(CcsIlts(), p, max_states)) <= max_states:
                return p
        except BoundExceeded:
            continue
    return Nil()


def deterministic_actions(p: Process, ilts: Optional[CcsIlts] = None) -> Set[Action]:
    """Traceable actions that never branch to two syntactically different states."""
    ilts = ilts or CcsIlts()
    lts = explore(ilts, p)
    seen: Set[Action] = set()
    bad: Set[Action] = set()
    for _, out in lts.edges.items():
        by: dict = {}
        for a, q in out:
            if a.silent:
                continue
            seen.add(a)
            if a in by and not ilts.equiv(by[a], q):
                bad.add(a)
            by.setdefault(a, q)
    return seen - bad


def random_formula(rng: random.Random, actions: Sequence[Action], depth: int,
                   disjunction: bool = True, _vars: Tuple[str, ...] = (),
                   _guarded: Tuple[str, ...] = ()) -> Formula:
    """A closed guarded formula of the safety grammar (optionally with disjunction)."""
    leaves: List[Formula] = [Tt(), Ff(), Ff()] + [Var(x) for x in _guarded]
    if depth <= 1:
        return rng.choice(leaves)
    kinds = ["leaf", "box", "box", "and", "max"] + (["or", "or"] if disjunction else [])
    kind = rng.choice(kinds)
    if kind == "leaf":
        return rng.choice(leaves)
    if kind == "box":
        return Box(rng.choice(actions), random_formula(rng, actions, depth - 1, disjunction, _vars, _vars))
    if kind in ("and", "or"):
        left = random_formula(rng, actions, depth - 1, disjunction, _vars, _guarded)
        right = random_formula(rng, actions, depth - 1, disjunction, _vars, _guarded)
        return And(left, right) if kind == "and" else Or(left, right)
    var = f"X{len(_vars)}"
    return Max(var, random_formula(rng, actions, depth - 1, disjunction, _vars + (var,), _guarded))


def random_nf_formula(rng: random.Random, actions: Sequence[Action], depth: int,
                      max_disjunctions: int = 2, _vars: Tuple[str, ...] = (),
                      _guarded: Tuple[str, ...] = (), _budget: Optional[List[int]] = None) -> Formula:
    """A formula in the normal form with at most ``max_disjunctions`` choice nodes."""
    budget = _budget if _budget is not None else [max_disjunctions]
    leaves: List[Formula] = [Tt(), Ff(), Ff()] + [Var(x) for x in _guarded]
    if depth <= 1:
        return rng.choice(leaves)
    kind = rng.choice(["leaf", "box", "box", "and", "max", "or", "or"])
    if kind == "or" and budget[0] > 0 and len(actions) >= 2:
        budget[0] -= 1
        k = rng.choice([2, 2, 3]) if len(actions) >= 3 else 2
        acts = rng.sample(list(actions), len(actions))
        spare = acts[k:]
        boxes: List[Formula] = []
        for a in acts[:k]:
            box: Formula = Box(a, random_nf_formula(rng, actions, depth - 1, max_disjunctions, _vars, _vars, budget))
            if spare and rng.random() < 0.3:
                extra = Box(spare.pop(), random_nf_formula(rng, actions, depth - 1, max_disjunctions,
                                                           _vars, _vars, budget))
                box = And(box, extra)
            boxes.append(box)
        out = boxes[-1]
        for b in reversed(boxes[:-1]):
            out = Or(b, out)
        return out
    if kind in ("leaf", "or"):
        return rng.choice(leaves)
    if kind == "box":
        return Box(rng.choice(actions), random_nf_formula(rng, actions, depth - 1, max_disjunctions, _vars, _vars, budget))
    if kind == "and":
        return And(random_nf_formula(rng, actions, depth - 1, max_disjunctions, _vars, _guarded, budget),
                   random_nf_formula(rng, actions, depth - 1, max_disjunctions, _vars, _guarded, budget))
    var = f"X{len(_vars)}"
    return Max(var, random_nf_formula(rng, actions, depth - 1, max_disjunctions, _vars + (var,), _guarded, budget))


def count_disjunctions(phi: Formula) -> int:
    """Number of maximal disjunction blocks."""
    if isinstance(phi, Or):
        parts = _or_leaves(phi)
        return 1 + sum(count_disjunctions(p) for p in parts)
    return sum(count_disjunctions(getattr(phi, k)) for k in phi.KIDS)


def _or_leaves(phi: Formula) -> List[Formula]:
    if isinstance(phi, Or):
        return _or_leaves(phi.left) + _or_leaves(phi.right)
    return [phi]


def random_monitor(rng: random.Random, actions: Sequence[Action], depth: int,
                   _vars: Tuple[str, ...] = (), _guarded: Tuple[str, ...] = ()) -> Monitor:
    """A closed guarded monitor over ``actions``."""
    leaves: List[Monitor] = [No(), End()] + [MVar(x) for x in _guarded]
    if depth <= 1:
        return rng.choice(leaves)
    kind = rng.choice(["leaf", "act", "act", "and", "or", "rec"])
    if kind == "leaf":
        return rng.choice(leaves)
    if kind == "act":
        return Act(rng.choice(actions), random_monitor(rng, actions, depth - 1, _vars, _vars))
    if kind in ("and", "or"):
        left = random_monitor(rng, actions, depth - 1, _vars, _guarded)
        right = random_monitor(rng, actions, depth - 1, _vars, _guarded)
        return ParAnd(left, right) if kind == "and" else ParOr(left, right)
    var = f"Y{len(_vars)}"
    return Rec(var, random_monitor(rng, actions, depth - 1, _vars + (var,), _guarded))


def all_traces(alphabet: Sequence[Action], max_len: int) -> List[Trace]:
    out: List[Trace] = []
    for n in range(max_len + 1):
        out.extend(itertools.product(alphabet, repeat=n))
    return out


def histories(traces: Sequence[Trace], max_size: int, min_size: int = 0) -> Iterator[frozenset]:
    """All subsets of ``traces`` with between ``min_size`` and ``max_size`` elements."""
    for k in range(min_size, max_size + 1):
        for combo in itertools.combinations(traces, k):
            yield frozenset(combo)


def random_trace(rng: random.Random, alphabet: Sequence[Action], max_len: int) -> Trace:
    return tuple(rng.choice(alphabet) for _ in range(rng.randint(0, max_len)))


def random_history(rng: random.Random, alphabet: Sequence[Action], max_size: int, max_len: int) -> frozenset:
    return frozenset(random_trace(rng, alphabet, max_len) for _ in range(rng.randint(0, max_size)))


EXTERNALS = tuple(ext(x) for x in ("a", "b", "c"))
INTERNALS = tuple(internal(x) for x in ("u", "v"))


def enumerate_formulas(actions: Sequence[Action], depth: int, disjunction: bool = True) -> List[Formula]:
    """Every closed guarded formula of the safety grammar of height at most ``depth``.

    Binders are only generated when their variable is used."""
    return _enum(tuple(actions), depth, (), (), disjunction)


def _enum(actions, depth, bound, guarded, disjunction) -> List[Formula]:
    out: List[Formula] = [Tt(), Ff()] + [Var(x) for x in guarded]
    if depth <= 1:
        return out
    for a in actions:
        out.extend(Box(a, f) for f in _enum(actions, depth - 1, bound, bound, disjunction))
    smaller = _enum(actions, depth - 1, bound, guarded, disjunction)
    ops = (And, Or) if disjunction else (And,)
    for op in ops:
        out.extend(op(x, y) for x in smaller for y in smaller)
    var = f"X{len(bound)}"
    inner = _enum(actions, depth - 1, bound + (var,), guarded, disjunction)
    out.extend(Max(var, f) for f in inner if var in free_vars(f))
    return out
