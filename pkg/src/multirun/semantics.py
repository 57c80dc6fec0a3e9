"""Instrumentable LTSs, weak transitions, trace enumeration and the
denotational evaluator for recHML used as ground truth."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Hashable, Iterable, List, Mapping, Optional, Set, Tuple

from .syntax import (
    Action,
    And,
    Box,
    Diamond,
    Ff,
    Formula,
    History,
    Max,
    Min,
    Or,
    Trace,
    Tt,
    Var,
    check_well_formed,
)

DEFAULT_BOUND = 10_000


class BoundExceeded(RuntimeError):
    """The explored state space or trace set outgrew its configured bound."""


class DeterminacyError(ValueError):
    """A label declared deterministic has two non-equivalent successors."""

    def __init__(self, state, action: Action, first, second):
        self.state, self.action, self.successors = state, action, (first, second)
        super().__init__(
            f"action {action} is declared deterministic but state {state} "
            f"has non-equivalent successors {first} and {second}"
        )


class Det:
    """Determinacy assignment for traceable actions.

    ``labels`` lists the deterministic actions by their text form
    (``a`` or ``~i``); ``internal_default`` applies to internal actions not
    listed, ``external_default`` to external ones."""

    def __init__(self, labels: Iterable[str] = (), *, internal_default: bool = False,
                 external_default: bool = False):
        self.labels = frozenset(str(x) for x in labels)
        self.internal_default = internal_default
        self.external_default = external_default

    def __call__(self, action: Action) -> bool:
        if str(action) in self.labels:
            return True
        return self.internal_default if action.internal else self.external_default

    def _key(self):
        return (self.labels, self.internal_default, self.external_default)

    def __eq__(self, other):
        return isinstance(other, Det) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        extra = []
        if self.internal_default:
            extra.append("internal_default=True")
        if self.external_default:
            extra.append("external_default=True")
        return f"Det({sorted(self.labels)}{', ' if extra else ''}{', '.join(extra)})"


ALL_DET = Det(external_default=True, internal_default=True)


def as_det(det) -> Callable[[Action], bool]:
    """Accept a Det, a predicate, an iterable of labels or None (nothing deterministic)."""
    if det is None:
        return Det()
    if callable(det):
        return det
    return Det(det)


class Ilts:
    """Interface every backend implements.

    ``step`` returns the one-step successors of a state; states must be
    hashable and stable (the same state must always produce equal objects)."""

    def step(self, state) -> Iterable[Tuple[Action, Hashable]]:
        raise NotImplementedError

    def det(self, action: Action) -> bool:
        return False

    def equiv(self, p, q) -> bool:
        return p == q


@dataclass
class Lts:
    """Finite snapshot of the states reachable from ``initial``."""

    initial: Hashable
    edges: Dict[Hashable, List[Tuple[Action, Hashable]]]

    @property
    def states(self) -> FrozenSet:
        return frozenset(self.edges)

    def __len__(self) -> int:
        return len(self.edges)


def explore(ilts: Ilts, start, bound: int = DEFAULT_BOUND) -> Lts:
    edges: Dict[Hashable, List[Tuple[Action, Hashable]]] = {}
    queue = deque([start])
    seen = {start}
    while queue:
        p = queue.popleft()
        out = list(dict.fromkeys(ilts.step(p)))
        edges[p] = out
        for _, q in out:
            if q not in seen:
                seen.add(q)
                if len(seen) > bound:
                    raise BoundExceeded(f"more than {bound} reachable states")
                queue.append(q)
    return Lts(start, edges)


def validate(ilts: Ilts, start, bound: int = DEFAULT_BOUND, lts: Optional[Lts] = None) -> Lts:
    """Check the determinacy axiom on every reachable state."""
    lts = lts or explore(ilts, start, bound)
    for p, out in lts.edges.items():
        seen: Dict[Action, Hashable] = {}
        for a, q in out:
            if a.silent or not ilts.det(a):
                continue
            if a in seen and not ilts.equiv(seen[a], q):
                raise DeterminacyError(p, a, seen[a], q)
            seen.setdefault(a, q)
    return lts


def silent_confluence_failures(ilts: Ilts, lts: Lts, limit: int = 1) -> List[Tuple]:
    """States where a silent step and another step fail to rejoin in one step each.

    Returns up to ``limit`` witnesses ``(p, tau-successor, (action, successor))``."""
    bad = []
    for p, out in lts.edges.items():
        for a1, q1 in out:
            if not a1.silent:
                continue
            for a2, q2 in out:
                if (a2, q2) == (a1, q1):
                    continue
                q1_next = [q for b, q in lts.edges[q1] if b == a2]
                q2_next = [q for b, q in lts.edges[q2] if b.silent] if not a2.silent else []
                ok = False
                if a2.silent:
                    # both silent: rejoin in one step each, or already equivalent
                    ok = ilts.equiv(q1, q2) or any(
                        ilts.equiv(x, y)
                        for x in [q for b, q in lts.edges[q1] if b.silent]
                        for y in [q for b, q in lts.edges[q2] if b.silent]
                    )
                else:
                    ok = any(ilts.equiv(x, y) for x in q1_next for y in q2_next)
                if not ok:
                    bad.append((p, q1, (a2, q2)))
                    if len(bad) >= limit:
                        return bad
    return bad


# --------------------------------------------------------------------------
# Weak transitions
# --------------------------------------------------------------------------


def _closure(ilts: Ilts, states: Iterable, through: Callable[[Action], bool], bound: int) -> Set:
    out = set(states)
    stack = list(out)
    while stack:
        p = stack.pop()
        for a, q in ilts.step(p):
            if through(a) and q not in out:
                out.add(q)
                if len(out) > bound:
                    raise BoundExceeded(f"closure exceeded {bound} states")
                stack.append(q)
    return out


def _untraced(a: Action) -> bool:
    return a.silent or a.internal


def _silent(a: Action) -> bool:
    return a.silent


def weak_step(ilts: Ilts, state, a: Action, bound: int = DEFAULT_BOUND) -> Set:
    """All ``q`` with ``state ==a==> q``, abstracting over silent and internal steps."""
    if not a.external:
        raise ValueError("weak_step takes an external action")
    before = _closure(ilts, [state], _untraced, bound)
    mid = {q for p in before for b, q in ilts.step(p) if b == a}
    return _closure(ilts, mid, _untraced, bound)


def weak_traceable_step(ilts: Ilts, state, eta: Action, bound: int = DEFAULT_BOUND) -> Set:
    """All ``q`` reachable by ``eta`` surrounded by silent steps only."""
    if eta.silent:
        raise ValueError("weak_traceable_step takes a traceable action")
    before = _closure(ilts, [state], _silent, bound)
    mid = {q for p in before for b, q in ilts.step(p) if b == eta}
    return _closure(ilts, mid, _silent, bound)


def traces(ilts: Ilts, state, max_len: int, bound: int = DEFAULT_BOUND) -> History:
    """Every trace of length at most ``max_len`` (including the empty one)."""
    if max_len < 0:
        raise ValueError("max_len must be non-negative")
    frontier: Dict[Trace, FrozenSet] = {(): frozenset(_closure(ilts, [state], _silent, bound))}
    result = set(frontier)
    for _ in range(max_len):
        nxt: Dict[Trace, Set] = {}
        for t, ps in frontier.items():
            for p in ps:
                for a, q in ilts.step(p):
                    if not a.silent:
                        nxt.setdefault(t + (a,), set()).add(q)
        frontier = {}
        for t, qs in nxt.items():
            frontier[t] = frozenset(_closure(ilts, qs, _silent, bound))
            result.add(t)
            if len(result) > bound:
                raise BoundExceeded(f"more than {bound} traces")
    return frozenset(result)


def trace_runs(ilts: Ilts, state, t: Trace, bound: int = DEFAULT_BOUND) -> Set:
    """States reachable by weakly performing the trace ``t``."""
    ps = _closure(ilts, [state], _silent, bound)
    for a in t:
        ps = {q for p in ps for q in weak_traceable_step(ilts, p, a, bound)}
        if not ps:
            break
    return ps


# --------------------------------------------------------------------------
# Denotational evaluation
# --------------------------------------------------------------------------


class _WeakIndex:
    def __init__(self, lts: Lts):
        self.lts = lts
        self.cache: Dict[Action, Dict[Hashable, FrozenSet]] = {}
        self._closure: Dict[Hashable, FrozenSet] = {}

    def closure(self, p) -> FrozenSet:
        got = self._closure.get(p)
        if got is None:
            out, stack = {p}, [p]
            while stack:
                x = stack.pop()
                for a, y in self.lts.edges[x]:
                    if _untraced(a) and y not in out:
                        out.add(y)
                        stack.append(y)
            got = self._closure[p] = frozenset(out)
        return got

    def succ(self, a: Action) -> Dict[Hashable, FrozenSet]:
        table = self.cache.get(a)
        if table is None:
            table = {}
            for p in self.lts.edges:
                out = set()
                for x in self.closure(p):
                    for b, y in self.lts.edges[x]:
                        if b == a:
                            out |= self.closure(y)
                table[p] = frozenset(out)
            self.cache[a] = table
        return table


def evaluate(lts: Lts, phi: Formula, env: Optional[Mapping[str, FrozenSet]] = None,
             _index: Optional[_WeakIndex] = None) -> FrozenSet:
    """The set of explored states satisfying ``phi`` under ``env``."""
    index = _index or _WeakIndex(lts)
    everything = frozenset(lts.edges)
    return _eval(phi, dict(env or {}), index, everything)


def _eval(phi: Formula, env: Dict[str, FrozenSet], index: _WeakIndex, everything: FrozenSet) -> FrozenSet:
    if isinstance(phi, Tt):
        return everything
    if isinstance(phi, Ff):
        return frozenset()
    if isinstance(phi, Var):
        if phi.name not in env:
            raise KeyError(f"unbound variable {phi.name}")
        return env[phi.name]
    if isinstance(phi, And):
        return _eval(phi.left, env, index, everything) & _eval(phi.right, env, index, everything)
    if isinstance(phi, Or):
        return _eval(phi.left, env, index, everything) | _eval(phi.right, env, index, everything)
    if isinstance(phi, (Box, Diamond)):
        body = _eval(phi.body, env, index, everything)
        succ = index.succ(phi.act)
        if isinstance(phi, Box):
            return frozenset(p for p in everything if succ[p] <= body)
        return frozenset(p for p in everything if succ[p] & body)
    if isinstance(phi, (Max, Min)):
        current = everything if isinstance(phi, Max) else frozenset()
        while True:
            env2 = dict(env)
            env2[phi.var] = current
            nxt = _eval(phi.body, env2, index, everything)
            if nxt == current:
                return current
            current = nxt
    raise TypeError(f"not a formula: {phi!r}")


def eval_formula(ilts: Ilts, start, phi: Formula, env=None, bound: int = DEFAULT_BOUND) -> FrozenSet:
    """Explore from ``start`` and evaluate ``phi`` over the reachable states."""
    check_well_formed(phi)
    return evaluate(explore(ilts, start, bound), phi, env)


def satisfies(ilts: Ilts, state, phi: Formula, bound: int = DEFAULT_BOUND) -> bool:
    return state in eval_formula(ilts, state, phi, bound=bound)
