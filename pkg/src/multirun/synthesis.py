"""Formula to monitor synthesis, its inverse, and normalisation of monitors
into the deterministic-prefix fragment."""

from __future__ import annotations

from typing import Callable, Dict, Optional, Tuple

from .fragments import in_shml_det, is_shml_or
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
    Tt,
    Var,
    canonical,
    all_names,
    fresh_name,
    substitute,
)


class FragmentError(ValueError):
    """The formula lies outside the fragment the operation supports."""


def synth(phi: Formula, det: Optional[Callable[[Action], bool]] = None) -> Monitor:
    """Structural translation into a monitor.

    With ``det`` given, the formula must be in the monitorable fragment
    for that assignment."""
    if not is_shml_or(phi):
        raise FragmentError(f"diamonds and least fixpoints have no monitor: {phi}")
    if det is not None and not in_shml_det(phi, det):
        raise FragmentError(f"not monitorable under the given determinacy: {phi}")
    return _synth(phi)


def _synth(phi: Formula) -> Monitor:
    if isinstance(phi, Ff):
        return No()
    if isinstance(phi, Tt):
        return End()
    if isinstance(phi, Var):
        return MVar(phi.name)
    if isinstance(phi, Box):
        return Act(phi.act, _synth(phi.body))
    if isinstance(phi, And):
        return ParAnd(_synth(phi.left), _synth(phi.right))
    if isinstance(phi, Or):
        return ParOr(_synth(phi.left), _synth(phi.right))
    if isinstance(phi, Max):
        return Rec(phi.var, _synth(phi.body))
    raise FragmentError(f"no monitor for {phi}")


def rev_synth(m: Monitor) -> Formula:
    if isinstance(m, No):
        return Ff()
    if isinstance(m, End):
        return Tt()
    if isinstance(m, MVar):
        return Var(m.name)
    if isinstance(m, Act):
        return Box(m.act, rev_synth(m.body))
    if isinstance(m, ParAnd):
        return And(rev_synth(m.left), rev_synth(m.right))
    if isinstance(m, ParOr):
        return Or(rev_synth(m.left), rev_synth(m.right))
    if isinstance(m, Rec):
        return Max(m.var, rev_synth(m.body))
    raise TypeError(f"not a monitor: {m!r}")


Env = Dict[str, Tuple[Monitor, bool]]


class _Normalizer:
    def __init__(self, det: Callable[[Action], bool]):
        self.det = det
        self.memo: Dict[tuple, Monitor] = {}
        self.active: set = set()

    def run(self, m: Monitor, flag: bool, env: Env) -> Monitor:
        key = (m, flag, tuple(sorted((x, canonical(v[0]), v[1]) for x, v in env.items())))
        got = self.memo.get(key)
        if got is not None:
            return got
        if key in self.active:
            raise RuntimeError(f"normalisation loops on {m}")
        self.active.add(key)
        out = self._rule(m, flag, env)
        self.active.discard(key)
        self.memo[key] = out
        return out

    def _rule(self, m: Monitor, flag: bool, env: Env) -> Monitor:
        if isinstance(m, (No, End)):
            return m
        if isinstance(m, MVar):
            bound = env.get(m.name)
            if bound is None or bound[1] == flag:
                return m
            # the binder was entered under the other flag value: re-expand it
            rec = bound[0]
            new = fresh_name(rec.var, set(env) | all_names(rec))
            renamed = Rec(new, substitute(rec.body, rec.var, MVar(new)))
            return self.run(renamed, flag, env)
        if isinstance(m, Act):
            return Act(m.act, self.run(m.body, flag and self.det(m.act), env))
        if isinstance(m, ParAnd):
            return ParAnd(self.run(m.left, flag, env), self.run(m.right, flag, env))
        if isinstance(m, ParOr):
            if not flag:
                return End()
            return ParOr(self.run(m.left, flag, env), self.run(m.right, flag, env))
        if isinstance(m, Rec):
            inner = dict(env)
            inner[m.var] = (m, flag)
            return Rec(m.var, self.run(m.body, flag, inner))
        raise TypeError(f"not a monitor: {m!r}")


def normalize(m: Monitor, det: Callable[[Action], bool]) -> Monitor:
    """Rewrite ``m`` so that parallel disjunctions only occur after deterministic prefixes.

    Disjunctions reached after a non-deterministic action become ``end``;
    recursion variables reached under a different flag than their binder
    are re-expanded with a fresh binder name."""
    return _Normalizer(det).run(m, True, {})
