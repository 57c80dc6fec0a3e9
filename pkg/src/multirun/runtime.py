"""Executing monitors, the instrumentation relation and the multi-run loop."""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Hashable, Iterable, List, Optional, Set, Tuple

from .syntax import (
    TAU,
    Act,
    Action,
    End,
    History,
    Monitor,
    No,
    ParAnd,
    ParOr,
    Rec,
    Trace,
    canonical,
    format_history,
    format_trace,
    unfold,
)
from .semantics import Ilts


@dataclass(frozen=True)
class ExecutingMonitor:
    accrued: Trace
    mon: Monitor

    def __str__(self) -> str:
        return f"({format_trace(self.accrued)}, {self.mon})"


@dataclass(frozen=True)
class MonitoredSystem:
    sus: Hashable
    exec: ExecutingMonitor
    history: History


# --------------------------------------------------------------------------
# Monitor semantics
# --------------------------------------------------------------------------

_PAR = (ParOr, ParAnd)


def _silent_steps(t: Trace, m: Monitor, H: History) -> List[Monitor]:
    if isinstance(m, Rec):
        return [unfold(m)]
    if not isinstance(m, _PAR):
        return []
    out: List[Monitor] = []
    left, right = m.left, m.right
    if isinstance(left, No):
        out.append(right if t in H else left)
    if isinstance(right, No):
        out.append(left if t in H else right)
    build = type(m)
    out.extend(build(l2, right) for l2 in _silent_steps(t, left, H))
    out.extend(build(left, r2) for r2 in _silent_steps(t, right, H))
    return out


def _external_steps(m: Monitor, a: Action, t: Trace, H: History) -> List[Monitor]:
    if isinstance(m, End):
        return [m]
    if isinstance(m, Act):
        return [m.body] if m.act == a else []
    if not isinstance(m, _PAR):
        return []
    left, right = m.left, m.right
    ls = _external_steps(left, a, t, H)
    rs = _external_steps(right, a, t, H)
    out = [type(m)(x, y) for x in ls for y in rs]
    if ls and not rs and not isinstance(right, No) and not _silent_steps(t, right, H):
        out.extend(ls)
    if rs and not ls and not isinstance(left, No) and not _silent_steps(t, left, H):
        out.extend(rs)
    return out


def monitor_step(em: ExecutingMonitor, H: History, inp: Action) -> Set[ExecutingMonitor]:
    """Successors of ``em`` on an external action or on ``TAU``."""
    if inp.silent:
        return {ExecutingMonitor(em.accrued, m) for m in _silent_steps(em.accrued, em.mon, H)}
    if not inp.external:
        raise ValueError("monitors only step on external or silent actions")
    t2 = em.accrued + (inp,)
    return {ExecutingMonitor(t2, m) for m in _external_steps(em.mon, inp, em.accrued, H)}


def silent_closure(em: ExecutingMonitor, H: History) -> Set[ExecutingMonitor]:
    out, stack = {em}, [em]
    while stack:
        x = stack.pop()
        for y in monitor_step(x, H, TAU):
            if y not in out:
                out.add(y)
                stack.append(y)
    return out


# --------------------------------------------------------------------------
# Instrumentation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Transition:
    rule: str
    label: Action
    target: MonitoredSystem


def ordered_steps(ilts: Ilts, p) -> List[Tuple[Action, Hashable]]:
    """System steps in a fixed order, so seeded choices replay across processes."""
    return sorted(ilts.step(p), key=lambda e: (str(e[0]), str(e[1])))


def instr_transitions(ilts: Ilts, ms: MonitoredSystem) -> List[Transition]:
    """Every instrumentation step enabled at ``ms``."""
    p, em, H = ms.sus, ms.exec, ms.history
    t, m = em.accrued, em.mon
    if isinstance(m, No):
        if t in H:
            return []
        return [Transition("iNo", TAU, MonitoredSystem(p, ExecutingMonitor(t, End()), H | {t}))]
    out: List[Transition] = []
    mon_silent = _silent_steps(t, m, H)
    for m2 in mon_silent:
        out.append(Transition("iAsM", TAU, MonitoredSystem(p, ExecutingMonitor(t, m2), H)))
    for a, p2 in ordered_steps(ilts, p):
        if a.silent:
            out.append(Transition("iAsS", a, MonitoredSystem(p2, em, H)))
        elif a.internal:
            out.append(Transition("iAsI", a, MonitoredSystem(p2, ExecutingMonitor(t + (a,), m), H)))
        else:
            succ = _external_steps(m, a, t, H)
            for m2 in succ:
                out.append(Transition("iMon", a, MonitoredSystem(p2, ExecutingMonitor(t + (a,), m2), H)))
            if not succ and not mon_silent:
                out.append(Transition("iTer", a, MonitoredSystem(p2, ExecutingMonitor(t + (a,), End()), H)))
    return out


def _is_prefix(u: Trace, t: Trace) -> bool:
    return len(u) <= len(t) and t[: len(u)] == u


class Scheduler:
    """Seeded choice among enabled instrumentation steps.

    ``uniform`` picks uniformly. ``explore`` prefers steps whose accrued
    trace is not a prefix of any trace already in the history."""

    def __init__(self, seed: int = 0, bias: str = "uniform"):
        if bias not in ("uniform", "explore"):
            raise ValueError(f"unknown bias {bias!r}")
        self.seed = seed
        self.bias = bias
        self.rng = random.Random(seed)

    def choose(self, options: List[Transition], ms: MonitoredSystem) -> Transition:
        if self.bias == "explore" and len(options) > 1:
            novel = [
                o for o in options
                if not any(_is_prefix(o.target.exec.accrued, h) for h in ms.history)
            ]
            if novel and len(novel) < len(options):
                options = novel
        return options[self.rng.randrange(len(options))]


def instr_step(ilts: Ilts, ms: MonitoredSystem, scheduler: Scheduler) -> Optional[Transition]:
    options = instr_transitions(ilts, ms)
    if not options:
        return None
    return scheduler.choose(options, ms)


@dataclass
class RunResult:
    history: History
    trace: Trace
    aggregated: bool
    steps: int
    truncated: bool
    rules: List[str] = field(default_factory=list)


def run_once(ilts: Ilts, p0, m: Monitor, H: History, scheduler: Scheduler,
             max_steps: int = 1000, stop_on_aggregate: bool = True) -> RunResult:
    """One monitored execution starting from ``(p0, (eps, m), H)``.

    The run ends when a trace is aggregated, when nothing can move, when
    the monitor has become ``end`` (no further aggregation is possible) or
    after ``max_steps`` steps."""
    if max_steps < 1:
        raise ValueError("max_steps must be positive")
    ms = MonitoredSystem(p0, ExecutingMonitor((), m), H)
    rules: List[str] = []
    aggregated = False
    added: Trace = ()
    for steps in range(1, max_steps + 1):
        tr = instr_step(ilts, ms, scheduler)
        if tr is None:
            return RunResult(ms.history, added if aggregated else ms.exec.accrued, aggregated,
                             steps - 1, False, rules)
        rules.append(tr.rule)
        if tr.rule == "iNo":
            aggregated = True
            added = ms.exec.accrued
        ms = tr.target
        if aggregated and stop_on_aggregate:
            return RunResult(ms.history, added, True, steps, False, rules)
        if isinstance(ms.exec.mon, End) and not aggregated:
            return RunResult(ms.history, ms.exec.accrued, False, steps, False, rules)
    return RunResult(ms.history, added if aggregated else ms.exec.accrued, aggregated,
                     max_steps, True, rules)


@dataclass
class RunReport:
    seed: int
    history: History
    runs: List[RunResult]
    events: List[Tuple[int, Trace]]
    verdict: Optional[object] = None

    @property
    def aggregating_runs(self) -> int:
        return len(self.events)

    @property
    def chain(self) -> List[History]:
        out: List[History] = [frozenset()]
        for _, t in self.events:
            out.append(out[-1] | {t})
        return out

    def to_text(self) -> str:
        lines = [f"seed {self.seed}"]
        for i, r in enumerate(self.runs, 1):
            acts = " ".join(str(a) for a in r.trace)
            lines.append(f"run {i} trace {acts}{' ' if acts else ''}aggregated {'yes' if r.aggregated else 'no'}")
        lines.append("history {")
        for t in sorted(self.history, key=lambda t: (len(t), t)):
            lines.append("  " + format_trace(t))
        lines.append("}")
        return "\n".join(lines)


def run_multi(ilts: Ilts, p0, m: Monitor, max_runs: int = 100, max_steps: int = 1000,
              seed: int = 0, bias: str = "uniform", det=None,
              history: History = frozenset()) -> RunReport:
    """Alternate monitored runs with offline analysis of the aggregated history.

    Stops at the first rejection or after ``max_runs`` runs."""
    from .analysis import reject

    if max_runs < 1:
        raise ValueError("max_runs must be positive")
    det = det if det is not None else ilts.det
    scheduler = Scheduler(seed, bias)
    H = frozenset(history)
    report = RunReport(seed, H, [], [])
    for i in range(1, max_runs + 1):
        res = run_once(ilts, p0, m, H, scheduler, max_steps)
        report.runs.append(res)
        if res.aggregated:
            H = res.history
            report.events.append((i, res.trace))
            report.history = H
            verdict = reject(H, m, det)
            if verdict.rejected:
                report.verdict = verdict
                return report
    report.history = H
    return report


# --------------------------------------------------------------------------
# Exhaustive scheduling
# --------------------------------------------------------------------------


def possible_aggregations(ilts: Ilts, p0, m: Monitor, H: History, max_len: int) -> FrozenSet[Trace]:
    """All traces one run from ``(p0, (eps, m), H)`` can aggregate, over every scheduling.

    Runs are cut once the accrued trace is longer than ``max_len``."""
    start = MonitoredSystem(p0, ExecutingMonitor((), m), H)
    seen = {start}
    stack = [start]
    found: Set[Trace] = set()
    while stack:
        ms = stack.pop()
        for tr in instr_transitions(ilts, ms):
            if tr.rule == "iNo":
                found.add(ms.exec.accrued)
                continue
            nxt = tr.target
            if len(nxt.exec.accrued) > max_len or isinstance(nxt.exec.mon, End):
                continue
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return frozenset(found)


def min_runs_to_reject(ilts: Ilts, p0, m: Monitor, det, max_len: int,
                       max_runs: int = 6) -> Tuple[Optional[int], Optional[History]]:
    """Fewest aggregating runs after which some reachable history is rejected.

    Breadth-first over the histories reachable under every scheduling."""
    from .analysis import reject

    level: Set[History] = {frozenset()}
    seen: Set[History] = set(level)
    for k in range(1, max_runs + 1):
        nxt: Set[History] = set()
        for H in level:
            for t in possible_aggregations(ilts, p0, m, H, max_len):
                H2 = H | {t}
                if H2 in seen:
                    continue
                seen.add(H2)
                if reject(H2, m, det).rejected:
                    return k, H2
                nxt.add(H2)
        level = nxt
        if not level:
            break
    return None, None
