import random

import pytest

from catalog import DET_RS, M1, M2, P2
from multirun.ccs import CcsIlts, Nil, parse_process
from multirun.runtime import (
    ExecutingMonitor,
    MonitoredSystem,
    Scheduler,
    instr_transitions,
    min_runs_to_reject,
    monitor_step,
    possible_aggregations,
    run_multi,
    run_once,
    silent_closure,
)
from multirun.syntax import TAU, End, No, ParAnd, ParOr, ext, parse_monitor, trace, unfold

a, c, r, s = (ext(x) for x in "acrs")
T1 = trace("r s ~ut a")
T2 = trace("r s ~uf c")
ILTS = CcsIlts(DET_RS)

# seeds found by search and frozen
SEED_UT = 22
SEED_UF_AFTER_T1 = 2
SEED_TWO_RUNS = 390


class TestMonitorSteps:
    def test_verdict_absorbs_right(self):
        t = T1
        em = ExecutingMonitor(t, ParAnd(M2, No()))
        assert ExecutingMonitor(t, M2) in monitor_step(em, frozenset({t}), TAU)
        assert ExecutingMonitor(t, M2) not in monitor_step(em, frozenset(), TAU)

    def test_verdict_kept_when_new(self):
        em = ExecutingMonitor((), ParOr(No(), parse_monitor("a.no")))
        assert ExecutingMonitor((), No()) in monitor_step(em, frozenset(), TAU)

    def test_end(self):
        em = ExecutingMonitor((c,), End())
        assert monitor_step(em, frozenset(), a) == {ExecutingMonitor((c, a), End())}

    def test_external_appends_one_action(self):
        em = ExecutingMonitor((), unfold(M1))
        for nxt in monitor_step(em, frozenset(), r):
            assert nxt.accrued == (r,)

    def test_rec_unfolds(self):
        em = ExecutingMonitor((), M1)
        assert monitor_step(em, frozenset(), TAU) == {ExecutingMonitor((), unfold(M1))}

    def test_one_sided_disjunction(self):
        em = ExecutingMonitor((), parse_monitor("a.no (+) c.no"))
        assert monitor_step(em, frozenset(), a) == {ExecutingMonitor((a,), No())}

    def test_internal_rejected(self):
        with pytest.raises(ValueError):
            monitor_step(ExecutingMonitor((), M1), frozenset(), T1[2])

    def test_silent_closure(self):
        em = ExecutingMonitor((), M1)
        assert silent_closure(em, frozenset()) == {em, ExecutingMonitor((), unfold(M1))}


def _take(ms, rule, label=None):
    options = [o for o in instr_transitions(ILTS, ms)
               if o.rule == rule and (label is None or o.label == label)]
    assert len(options) == 1, (rule, label, options)
    return options[0].target


def test_scripted_first_run():
    ms = MonitoredSystem(P2, ExecutingMonitor((), M1), frozenset())
    script = [("iAsS", None), ("iAsM", None), ("iMon", r), ("iMon", s),
              ("iAsS", None), ("iAsM", None), ("iAsI", T1[2]), ("iMon", a), ("iNo", None)]
    for rule, label in script:
        ms = _take(ms, rule, label)
    assert ms == MonitoredSystem(P2, ExecutingMonitor(T1, End()), frozenset({T1}))


def test_no_aggregates_immediately():
    ms = MonitoredSystem(P2, ExecutingMonitor((), No()), frozenset())
    (tr,) = instr_transitions(ILTS, ms)
    assert tr.rule == "iNo"
    assert tr.target == MonitoredSystem(P2, ExecutingMonitor((), End()), frozenset({()}))


def test_no_blocks_on_known_trace():
    ms = MonitoredSystem(P2, ExecutingMonitor((), No()), frozenset({()}))
    assert instr_transitions(ILTS, ms) == []


def test_transparency():
    ms = MonitoredSystem(parse_process("c.nil"), ExecutingMonitor((), parse_monitor("a.no")), frozenset())
    (tr,) = instr_transitions(ILTS, ms)
    assert tr.rule == "iTer" and tr.target.exec.mon == End()


def test_overlap_trace_aggregated():
    found = possible_aggregations(ILTS, P2, M2, frozenset({T1}), 8)
    assert T1 + T1 in found
    assert T1 not in found


class TestRunOnce:
    def test_steered_ut(self):
        res = run_once(ILTS, P2, M1, frozenset(), Scheduler(SEED_UT))
        assert (res.history, res.trace, res.aggregated) == (frozenset({T1}), T1, True)

    def test_nil(self):
        res = run_once(ILTS, Nil(), M1, frozenset(), Scheduler(0))
        assert (res.history, res.trace, res.aggregated) == (frozenset(), (), False)

    def test_steered_uf(self):
        res = run_once(ILTS, P2, M1, frozenset({T1}), Scheduler(SEED_UF_AFTER_T1))
        assert (res.history, res.trace) == (frozenset({T1, T2}), T2)

    def test_max_steps(self):
        res = run_once(ILTS, parse_process("rec X.a.X"), parse_monitor("rec Y.a.Y"), frozenset(),
                       Scheduler(0), max_steps=10)
        assert res.truncated and not res.aggregated and res.steps == 10

    def test_bad_budget(self):
        with pytest.raises(ValueError):
            run_once(ILTS, P2, M1, frozenset(), Scheduler(0), max_steps=0)


class TestRunMulti:
    def test_two_runs(self):
        report = run_multi(ILTS, P2, M1, max_runs=20, seed=SEED_TWO_RUNS)
        assert report.verdict is not None and report.verdict.rejected
        assert [t for _, t in report.events] == [T1, T2]
        assert report.chain == [frozenset(), frozenset({T1}), frozenset({T1, T2})]

    def test_end_never_rejects(self):
        report = run_multi(ILTS, P2, End(), max_runs=5, seed=1)
        assert report.history == frozenset() and report.verdict is None

    def test_reproducible(self):
        one = run_multi(ILTS, P2, M1, max_runs=10, seed=7)
        two = run_multi(ILTS, P2, M1, max_runs=10, seed=7)
        assert one.to_text() == two.to_text()

    def test_report_text(self):
        text = run_multi(ILTS, P2, M1, max_runs=20, seed=SEED_TWO_RUNS).to_text()
        assert text.splitlines()[0] == f"seed {SEED_TWO_RUNS}"
        assert "run 1 trace r s ~ut a aggregated yes" in text

    def test_explore_bias(self):
        report = run_multi(ILTS, P2, M1, max_runs=30, seed=3, bias="explore")
        assert report.history

    def test_unknown_bias(self):
        with pytest.raises(ValueError):
            Scheduler(0, "greedy")


def test_min_runs_p2():
    k, H = min_runs_to_reject(ILTS, P2, M1, DET_RS, max_len=6)
    assert k == 2 and len(H) == 2
