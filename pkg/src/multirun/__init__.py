"""Multiple-run monitoring of branching-time properties.

Monitors synthesised from safety formulas of the recursive
Hennessy-Milner logic observe several executions of a system, aggregate
the observed traces into a history and reject the system once the
history proves a violation.
"""

from .syntax import (
    TAU,
    Action,
    Formula,
    Monitor,
    ParseError,
    alpha_equiv,
    ext,
    history,
    internal,
    parse_action,
    parse_formula,
    parse_monitor,
    substitute,
    to_text,
    trace,
    unfold,
)
from .semantics import ALL_DET, BoundExceeded, Det, DeterminacyError, Ilts, evaluate, explore, traces, weak_step
from .fragments import in_mon_det, in_shml_det, in_shml_nf, is_shml, lb
from .synthesis import FragmentError, normalize, rev_synth, synth
from .analysis import reject, sep_violates, start, sub, violates
from .runtime import run_multi, run_once

__all__ = [name for name in dir() if not name.startswith("_")]
