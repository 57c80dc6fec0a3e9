"""Sequential CCS (nil, prefix, choice, recursion) as an ILTS backend."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

from .semantics import DEFAULT_BOUND, Det, Ilts, Lts, explore, traces, validate
from .syntax import (
    TAU,
    Action,
    ParseError,
    Term,
    WellFormednessError,
    alpha_equiv,
    check_well_formed,
    free_vars,
    parse_action,
    substitute,
    term,
)


class Process(Term):
    __slots__ = ()

    def __str__(self) -> str:
        return show(self)


@term
class Nil(Process):
    pass


@term
class Prefix(Process):
    act: Action
    body: Process
    KIDS = ("body",)


@term
class Sum(Process):
    left: Process
    right: Process
    KIDS = ("left", "right")


@term
class PRec(Process):
    var: str
    body: Process
    KIDS = ("body",)
    BINDER = True


@term
class PVar(Process):
    name: str
    VARIABLE = True


def _show(p: Process, top: bool = True) -> str:
    if isinstance(p, Nil):
        return "nil"
    if isinstance(p, PVar):
        return p.name
    if isinstance(p, Prefix):
        inner = _show(p.body, top=False)
        if isinstance(p.body, Sum):
            inner = f"({inner})"
        return f"{p.act}.{inner}"
    if isinstance(p, Sum):
        left = _show(p.left, top=False)
        if isinstance(p.left, Sum):
            left = f"({left})"
        return f"{left} + {_show(p.right, top=False)}"
    text = f"rec {p.var}.({_show(p.body)})"
    return text if top else f"({text})"


def show(p: Process) -> str:
    return _show(p)


def step(p: Process) -> FrozenSet[Tuple[Action, Process]]:
    """One-step successors: prefixes fire, choices select, recursion unfolds silently."""
    if isinstance(p, Prefix):
        return frozenset({(p.act, p.body)})
    if isinstance(p, Sum):
        return step(p.left) | step(p.right)
    if isinstance(p, PRec):
        return frozenset({(TAU, substitute(p.body, p.var, p))})
    return frozenset()


def _unguarded(p: Process) -> FrozenSet[str]:
    if isinstance(p, PVar):
        return frozenset((p.name,))
    if isinstance(p, Prefix):
        _unguarded(p.body)
        return frozenset()
    if isinstance(p, Sum):
        return _unguarded(p.left) | _unguarded(p.right)
    if isinstance(p, PRec):
        inner = _unguarded(p.body)
        if p.var in inner:
            raise WellFormednessError(f"unguarded recursion on {p.var}")
        return inner
    return frozenset()


def check_process(p: Process) -> Process:
    fv = free_vars(p)
    if fv:
        raise WellFormednessError(f"unbound process variable(s): {', '.join(sorted(fv))}")
    _unguarded(p)
    return p


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

_TOK = re.compile(r"\s*(?:(?P<sym>[().+])|(?P<word>~?[A-Za-z_][\w']*))")


class _Parser:
    def __init__(self, text: str):
        self.toks = []
        pos = 0
        text = text.rstrip()
        while pos < len(text):
            m = _TOK.match(text, pos)
            if not m or m.end() == pos:
                raise ParseError(f"unexpected character {text[pos:].lstrip()[:1]!r}", pos)
            self.toks.append((m.group("sym") or m.group("word"), m.start(m.lastgroup)))
            pos = m.end()
        self.toks.append(("<eof>", len(text)))
        self.i = 0
        self.bound: List[str] = []

    def peek(self, k=0):
        return self.toks[min(self.i + k, len(self.toks) - 1)][0]

    def take(self, expected=None):
        tok, at = self.toks[self.i]
        if expected is not None and tok != expected:
            raise ParseError(f"expected {expected!r}, found {tok!r}", at)
        self.i += 1
        return tok

    def process(self) -> Process:
        left = self.unary()
        if self.peek() == "+":
            self.take()
            return Sum(left, self.process())
        return left

    def unary(self) -> Process:
        tok = self.peek()
        at = self.toks[self.i][1]
        if tok == "nil":
            self.take()
            return Nil()
        if tok == "rec":
            self.take()
            var = self.take()
            self.take(".")
            self.bound.append(var)
            body = self.process()
            self.bound.pop()
            return PRec(var, body)
        if tok == "(":
            self.take()
            inner = self.process()
            self.take(")")
            return inner
        if tok == "<eof>" or tok in "().+":
            raise ParseError(f"unexpected {tok!r}", at)
        if self.peek(1) == ".":
            self.take()
            self.take(".")
            return Prefix(parse_action(tok), self.unary())
        if tok not in self.bound:
            raise ParseError(f"unbound process variable {tok!r}", at)
        self.take()
        return PVar(tok)


def parse_process(text: str) -> Process:
    """``nil``, ``a.P``, ``~i.P``, ``tau.P``, ``P + Q``, ``rec X.P``, ``X``.

    Prefix binds tighter than ``+``; a ``rec`` body extends as far right as possible."""
    p = _Parser(text)
    out = p.process()
    if p.peek() != "<eof>":
        raise ParseError(f"trailing input {p.peek()!r}", p.toks[p.i][1])
    try:
        return check_process(out)
    except WellFormednessError as err:
        raise ParseError(str(err)) from None


# --------------------------------------------------------------------------
# ILTS packaging
# --------------------------------------------------------------------------


class CcsIlts(Ilts):
    """CCS terms as ILTS states.

    ``equiv`` is alpha-equivalence, or bounded trace equivalence when
    ``trace_equiv_bound`` is set."""

    def __init__(self, det=None, trace_equiv_bound: Optional[int] = None):
        self._det = det if isinstance(det, Det) or callable(det) else Det(det or ())
        self.trace_equiv_bound = trace_equiv_bound
        self._steps: Dict[Process, FrozenSet] = {}

    def step(self, state: Process):
        got = self._steps.get(state)
        if got is None:
            got = self._steps[state] = step(state)
        return got

    def det(self, action: Action) -> bool:
        return self._det(action)

    def equiv(self, p: Process, q: Process) -> bool:
        if p == q or alpha_equiv(p, q):
            return True
        if self.trace_equiv_bound is None:
            return False
        k = self.trace_equiv_bound
        return traces(self, p, k) == traces(self, q, k)


def ccs_ilts(p0: Process, det: Iterable[str] = (), *, trace_equiv_bound: Optional[int] = None,
             check: bool = True, bound: int = DEFAULT_BOUND) -> CcsIlts:
    """Package ``p0`` with a determinacy assignment, validating the determinacy axiom."""
    check_process(p0)
    ilts = CcsIlts(det, trace_equiv_bound)
    if check:
        validate(ilts, p0, bound)
    return ilts


@dataclass
class SystemFile:
    systems: Dict[str, Process]
    det: FrozenSet[str]


def parse_system_file(text: str) -> SystemFile:
    """``system <name> = <term>`` lines plus an optional ``det = {a, s}`` line.

    ``#`` starts a comment."""
    systems: Dict[str, Process] = {}
    det: FrozenSet[str] = frozenset()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.fullmatch(r"system\s+([\w']+)\s*=\s*(.+)", line)
        if m:
            try:
                systems[m.group(1)] = parse_process(m.group(2))
            except ParseError as err:
                raise ParseError(f"line {lineno}: {err}") from None
            continue
        m = re.fullmatch(r"det\s*=\s*\{([^}]*)\}", line)
        if m:
            det = frozenset(x.strip() for x in m.group(1).split(",") if x.strip())
            continue
        raise ParseError(f"line {lineno}: cannot parse {line!r}")
    if not systems:
        raise ParseError("no system declared")
    return SystemFile(systems, det)


def state_count(p: Process, bound: int = DEFAULT_BOUND) -> int:
    return len(explore(CcsIlts(), p, bound))
