"""Actions, traces, recHML formulas and monitors: ASTs, parsing, printing,
capture-avoiding substitution and alpha-equivalence."""

from __future__ import annotations

import itertools
import re
import dataclasses
from dataclasses import dataclass
from typing import Callable, FrozenSet, Iterable, NamedTuple, Optional, Tuple, Union

# --------------------------------------------------------------------------
# Actions, traces, histories
# --------------------------------------------------------------------------

EXTERNAL = "ext"
INTERNAL = "int"
SILENT = "tau"


def cached_hash(cls):
    """Memoise the dataclass hash: terms are immutable and hashed constantly by the searches."""
    compute = cls.__hash__

    def __hash__(self):
        try:
            return self.__dict__["_hash"]
        except KeyError:
            h = compute(self)
            object.__setattr__(self, "_hash", h)
            return h

    cls.__hash__ = __hash__
    return cls


def term(cls):
    return cached_hash(dataclass(frozen=True)(cls))



class Action(NamedTuple):
    """A transition label. Silent actions carry an empty label.

    A named tuple rather than a dataclass: traces are tuples of actions and
    get hashed on every memo lookup, and tuple hashing stays in C."""

    kind: str
    label: str = ""

    @property
    def external(self) -> bool:
        return self.kind == EXTERNAL

    @property
    def internal(self) -> bool:
        return self.kind == INTERNAL

    @property
    def silent(self) -> bool:
        return self.kind == SILENT

    def __str__(self) -> str:
        if self.kind == SILENT:
            return "tau"
        if self.kind == INTERNAL:
            return "~" + self.label
        return self.label

    def __repr__(self) -> str:
        return f"Action({str(self)!r})"


TAU = Action(SILENT)


def ext(label: str) -> Action:
    return Action(EXTERNAL, label)


def internal(label: str) -> Action:
    return Action(INTERNAL, label)


def parse_action(text: str) -> Action:
    """`tau`, `~label` (internal) or `label` (external)."""
    text = text.strip()
    if text == "tau":
        return TAU
    if text.startswith("~"):
        if len(text) == 1:
            raise ParseError("empty internal action label", 0)
        return internal(text[1:])
    if not text:
        raise ParseError("empty action label", 0)
    return ext(text)


Trace = Tuple[Action, ...]
History = FrozenSet[Trace]


def trace(text: str) -> Trace:
    """Whitespace separated labels, e.g. ``"r s ~ut a"``. ``""`` is the empty trace."""
    acts = tuple(parse_action(tok) for tok in text.split())
    if any(a.silent for a in acts):
        raise ValueError("silent actions never appear in traces")
    return acts


def history(*traces: Union[str, Trace]) -> History:
    return frozenset(t if isinstance(t, tuple) else trace(t) for t in traces)


def format_trace(t: Trace) -> str:
    return " ".join(str(a) for a in t) if t else "eps"


def format_history(h: Iterable[Trace]) -> str:
    items = sorted(h, key=lambda t: (len(t), t))
    return "{" + ", ".join(format_trace(t) for t in items) + "}"


# --------------------------------------------------------------------------
# Terms
# --------------------------------------------------------------------------


class Term:
    """Common base for formulas and monitors.

    ``KIDS`` lists the sub-term fields, binders have a ``var`` field and
    variables a ``name`` field.
    """

    __slots__ = ()
    KIDS: Tuple[str, ...] = ()
    BINDER = False
    VARIABLE = False

    def __str__(self) -> str:
        return to_text(self)


class Formula(Term):
    __slots__ = ()


class Monitor(Term):
    __slots__ = ()


@term
class Tt(Formula):
    pass


@term
class Ff(Formula):
    pass


@term
class Var(Formula):
    name: str
    VARIABLE = True


@term
class Box(Formula):
    act: Action
    body: Formula
    KIDS = ("body",)


@term
class Diamond(Formula):
    act: Action
    body: Formula
    KIDS = ("body",)


@term
class And(Formula):
    left: Formula
    right: Formula
    KIDS = ("left", "right")


@term
class Or(Formula):
    left: Formula
    right: Formula
    KIDS = ("left", "right")


@term
class Max(Formula):
    var: str
    body: Formula
    KIDS = ("body",)
    BINDER = True


@term
class Min(Formula):
    var: str
    body: Formula
    KIDS = ("body",)
    BINDER = True


@term
class No(Monitor):
    pass


@term
class End(Monitor):
    pass


@term
class MVar(Monitor):
    name: str
    VARIABLE = True


@term
class Act(Monitor):
    act: Action
    body: Monitor
    KIDS = ("body",)


@term
class Rec(Monitor):
    var: str
    body: Monitor
    KIDS = ("body",)
    BINDER = True


@term
class ParOr(Monitor):
    left: Monitor
    right: Monitor
    KIDS = ("left", "right")


@term
class ParAnd(Monitor):
    left: Monitor
    right: Monitor
    KIDS = ("left", "right")


_GUARDS = (Box, Diamond, Act)



def _var_class(t: Term):
    return MVar if isinstance(t, Monitor) else Var


def _rebuild(t: Term, **changes) -> Term:
    fields = {f.name: getattr(t, f.name) for f in dataclasses.fields(t)}
    fields.update(changes)
    return type(t)(**fields)


def free_vars(t: Term) -> FrozenSet[str]:
    if t.VARIABLE:
        return frozenset((t.name,))
    out: FrozenSet[str] = frozenset()
    for k in t.KIDS:
        out |= free_vars(getattr(t, k))
    if t.BINDER:
        out -= {t.var}
    return out


def is_closed(t: Term) -> bool:
    return not free_vars(t)


def all_names(t: Term) -> FrozenSet[str]:
    """Every variable name in ``t``, bound or free."""
    if t.VARIABLE:
        return frozenset((t.name,))
    out: FrozenSet[str] = frozenset((t.var,)) if t.BINDER else frozenset()
    for k in t.KIDS:
        out |= all_names(getattr(t, k))
    return out


def fresh_name(base: str, avoid: Iterable[str] = ()) -> str:
    """``base_k`` for the smallest ``k`` not in ``avoid``."""
    avoid = set(avoid)
    stem = base.split("_")[0] or "X"
    for k in itertools.count(1):
        name = f"{stem}_{k}"
        if name not in avoid:
            return name
    raise AssertionError


def substitute(t: Term, x: str, s: Term) -> Term:
    """``t[s/x]``, renaming binders of ``t`` that would capture free names of ``s``."""
    return _subst(t, x, s, free_vars(s))


def _subst(t: Term, x: str, s: Term, fv_s: FrozenSet[str]) -> Term:
    if t.VARIABLE:
        return s if t.name == x else t
    if not t.KIDS:
        return t
    if t.BINDER:
        if t.var == x:
            return t
        body = t.body
        if x not in free_vars(body):
            return t
        var = t.var
        if var in fv_s:
            new = fresh_name(var, fv_s | all_names(body) | {x})
            body = _subst(body, var, _var_class(t)(new), frozenset((new,)))
            var = new
        return _rebuild(t, var=var, body=_subst(body, x, s, fv_s))
    changes = {k: _subst(getattr(t, k), x, s, fv_s) for k in t.KIDS}
    return _rebuild(t, **changes)


def unfold(t: Term) -> Term:
    """One-step unfolding of a max/min formula or a rec monitor."""
    if not t.BINDER:
        raise TypeError(f"not a fixed point: {to_text(t)}")
    return substitute(t.body, t.var, t)


def canonical(t: Term, _env: Tuple[str, ...] = ()) -> Term:
    """Rename every bound variable after its binding depth."""
    if t.VARIABLE:
        for depth in range(len(_env) - 1, -1, -1):
            if _env[depth] == t.name:
                return _rebuild(t, name=f"#{depth}")
        return t
    if not t.KIDS:
        return t
    if t.BINDER:
        return _rebuild(t, var=f"#{len(_env)}", body=canonical(t.body, _env + (t.var,)))
    return _rebuild(t, **{k: canonical(getattr(t, k), _env) for k in t.KIDS})


def alpha_equiv(a: Term, b: Term) -> bool:
    return canonical(a) == canonical(b)


def size(t: Term) -> int:
    return 1 + sum(size(getattr(t, k)) for k in t.KIDS)


def depth(t: Term) -> int:
    return 1 + max((depth(getattr(t, k)) for k in t.KIDS), default=0)


def actions_of(t: Term) -> FrozenSet[Action]:
    out = {t.act} if isinstance(t, _GUARDS) else set()
    for k in t.KIDS:
        out |= actions_of(getattr(t, k))
    return frozenset(out)


# --------------------------------------------------------------------------
# Well-formedness
# --------------------------------------------------------------------------


class ParseError(ValueError):
    def __init__(self, message: str, pos: int = -1):
        self.pos = pos
        super().__init__(message if pos < 0 else f"{message} (at offset {pos})")


class WellFormednessError(ValueError):
    pass


def _unguarded(t: Term) -> FrozenSet[str]:
    """Free variables with an occurrence not under a modality or prefix.

    Raises when a binder's own variable occurs unguarded in its body."""
    if t.VARIABLE:
        return frozenset((t.name,))
    if isinstance(t, _GUARDS):
        _unguarded(t.body)
        return frozenset()
    if t.BINDER:
        inner = _unguarded(t.body)
        if t.var in inner:
            raise WellFormednessError(f"unguarded recursion on {t.var} in {to_text(t)}")
        return inner
    out: FrozenSet[str] = frozenset()
    for k in t.KIDS:
        out |= _unguarded(getattr(t, k))
    return out


def check_well_formed(t: Term) -> Term:
    """Raise unless ``t`` is closed, guarded and mentions only external actions."""
    fv = free_vars(t)
    if fv:
        raise WellFormednessError(f"unbound variable(s): {', '.join(sorted(fv))}")
    _unguarded(t)
    for a in actions_of(t):
        if not a.external:
            raise WellFormednessError(f"modality or prefix on non-external action {a}")
    return t


def is_guarded(t: Term) -> bool:
    try:
        _unguarded(t)
    except WellFormednessError:
        return False
    return True


# --------------------------------------------------------------------------
# Lexer and parsers
# --------------------------------------------------------------------------

_VALUE = r"(?:\{[^{}]*\}|[A-Za-z_][\w']*)"
_TOKEN = re.compile(
    r"\s*(?:(?P<sym>\(\*\)|\(\+\)|[\[\]<>().&|⊗⊕∧∨])"
    rf"|(?P<word>~?[A-Za-z_][\w']*(?:(?:\?|!!|!|:){_VALUE})?))"
)
_SYNONYMS = {"∧": "&", "∨": "|", "⊗": "(*)", "⊕": "(+)"}
_KEYWORDS = {"tt", "ff", "max", "min", "no", "end", "rec"}


def _tokenize(text: str):
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos:].lstrip()[:1]!r}", pos)
        sym, word = m.group("sym"), m.group("word")
        start = m.start("sym") if sym else m.start("word")
        out.append((_SYNONYMS.get(sym, sym) if sym else word, start))
        pos = m.end()
    out.append(("<eof>", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, alphabet: Optional[Iterable[str]]):
        self.toks = _tokenize(text)
        self.i = 0
        self.alphabet = None if alphabet is None else {str(a) for a in alphabet}
        self.bound: list = []

    def peek(self, k: int = 0) -> str:
        return self.toks[min(self.i + k, len(self.toks) - 1)][0]

    def pos(self) -> int:
        return self.toks[self.i][1]

    def take(self, expected: Optional[str] = None) -> str:
        tok = self.peek()
        if expected is not None and tok != expected:
            raise ParseError(f"expected {expected!r}, found {tok!r}", self.pos())
        self.i += 1
        return tok

    def ident(self) -> str:
        tok = self.peek()
        if not re.fullmatch(r"[A-Za-z_][\w']*", tok) or tok in _KEYWORDS:
            raise ParseError(f"expected identifier, found {tok!r}", self.pos())
        return self.take()

    def action(self) -> Action:
        at = self.pos()
        tok = self.take()
        if tok in _KEYWORDS or tok == "<eof>" or not re.match(r"~?[A-Za-z_]", tok):
            raise ParseError(f"expected action, found {tok!r}", at)
        if tok.startswith("~") or tok == "tau":
            raise ParseError(f"only external actions may appear here, found {tok!r}", at)
        if self.alphabet is not None and tok not in self.alphabet:
            raise ParseError(f"undeclared action {tok!r}", at)
        return ext(tok)

    def variable(self, cls):
        at = self.pos()
        name = self.ident()
        if name not in self.bound:
            raise ParseError(f"unbound variable {name!r}", at)
        return cls(name)

    def finish(self, t: Term) -> Term:
        if self.peek() != "<eof>":
            raise ParseError(f"trailing input {self.peek()!r}", self.pos())
        try:
            return check_well_formed(t)
        except WellFormednessError as err:
            raise ParseError(str(err)) from None

    # formulas
    def formula(self) -> Formula:
        left = self.f_conj()
        while self.peek() == "|":
            self.take()
            left = Or(left, self.f_conj())
        return left

    def f_conj(self) -> Formula:
        left = self.f_unary()
        while self.peek() == "&":
            self.take()
            left = And(left, self.f_unary())
        return left

    def f_unary(self) -> Formula:
        tok = self.peek()
        if tok == "tt":
            self.take()
            return Tt()
        if tok == "ff":
            self.take()
            return Ff()
        if tok in ("[", "<"):
            self.take()
            a = self.action()
            self.take("]" if tok == "[" else ">")
            body = self.f_unary()
            return Box(a, body) if tok == "[" else Diamond(a, body)
        if tok in ("max", "min"):
            self.take()
            var = self.ident()
            self.take(".")
            self.bound.append(var)
            body = self.formula()
            self.bound.pop()
            return Max(var, body) if tok == "max" else Min(var, body)
        if tok == "(":
            self.take()
            inner = self.formula()
            self.take(")")
            return inner
        return self.variable(Var)

    # monitors
    def monitor(self) -> Monitor:
        left = self.m_conj()
        while self.peek() == "(+)":
            self.take()
            left = ParOr(left, self.m_conj())
        return left

    def m_conj(self) -> Monitor:
        left = self.m_unary()
        while self.peek() == "(*)":
            self.take()
            left = ParAnd(left, self.m_unary())
        return left

    def m_unary(self) -> Monitor:
        tok = self.peek()
        if tok == "no":
            self.take()
            return No()
        if tok == "end":
            self.take()
            return End()
        if tok == "rec":
            self.take()
            var = self.ident()
            self.take(".")
            self.bound.append(var)
            body = self.monitor()
            self.bound.pop()
            return Rec(var, body)
        if tok == "(":
            self.take()
            inner = self.monitor()
            self.take(")")
            return inner
        if self.peek(1) == ".":
            a = self.action()
            self.take(".")
            return Act(a, self.m_unary())
        return self.variable(MVar)


def parse_formula(text: str, alphabet: Optional[Iterable[str]] = None) -> Formula:
    """Parse a closed, guarded recHML formula.

    When ``alphabet`` is given every modality must name one of its labels."""
    p = _Parser(text, alphabet)
    return p.finish(p.formula())


def parse_monitor(text: str, alphabet: Optional[Iterable[str]] = None) -> Monitor:
    p = _Parser(text, alphabet)
    return p.finish(p.monitor())


# --------------------------------------------------------------------------
# Printing
# --------------------------------------------------------------------------

_BIN = {And: ("&", 2), Or: ("|", 1), ParAnd: ("(*)", 2), ParOr: ("(+)", 1)}


def to_text(t: Term) -> str:
    """Concrete syntax accepted by the parsers; ``parse(to_text(t)) == t``."""
    return _show(t, top=True)


def _show(t: Term, top: bool = False) -> str:
    if isinstance(t, Tt):
        return "tt"
    if isinstance(t, Ff):
        return "ff"
    if isinstance(t, No):
        return "no"
    if isinstance(t, End):
        return "end"
    if t.VARIABLE:
        return t.name
    if isinstance(t, Box):
        return f"[{t.act}]{_show_operand(t.body)}"
    if isinstance(t, Diamond):
        return f"<{t.act}>{_show_operand(t.body)}"
    if isinstance(t, Act):
        return f"{t.act}.{_show_operand(t.body)}"
    if t.BINDER:
        kw = {Max: "max", Min: "min", Rec: "rec"}[type(t)]
        body = _show(t.body, top=True)
        if type(t.body) in _BIN:
            body = f"({body})"
        text = f"{kw} {t.var}.{body}"
        return text if top else f"({text})"
    op, prec = _BIN[type(t)]
    left, right = t.left, t.right
    ls = _show(left)
    if type(left) in _BIN and _BIN[type(left)][1] < prec:
        ls = f"({ls})"
    rs = _show(right)
    if type(right) in _BIN and _BIN[type(right)][1] <= prec:
        rs = f"({rs})"
    return f"{ls} {op} {rs}"


def _show_operand(t: Term) -> str:
    s = _show(t)
    return f"({s})" if type(t) in _BIN else s


def map_terms(t: Term, fn: Callable[[Term], Optional[Term]]) -> Term:
    """Bottom-up rewrite helper used by tests and generators."""
    if t.KIDS:
        t = _rebuild(t, **{k: map_terms(getattr(t, k), fn) for k in t.KIDS})
    out = fn(t)
    return t if out is None else out
