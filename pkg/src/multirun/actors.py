"""An asynchronous actor calculus as an ILTS backend.

Actors own a mailbox, communicate by messages in transit, match messages
with patterns, spawn children and scope names. States are kept in a
canonical prenex form (all scopes hoisted, parallel components sorted,
bound names numbered) so that structurally equivalent systems are equal.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

from .semantics import Ilts
from .syntax import TAU, Action, ParseError, cached_hash, ext, internal

# --------------------------------------------------------------------------
# Values and patterns
# --------------------------------------------------------------------------


@cached_hash
@dataclass(frozen=True, order=True)
class Atom:
    name: str

    def __str__(self) -> str:
        return self.name


@cached_hash
@dataclass(frozen=True, order=True)
class Pid:
    name: str

    def __str__(self) -> str:
        return self.name


@cached_hash
@dataclass(frozen=True, order=True)
class VarV:
    """A value variable bound by a pattern, ``spawn`` or ``self``."""

    name: str

    def __str__(self) -> str:
        return self.name


Value = Union[Atom, Pid, VarV, tuple]


def show_value(v: Value) -> str:
    if isinstance(v, tuple):
        return "{" + ",".join(show_value(x) for x in v) + "}"
    return str(v)


def value_names(v: Value) -> FrozenSet[str]:
    """Free actor ids in a value."""
    if isinstance(v, Pid):
        return frozenset((v.name,))
    if isinstance(v, tuple):
        out: FrozenSet[str] = frozenset()
        for x in v:
            out |= value_names(x)
        return out
    return frozenset()


def pattern_vars(p: Value) -> FrozenSet[str]:
    if isinstance(p, VarV):
        return frozenset((p.name,))
    if isinstance(p, tuple):
        out: FrozenSet[str] = frozenset()
        for x in p:
            out |= pattern_vars(x)
        return out
    return frozenset()


def match(p: Value, v: Value) -> Optional[Dict[str, Value]]:
    """Match a pattern against a closed value; ``None`` on failure."""
    if isinstance(p, VarV):
        return {p.name: v}
    if isinstance(p, tuple):
        if not isinstance(v, tuple) or len(p) != len(v):
            return None
        out: Dict[str, Value] = {}
        for pi, vi in zip(p, v):
            got = match(pi, vi)
            if got is None:
                return None
            for k, x in got.items():
                if k in out and out[k] != x:
                    return None
                out[k] = x
        return out
    return {} if p == v else None


def absent(p: Value, mailbox: Sequence[Value]) -> bool:
    """No message in ``mailbox`` matches ``p``."""
    return all(match(p, v) is None for v in mailbox)


def _map_value(v: Value, fn) -> Value:
    if isinstance(v, tuple):
        return tuple(_map_value(x, fn) for x in v)
    return fn(v)


# --------------------------------------------------------------------------
# Expressions
# --------------------------------------------------------------------------


class Expr:
    __slots__ = ()

    def __str__(self) -> str:
        return show_expr(self)


@cached_hash
@dataclass(frozen=True)
class Done(Expr):
    pass


@cached_hash
@dataclass(frozen=True)
class Send(Expr):
    target: Value
    payload: Value
    cont: Expr


@cached_hash
@dataclass(frozen=True)
class Receive(Expr):
    branches: Tuple[Tuple[Value, Expr], ...]


@cached_hash
@dataclass(frozen=True)
class Spawn(Expr):
    body: Expr
    binder: str
    cont: Expr


@cached_hash
@dataclass(frozen=True)
class SelfE(Expr):
    binder: str
    cont: Expr


@cached_hash
@dataclass(frozen=True)
class ERec(Expr):
    var: str
    body: Expr


@cached_hash
@dataclass(frozen=True)
class ECall(Expr):
    name: str


def show_expr(e: Expr) -> str:
    if isinstance(e, Done):
        return "done"
    if isinstance(e, Send):
        head = f"{show_value(e.target)}!{show_value(e.payload)}"
        return head if isinstance(e.cont, Done) else f"{head}.{show_expr(e.cont)}"
    if isinstance(e, Receive):
        inner = ", ".join(f"{show_value(p)} -> {show_expr(b)}" for p, b in e.branches)
        return "rcv {" + inner + "}"
    if isinstance(e, Spawn):
        return f"spawn ({show_expr(e.body)}) as {e.binder} in {show_expr(e.cont)}"
    if isinstance(e, SelfE):
        return f"self {e.binder} in {show_expr(e.cont)}"
    if isinstance(e, ERec):
        return f"rec {e.var}.{show_expr(e.body)}"
    return e.name


def map_values(e: Expr, fn) -> Expr:
    """Apply ``fn`` to every atomic value occurrence (including patterns)."""
    if isinstance(e, Send):
        return Send(_map_value(e.target, fn), _map_value(e.payload, fn), map_values(e.cont, fn))
    if isinstance(e, Receive):
        return Receive(tuple((_map_value(p, fn), map_values(b, fn)) for p, b in e.branches))
    if isinstance(e, Spawn):
        return Spawn(map_values(e.body, fn), e.binder, map_values(e.cont, fn))
    if isinstance(e, SelfE):
        return SelfE(e.binder, map_values(e.cont, fn))
    if isinstance(e, ERec):
        return ERec(e.var, map_values(e.body, fn))
    return e


def expr_names(e: Expr) -> FrozenSet[str]:
    found: Set[str] = set()

    def visit(v):
        if isinstance(v, Pid):
            found.add(v.name)
        return v

    map_values(e, visit)
    return frozenset(found)


def subst_values(e: Expr, sigma: Mapping[str, Value]) -> Expr:
    """Replace free value variables; ``sigma`` maps to closed values."""
    if not sigma:
        return e

    def val(v):
        return _map_value(v, lambda x: sigma.get(x.name, x) if isinstance(x, VarV) else x)

    if isinstance(e, Send):
        return Send(val(e.target), val(e.payload), subst_values(e.cont, sigma))
    if isinstance(e, Receive):
        out = []
        for p, b in e.branches:
            inner = {k: v for k, v in sigma.items() if k not in pattern_vars(p)}
            out.append((p, subst_values(b, inner)))
        return Receive(tuple(out))
    if isinstance(e, Spawn):
        inner = {k: v for k, v in sigma.items() if k != e.binder}
        return Spawn(subst_values(e.body, sigma), e.binder, subst_values(e.cont, inner))
    if isinstance(e, SelfE):
        inner = {k: v for k, v in sigma.items() if k != e.binder}
        return SelfE(e.binder, subst_values(e.cont, inner))
    if isinstance(e, ERec):
        return ERec(e.var, subst_values(e.body, sigma))
    return e


def subst_rec(e: Expr, name: str, r: Expr) -> Expr:
    if isinstance(e, ECall):
        return r if e.name == name else e
    if isinstance(e, Send):
        return Send(e.target, e.payload, subst_rec(e.cont, name, r))
    if isinstance(e, Receive):
        return Receive(tuple((p, subst_rec(b, name, r)) for p, b in e.branches))
    if isinstance(e, Spawn):
        return Spawn(subst_rec(e.body, name, r), e.binder, subst_rec(e.cont, name, r))
    if isinstance(e, SelfE):
        return SelfE(e.binder, subst_rec(e.cont, name, r))
    if isinstance(e, ERec):
        return e if e.var == name else ERec(e.var, subst_rec(e.body, name, r))
    return e


def canonical_expr(e: Expr, vals: Tuple[str, ...] = (), recs: Tuple[str, ...] = ()) -> Expr:
    """Rename bound value and recursion variables after their binding depth."""

    def lookup(env, name, prefix):
        for d in range(len(env) - 1, -1, -1):
            if env[d] == name:
                return f"{prefix}{d}"
        return name

    def val(v, env):
        return _map_value(v, lambda x: VarV(lookup(env, x.name, "V")) if isinstance(x, VarV) else x)

    if isinstance(e, Send):
        return Send(val(e.target, vals), val(e.payload, vals), canonical_expr(e.cont, vals, recs))
    if isinstance(e, Receive):
        out = []
        for p, b in e.branches:
            names = sorted(pattern_vars(p), key=lambda n: _first_pos(p, n))
            env = vals + tuple(names)
            out.append((val(p, env), canonical_expr(b, env, recs)))
        return Receive(tuple(out))
    if isinstance(e, Spawn):
        env = vals + (e.binder,)
        return Spawn(canonical_expr(e.body, vals, recs), f"V{len(vals)}", canonical_expr(e.cont, env, recs))
    if isinstance(e, SelfE):
        env = vals + (e.binder,)
        return SelfE(f"V{len(vals)}", canonical_expr(e.cont, env, recs))
    if isinstance(e, ERec):
        return ERec(f"R{len(recs)}", canonical_expr(e.body, vals, recs + (e.var,)))
    if isinstance(e, ECall):
        return ECall(lookup(recs, e.name, "R"))
    return e


def _first_pos(p: Value, name: str) -> int:
    flat = []

    def walk(v):
        if isinstance(v, tuple):
            for x in v:
                walk(x)
        else:
            flat.append(v)

    walk(p)
    for i, v in enumerate(flat):
        if isinstance(v, VarV) and v.name == name:
            return i
    return len(flat)


# --------------------------------------------------------------------------
# Systems
# --------------------------------------------------------------------------


class System:
    __slots__ = ()


@cached_hash
@dataclass(frozen=True)
class SNil(System):
    pass


@cached_hash
@dataclass(frozen=True)
class ActorNode(System):
    pid: str
    expr: Expr
    mailbox: Tuple[Value, ...] = ()

    def __str__(self) -> str:
        q = ":".join(show_value(v) for v in self.mailbox) or "eps"
        return f"{self.pid}<{show_expr(self.expr)} | {q}>"


@cached_hash
@dataclass(frozen=True)
class Ether(System):
    target: Value
    payload: Value

    def __str__(self) -> str:
        return f"{show_value(self.target)}!{show_value(self.payload)}"


@cached_hash
@dataclass(frozen=True)
class SPar(System):
    left: System
    right: System


@cached_hash
@dataclass(frozen=True)
class New(System):
    name: str
    body: System


def par(*parts: System) -> System:
    parts = [p for p in parts if not isinstance(p, SNil)]
    if not parts:
        return SNil()
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = SPar(p, out)
    return out


def new(names: Iterable[str], body: System) -> System:
    for n in reversed(list(names)):
        body = New(n, body)
    return body


Component = Union[ActorNode, Ether]


def _rename_component(c: Component, mapping: Mapping[str, str]) -> Component:
    if not mapping:
        return c

    def fn(v):
        return Pid(mapping[v.name]) if isinstance(v, Pid) and v.name in mapping else v

    if isinstance(c, ActorNode):
        return ActorNode(mapping.get(c.pid, c.pid), map_values(c.expr, fn),
                         tuple(_map_value(v, fn) for v in c.mailbox))
    return Ether(_map_value(c.target, fn), _map_value(c.payload, fn))


def component_names(c: Component) -> FrozenSet[str]:
    if isinstance(c, ActorNode):
        out = frozenset((c.pid,)) | expr_names(c.expr)
        for v in c.mailbox:
            out |= value_names(v)
        return out
    return value_names(c.target) | value_names(c.payload)


def free_names(A: System) -> FrozenSet[str]:
    if isinstance(A, (ActorNode, Ether)):
        return component_names(A)
    if isinstance(A, SPar):
        return free_names(A.left) | free_names(A.right)
    if isinstance(A, New):
        return free_names(A.body) - {A.name}
    return frozenset()


def free_ids(A: System) -> FrozenSet[str]:
    """Ids of actors running freely in ``A``."""
    if isinstance(A, ActorNode):
        return frozenset((A.pid,))
    if isinstance(A, SPar):
        return free_ids(A.left) | free_ids(A.right)
    if isinstance(A, New):
        return free_ids(A.body) - {A.name}
    return frozenset()


_tmp = itertools.count()


def _flatten(A: System, env: Dict[str, str], bound: List[str], parts: List[Component]) -> None:
    if isinstance(A, SNil):
        return
    if isinstance(A, (ActorNode, Ether)):
        c = A
        if isinstance(c, ActorNode):
            c = ActorNode(c.pid, canonical_expr(c.expr), c.mailbox)
        parts.append(_rename_component(c, env))
        return
    if isinstance(A, SPar):
        _flatten(A.left, env, bound, parts)
        _flatten(A.right, env, bound, parts)
        return
    if isinstance(A, New):
        tmp = f"_t{next(_tmp)}"
        bound.append(tmp)
        inner = dict(env)
        inner[A.name] = tmp
        _flatten(A.body, inner, bound, parts)
        return
    raise TypeError(f"not an actor system: {A!r}")


EXACT_BINDER_LIMIT = 5


def _canonical_parts(bound: Sequence[str], parts: Sequence[Component]) -> Tuple[int, Tuple[Component, ...]]:
    """Number bound names ``_b0..`` and sort components, minimising the rendering."""
    n = len(bound)
    if n == 0:
        return 0, tuple(sorted(parts, key=str))
    if n <= EXACT_BINDER_LIMIT:
        best = None
        for perm in itertools.permutations(range(n)):
            mapping = {bound[i]: f"_b{perm[i]}" for i in range(n)}
            renamed = sorted((_rename_component(c, mapping) for c in parts), key=str)
            key = tuple(str(c) for c in renamed)
            if best is None or key < best[0]:
                best = (key, tuple(renamed))
        return n, best[1]
    # large scopes: order binders by first occurrence in the masked sort order
    masked = {b: "_" for b in bound}
    order = sorted(parts, key=lambda c: str(_rename_component(c, masked)))
    seen: List[str] = []
    for c in order:
        for name in sorted(component_names(c) & set(bound), key=lambda x: str(c).find(x)):
            if name not in seen:
                seen.append(name)
    seen += [b for b in bound if b not in seen]
    mapping = {b: f"_b{i}" for i, b in enumerate(seen)}
    return n, tuple(sorted((_rename_component(c, mapping) for c in parts), key=str))


@cached_hash
@dataclass(frozen=True)
class ActorState:
    """Canonical configuration ``<K | O> new _b0.._b{n-1}.(parts)``."""

    knowledge: FrozenSet[str]
    observers: FrozenSet[str]
    bound: int
    parts: Tuple[Component, ...]

    def bound_names(self) -> List[str]:
        return [f"_b{i}" for i in range(self.bound)]

    def system(self) -> System:
        return new(self.bound_names(), par(*self.parts))

    def __str__(self) -> str:
        scope = "".join(f"new {b}." for b in self.bound_names())
        body = " || ".join(str(c) for c in self.parts) or "nil"
        return (f"<{{{', '.join(sorted(self.knowledge))}}} | {{{', '.join(sorted(self.observers))}}}> "
                f"{scope}({body})")


def _make_state(K, O, bound, parts) -> ActorState:
    ids = [c.pid for c in parts if isinstance(c, ActorNode)]
    if len(ids) != len(set(ids)):
        raise ValueError("two actors share an id (single-receiver property)")
    n, cparts = _canonical_parts(bound, parts)
    return ActorState(frozenset(K), frozenset(O), n, cparts)


def congruence_normalize(A: System) -> System:
    """Canonical representative of the structural congruence class of ``A``."""
    bound: List[str] = []
    parts: List[Component] = []
    _flatten(A, {}, bound, parts)
    n, cparts = _canonical_parts(bound, parts)
    return new([f"_b{i}" for i in range(n)], par(*cparts))


def structurally_equivalent(A: System, B: System) -> bool:
    return congruence_normalize(A) == congruence_normalize(B)


@cached_hash
@dataclass(frozen=True)
class ActorConfig:
    knowledge: FrozenSet[str]
    observers: FrozenSet[str]
    system: System


def initial_state(cfg: ActorConfig) -> ActorState:
    """Check well-formedness of ``cfg`` and bring it into canonical form."""
    fn = free_names(cfg.system)
    K = frozenset(cfg.knowledge) | fn
    O = frozenset(cfg.observers)
    if not O <= K:
        raise ValueError("observers must be known ids")
    clash = free_ids(cfg.system) & O
    if clash:
        raise ValueError(f"actor ids cannot be observers: {sorted(clash)}")
    bound: List[str] = []
    parts: List[Component] = []
    _flatten(cfg.system, {}, bound, parts)
    return _make_state(K, O, bound, parts)


# --------------------------------------------------------------------------
# Transitions
# --------------------------------------------------------------------------


@cached_hash
@dataclass(frozen=True)
class ActorAction:
    """``in`` i?v, ``out`` i!v, ``outbound`` (j)i!j, ``comm`` i.v, ``ncomm``, ``tau``."""

    kind: str
    subject: str = ""
    value: Value = ()

    def to_action(self) -> Action:
        v = show_value(self.value) if self.kind != "ncomm" else ""
        if self.kind == "in":
            return ext(f"{self.subject}?{v}")
        if self.kind == "out":
            return ext(f"{self.subject}!{v}")
        if self.kind == "outbound":
            return ext(f"{self.subject}!!{v}")
        if self.kind == "comm":
            return internal(f"{self.subject}:{v}")
        if self.kind == "ncomm":
            return internal("ncomm")
        return TAU


def actor_det(action: Action) -> bool:
    """Inputs, free outputs and free communications are deterministic."""
    if action.internal:
        return action.label != "ncomm"
    if action.external:
        return "!!" not in action.label
    return False


def _fresh_free(avoid: Iterable[str]) -> str:
    avoid = set(avoid)
    for k in itertools.count():
        name = f"n{k}"
        if name not in avoid:
            return name
    raise AssertionError


def _first_readable(branches, mailbox) -> Optional[Tuple[int, Dict[str, Value], Expr]]:
    for n, v in enumerate(mailbox):
        for p, body in branches:
            sigma = match(p, v)
            if sigma is not None:
                return n, sigma, body
    return None


def actor_step(state: ActorState, inputs: Mapping[str, Sequence[Value]] = None,
               mailbox_bound: Optional[int] = None) -> List[Tuple[ActorAction, ActorState]]:
    """All successors of a canonical configuration.

    ``inputs`` lists, per actor id, the values observers may send to it;
    ``mailbox_bound`` caps mailbox length for external inputs only."""
    inputs = inputs or {}
    K, O = state.knowledge, state.observers
    bound = state.bound_names()
    bset = set(bound)
    parts = list(state.parts)
    actors = {c.pid: i for i, c in enumerate(parts) if isinstance(c, ActorNode)}
    out: List[Tuple[ActorAction, ActorState]] = []

    def emit(action, new_parts, K2=K, O2=O, bound2=None):
        out.append((action, _make_state(K2, O2, bound if bound2 is None else bound2, new_parts)))

    def replace(i, *new):
        return parts[:i] + list(new) + parts[i + 1:]

    for i, c in enumerate(parts):
        if isinstance(c, ActorNode):
            e, q = c.expr, c.mailbox
            if isinstance(e, Send):
                emit(ActorAction("tau"), replace(i, ActorNode(c.pid, e.cont, q), Ether(e.target, e.payload)))
            elif isinstance(e, Receive):
                got = _first_readable(e.branches, q)
                if got is not None:
                    n, sigma, body = got
                    emit(ActorAction("tau"),
                         replace(i, ActorNode(c.pid, canonical_expr(subst_values(body, sigma)), q[:n] + q[n + 1:])))
            elif isinstance(e, ERec):
                emit(ActorAction("tau"), replace(i, ActorNode(c.pid, canonical_expr(subst_rec(e.body, e.var, e)), q)))
            elif isinstance(e, SelfE):
                body = subst_values(e.cont, {e.binder: Pid(c.pid)})
                emit(ActorAction("tau"), replace(i, ActorNode(c.pid, canonical_expr(body), q)))
            elif isinstance(e, Spawn):
                j = f"_s{len(bound)}"
                cont = subst_values(e.cont, {e.binder: Pid(j)})
                emit(ActorAction("tau"),
                     replace(i, ActorNode(c.pid, canonical_expr(cont), q), ActorNode(j, canonical_expr(e.body), ())),
                     bound2=bound + [j])
            if c.pid not in bset and (mailbox_bound is None or len(q) < mailbox_bound):
                for v in inputs.get(c.pid, ()):
                    names = value_names(v)
                    emit(ActorAction("in", c.pid, v), replace(i, ActorNode(c.pid, e, q + (v,))),
                         K2=K | names, O2=O | (names - K))
        else:
            target, v = c.target, c.payload
            if not isinstance(target, Pid):
                continue
            names = value_names(v)
            if target.name in actors:
                k = actors[target.name]
                r = parts[k]
                delivered = ActorNode(r.pid, r.expr, r.mailbox + (v,))
                new_parts = [delivered if idx == k else x for idx, x in enumerate(parts) if idx != i]
                scoped = target.name in bset or bool(names & bset)
                action = ActorAction("ncomm") if scoped else ActorAction("comm", target.name, v)
                emit(action, new_parts)
            elif target.name in O and target.name not in bset:
                if not names & bset:
                    emit(ActorAction("out", target.name, v), replace(i))
                elif isinstance(v, Pid):
                    fresh = _fresh_free(K | set(itertools.chain.from_iterable(component_names(x) for x in parts)))
                    mapping = {v.name: fresh}
                    rest = [_rename_component(x, mapping) for idx, x in enumerate(parts) if idx != i]
                    emit(ActorAction("outbound", target.name, Pid(fresh)), rest,
                         K2=K | {fresh}, bound2=[b for b in bound if b != v.name])
    return out


class ActorIlts(Ilts):
    """Actor configurations as ILTS states, with the fixed determinacy map."""

    def __init__(self, inputs: Mapping[str, Sequence[Value]] = None, mailbox_bound: Optional[int] = None):
        self.inputs = {k: tuple(v) for k, v in (inputs or {}).items()}
        self.mailbox_bound = mailbox_bound
        self._cache: Dict[ActorState, FrozenSet] = {}

    def step(self, state: ActorState):
        got = self._cache.get(state)
        if got is None:
            got = frozenset((a.to_action(), s) for a, s in actor_step(state, self.inputs, self.mailbox_bound))
            self._cache[state] = got
        return got

    def det(self, action: Action) -> bool:
        return actor_det(action)


def actor_ilts(cfg: ActorConfig, inputs: Mapping[str, Sequence[Value]] = None,
               mailbox_bound: Optional[int] = None) -> Tuple[ActorIlts, ActorState]:
    return ActorIlts(inputs, mailbox_bound), initial_state(cfg)


# --------------------------------------------------------------------------
# Parsing
# --------------------------------------------------------------------------

_ETOK = re.compile(r"\s*(?:(?P<sym>->|[{}(),.!?\[\]=])|(?P<word>[A-Za-z_][\w']*))")
_EKEYWORDS = {"done", "nil", "rcv", "spawn", "as", "in", "self", "rec"}


class _ExprParser:
    def __init__(self, text: str, ids: Set[str]):
        self.toks = []
        pos = 0
        text = text.rstrip()
        while pos < len(text):
            m = _ETOK.match(text, pos)
            if not m or m.end() == pos:
                raise ParseError(f"unexpected character {text[pos:].lstrip()[:1]!r}", pos)
            self.toks.append((m.group("sym") or m.group("word"), m.start(m.lastgroup)))
            pos = m.end()
        self.toks.append(("<eof>", len(text)))
        self.i = 0
        self.ids = ids

    def peek(self, k=0):
        return self.toks[min(self.i + k, len(self.toks) - 1)][0]

    def take(self, expected=None):
        tok, at = self.toks[self.i]
        if expected is not None and tok != expected:
            raise ParseError(f"expected {expected!r}, found {tok!r}", at)
        self.i += 1
        return tok

    def end(self):
        if self.peek() != "<eof>":
            raise ParseError(f"trailing input {self.peek()!r}", self.toks[self.i][1])

    def name(self) -> str:
        tok = self.take()
        if not re.fullmatch(r"[A-Za-z][\w']*", tok) or tok in _EKEYWORDS:
            raise ParseError(f"expected a name, found {tok!r}", self.toks[self.i - 1][1])
        return tok

    def value(self) -> Value:
        if self.peek() == "{":
            self.take()
            items = []
            if self.peek() != "}":
                items.append(self.value())
                while self.peek() == ",":
                    self.take()
                    items.append(self.value())
            self.take("}")
            return tuple(items)
        tok = self.name()
        if tok[0].isupper():
            return VarV(tok)
        return Pid(tok) if tok in self.ids else Atom(tok)

    def expr(self) -> Expr:
        tok = self.peek()
        if tok in ("done", "nil"):
            self.take()
            return Done()
        if tok == "(":
            self.take()
            e = self.expr()
            self.take(")")
            return e
        if tok == "rcv":
            self.take()
            self.take("{")
            branches = [self.branch()]
            while self.peek() == ",":
                self.take()
                branches.append(self.branch())
            self.take("}")
            return Receive(tuple(branches))
        if tok == "spawn":
            self.take()
            body = self.expr()
            self.take("as")
            x = self.name()
            self.take("in")
            return Spawn(body, x, self.expr())
        if tok == "self":
            self.take()
            x = self.name()
            self.take("in")
            return SelfE(x, self.expr())
        if tok == "rec":
            self.take()
            x = self.name()
            self.take(".")
            return ERec(x, self.expr())
        if tok and tok[0].isupper() and self.peek(1) != "!":
            self.take()
            return ECall(tok)
        target = self.value()
        self.take("!")
        payload = self.value()
        if self.peek() == ".":
            self.take()
            return Send(target, payload, self.expr())
        return Send(target, payload, Done())

    def branch(self):
        p = self.value()
        self.take("->")
        return p, self.expr()


def parse_expr(text: str, ids: Iterable[str] = ()) -> Expr:
    """Parse an actor expression. Lower-case names in ``ids`` are actor ids,
    other lower-case names are atoms and capitalised names are variables."""
    p = _ExprParser(text, set(ids))
    e = p.expr()
    p.end()
    return e


def parse_value(text: str, ids: Iterable[str] = ()) -> Value:
    p = _ExprParser(text, set(ids))
    v = p.value()
    p.end()
    return v


@dataclass
class ActorSpec:
    config: ActorConfig
    inputs: Dict[str, Tuple[Value, ...]]


def _id_set(text: str) -> List[str]:
    text = text.strip()
    if not (text.startswith("{") and text.endswith("}")):
        raise ParseError(f"expected a set {{...}}, found {text!r}")
    return [x.strip() for x in text[1:-1].split(",") if x.strip()]


def parse_actor_file(text: str) -> ActorSpec:
    """Actor system description.

    Lines: ``actor <id> = <expr>``, ``actor <id> [v, ...] = <expr>`` (initial
    mailbox), ``ether <id> ! <value>``, ``scope {ids}``, ``knowledge {ids}``,
    ``observers {ids}`` and ``input <id> ? <value>`` (values observers may send)."""
    lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append((lineno, line))
    ids: Set[str] = set()
    for _, line in lines:
        m = re.match(r"(actor|ether|input)\s+([a-z][\w']*)", line)
        if m:
            ids.add(m.group(2))
        m = re.match(r"(scope|knowledge|observers)\s+(\{.*\})$", line)
        if m:
            ids.update(_id_set(m.group(2)))
    parts: List[System] = []
    scope: List[str] = []
    knowledge: Set[str] = set()
    observers: Set[str] = set()
    inputs: Dict[str, List[Value]] = {}
    for lineno, line in lines:
        try:
            m = re.fullmatch(r"actor\s+([a-z][\w']*)\s*(\[[^\]]*\])?\s*=\s*(.+)", line)
            if m:
                mailbox: Tuple[Value, ...] = ()
                if m.group(2):
                    inner = m.group(2)[1:-1].strip()
                    mailbox = parse_value("{" + inner + "}", ids) if inner else ()
                parts.append(ActorNode(m.group(1), parse_expr(m.group(3), ids), tuple(mailbox)))
                continue
            m = re.fullmatch(r"ether\s+([a-z][\w']*)\s*!\s*(.+)", line)
            if m:
                parts.append(Ether(Pid(m.group(1)), parse_value(m.group(2), ids)))
                continue
            m = re.fullmatch(r"input\s+([a-z][\w']*)\s*\?\s*(.+)", line)
            if m:
                inputs.setdefault(m.group(1), []).append(parse_value(m.group(2), ids))
                continue
            m = re.fullmatch(r"(scope|knowledge|observers)\s+(\{.*\})", line)
            if m:
                names = _id_set(m.group(2))
                if m.group(1) == "scope":
                    scope.extend(names)
                elif m.group(1) == "knowledge":
                    knowledge.update(names)
                else:
                    observers.update(names)
                continue
        except ParseError as err:
            raise ParseError(f"line {lineno}: {err}") from None
        raise ParseError(f"line {lineno}: cannot parse {line!r}")
    system = new(scope, par(*parts))
    cfg = ActorConfig(frozenset(knowledge - set(scope)), frozenset(observers), system)
    return ActorSpec(cfg, {k: tuple(v) for k, v in inputs.items()})
