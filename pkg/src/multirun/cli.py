"""Command-line interface: ``multirun <command> ...``."""

from __future__ import annotations

import argparse
import itertools
import json
import random
import sys
from pathlib import Path
from typing import List, Optional, Sequence, TextIO

from . import actors, ccs
from .analysis import reject, violates_derivation
from .fragments import format_bound, in_shml_det, in_shml_nf, is_shml, is_shml_or, lb
from .semantics import BoundExceeded, Det, DeterminacyError, evaluate, explore, traces
from .synthesis import FragmentError, normalize, rev_synth, synth
from .syntax import (
    ParseError,
    WellFormednessError,
    format_history,
    format_trace,
    parse_action,
    parse_formula,
    parse_monitor,
)
from .runtime import ordered_steps, run_multi

EXIT_OK, EXIT_INPUT, EXIT_BOUND, EXIT_VALIDATION = 0, 2, 3, 4


class InputError(ValueError):
    pass


def _text_arg(value: str) -> str:
    if value.startswith("@"):
        return Path(value[1:]).read_text()
    return value


def _det(value: Optional[str], internal_default: bool = False) -> Det:
    labels = [x.strip() for x in (value or "").split(",") if x.strip()]
    return Det(labels, internal_default=internal_default)


def parse_history_file(text: str):
    """One trace per line; blank lines are the empty trace; ``#`` lines are comments."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    out = set()
    for line in lines:
        if line.lstrip().startswith("#"):
            continue
        acts = tuple(parse_action(tok) for tok in line.split())
        if any(a.silent for a in acts):
            raise InputError("histories cannot mention the silent action")
        out.add(acts)
    return frozenset(out)


def format_history_file(H) -> str:
    return "".join(" ".join(str(a) for a in t) + "\n" for t in sorted(H, key=lambda t: (len(t), t)))


class _Out:
    def __init__(self, fmt: str, stream: TextIO):
        self.fmt = fmt
        self.stream = stream

    def text(self, line: str) -> None:
        if self.fmt == "text":
            print(line, file=self.stream)

    def record(self, kind: str, **fields) -> None:
        if self.fmt == "records":
            print(json.dumps({"record": kind, **fields}, sort_keys=True), file=self.stream)

    def derivation(self, d) -> None:
        for line in d.lines():
            self.text(line)
        for node, level in _walk(d):
            self.record("derivation-node", depth=level, rule=node.rule, conclusion=node.conclusion())


def _walk(d, level=0):
    yield d, level
    for p in d.premises:
        yield from _walk(p, level + 1)


# --------------------------------------------------------------------------
# Systems
# --------------------------------------------------------------------------


class _Loaded:
    def __init__(self, ilts, state, det, kind):
        self.ilts, self.state, self.det, self.kind = ilts, state, det, kind


def _looks_like_actor_file(text: str) -> bool:
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line.startswith(("actor ", "ether ")):
            return True
    return False


def load_system(path: str, name: Optional[str], det_arg: Optional[str], validate: bool = True,
                mailbox_bound: Optional[int] = None) -> _Loaded:
    text = Path(path).read_text()
    if _looks_like_actor_file(text):
        spec = actors.parse_actor_file(text)
        ilts, state = actors.actor_ilts(spec.config, spec.inputs, mailbox_bound)
        return _Loaded(ilts, state, ilts.det, "actor")
    sysfile = ccs.parse_system_file(text)
    if name is None:
        if len(sysfile.systems) != 1:
            raise InputError(f"choose a system with --name: {', '.join(sysfile.systems)}")
        name = next(iter(sysfile.systems))
    if name not in sysfile.systems:
        raise InputError(f"no system named {name!r}")
    labels = sysfile.det if det_arg is None else [x.strip() for x in det_arg.split(",") if x.strip()]
    p = sysfile.systems[name]
    ilts = ccs.ccs_ilts(p, labels, check=validate)
    return _Loaded(ilts, p, ilts.det, "ccs")


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def cmd_check(args, out: _Out) -> int:
    phi = parse_formula(_text_arg(args.formula))
    det = _det(args.det)
    shml = is_shml(phi)
    grammar = is_shml_or(phi)
    monitorable = grammar and in_shml_det(phi, det)
    nf = in_shml_nf(phi)
    bound = lb(phi) if grammar else None
    out.text(f"formula {phi}")
    out.text(f"shml {'yes' if shml else 'no'}")
    out.text(f"monitorable {'yes' if monitorable else 'no'}")
    out.text(f"normal-form {'yes' if nf else 'no'}")
    out.text(f"lower-bound {format_bound(bound) if bound is not None else 'undefined'}")
    warnings = []
    if bound is not None and bound == float("inf"):
        warnings.append("lower bound is infinite: no history can ever violate this formula")
    if bound is not None and not nf:
        warnings.append("the lower bound is only guaranteed for formulas in normal form")
    for w in warnings:
        out.text(f"warning {w}")
    out.record("check", formula=str(phi), shml=shml, monitorable=monitorable, normal_form=nf,
               lower_bound=None if bound is None else format_bound(bound), warnings=warnings)
    return EXIT_OK


def cmd_synth(args, out: _Out) -> int:
    phi = parse_formula(_text_arg(args.formula))
    m = synth(phi, _det(args.det) if args.det is not None else None)
    out.text(str(m))
    out.record("monitor", monitor=str(m))
    return EXIT_OK


def cmd_normalize(args, out: _Out) -> int:
    m = parse_monitor(_text_arg(args.monitor))
    n = normalize(m, _det(args.det))
    out.text(str(n))
    out.record("monitor", monitor=str(n))
    return EXIT_OK


def cmd_lb(args, out: _Out) -> int:
    phi = parse_formula(_text_arg(args.formula))
    if not is_shml_or(phi):
        raise InputError("lower bounds are defined on the safety grammar with disjunction")
    value = format_bound(lb(phi))
    out.text(value)
    if not in_shml_nf(phi):
        out.text("warning the lower bound is only guaranteed for formulas in normal form")
    out.record("lower-bound", formula=str(phi), value=value, normal_form=in_shml_nf(phi))
    return EXIT_OK


def _monitor_from_args(args, det):
    if args.monitor:
        return parse_monitor(_text_arg(args.monitor))
    if args.formula:
        phi = parse_formula(_text_arg(args.formula))
        return synth(phi, det)
    raise InputError("give --formula or --monitor")


def cmd_monitor(args, out: _Out) -> int:
    loaded = load_system(args.system, args.name, args.det, mailbox_bound=args.mailbox_bound)
    m = _monitor_from_args(args, loaded.det)
    start = parse_history_file(Path(args.history).read_text()) if args.history else frozenset()
    report = run_multi(loaded.ilts, loaded.state, m, max_runs=args.max_runs, max_steps=args.max_steps,
                       seed=args.seed, bias=args.bias, det=loaded.det, history=start)
    out.text(f"seed {report.seed}")
    out.text(f"monitor {m}")
    for i, r in enumerate(report.runs, 1):
        acts = " ".join(str(a) for a in r.trace)
        out.text(f"run {i} trace {acts}{' ' if acts else ''}aggregated {'yes' if r.aggregated else 'no'}")
        out.record("run", index=i, trace=[str(a) for a in r.trace], aggregated=r.aggregated,
                   truncated=r.truncated, seed=report.seed)
    out.text("history {")
    for t in sorted(report.history, key=lambda t: (len(t), t)):
        out.text("  " + format_trace(t))
    out.text("}")
    out.record("history", traces=[[str(a) for a in t] for t in sorted(report.history, key=lambda t: (len(t), t))])
    rejected = report.verdict is not None
    out.text(f"verdict {'rejected' if rejected else 'inconclusive'} after {len(report.runs)} runs "
             f"({report.aggregating_runs} aggregating)")
    out.record("verdict", rejected=rejected, runs=len(report.runs), aggregating_runs=report.aggregating_runs,
               seed=report.seed)
    if rejected:
        out.derivation(report.verdict.derivation)
    return EXIT_OK


def cmd_analyze(args, out: _Out) -> int:
    H = parse_history_file(Path(args.history).read_text())
    det = _det(args.det)
    out.text(f"history {format_history(H)}")
    if args.monitor:
        m = parse_monitor(_text_arg(args.monitor))
        verdict = reject(H, m, det, log=args.log)
        out.text(f"verdict {'rejected' if verdict.rejected else 'not rejected'} ({verdict.goals} goals)")
        out.record("verdict", rejected=verdict.rejected, goals=verdict.goals)
        if verdict.rejected:
            out.derivation(verdict.derivation)
        if args.log:
            for line in verdict.log:
                out.text(f"log {line}")
                out.record("log", line=line)
        return EXIT_OK
    if args.formula:
        phi = parse_formula(_text_arg(args.formula))
        d = violates_derivation(H, phi, det)
        out.text(f"verdict {'violated' if d else 'not violated'}")
        out.record("verdict", rejected=d is not None)
        if d is not None:
            out.derivation(d)
        return EXIT_OK
    raise InputError("give --monitor or --formula")


def minimal_violating_history(ilts, state, phi, det, max_len: int, max_size: int):
    """Smallest ``H`` within the traces of ``state`` (length at most ``max_len``) that violates ``phi``."""
    from .analysis import violates

    pool = sorted(traces(ilts, state, max_len), key=lambda t: (len(t), t))
    for k in range(1, max_size + 1):
        for combo in itertools.combinations(pool, k):
            H = frozenset(combo)
            if violates(H, phi, det):
                return H
    return None


def cmd_oracle(args, out: _Out) -> int:
    loaded = load_system(args.system, args.name, args.det, validate=not args.no_validate,
                         mailbox_bound=args.mailbox_bound)
    phi = parse_formula(_text_arg(args.formula))
    lts = explore(loaded.ilts, loaded.state, args.state_bound)
    holds = loaded.state in evaluate(lts, phi)
    out.text(f"states {len(lts)}")
    out.text(f"satisfied {'yes' if holds else 'no'}")
    fields = dict(states=len(lts), satisfied=holds)
    if args.search:
        if not is_shml_or(phi):
            raise InputError("history search needs a formula of the safety grammar with disjunction")
        H = minimal_violating_history(loaded.ilts, loaded.state, phi, loaded.det, args.trace_bound, args.max_size)
        if H is None:
            out.text(f"minimal-history none within length {args.trace_bound} and size {args.max_size}")
        else:
            out.text(f"minimal-history {format_history(H)} size {len(H)}")
            agrees = reject(H, synth(phi), loaded.det).rejected
            out.text(f"monitor-rejects {'yes' if agrees else 'no'}")
            fields.update(monitor_rejects=agrees)
        fields.update(minimal_history=None if H is None else [[str(a) for a in t] for t in sorted(H)])
    out.record("oracle", **fields)
    return EXIT_OK


def cmd_simulate(args, out: _Out) -> int:
    loaded = load_system(args.system, args.name, args.det, validate=False, mailbox_bound=args.mailbox_bound)
    rng = random.Random(args.seed)
    state = loaded.state
    out.text(f"seed {args.seed}")
    out.text(f"state {state}")
    for i in range(1, args.max_steps + 1):
        options = ordered_steps(loaded.ilts, state)
        if not options:
            out.text("stuck")
            break
        a, state = options[rng.randrange(len(options))]
        out.text(f"step {i} {a} {state}")
        out.record("step", index=i, action=str(a), state=str(state), seed=args.seed)
    return EXIT_OK


# --------------------------------------------------------------------------
# Entry point
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multirun", description="Multiple-run monitoring toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, det=True):
        if det:
            p.add_argument("--det", help="comma separated deterministic actions, e.g. r,s or r,~ut")
        p.add_argument("--format", choices=("text", "records"), default="text")
        return p

    p = common(sub.add_parser("check", help="fragment membership and lower bound"))
    p.add_argument("formula", help="formula text or @file")
    p = common(sub.add_parser("synth", help="synthesise a monitor"))
    p.add_argument("formula")
    p = common(sub.add_parser("normalize", help="normalise a monitor"))
    p.add_argument("monitor")
    p = common(sub.add_parser("lb", help="history lower bound"), det=False)
    p.add_argument("formula")

    def system_opts(p):
        p.add_argument("--system", required=True, help="system description file (CCS or actors)")
        p.add_argument("--name", help="system name inside a CCS file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--max-steps", type=int, default=1000)
        p.add_argument("--mailbox-bound", type=int, default=None)

    p = common(sub.add_parser("monitor", help="monitor a system over several runs"))
    system_opts(p)
    p.add_argument("--formula")
    p.add_argument("--monitor")
    p.add_argument("--history", help="initial history file")
    p.add_argument("--max-runs", type=int, default=100)
    p.add_argument("--bias", choices=("explore", "uniform"), default="uniform")

    p = common(sub.add_parser("analyze", help="offline analysis of a history"))
    p.add_argument("--history", required=True)
    p.add_argument("--monitor")
    p.add_argument("--formula")
    p.add_argument("--log", action="store_true", help="print failed proof obligations")

    p = common(sub.add_parser("oracle", help="ground truth by model checking"))
    system_opts(p)
    p.add_argument("--formula", required=True)
    p.add_argument("--trace-bound", type=int, default=6)
    p.add_argument("--max-size", type=int, default=4)
    p.add_argument("--state-bound", type=int, default=10_000)
    p.add_argument("--search", action="store_true", help="search for a minimal violating history")
    p.add_argument("--no-validate", action="store_true", help="skip the determinacy check")

    p = common(sub.add_parser("simulate", help="random walk through a system"))
    system_opts(p)
    return parser


COMMANDS = {
    "check": cmd_check,
    "synth": cmd_synth,
    "normalize": cmd_normalize,
    "lb": cmd_lb,
    "monitor": cmd_monitor,
    "analyze": cmd_analyze,
    "oracle": cmd_oracle,
    "simulate": cmd_simulate,
}


def main(argv: Optional[Sequence[str]] = None, stdout: TextIO = None, stderr: TextIO = None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    out = _Out(args.format, stdout)
    try:
        return COMMANDS[args.command](args, out)
    except DeterminacyError as err:
        print(f"error: {err}", file=stderr)
        return EXIT_VALIDATION
    except BoundExceeded as err:
        print(f"error: {err}", file=stderr)
        return EXIT_BOUND
    except (ParseError, WellFormednessError, FragmentError, InputError, OSError, ValueError) as err:
        print(f"error: {err}", file=stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
