"""Interactive debugging sessions over the triple store.

Commands are Datalog-style atoms, one per line::

    load(programs/maxsub.c)
    spec(specs/observe.rq)
    run(main)
    break(file:ln5)
    inspect(file:ln3Var)
    step(-2)
    span(gmax, file:ln2Var, file:ln9, set(cond(file:ln5, file:ln3Var, >, 0)))
    verify(gmax, all-positive)
    query(SELECT ?v WHERE { ?st pd:value ?v })
    save(sessions/snap)

`query(...)` captures its argument verbatim (queries contain commas and
braces); every other command is parsed as a nested atom where arguments
are integers, bare tokens (IRIs, qnames, paths, relation symbols),
`|`-separated alternation lists, or nested atoms.

A session owns one store, at most one loaded program, and at most one
run. Navigation (break / inspect / step / goto) moves a cursor over the
logged records and never re-executes the program. `save` writes a
directory holding the four graphs as triple files plus a manifest;
`restore` rebuilds the session from such a directory without running
anything.

Replayability contract: `execute` is deterministic, so feeding a saved
history line by line into a fresh session reproduces the transcript
byte for byte.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import (
    CommandError,
    DebuggerError,
    NoCursor,
    NoTrace,
    SessionStateError,
)
from .instrument import InstrumentationPlan, InstrumentedUnit, instrument, plan_from_query
from .lang import SourceUnit, parse, statement_at
from .lang.facts import extract_facts
from .reasoner import (
    STRATEGIES,
    ConsecutiveQuery,
    DomainAxiom,
    check_inter,
    check_intra,
    check_open_world,
    parse_property,
)
from .reasoner.strategies import REL_CAP
from .runtime import (
    ExitStatus,
    RunResult,
    records_from_triples,
    run as run_unit,
    to_trace_triples,
)
from .spans import (
    RELATIONS,
    AbstractionCommand,
    IntervalFilter,
    SetFilter,
    Span,
    SpanCell,
    StateCondition,
    build_span,
    materialize_graph,
)
from .store import TripleStore
from .terms import Graph, PrefixTable, RDF_TYPE, Triple

MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.json"
PROGRAM_NAME = "program.c"
SPEC_NAME = "observe.rq"
GRAPH_FILES = {
    Graph.SOURCE: "source.nt",
    Graph.TRACE: "trace.nt",
    Graph.SPAN: "span.nt",
    Graph.EXTERNAL: "external.nt",
}

# Commands whose single argument is captured verbatim, unparsed.
RAW_COMMANDS = frozenset({"query"})


# -- command atoms ---------------------------------------------------------

@dataclass(frozen=True)
class CommandAtom:
    name: str
    args: tuple

    def arity(self) -> int:
        return len(self.args)


_NAME_RE = re.compile(r"^[A-Za-z_][\w.-]*$")
_INT_RE = re.compile(r"^[+-]?\d+$")


def _split_top(text: str) -> list:
    """Split on commas at bracket/parenthesis depth zero; keeps empty slots."""
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
            if depth < 0:
                raise CommandError(f"unbalanced {ch!r} in {text!r}")
        elif ch == "," and depth == 0:
            parts.append(text[start:i])
            start = i + 1
    if depth != 0:
        raise CommandError(f"unbalanced '(' in {text!r}")
    parts.append(text[start:])
    return parts


def _parse_arg(text: str):
    """One argument: int, nested atom, `|` alternation, or bare token."""
    text = text.strip()
    if not text:
        return None
    if text.startswith("[") and text.endswith("]"):
        inner = text[1:-1]
        if inner.strip() == "":
            return []
        return [_parse_arg(p) for p in _split_top(inner)]
    open_paren = text.find("(")
    if open_paren > 0 and text.endswith(")"):
        head = text[:open_paren].strip()
        if _NAME_RE.match(head):
            inner = text[open_paren + 1:-1]
            args = [] if inner.strip() == "" else [_parse_arg(p) for p in _split_top(inner)]
            return CommandAtom(head, tuple(args))
    if "|" in text:
        depth = 0
        for ch in text:
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif ch == "|" and depth > 0:
                break
        else:
            items = [p.strip() for p in text.split("|")]
            if any(not p for p in items):
                raise CommandError(f"empty alternative in {text!r}")
            return tuple(_parse_arg(p) for p in items)
    if _INT_RE.match(text):
        return int(text)
    if len(text) >= 2 and text[0] == '"' and text[-1] == '"':
        return text[1:-1]
    return text


def parse_command(line: str) -> CommandAtom:
    """Parse one command line into an atom.

    The grammar is `name(arg, ...)`; `name` alone is shorthand for
    `name()`. Arguments of RAW_COMMANDS are captured verbatim.
    """
    text = line.strip()
    if not text:
        raise CommandError("empty command")
    open_paren = text.find("(")
    if open_paren < 0:
        if _NAME_RE.match(text):
            return CommandAtom(text, ())
        raise CommandError(f"not a command atom: {text!r}")
    name = text[:open_paren].strip()
    if not _NAME_RE.match(name):
        raise CommandError(f"bad command name {name!r}")
    if not text.endswith(")"):
        raise CommandError(f"missing ')' in {text!r}")
    inner = text[open_paren + 1:-1]
    if name in RAW_COMMANDS:
        return CommandAtom(name, (inner.strip(),))
    if inner.strip() == "":
        return CommandAtom(name, ())
    return CommandAtom(name, tuple(_parse_arg(p) for p in _split_top(inner)))


# -- session ---------------------------------------------------------------

class Session:
    """State machine backing both the REPL and the HTTP service."""

    def __init__(self, base_dir: Optional[str] = None):
        self.prefixes = PrefixTable()
        self.store = TripleStore(self.prefixes)
        self.base_dir = Path(base_dir) if base_dir else Path(".")
        self.unit: Optional[SourceUnit] = None
        self.source_text: Optional[str] = None
        self.program_path: Optional[str] = None
        self.spec_text: Optional[str] = None
        self.plan: Optional[InstrumentationPlan] = None
        self.instrumented: Optional[InstrumentedUnit] = None
        self.result: Optional[RunResult] = None
        self.records: list = []  # sorted by timestamp
        self.cursor: Optional[int] = None  # index into self.records
        self.spans: dict = {}  # name -> Span
        self.span_models: dict = {}  # name -> {"list": ms, "set": ms}
        self.strategy = "rl-list"
        self.axioms: list = []
        self.known: list = []  # asserted (point, class) memberships
        self.negatives: list = []
        self.history: list = []
        self.run_count = 0
        self.closed = False

    # -- helpers ----------------------------------------------------------

    def _expand(self, token) -> str:
        if not isinstance(token, str):
            raise CommandError(f"expected an IRI or qname, got {token!r}")
        return self.prefixes.expand(token)

    def _compact(self, iri: str) -> str:
        return self.prefixes.compact(iri)

    def _need_program(self) -> SourceUnit:
        if self.unit is None:
            raise SessionStateError("no program loaded; use load(file)")
        return self.unit

    def _need_trace(self):
        if self.result is None:
            raise NoTrace("no trace; use run(entry) first")

    def _need_cursor(self) -> int:
        if self.cursor is None:
            raise NoCursor("cursor not set; use break(stmt) first")
        return self.cursor

    def _resolve_path(self, token: str) -> Path:
        p = Path(token)
        return p if p.is_absolute() else self.base_dir / p

    def _clear_run_state(self):
        self.store.clear(Graph.TRACE)
        self.store.clear(Graph.SPAN)
        self.result = None
        self.records = []
        self.cursor = None
        self.spans = {}
        self.span_models = {}

    # -- entry points -------------------------------------------------------

    def dispatch(self, line: str) -> str:
        """Run one command line; lets DebuggerError escape to the caller."""
        text = line.strip()
        if not text or text.startswith("#"):
            return ""
        self.history.append(text)
        atom = parse_command(text)
        handler = self._HANDLERS.get(atom.name)
        if handler is None:
            raise CommandError(f"unknown command {atom.name!r}")
        return handler(self, atom)

    def execute(self, line: str) -> str:
        """Run one command line; errors come back as `error Kind: msg`."""
        try:
            return self.dispatch(line)
        except DebuggerError as exc:
            return f"error {type(exc).__name__}: {exc}"

    def transcript(self, lines) -> str:
        """Batch transcript: each command echoed with a `pd> ` prompt."""
        out = []
        for line in lines:
            if self.closed:
                break
            out.append(f"pd> {line.rstrip()}")
            reply = self.execute(line)
            if reply:
                out.append(reply)
        return "\n".join(out) + "\n"

    # -- program / facts ------------------------------------------------------

    def load_source(self, text: str, label: Optional[str] = None) -> int:
        """Replace the loaded program; resets spec, trace, and spans."""
        unit = parse(text)
        for g in Graph:
            self.store.clear(g)
        count = self.store.insert(extract_facts(unit))
        self.unit = unit
        self.source_text = text
        self.program_path = label
        self.spec_text = None
        self.plan = None
        self.instrumented = None
        self._clear_run_state()
        return count

    def _cmd_load(self, atom: CommandAtom) -> str:
        if atom.arity() != 1 or not isinstance(atom.args[0], str):
            raise CommandError("usage: load(path)")
        path = self._resolve_path(atom.args[0])
        try:
            text = path.read_text()
        except OSError as exc:
            raise CommandError(f"cannot read {path}: {exc.strerror or exc}")
        count = self.load_source(text, str(atom.args[0]))
        return f"loaded {atom.args[0]}: {count} source facts"

    def _cmd_facts(self, atom: CommandAtom) -> str:
        if atom.arity() != 0:
            raise CommandError("usage: facts()")
        triples = self.store.triples([Graph.SOURCE])
        lines = [
            f"{self._compact(t.s)} {self._compact(t.p)} {self._term(t.o)} ."
            for t in triples
        ]
        lines.append(f"({len(triples)} facts)")
        return "\n".join(lines)

    def _term(self, o) -> str:
        if isinstance(o, int):
            return str(o)
        if isinstance(o, str):
            return self._compact(o)
        return f'"{o.value}"'  # Str literal

    def load_spec(self, text: str) -> InstrumentationPlan:
        """Replace the instrumentation plan; resets trace and spans."""
        unit = self._need_program()
        plan = plan_from_query(self.store, unit, text)
        self.instrumented = instrument(unit, plan)
        self.plan = plan
        self.spec_text = text
        self._clear_run_state()
        return plan

    def _plan_text(self, plan: InstrumentationPlan) -> str:
        plural = "s" if len(plan) != 1 else ""
        lines = [f"instrumentation plan: {len(plan)} log point{plural}"]
        for entry in plan.entries:
            lines.append(f"  log {self._compact(entry.stmt_iri)} observes {entry.label}")
        return "\n".join(lines)

    def _cmd_spec(self, atom: CommandAtom) -> str:
        if atom.arity() != 1 or not isinstance(atom.args[0], str):
            raise CommandError("usage: spec(path)")
        self._need_program()
        path = self._resolve_path(atom.args[0])
        try:
            text = path.read_text()
        except OSError as exc:
            raise CommandError(f"cannot read {path}: {exc.strerror or exc}")
        return self._plan_text(self.load_spec(text))

    # -- running ---------------------------------------------------------------

    def _cmd_run(self, atom: CommandAtom) -> str:
        self._need_program()
        if atom.arity() < 1 or not isinstance(atom.args[0], str):
            raise CommandError("usage: run(entry, args...)")
        entry = atom.args[0]
        args = []
        for a in atom.args[1:]:
            ok = isinstance(a, int) or (
                isinstance(a, list) and all(isinstance(v, int) for v in a))
            if not ok:
                raise CommandError(
                    f"run arguments must be integers or [int, ...] arrays, got {a!r}")
            args.append(a)
        target = self.instrumented if self.instrumented is not None else self.unit
        result = run_unit(target, entry, args)
        self._clear_run_state()
        self.result = result
        self.records = sorted(result.records, key=lambda r: r.timestamp)
        self.store.insert(to_trace_triples(result))
        self.run_count += 1
        lines = []
        if result.stdout:
            lines.append(result.stdout.rstrip("\n"))
        if result.exit.kind == "normal":
            status = "exit normal"
            if result.return_value is not None:
                status += f", return {result.return_value}"
        else:
            status = f"exit runtime-error: {result.exit.error}"
            if result.exit.stmt_iri:
                status += f" at {self._compact(result.exit.stmt_iri)}"
        lines.append(f"{status}, {len(self.records)} records logged")
        return "\n".join(lines)

    # -- navigation -------------------------------------------------------------

    def _cmd_break(self, atom: CommandAtom) -> str:
        if atom.arity() != 1:
            raise CommandError("usage: break(stmt)")
        self._need_trace()
        iri = self._expand(atom.args[0])
        statement_at(self._need_program(), iri)  # raises UnknownStatement
        hits = [i for i, r in enumerate(self.records) if r.s_id == iri]
        label = self._compact(iri)
        if not hits:
            return f"break {label}: no hits (cursor unchanged)"
        stamps = ", ".join(f"t={self.records[i].timestamp}" for i in hits)
        self.cursor = hits[0]
        return (f"break {label}: {len(hits)} hits [{stamps}]\n"
                f"cursor -> t={self.records[hits[0]].timestamp}")

    def _cmd_inspect(self, atom: CommandAtom) -> str:
        if atom.arity() != 1:
            raise CommandError("usage: inspect(var)")
        cursor = self._need_cursor()
        iri = self._expand(atom.args[0])
        limit = self.records[cursor].timestamp
        latest = None
        for r in self.records:
            if r.timestamp > limit:
                break
            if r.v_id == iri:
                latest = r
        label = self._compact(iri)
        if latest is None:
            return f"{label} = Unknown"
        return f"{label} = {latest.val} (t={latest.timestamp})"

    def _cmd_step(self, atom: CommandAtom) -> str:
        if atom.arity() != 1 or not isinstance(atom.args[0], int):
            raise CommandError("usage: step(n)")
        cursor = self._need_cursor()
        target = cursor + atom.args[0]
        notice = ""
        if target < 0:
            target, notice = 0, " (clamped at trace start)"
        elif target >= len(self.records):
            target, notice = len(self.records) - 1, " (clamped at trace end)"
        self.cursor = target
        return f"cursor -> t={self.records[target].timestamp}{notice}"

    def _cmd_goto(self, atom: CommandAtom) -> str:
        if atom.arity() != 1 or not isinstance(atom.args[0], int):
            raise CommandError("usage: goto(t)")
        self._need_trace()
        stamp = atom.args[0]
        for i, r in enumerate(self.records):
            if r.timestamp == stamp:
                self.cursor = i
                return f"cursor -> t={stamp}"
        raise CommandError(f"no logged record at t={stamp}")

    # -- queries and spans --------------------------------------------------------

    def _cmd_query(self, atom: CommandAtom) -> str:
        text = atom.args[0] if atom.args else ""
        if not text:
            raise CommandError("usage: query(SELECT ...)")
        table = self.store.query(text)
        return table.render(self.prefixes)

    def _parse_condition(self, arg) -> StateCondition:
        if not isinstance(arg, CommandAtom) or arg.name != "cond" or arg.arity() != 4:
            raise CommandError(
                "filter condition must be cond(stmt, var, rel, val)")
        stmt, var, rel, val = arg.args
        if rel not in RELATIONS:
            raise CommandError(f"unknown relation {rel!r}; expected one of "
                               + ", ".join(sorted(RELATIONS)))
        if not isinstance(val, int):
            raise CommandError(f"condition value must be an integer, got {val!r}")
        return StateCondition(self._expand(stmt), self._expand(var), rel, val)

    def _parse_filter(self, arg):
        if arg is None:
            return None
        if not isinstance(arg, CommandAtom):
            raise CommandError(
                "filter must be interval(lo?, hi?) or set(cond(...))")
        if arg.name == "interval":
            if arg.arity() > 2:
                raise CommandError("usage: interval(lo?, hi?)")
            bounds = list(arg.args) + [None] * (2 - len(arg.args))
            lower = self._parse_condition(bounds[0]) if bounds[0] is not None else None
            upper = self._parse_condition(bounds[1]) if bounds[1] is not None else None
            if lower is None and upper is None:
                return IntervalFilter(None, None)
            return IntervalFilter(lower, upper)
        if arg.name == "set":
            if arg.arity() != 1:
                raise CommandError("usage: set(cond(stmt, var, rel, val))")
            return SetFilter(self._parse_condition(arg.args[0]))
        raise CommandError(f"unknown filter {arg.name!r}; "
                           "expected interval(...) or set(...)")

    def _cmd_span(self, atom: CommandAtom) -> str:
        if atom.arity() not in (3, 4):
            raise CommandError("usage: span(name, var, stmt, filter?)")
        self._need_trace()
        name = atom.args[0]
        if not isinstance(name, str) or not _NAME_RE.match(name):
            raise CommandError(f"bad span name {name!r}")
        if name in self.spans:
            raise CommandError(f"span {name!r} already defined in this run")
        var_iri = self._expand(atom.args[1])
        stmt_iri = self._expand(atom.args[2])
        statement_at(self._need_program(), stmt_iri)
        phi = self._parse_filter(atom.args[3] if atom.arity() == 4 else None)
        cmd = AbstractionCommand(name, var_iri, stmt_iri, phi)
        span = build_span(cmd, self.records)
        models = {m: materialize_graph(span, m) for m in ("list", "set")}
        # Both encodings share the head individual, so the span graph
        # answers queries phrased against either model.
        for ms in models.values():
            self.store.insert(ms.triples)
        self.spans[name] = span
        self.span_models[name] = models
        if not span.cells:
            return f"span {name}: 0 cells"
        values = ", ".join(str(v) for v in span.values())
        stamps = ", ".join(str(t) for t in span.timestamps())
        return f"span {name}: {len(span)} cells, values [{values}], t [{stamps}]"

    # -- verification ------------------------------------------------------------

    def _get_span_model(self, name: str):
        if name not in self.spans:
            raise CommandError(f"unknown span {name!r}")
        model = "set" if self.strategy == "dl-set" else "list"
        return self.span_models[name][model]

    def _external_facts(self) -> list:
        return list(self.store.triples([Graph.EXTERNAL]))

    def _cmd_verify(self, atom: CommandAtom) -> str:
        if atom.arity() == 2:
            name, prop_name = atom.args
            if not isinstance(prop_name, str):
                raise CommandError("usage: verify(span, property)")
            prop = parse_property(prop_name)
            ms = self._get_span_model(name)
            verdict = check_intra(ms, prop, strategy=self.strategy,
                                  extra_facts=self._external_facts())
            head = f"verify {name} {prop_name}: {verdict.value}"
            span = self.spans[name]
        elif atom.arity() == 3:
            name, rel, name2 = atom.args
            if rel not in REL_CAP:
                raise CommandError(f"unknown span relation {rel!r}; expected one of "
                                   + ", ".join(sorted(REL_CAP)))
            ms1 = self._get_span_model(name)
            ms2 = self._get_span_model(name2)
            verdict = check_inter(ms1, ms2, rel, strategy=self.strategy,
                                  extra_facts=self._external_facts())
            head = f"verify {name} {rel} {name2}: {verdict.value}"
            span = self.spans[name]
        else:
            raise CommandError("usage: verify(span, property[, span2])")
        parts = [head]
        if verdict.witness is not None and verdict.witness < len(span.cells):
            cell = span.cells[verdict.witness]
            parts.append(f"witness cell {verdict.witness} "
                         f"(value {cell.val}, t={cell.timestamp})")
        if verdict.classes:
            derived = ", ".join(self._compact(c) for c in verdict.classes)
            parts.append(f"derived {derived}")
        parts.append(f"[{verdict.strategy}]")
        return " ".join(parts)

    def _cmd_strategy(self, atom: CommandAtom) -> str:
        if atom.arity() == 0:
            return f"strategy = {self.strategy}"
        if atom.arity() != 1 or atom.args[0] not in STRATEGIES:
            raise CommandError("usage: strategy(dl-list | dl-set | rl-list)")
        self.strategy = atom.args[0]
        return f"strategy -> {self.strategy}"

    # -- open-world reasoning -------------------------------------------------------

    def _alt_tuple(self, arg) -> tuple:
        items = arg if isinstance(arg, tuple) else (arg,)
        return tuple(self._expand(x) for x in items)

    def _cmd_axiom(self, atom: CommandAtom) -> str:
        if atom.arity() != 2:
            raise CommandError("usage: axiom(Sub, Alt1|Alt2...)")
        sub = self._expand(atom.args[0])
        alts = self._alt_tuple(atom.args[1])
        axiom = DomainAxiom(sub, alts)
        if axiom not in self.axioms:
            self.axioms.append(axiom)
        shown = " | ".join(self._compact(a) for a in alts)
        return f"axiom: {self._compact(sub)} => {shown}"

    def _cmd_classify(self, atom: CommandAtom) -> str:
        if atom.arity() not in (2, 3):
            raise CommandError("usage: classify(point, class[, not])")
        point = self._expand(atom.args[0])
        cls = self._expand(atom.args[1])
        negated = atom.arity() == 3
        if negated and atom.args[2] != "not":
            raise CommandError("usage: classify(point, class[, not])")
        pair = (point, cls)
        if negated:
            if pair not in self.negatives:
                self.negatives.append(pair)
            return f"classified {self._compact(point)}: not {self._compact(cls)}"
        if pair not in self.known:
            self.known.append(pair)
            self.store.insert([Triple(point, RDF_TYPE, cls, Graph.EXTERNAL)])
        return f"classified {self._compact(point)}: {self._compact(cls)}"

    def _cmd_oworld(self, atom: CommandAtom) -> str:
        if atom.arity() not in (2, 3):
            raise CommandError("usage: oworld(p1|p2|..., C1|C2...[, mode])")
        points = self._alt_tuple(atom.args[0])
        classes = self._alt_tuple(atom.args[1])
        mode = "open"
        if atom.arity() == 3:
            mode = atom.args[2]
            if mode not in ("open", "closed"):
                raise CommandError("mode must be open or closed")
        query = ConsecutiveQuery(points, classes)
        res = check_open_world(query, axioms=self.axioms, known=self.known,
                               negatives=self.negatives, mode=mode)
        shown_p = "|".join(self._compact(p) for p in points)
        shown_c = "|".join(self._compact(c) for c in classes)
        plural = "es" if res.cases != 1 else ""
        return (f"oworld {shown_p} wrt {shown_c} [{mode}]: {res.value} "
                f"({res.cases} case branch{plural})")

    def _cmd_prefixes(self, atom: CommandAtom) -> str:
        lines = [f"{name} -> {iri}"
                 for name, iri in sorted(self.prefixes.mapping.items())]
        return "\n".join(lines)

    # -- persistence ---------------------------------------------------------------

    def _manifest(self) -> dict:
        run_state = None
        if self.result is not None:
            run_state = {
                "exit": self.result.exit.kind,
                "error": self.result.exit.error,
                "stmt": self.result.exit.stmt_iri,
                "return": self.result.return_value,
                "stdout": self.result.stdout,
            }
        return {
            "version": MANIFEST_VERSION,
            "program": PROGRAM_NAME if self.source_text is not None else None,
            "program_path": self.program_path,
            "spec": SPEC_NAME if self.spec_text is not None else None,
            "run": run_state,
            "run_count": self.run_count,
            "cursor_t": (self.records[self.cursor].timestamp
                         if self.cursor is not None else None),
            "strategy": self.strategy,
            "spans": {
                name: {"var": span.var,
                       "cells": [[c.val, c.timestamp] for c in span.cells]}
                for name, span in sorted(self.spans.items())
            },
            "axioms": [{"sub": a.sub, "alternatives": list(a.alternatives)}
                       for a in self.axioms],
            "known": [list(p) for p in self.known],
            "negatives": [list(p) for p in self.negatives],
            "history": list(self.history),
        }

    def _cmd_save(self, atom: CommandAtom) -> str:
        if atom.arity() != 1 or not isinstance(atom.args[0], str):
            raise CommandError("usage: save(path)")
        target = self._resolve_path(atom.args[0])
        target.mkdir(parents=True, exist_ok=True)
        total = 0
        for graph, fname in GRAPH_FILES.items():
            total += self.store.export(graph, target / fname)
        if self.source_text is not None:
            (target / PROGRAM_NAME).write_text(self.source_text)
        if self.spec_text is not None:
            (target / SPEC_NAME).write_text(self.spec_text)
        manifest = json.dumps(self._manifest(), indent=2, sort_keys=True)
        (target / MANIFEST_NAME).write_text(manifest + "\n")
        plural = "s" if len(self.spans) != 1 else ""
        return (f"saved {atom.args[0]}: {total} triples, "
                f"{len(self.spans)} span{plural}, {len(self.history)} history lines")

    def _cmd_restore(self, atom: CommandAtom) -> str:
        if atom.arity() != 1 or not isinstance(atom.args[0], str):
            raise CommandError("usage: restore(path)")
        target = self._resolve_path(atom.args[0])
        try:
            manifest = json.loads((target / MANIFEST_NAME).read_text())
        except OSError as exc:
            raise CommandError(f"cannot read {target / MANIFEST_NAME}: "
                               f"{exc.strerror or exc}")
        except json.JSONDecodeError as exc:
            raise CommandError(f"bad manifest: {exc}")
        if manifest.get("version") != MANIFEST_VERSION:
            raise CommandError(f"unsupported manifest version "
                               f"{manifest.get('version')!r}")

        for g in Graph:
            self.store.clear(g)
        total = 0
        for graph, fname in GRAPH_FILES.items():
            path = target / fname
            if path.exists():
                total += self.store.load(path, graph)

        self.unit = None
        self.source_text = None
        self.program_path = manifest.get("program_path")
        self.spec_text = None
        self.plan = None
        self.instrumented = None
        if manifest.get("program"):
            self.source_text = (target / manifest["program"]).read_text()
            self.unit = parse(self.source_text)
        if manifest.get("spec") and self.unit is not None:
            self.spec_text = (target / manifest["spec"]).read_text()
            self.plan = plan_from_query(self.store, self.unit, self.spec_text)
            self.instrumented = instrument(self.unit, self.plan)

        run_state = manifest.get("run")
        self.records = sorted(
            records_from_triples(self.store.triples([Graph.TRACE])),
            key=lambda r: r.timestamp)
        if run_state is not None:
            exit_status = ExitStatus(run_state["exit"], run_state.get("error"),
                                     run_state.get("stmt"))
            self.result = RunResult(self.records, exit_status,
                                    run_state.get("stdout") or "",
                                    run_state.get("return"))
        else:
            self.result = None
            self.records = []

        self.cursor = None
        cursor_t = manifest.get("cursor_t")
        if cursor_t is not None:
            for i, r in enumerate(self.records):
                if r.timestamp == cursor_t:
                    self.cursor = i
                    break

        self.spans = {}
        self.span_models = {}
        for name, data in manifest.get("spans", {}).items():
            cells = [SpanCell(v, t) for v, t in data["cells"]]
            span = Span(name, data["var"], cells)
            self.spans[name] = span
            # Span triples are already in the loaded span graph.
            self.span_models[name] = {
                m: materialize_graph(span, m) for m in ("list", "set")}

        self.strategy = manifest.get("strategy", "rl-list")
        self.axioms = [DomainAxiom(a["sub"], tuple(a["alternatives"]))
                       for a in manifest.get("axioms", [])]
        self.known = [tuple(p) for p in manifest.get("known", [])]
        self.negatives = [tuple(p) for p in manifest.get("negatives", [])]
        self.run_count = manifest.get("run_count", 0)

        names = ", ".join(sorted(self.spans)) if self.spans else "-"
        return (f"restored {atom.args[0]}: {total} triples, "
                f"{len(self.records)} records, spans [{names}]")

    def _cmd_quit(self, atom: CommandAtom) -> str:
        self.closed = True
        return "bye"

    _HANDLERS = {
        "load": _cmd_load,
        "facts": _cmd_facts,
        "spec": _cmd_spec,
        "run": _cmd_run,
        "break": _cmd_break,
        "inspect": _cmd_inspect,
        "step": _cmd_step,
        "goto": _cmd_goto,
        "query": _cmd_query,
        "span": _cmd_span,
        "verify": _cmd_verify,
        "strategy": _cmd_strategy,
        "axiom": _cmd_axiom,
        "classify": _cmd_classify,
        "oworld": _cmd_oworld,
        "prefixes": _cmd_prefixes,
        "save": _cmd_save,
        "restore": _cmd_restore,
        "quit": _cmd_quit,
    }


def repl(session: Optional[Session] = None, input_stream=None, output_stream=None):
    """Line loop: prompt, execute, print, until quit or EOF."""
    import sys

    session = session or Session()
    inp = input_stream or sys.stdin
    out = output_stream or sys.stdout
    interactive = input_stream is None and sys.stdin.isatty()
    while not session.closed:
        if interactive:
            out.write("pd> ")
            out.flush()
        line = inp.readline()
        if not line:
            break
        reply = session.execute(line)
        if reply:
            out.write(reply + "\n")
            out.flush()
    return session
