"""Deterministic tree-walking interpreter with trace capture.

A single visit counter ticks on every executed statement instance,
including each condition evaluation of for/while/if, the for header's
init and increment, and each executed log capture. Log events stamp the
counter after their own tick, so timestamps are strictly increasing and
two records never share one. Absolute timestamp values carry no meaning
beyond their order.

Uninitialized scalars, array slots and struct members are zero for
determinism. Arithmetic wraps to 64-bit two's complement; division and
remainder truncate toward zero and trap on a zero divisor.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import CommandError, TargetRuntimeError
from .instrument import InstrumentedUnit, PlanEntry
from .lang.nodes import (
    ArrayIndex, Assignment, Binary, Block, CallExpr, CallStmt, For,
    FunctionDef, If, IntLit, MemberAccess, MemberAssign, Return, SourceUnit,
    StructDecl, Unary, VarRef, VariableDecl, While, stmt_iri,
)
from .terms import Graph, PD, Triple

_I64_MASK = (1 << 64) - 1
_I64_SIGN = 1 << 63

MAX_FRAMES = 128
DEFAULT_MAX_TICKS = 10_000_000

HAS_STATE = PD + "hasState"
AFTER_STATEMENT = PD + "afterStatement"
TIME_STAMP = PD + "timeStamp"
VALUE = PD + "value"
HAS_DECLARATION = PD + "hasDeclaration"


def _wrap(v: int) -> int:
    return ((v + _I64_SIGN) & _I64_MASK) - _I64_SIGN


@dataclass(frozen=True)
class TraceRecord:
    v_id: str
    s_id: str
    val: int
    timestamp: int
    decl_id: Optional[str] = None


@dataclass(frozen=True)
class ExitStatus:
    kind: str  # 'normal' | 'runtime-error'
    error: Optional[str] = None
    stmt_iri: Optional[str] = None


@dataclass
class RunResult:
    records: list
    exit: ExitStatus
    stdout: str = ""
    return_value: Optional[int] = None
    final_env: dict = field(default_factory=dict)  # var iri -> value snapshot


class _ReturnSignal(Exception):
    def __init__(self, value):
        self.value = value


class Interpreter:
    def __init__(self, unit: Union[SourceUnit, InstrumentedUnit], max_ticks: int = DEFAULT_MAX_TICKS):
        if isinstance(unit, InstrumentedUnit):
            self.unit = unit.unit
            self.observables = unit.plan.observables
        else:
            self.unit = unit
            self.observables = {}
        self.max_ticks = max_ticks
        self.clock = 0
        self.records: list[TraceRecord] = []
        self.frames: list[dict] = []
        self.stdout: list[str] = []
        self.current_stmt: Optional[str] = None

    # -- plumbing ---------------------------------------------------------

    def tick(self):
        self.clock += 1
        if self.clock > self.max_ticks:
            raise TargetRuntimeError("step-limit", self.current_stmt)

    def frame(self) -> dict:
        return self.frames[-1]

    def _iri(self, st) -> str:
        return stmt_iri(self.unit.file_prefix, st.lines)

    def capture(self, st):
        for entry in st.after_logs:
            expr = self.observables.get(entry.v_id)
            if expr is None:
                continue
            try:
                value = self.eval(expr)
            except TargetRuntimeError:
                continue  # a failing observable must not disturb the run
            if not isinstance(value, int):
                continue  # only integer observables are traceable
            self.tick()
            self.records.append(TraceRecord(
                entry.v_id, entry.stmt_iri, value, self.clock, entry.decl_id))

    # -- values -----------------------------------------------------------

    def default_value(self, info):
        if info.data_type == "int":
            return 0
        if info.data_type == "int[]":
            return []
        struct = self.unit.structs.get(info.struct_name)
        return {m.var.name: 0 for m in struct.members} if struct else {}

    # -- expressions --------------------------------------------------------

    def eval(self, e) -> Union[int, list, dict]:
        if isinstance(e, IntLit):
            return e.value
        if isinstance(e, VarRef):
            try:
                return self.frame()[e.var.iri]
            except KeyError:
                raise TargetRuntimeError("unbound-variable", self.current_stmt) from None
        if isinstance(e, ArrayIndex):
            arr = self.eval(e.array)
            idx = self.eval(e.index)
            if not isinstance(arr, list) or not isinstance(idx, int):
                raise TargetRuntimeError("type-error", self.current_stmt)
            if idx < 0 or idx >= len(arr):
                raise TargetRuntimeError("index-out-of-bounds", self.current_stmt)
            return arr[idx]
        if isinstance(e, MemberAccess):
            base = self.eval(e.base)
            if not isinstance(base, dict) or e.member not in base:
                raise TargetRuntimeError("type-error", self.current_stmt)
            return base[e.member]
        if isinstance(e, Unary):
            if e.op == "-":
                return _wrap(-self._int(e.operand))
            return 0 if self._int(e.operand) != 0 else 1
        if isinstance(e, Binary):
            return self.eval_binary(e)
        if isinstance(e, CallExpr):
            return self.call(e)
        raise TargetRuntimeError("type-error", self.current_stmt)

    def _int(self, e) -> int:
        v = self.eval(e)
        if not isinstance(v, int):
            raise TargetRuntimeError("type-error", self.current_stmt)
        return v

    def eval_binary(self, e: Binary) -> int:
        op = e.op
        if op == "&&":
            return 1 if self._int(e.left) != 0 and self._int(e.right) != 0 else 0
        if op == "||":
            return 1 if self._int(e.left) != 0 or self._int(e.right) != 0 else 0
        a = self._int(e.left)
        b = self._int(e.right)
        if op == "+":
            return _wrap(a + b)
        if op == "-":
            return _wrap(a - b)
        if op == "*":
            return _wrap(a * b)
        if op in ("/", "%"):
            if b == 0:
                raise TargetRuntimeError("division-by-zero", self.current_stmt)
            q = abs(a) // abs(b)
            if (a < 0) != (b < 0):
                q = -q
            return _wrap(q) if op == "/" else _wrap(a - q * b)
        if op == "==":
            return 1 if a == b else 0
        if op == "!=":
            return 1 if a != b else 0
        if op == "<":
            return 1 if a < b else 0
        if op == "<=":
            return 1 if a <= b else 0
        if op == ">":
            return 1 if a > b else 0
        if op == ">=":
            return 1 if a >= b else 0
        raise TargetRuntimeError("type-error", self.current_stmt)

    # -- calls ---------------------------------------------------------------

    def call(self, e: CallExpr):
        if e.name == "print":
            value = self._int(e.args[0])
            self.stdout.append(str(value))
            return 0
        fn = self.unit.function(e.name)
        if fn is None:
            raise TargetRuntimeError("unknown-function", self.current_stmt)
        if len(self.frames) >= MAX_FRAMES:
            raise TargetRuntimeError("stack-overflow", self.current_stmt)
        values = [self.eval(a) for a in e.args]
        frame: dict = {}
        for info, value in zip(fn.params, values):
            frame[info.iri] = self.coerce_arg(info, value)
        self.frames.append(frame)
        try:
            result = self.run_function(fn)
        finally:
            self.frames.pop()
        return result if result is not None else 0

    def coerce_arg(self, info, value):
        if info.data_type == "int":
            if not isinstance(value, int):
                raise TargetRuntimeError("type-error", self.current_stmt)
            return _wrap(value)
        if info.data_type == "int[]":
            if not isinstance(value, list):
                raise TargetRuntimeError("type-error", self.current_stmt)
            return value  # arrays pass by reference
        if not isinstance(value, dict):
            raise TargetRuntimeError("type-error", self.current_stmt)
        return dict(value)  # structs pass by value

    def run_function(self, fn: FunctionDef):
        result = None
        try:
            self.exec_block(fn.body)
        except _ReturnSignal as sig:
            result = sig.value
        self.capture(fn)  # function-level captures see the frame before it pops
        return result

    # -- statements ------------------------------------------------------------

    def exec_block(self, block: Block):
        for st in block.stmts:
            self.exec_stmt(st)
        self.capture(block)

    def exec_stmt(self, st):
        self.current_stmt = self._iri(st)
        if isinstance(st, VariableDecl):
            self.tick()
            self.exec_decl(st)
            self.capture(st)
        elif isinstance(st, Assignment):
            self.tick()
            self.exec_assign(st)
            self.capture(st)
        elif isinstance(st, MemberAssign):
            self.tick()
            base = self.eval(st.target.base)
            if not isinstance(base, dict):
                raise TargetRuntimeError("type-error", self.current_stmt)
            base[st.target.member] = _wrap(self._int(st.value))
            self.capture(st)
        elif isinstance(st, CallStmt):
            self.tick()
            self.call(st.call)
            self.capture(st)
        elif isinstance(st, Return):
            self.tick()
            value = self._int(st.expr) if st.expr is not None else None
            self.capture(st)
            raise _ReturnSignal(value)
        elif isinstance(st, Block):
            self.exec_block(st)
        elif isinstance(st, If):
            self.exec_if(st)
        elif isinstance(st, While):
            self.exec_while(st)
        elif isinstance(st, For):
            self.exec_for(st)
        else:
            raise TargetRuntimeError("type-error", self.current_stmt)

    def exec_decl(self, st: VariableDecl):
        info = st.var
        if st.init_list is not None:
            size = st.array_size if st.array_size is not None else len(st.init_list)
            value = [_wrap(v) for v in st.init_list] + [0] * (size - len(st.init_list))
        elif info.data_type == "int[]":
            value = [0] * (st.array_size or 0)
        elif st.init is not None:
            value = _wrap(self._int(st.init))
        else:
            value = self.default_value(info)
        self.frame()[info.iri] = value

    def exec_assign(self, st: Assignment):
        value = _wrap(self._int(st.value))
        target = st.target
        if isinstance(target, VarRef):
            self.frame()[target.var.iri] = value
            return
        arr = self.eval(target.array)
        idx = self._int(target.index)
        self.current_stmt = self._iri(st)
        if not isinstance(arr, list):
            raise TargetRuntimeError("type-error", self.current_stmt)
        if idx < 0 or idx >= len(arr):
            raise TargetRuntimeError("index-out-of-bounds", self.current_stmt)
        arr[idx] = value

    def exec_if(self, st: If):
        self.current_stmt = self._iri(st)
        self.tick()  # condition evaluation
        if self._int(st.cond) != 0:
            self.exec_stmt(st.then)
        elif st.els is not None:
            self.exec_stmt(st.els)
        # Completion capture fires whichever branch ran, or none did.
        self.capture(st)

    def exec_while(self, st: While):
        while True:
            self.current_stmt = self._iri(st)
            self.tick()  # condition evaluation
            if self._int(st.cond) == 0:
                break
            self.exec_stmt(st.body)
            self.capture(st)  # end of one iteration

    def exec_for(self, st: For):
        if st.init is not None:
            self.current_stmt = self._iri(st)
            self.tick()
            if isinstance(st.init, VariableDecl):
                self.exec_decl(st.init)
            else:
                self.exec_assign(st.init)
        while True:
            self.current_stmt = self._iri(st)
            if st.cond is not None:
                self.tick()
                if self._int(st.cond) == 0:
                    break
            self.exec_stmt(st.body)
            self.capture(st)  # end of one iteration, before the increment
            if st.incr is not None:
                self.current_stmt = self._iri(st)
                self.tick()
                self.exec_assign(st.incr)

    # -- entry ------------------------------------------------------------------

    def run(self, entry: str, args: Optional[list] = None) -> RunResult:
        fn = self.unit.function(entry)
        if fn is None:
            raise CommandError(f"no function named {entry!r}")
        args = list(args or [])
        if len(args) != len(fn.params):
            raise CommandError(
                f"{entry} takes {len(fn.params)} arguments, got {len(args)}")
        frame: dict = {}
        for info, value in zip(fn.params, args):
            frame[info.iri] = self._convert_arg(info, value)
        self.frames = [frame]
        old_limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(old_limit, 20000))
        try:
            result = self.run_function(fn)
            status = ExitStatus("normal")
        except TargetRuntimeError as exc:
            result = None
            status = ExitStatus("runtime-error", exc.kind, exc.stmt_iri)
        finally:
            sys.setrecursionlimit(old_limit)
        final_env = dict(self.frames[0]) if self.frames else {}
        return RunResult(
            records=list(self.records),
            exit=status,
            stdout="".join(line + "\n" for line in self.stdout),
            return_value=result,
            final_env=final_env,
        )

    def _convert_arg(self, info, value):
        if info.data_type == "int":
            if isinstance(value, bool) or not isinstance(value, int):
                raise CommandError(f"argument {info.name!r} must be an integer")
            return _wrap(value)
        if info.data_type == "int[]":
            if not isinstance(value, list) or not all(
                    isinstance(v, int) and not isinstance(v, bool) for v in value):
                raise CommandError(f"argument {info.name!r} must be an integer array")
            return [_wrap(v) for v in value]
        if not isinstance(value, dict):
            raise CommandError(f"argument {info.name!r} must be a struct object")
        struct = self.unit.structs.get(info.struct_name)
        members = {m.var.name for m in struct.members} if struct else set()
        bad = set(value) - members
        if bad:
            raise CommandError(f"unknown struct member(s): {sorted(bad)}")
        out = {name: 0 for name in members}
        for k, v in value.items():
            if isinstance(v, bool) or not isinstance(v, int):
                raise CommandError(f"struct member {k!r} must be an integer")
            out[k] = _wrap(v)
        return out


def run(unit, entry: str, args: Optional[list] = None,
        max_ticks: int = DEFAULT_MAX_TICKS) -> RunResult:
    return Interpreter(unit, max_ticks).run(entry, args)


def to_trace_triples(result: RunResult) -> list[Triple]:
    """Encode records as trace-graph triples; pd:st<k> is the 1-based
    emission index."""
    triples: list[Triple] = []
    for k, rec in enumerate(result.records, start=1):
        st = f"{PD}st{k}"
        triples.append(Triple(rec.v_id, HAS_STATE, st, Graph.TRACE))
        triples.append(Triple(st, AFTER_STATEMENT, rec.s_id, Graph.TRACE))
        triples.append(Triple(st, TIME_STAMP, rec.timestamp, Graph.TRACE))
        triples.append(Triple(st, VALUE, rec.val, Graph.TRACE))
        if rec.decl_id is not None:
            triples.append(Triple(st, HAS_DECLARATION, rec.decl_id, Graph.TRACE))
    return triples


def records_from_triples(triples) -> list[TraceRecord]:
    """Inverse of to_trace_triples; tolerates extra triples in the graph."""
    by_state: dict = {}
    owner: dict = {}
    for t in triples:
        if t.p == HAS_STATE and isinstance(t.o, str):
            owner[t.o] = t.s
        elif t.p in (AFTER_STATEMENT, TIME_STAMP, VALUE, HAS_DECLARATION):
            by_state.setdefault(t.s, {})[t.p] = t.o
    records = []
    for state, props in by_state.items():
        if state not in owner:
            continue
        if AFTER_STATEMENT not in props or TIME_STAMP not in props or VALUE not in props:
            continue
        records.append(TraceRecord(
            owner[state], props[AFTER_STATEMENT], props[VALUE],
            props[TIME_STAMP], props.get(HAS_DECLARATION)))
    records.sort(key=lambda r: r.timestamp)
    return records
