"""Query-driven instrumentation planning and AST-level log insertion.

A plan is derived from a query whose rows are (statement, observable)
pairs. The observable is either a variable node IRI or an expression
string; expressions are registered under synthetic IRIs (`file:expr1`,
numbered in plan row order). Instrumenting attaches log captures to a
deep copy of the tree; captures never change program-visible behaviour,
and stripping them yields a tree equal to the original.

Capture points:
  * simple statements: after each execution;
  * for/while: after each completed body iteration (before the increment);
  * if: after the statement completes, whichever branch ran (also when
    no branch ran);
  * function definitions: when the body completes, before the frame pops.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Optional

from .errors import BadSpecShape, UnknownStatement, UnknownVariable
from .lang import parse_expression, statement_at, walk_statements
from .lang.nodes import Expr, MemberAccess, SourceUnit, VarRef, expr_has_call, iri_to_lines
from .lang.printer import expr_to_source
from .store import TripleStore
from .terms import Graph, Str


@dataclass(frozen=True)
class PlanEntry:
    stmt_iri: str
    v_id: str  # trace identity of the observable
    label: str  # source text of the observable
    decl_id: Optional[str] = None  # struct variable node for member accesses


@dataclass
class InstrumentationPlan:
    entries: list = field(default_factory=list)
    observables: dict = field(default_factory=dict)  # v_id -> Expr

    def __len__(self):
        return len(self.entries)


@dataclass
class InstrumentedUnit:
    unit: SourceUnit  # deep copy carrying log annotations
    plan: InstrumentationPlan
    original: SourceUnit


def plan_from_query(store: TripleStore, unit: SourceUnit, spec_query: str) -> InstrumentationPlan:
    """Evaluate the instrumentation query over the source and external
    graphs and turn its rows into a plan."""
    table = store.query(spec_query, graphs=[Graph.SOURCE, Graph.EXTERNAL])
    if len(table.columns) != 2:
        raise BadSpecShape(
            f"instrumentation query must select (statement, observable); got {len(table.columns)} columns")
    plan = InstrumentationPlan()
    expr_count = 0
    seen: set = set()
    for row in table.rows:
        target, observable = row
        if not isinstance(target, str):
            raise BadSpecShape(f"statement column bound a non-IRI value: {target!r}")
        statement_at(unit, target)  # raises UnknownStatement
        if isinstance(observable, str):
            info = unit.vars_by_iri.get(observable)
            if info is None:
                raise UnknownVariable(f"no variable node {observable}")
            expr = _scoped_var_ref(unit, target, info)
            entry = PlanEntry(target, info.iri, info.name)
        elif isinstance(observable, Str):
            expr = parse_expression(observable.value, unit, target)
            if expr_has_call(expr):
                raise BadSpecShape(f"observable {observable.value!r} calls a function")
            if isinstance(expr, VarRef):
                entry = PlanEntry(target, expr.var.iri, expr.var.name)
            elif isinstance(expr, MemberAccess):
                entry = PlanEntry(target, expr.member_info.iri,
                                  expr_to_source(expr), decl_id=expr.base_info.iri)
            else:
                expr_count += 1
                entry = PlanEntry(target, f"{unit.file_prefix}expr{expr_count}",
                                  expr_to_source(expr))
        else:
            raise BadSpecShape(f"observable column bound {observable!r}")
        if (entry.stmt_iri, entry.v_id) in seen:
            continue
        seen.add((entry.stmt_iri, entry.v_id))
        plan.entries.append(entry)
        plan.observables[entry.v_id] = expr
    return plan


def _scoped_var_ref(unit: SourceUnit, target_iri: str, info) -> VarRef:
    st = statement_at(unit, target_iri)
    scope = unit.scope_at.get(st.lines, {})
    visible = scope.get(info.name)
    if visible is None or visible.iri != info.iri:
        raise UnknownVariable(
            f"variable {info.name} ({info.iri}) is not in scope at {target_iri}")
    return VarRef(info.name, info)


def instrument(unit: SourceUnit, plan: InstrumentationPlan) -> InstrumentedUnit:
    """Attach the plan's captures to a deep copy of the unit."""
    twin = copy.deepcopy(unit)
    by_range: dict = {}
    for item in twin.items:
        for st, _parent in walk_statements(item):
            by_range.setdefault(st.lines, st)
    for entry in plan.entries:
        lines = iri_to_lines(unit.file_prefix, entry.stmt_iri)
        if lines is None or lines not in by_range:
            raise UnknownStatement(f"no statement with identifier {entry.stmt_iri}")
        by_range[lines].after_logs.append(entry)
    # Rebuild the index dicts so they point at the copied nodes.
    twin.by_range = by_range
    line_index: dict = {}
    for item in twin.items:
        for st, _parent in walk_statements(item):
            line_index[st.lines[0]] = st
    twin.line_index = line_index
    return InstrumentedUnit(unit=twin, plan=plan, original=unit)


def strip_logs(unit: SourceUnit) -> SourceUnit:
    """Remove all log annotations in place; returns the unit."""
    for item in unit.items:
        for st, _parent in walk_statements(item):
            st.after_logs.clear()
    return unit
