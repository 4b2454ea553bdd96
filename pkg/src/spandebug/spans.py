"""Spans: filtered abstractions of a variable's trace history.

A span names the sequence of (value, timestamp) cells a variable took
after a chosen statement, restricted by a filter:

* interval filter: optional lower/upper state conditions; each bound
  resolves to the FIRST timestamp whose record satisfies the condition.
  A missing bound is 0 (lower) or +infinity (upper); both ends are
  inclusive. A bound whose condition never matches yields an empty span.
* set filter: the condition resolves to all matching timestamps
  t1..tn, giving half-open windows (t1,t2), (t2,t3), ..., (tn,inf),
  each window [a,b) contributing the first matching record, if any.

Spans materialize into the span graph in two interchangeable models:
a linked list (rdf:List / rdf:first / rdf:rest, one timeStamp per cell)
or a flat cell set (pd:hasSpanCell with pd:index). Both encode the same
index -> (value, timestamp) mapping.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .errors import BadSpecShape, ModelMismatch
from .terms import Graph, PD, RDF_FIRST, RDF_LIST, RDF_NIL, RDF_REST, RDF_TYPE, Triple

SPAN = PD + "Span"
HAS_SPAN_CELL = PD + "hasSpanCell"
HAS_VALUE = PD + "hasValue"
TIME_STAMP = PD + "timeStamp"
INDEX = PD + "index"
OF_VARIABLE = PD + "ofVariable"

RELATIONS = {
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


@dataclass(frozen=True)
class SpanCell:
    val: int
    timestamp: int


@dataclass
class Span:
    name: str
    var: str  # observable identity (variable node IRI or synthetic IRI)
    cells: list = field(default_factory=list)

    def __len__(self):
        return len(self.cells)

    def values(self) -> list:
        return [c.val for c in self.cells]

    def timestamps(self) -> list:
        return [c.timestamp for c in self.cells]


@dataclass(frozen=True)
class StateCondition:
    s_id: str
    v_id: str
    rel: str  # = != < <= > >=
    val: int


@dataclass(frozen=True)
class IntervalFilter:
    lower: Optional[StateCondition] = None
    upper: Optional[StateCondition] = None


@dataclass(frozen=True)
class SetFilter:
    condition: StateCondition = None


@dataclass(frozen=True)
class AbstractionCommand:
    name: str
    var_span: str  # observable identity to collect
    st_span: str  # statement whose after-records feed the span
    phi: object = None  # IntervalFilter | SetFilter | None (None = everything)


def resolve_condition(cond: StateCondition, records) -> list:
    """Ascending timestamps of records matching the state condition."""
    if cond.rel not in RELATIONS:
        raise BadSpecShape(f"unknown relation {cond.rel!r}")
    rel = RELATIONS[cond.rel]
    out = [r.timestamp for r in records
           if r.v_id == cond.v_id and r.s_id == cond.s_id and rel(r.val, cond.val)]
    out.sort()
    return out


def build_pairs(timestamps: list) -> list:
    """Half-open windows from a sorted timestamp list; the final window
    is unbounded (encoded as math.inf)."""
    pairs = []
    for i, t in enumerate(timestamps):
        upper = timestamps[i + 1] if i + 1 < len(timestamps) else math.inf
        pairs.append((t, upper))
    return pairs


def build_span(cmd: AbstractionCommand, records) -> Span:
    """Construct the span a command describes from a run's records."""
    base = [r for r in records if r.v_id == cmd.var_span and r.s_id == cmd.st_span]
    base.sort(key=lambda r: r.timestamp)

    phi = cmd.phi
    if phi is None:
        cells = [SpanCell(r.val, r.timestamp) for r in base]
        return Span(cmd.name, cmd.var_span, cells)

    if isinstance(phi, IntervalFilter):
        lower = 0
        if phi.lower is not None:
            hits = resolve_condition(phi.lower, records)
            if not hits:
                return Span(cmd.name, cmd.var_span, [])
            lower = hits[0]
        upper = math.inf
        if phi.upper is not None:
            hits = resolve_condition(phi.upper, records)
            if not hits:
                return Span(cmd.name, cmd.var_span, [])
            upper = hits[0]
        cells = [SpanCell(r.val, r.timestamp) for r in base
                 if lower <= r.timestamp <= upper]
        return Span(cmd.name, cmd.var_span, cells)

    if isinstance(phi, SetFilter):
        stamps = resolve_condition(phi.condition, records)
        cells = []
        for a, b in build_pairs(stamps):
            for r in base:
                if a <= r.timestamp and r.timestamp < b:
                    cells.append(SpanCell(r.val, r.timestamp))
                    break
        return Span(cmd.name, cmd.var_span, cells)

    raise BadSpecShape(f"unknown filter {phi!r}")


# -- materialization ------------------------------------------------------

@dataclass
class MaterializedSpan:
    name: str
    var: str
    head: str
    model: str  # 'list' | 'set'
    triples: list


def span_head(name: str) -> str:
    return PD + name


def materialize_graph(span: Span, model: str) -> MaterializedSpan:
    if model not in ("list", "set"):
        raise ModelMismatch(f"unknown span model {model!r}")
    triples: list[Triple] = []
    if model == "list" and not span.cells:
        # The empty list is rdf:nil itself; it only gets the span type.
        triples.append(Triple(RDF_NIL, RDF_TYPE, SPAN, Graph.SPAN))
        return MaterializedSpan(span.name, span.var, RDF_NIL, "list", triples)

    head = span_head(span.name)
    triples.append(Triple(head, RDF_TYPE, SPAN, Graph.SPAN))
    triples.append(Triple(head, OF_VARIABLE, span.var, Graph.SPAN))
    if model == "list":
        for i, cell in enumerate(span.cells):
            node = head if i == 0 else f"{head}_{i + 1}"
            succ = f"{head}_{i + 2}" if i + 1 < len(span.cells) else RDF_NIL
            triples.append(Triple(node, RDF_TYPE, RDF_LIST, Graph.SPAN))
            triples.append(Triple(node, RDF_FIRST, cell.val, Graph.SPAN))
            triples.append(Triple(node, TIME_STAMP, cell.timestamp, Graph.SPAN))
            triples.append(Triple(node, RDF_REST, succ, Graph.SPAN))
    else:
        for i, cell in enumerate(span.cells):
            node = f"{head}_c{i + 1}"
            triples.append(Triple(head, HAS_SPAN_CELL, node, Graph.SPAN))
            triples.append(Triple(node, HAS_VALUE, cell.val, Graph.SPAN))
            triples.append(Triple(node, TIME_STAMP, cell.timestamp, Graph.SPAN))
            triples.append(Triple(node, INDEX, i, Graph.SPAN))
    return MaterializedSpan(span.name, span.var, head, model, triples)


def materialize(span: Span, model: str) -> list:
    """Span-graph triples for a span in the given model."""
    return materialize_graph(span, model).triples


def decode(triples) -> Span:
    """Rebuild a Span from either model's triples.

    The empty list model is a bare typed rdf:nil; its name and variable
    are not recoverable, so they come back empty.
    """
    heads = [t.s for t in triples if t.p == RDF_TYPE and t.o == SPAN]
    if not heads:
        raise ModelMismatch("no pd:Span individual in the given triples")
    head = heads[0]
    name = head[len(PD):] if head.startswith(PD) else head
    var = ""
    for t in triples:
        if t.s == head and t.p == OF_VARIABLE:
            var = t.o
            break

    if head == RDF_NIL:
        return Span("", "", [])

    cell_props: dict = {}
    for t in triples:
        cell_props.setdefault(t.s, {})[t.p] = t.o

    if any(t.p == HAS_SPAN_CELL for t in triples):
        cells = []
        members = [t.o for t in triples if t.s == head and t.p == HAS_SPAN_CELL]
        indexed = []
        for node in members:
            props = cell_props.get(node, {})
            if INDEX not in props or HAS_VALUE not in props or TIME_STAMP not in props:
                raise ModelMismatch(f"incomplete span cell {node}")
            indexed.append((props[INDEX], SpanCell(props[HAS_VALUE], props[TIME_STAMP])))
        indexed.sort(key=lambda pair: pair[0])
        return Span(name, var, [c for _i, c in indexed])

    if cell_props.get(head, {}).get(RDF_FIRST) is None:
        # A pd:Span with no cells in either encoding decodes as empty.
        return Span(name, var, [])

    cells = []
    node = head
    seen = set()
    while node != RDF_NIL:
        if node in seen:
            raise ModelMismatch("cyclic rdf:rest chain")
        seen.add(node)
        props = cell_props.get(node, {})
        if RDF_FIRST not in props or TIME_STAMP not in props or RDF_REST not in props:
            raise ModelMismatch(f"incomplete list cell {node}")
        cells.append(SpanCell(props[RDF_FIRST], props[TIME_STAMP]))
        node = props[RDF_REST]
    return Span(name, var, cells)


def comparable(s1: Span, s2: Span) -> bool:
    """Equal length n and interleaved timestamps:
    t1[i] <= t2[i] < t1[i+1] for i < n-1, and t1[n-1] <= t2[n-1]."""
    if len(s1.cells) != len(s2.cells):
        return False
    n = len(s1.cells)
    t1 = s1.timestamps()
    t2 = s2.timestamps()
    for i in range(n):
        if not t1[i] <= t2[i]:
            return False
        if i + 1 < n and not t2[i] < t1[i + 1]:
            return False
    return True
