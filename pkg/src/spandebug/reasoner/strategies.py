"""Span property checks under three interchangeable reasoning strategies.

All three decide the same verdicts over materialized span graphs; they
differ in how the answer is derived and in asymptotic cost:

dl-list  per-individual entailment over the linked-list model. Every
         list node is classified independently by re-walking its own
         suffix through unindexed triple scans, with no sharing of
         results between nodes. Cubic in span length.
dl-set   one counterexample pass over the flat cell model. Each cell's
         attributes are found by their own scan of the whole graph.
         Quadratic in span length.
rl-list  forward chaining with hash-indexed facts plus a closed-world
         complement step for the classes rules cannot express
         positively. Linear in span length.

Element properties come in universal form (all-positive, all-zero,
all-non-negative, all-duplicate, ...) and existential form
(has-positive, has-unique, ...). Order properties compare adjacent
cells (ascending, descending, non-ascending, non-descending). Span
pair checks test one relation value-wise at every shared index.

Derived class names follow a fixed scheme, e.g. a list containing a
zero gets pd:ListWithZeroElement and a span of all non-zero values
gets pd:SpanWithAllNon-ZeroElements; those two are complements, so a
graph asserting one while the other is derivable is inconsistent.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Iterable, Optional

from ..errors import (
    CommandError,
    InconsistencyDetected,
    ModelMismatch,
    NotComparable,
    TimeoutExceeded,
)
from ..spans import (
    HAS_SPAN_CELL,
    HAS_VALUE,
    INDEX,
    MaterializedSpan,
    RELATIONS,
    comparable,
    decode,
)
from ..terms import (
    Graph,
    PD,
    RDF_FIRST,
    RDF_LIST,
    RDF_NIL,
    RDF_REST,
    RDF_TYPE,
    Triple,
)
from .rules import forward_chain, parse_rules

STRATEGIES = ("dl-list", "dl-set", "rl-list")

UNIVERSAL = "universal"
EXISTENTIAL = "existential"
COMPARISON = "comparison"

PRED_TESTS = {
    "positive": lambda v: v > 0,
    "negative": lambda v: v < 0,
    "zero": lambda v: v == 0,
    "non-positive": lambda v: v <= 0,
    "non-negative": lambda v: v >= 0,
    "non-zero": lambda v: v != 0,
}

VIOLATION_OF = {
    "positive": "non-positive",
    "negative": "non-negative",
    "zero": "non-zero",
    "non-positive": "positive",
    "non-negative": "negative",
    "non-zero": "zero",
    "duplicate": "unique",
    "unique": "duplicate",
}

_CAP = {
    "positive": "Positive",
    "negative": "Negative",
    "zero": "Zero",
    "non-positive": "Non-Positive",
    "non-negative": "Non-Negative",
    "non-zero": "Non-Zero",
    "duplicate": "Duplicate",
    "unique": "Unique",
}

# builtin expressing "pred holds of ?v"
_PRED_BUILTIN = {
    "positive": "gt(?v, 0)",
    "negative": "lt(?v, 0)",
    "zero": "eq(?v, 0)",
    "non-positive": "le(?v, 0)",
    "non-negative": "ge(?v, 0)",
    "non-zero": "ne(?v, 0)",
}

# order name -> (violation test on an adjacent pair, class cap)
ORDERS = {
    "ascending": (lambda a, b: a >= b, "Ascending"),
    "descending": (lambda a, b: a <= b, "Descending"),
    "non-ascending": (lambda a, b: a < b, "Non-Ascending"),
    "non-descending": (lambda a, b: a > b, "Non-Descending"),
}

# builtin expressing "the pair ?v1, ?v2 violates the order"
_ORDER_VIOL_BUILTIN = {
    "ascending": "ge(?v1, ?v2)",
    "descending": "le(?v1, ?v2)",
    "non-ascending": "lt(?v1, ?v2)",
    "non-descending": "gt(?v1, ?v2)",
}

REL_CAP = {
    "=": "Equal", "!=": "Distinct", "<": "Less",
    "<=": "AtMost", ">": "Greater", ">=": "AtLeast",
}

# builtin expressing "?v1 rel ?v2 FAILS"
_REL_VIOL_BUILTIN = {
    "=": "ne(?v1, ?v2)", "!=": "eq(?v1, ?v2)", "<": "ge(?v1, ?v2)",
    "<=": "gt(?v1, ?v2)", ">": "le(?v1, ?v2)", ">=": "lt(?v1, ?v2)",
}

PAIRED_WITH = PD + "pairedWith"


@dataclass(frozen=True)
class PropertySpec:
    kind: str
    pred: Optional[str] = None
    order: Optional[str] = None

    def label(self) -> str:
        if self.kind == UNIVERSAL:
            return f"all-{self.pred}"
        if self.kind == EXISTENTIAL:
            return f"has-{self.pred}"
        return self.order


def parse_property(name: str) -> PropertySpec:
    name = name.strip()
    if name in ORDERS:
        return PropertySpec(COMPARISON, order=name)
    for marker, kind in (("all-", UNIVERSAL), ("has-", EXISTENTIAL)):
        if name.startswith(marker):
            pred = name[len(marker):]
            if pred in VIOLATION_OF:
                return PropertySpec(kind, pred=pred)
    raise CommandError(f"unknown span property {name!r}")


@dataclass(frozen=True)
class Verdict:
    value: str  # 'True' | 'False'
    witness: Optional[int] = None
    strategy: str = ""
    classes: tuple = ()


def intra_classes(prop: PropertySpec):
    """(cell class, span-level hit class, span-level complement class)."""
    if prop.kind == COMPARISON:
        cap = ORDERS[prop.order][1]
        return (PD + f"CellWith{cap}Violation",
                PD + f"ListWith{cap}Violation",
                PD + f"{cap}Span")
    if prop.kind == UNIVERSAL:
        viol = VIOLATION_OF[prop.pred]
        return (PD + f"CellWith{_CAP[viol]}Value",
                PD + f"ListWith{_CAP[viol]}Element",
                PD + f"SpanWithAll{_CAP[prop.pred]}Elements")
    return (PD + f"CellWith{_CAP[prop.pred]}Value",
            PD + f"ListWith{_CAP[prop.pred]}Element",
            PD + f"ListWithNo{_CAP[prop.pred]}Element")


def inter_classes(rel: str):
    cap = REL_CAP[rel]
    return (PD + f"CellWith{cap}PairViolation",
            PD + f"ListWith{cap}PairViolation",
            PD + f"Pairwise{cap}Span")


# -- unindexed scan helpers (the dl strategies' only graph access) ---------

class _Scan:
    """Linear scans over a triple list with a deadline check per scan."""

    def __init__(self, triples: list, deadline: Optional[float]):
        self.triples = triples
        self.deadline = deadline

    def _tick(self):
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise TimeoutExceeded("property check exceeded its deadline")

    def obj(self, s, p):
        self._tick()
        for t in self.triples:
            if t.s == s and t.p == p:
                return t.o
        return None

    def value_elsewhere(self, p, value, excluding) -> bool:
        self._tick()
        for t in self.triples:
            if t.p == p and t.o == value and t.s != excluding:
                return True
        return False


def _node_hit(scan: _Scan, node, prop: PropertySpec, first_prop, rest_prop) -> bool:
    """Does this one cell trigger the property's cell-level class?"""
    v = scan.obj(node, first_prop)
    if v is None or not isinstance(v, int):
        return False
    if prop.kind == COMPARISON:
        succ = scan.obj(node, rest_prop)
        if succ is None or succ == RDF_NIL:
            return False
        v2 = scan.obj(succ, first_prop)
        if not isinstance(v2, int):
            return False
        return ORDERS[prop.order][0](v, v2)
    pred = prop.pred
    if prop.kind == UNIVERSAL:
        pred = VIOLATION_OF[pred]
    if pred == "duplicate":
        return scan.value_elsewhere(first_prop, v, node)
    if pred == "unique":
        return not scan.value_elsewhere(first_prop, v, node)
    return PRED_TESTS[pred](v)


# -- dl-list ---------------------------------------------------------------

def _suffix_has_trigger(scan: _Scan, start, prop: PropertySpec) -> bool:
    """Entailment for one node's suffix-level class: walk its suffix."""
    node = start
    while node is not None and node != RDF_NIL:
        if _node_hit(scan, node, prop, RDF_FIRST, RDF_REST):
            return True
        node = scan.obj(node, RDF_REST)
    return False


def _dl_list_intra(ms: MaterializedSpan, prop: PropertySpec, deadline) -> tuple:
    """Classify every list node independently; returns (head_hit, witness).

    Each node is tested against each candidate class by a separate
    entailment pass over its own suffix: the cell-level class, the
    suffix-level hit class, and its complement each get their own walk,
    and nothing is shared between classes or between nodes.
    """
    scan = _Scan(ms.triples, deadline)
    nodes = [t.s for t in ms.triples if t.p == RDF_TYPE and t.o == RDF_LIST]
    cell_cls, has_cls, comp_cls = intra_classes(prop)
    checks = (
        (cell_cls, lambda n: _node_hit(scan, n, prop, RDF_FIRST, RDF_REST)),
        (has_cls, lambda n: _suffix_has_trigger(scan, n, prop)),
        (comp_cls, lambda n: not _suffix_has_trigger(scan, n, prop)),
    )
    memberships = {}
    for start in nodes:
        memberships[start] = [cls for cls, entails in checks if entails(start)]
    if ms.head not in memberships:
        return False, None  # empty span
    if has_cls not in memberships[ms.head]:
        return False, None
    index = 0
    node = ms.head
    while node is not None and node != RDF_NIL:
        if _node_hit(scan, node, prop, RDF_FIRST, RDF_REST):
            return True, index
        node = scan.obj(node, RDF_REST)
        index += 1
    return True, None


def _dl_list_inter(ms1, ms2, rel: str, deadline) -> tuple:
    scan = _Scan(ms1.triples + ms2.triples, deadline)
    length = 0
    node = ms1.head
    while node is not None and node != RDF_NIL:
        length += 1
        node = scan.obj(node, RDF_REST)
    test = RELATIONS[rel]
    for i in range(length):
        # Re-walk both chains from their heads for every index.
        a, b = ms1.head, ms2.head
        for _ in range(i):
            a = scan.obj(a, RDF_REST)
            b = scan.obj(b, RDF_REST)
        v1 = scan.obj(a, RDF_FIRST)
        v2 = scan.obj(b, RDF_FIRST)
        if not test(v1, v2):
            return True, i
    return False, None


# -- dl-set ----------------------------------------------------------------

def _set_length(ms: MaterializedSpan, scan: _Scan) -> int:
    scan._tick()
    return sum(1 for t in ms.triples if t.s == ms.head and t.p == HAS_SPAN_CELL)

def _set_cell_at(ms: MaterializedSpan, scan: _Scan, i: int):
    """The cell holding index i, found by its own scan of the graph."""
    scan._tick()
    for t in ms.triples:
        if t.p == INDEX and t.o == i:
            return t.s
    return None


def _dl_set_intra(ms: MaterializedSpan, prop: PropertySpec, deadline) -> tuple:
    """Counterexample pass in index order; every cell lookup re-scans."""
    scan = _Scan(ms.triples, deadline)
    length = _set_length(ms, scan)
    for i in range(length):
        cell = _set_cell_at(ms, scan, i)
        if cell is None:
            continue
        value = scan.obj(cell, HAS_VALUE)
        if not isinstance(value, int):
            continue
        if prop.kind == COMPARISON:
            succ = _set_cell_at(ms, scan, i + 1)
            if succ is None:
                continue
            v2 = scan.obj(succ, HAS_VALUE)
            if isinstance(v2, int) and ORDERS[prop.order][0](value, v2):
                return True, i
            continue
        pred = prop.pred if prop.kind == EXISTENTIAL else VIOLATION_OF[prop.pred]
        if pred == "duplicate":
            hit = scan.value_elsewhere(HAS_VALUE, value, cell)
        elif pred == "unique":
            hit = not scan.value_elsewhere(HAS_VALUE, value, cell)
        else:
            hit = PRED_TESTS[pred](value)
        if hit:
            return True, i
    return False, None


def _dl_set_inter(ms1, ms2, rel: str, deadline) -> tuple:
    scan1 = _Scan(ms1.triples, deadline)
    scan2 = _Scan(ms2.triples, deadline)
    length = _set_length(ms1, scan1)
    test = RELATIONS[rel]
    for i in range(length):
        cell1 = _set_cell_at(ms1, scan1, i)
        cell2 = _set_cell_at(ms2, scan2, i)
        v1 = scan1.obj(cell1, HAS_VALUE) if cell1 is not None else None
        v2 = scan2.obj(cell2, HAS_VALUE) if cell2 is not None else None
        if v1 is None or v2 is None or not test(v1, v2):
            return True, i
    return False, None


# -- rl-list ---------------------------------------------------------------

_RULES_CACHE: dict = {}


def _intra_rules(prop: PropertySpec):
    key = (prop.kind, prop.pred, prop.order)
    cached = _RULES_CACHE.get(key)
    if cached is not None:
        return cached
    cell_cls, has_cls, comp_cls = intra_classes(prop)
    lines = []
    if prop.kind == COMPARISON:
        lines.append(
            "cell: rdf:List(?l1), rdf:rest(?l1, ?l2), rdf:first(?l1, ?v1), rdf:first(?l2, ?v2), "
            f"{_ORDER_VIOL_BUILTIN[prop.order]} -> <{cell_cls}>(?l1), <{has_cls}>(?l1)")
        lines.append(f"chain: rdf:List(?l1), rdf:rest(?l1, ?l2), <{has_cls}>(?l2) -> <{has_cls}>(?l1)")
    else:
        target = prop.pred if prop.kind == EXISTENTIAL else VIOLATION_OF[prop.pred]
        if target in ("duplicate", "unique"):
            dup_cls = PD + "CellWithDuplicateValue"
            lines.append(
                "dup: rdf:List(?l1), rdf:first(?l1, ?v), rdf:List(?l2), rdf:first(?l2, ?v), "
                f"ne(?l1, ?l2) -> <{dup_cls}>(?l1)")
            if target == "duplicate":
                # Duplicate cells are rule-derivable; propagate them.
                lines.append(f"mark: <{dup_cls}>(?l) -> <{cell_cls}>(?l), <{has_cls}>(?l)")
                lines.append(f"chain: rdf:List(?l1), rdf:rest(?l1, ?l2), <{has_cls}>(?l2) -> <{has_cls}>(?l1)")
            # Unique cells are the closed-world complement of dup_cls;
            # the closure step below derives them after the fixpoint.
        else:
            lines.append(
                f"cell: rdf:List(?l), rdf:first(?l, ?v), {_PRED_BUILTIN[target]} "
                f"-> <{cell_cls}>(?l), <{has_cls}>(?l)")
            lines.append(f"chain: rdf:List(?l1), rdf:rest(?l1, ?l2), <{has_cls}>(?l2) -> <{has_cls}>(?l1)")
    lines.append(f"complement(<{comp_cls}>, <{has_cls}>)")
    parsed = parse_rules("\n".join(lines))
    _RULES_CACHE[key] = parsed
    return parsed


def _inter_rules(rel: str):
    key = ("inter", rel)
    cached = _RULES_CACHE.get(key)
    if cached is not None:
        return cached
    cell_cls, has_cls, comp_cls = inter_classes(rel)
    lines = [
        f"pair: <{PAIRED_WITH}>(?a, ?b), rdf:rest(?a, ?a2), rdf:rest(?b, ?b2) -> <{PAIRED_WITH}>(?a2, ?b2)",
        f"cell: <{PAIRED_WITH}>(?a, ?b), rdf:first(?a, ?v1), rdf:first(?b, ?v2), "
        f"{_REL_VIOL_BUILTIN[rel]} -> <{cell_cls}>(?a), <{has_cls}>(?a)",
        f"chain: rdf:List(?l1), rdf:rest(?l1, ?l2), <{has_cls}>(?l2) -> <{has_cls}>(?l1)",
        f"complement(<{comp_cls}>, <{has_cls}>)",
    ]
    parsed = parse_rules("\n".join(lines))
    _RULES_CACHE[key] = parsed
    return parsed


def _chain_order(triples, head) -> list:
    """List nodes in index order via a hash-indexed walk."""
    rest = {}
    for t in triples:
        if t.p == RDF_REST:
            rest[t.s] = t.o
    chain = []
    node = head
    seen = set()
    while node is not None and node != RDF_NIL and node not in seen:
        seen.add(node)
        chain.append(node)
        node = rest.get(node)
    return chain


def _rl_list_intra(ms: MaterializedSpan, prop: PropertySpec, deadline, extra_facts) -> tuple:
    rules, complements = _intra_rules(prop)
    cell_cls, has_cls, _comp = intra_classes(prop)
    facts = list(ms.triples) + list(extra_facts)
    inferred = forward_chain(rules, facts, complements, deadline=deadline)
    # Span graphs never assert property classes themselves, so derived
    # memberships live in the inferred set plus any user assertions.
    derived = {(t.s, t.p, t.o) for t in inferred}
    for t in extra_facts:
        derived.add((t.s, t.p, t.o))
    chain = _chain_order(ms.triples, ms.head)
    target = None
    if prop.kind != COMPARISON:
        target = prop.pred if prop.kind == EXISTENTIAL else VIOLATION_OF[prop.pred]
    if target == "unique":
        # Closed-world step: unique cells are the lists minus the
        # rule-derived duplicate cells.
        dup_cls = PD + "CellWithDuplicateValue"
        hit_indices = [i for i, node in enumerate(chain)
                       if (node, RDF_TYPE, dup_cls) not in derived]
        if hit_indices:
            return True, hit_indices[0]
        return False, None
    if (ms.head, RDF_TYPE, has_cls) not in derived:
        return False, None
    for i, node in enumerate(chain):
        if (node, RDF_TYPE, cell_cls) in derived:
            return True, i
    return True, None


def _rl_list_inter(ms1, ms2, rel: str, deadline, extra_facts) -> tuple:
    rules, complements = _inter_rules(rel)
    cell_cls, has_cls, _comp = inter_classes(rel)
    seed = Triple(ms1.head, PAIRED_WITH, ms2.head, Graph.SPAN)
    facts = list(ms1.triples) + list(ms2.triples) + [seed] + list(extra_facts)
    inferred = forward_chain(rules, facts, complements, deadline=deadline)
    derived = {(t.s, t.p, t.o) for t in inferred}
    if (ms1.head, RDF_TYPE, has_cls) not in derived:
        return False, None
    for i, node in enumerate(_chain_order(ms1.triples, ms1.head)):
        if (node, RDF_TYPE, cell_cls) in derived:
            return True, i
    return False, None


# -- public entry points ----------------------------------------------------

def _require_model(ms: MaterializedSpan, strategy: str):
    wanted = "set" if strategy == "dl-set" else "list"
    if ms.model != wanted:
        raise ModelMismatch(
            f"strategy {strategy} works on the {wanted} model, span {ms.name!r} uses {ms.model}")


def _assertion_clash(extra_facts, head, has_cls, comp_cls, has_hit: bool):
    """Raise when the graph asserts the complement of what was derived."""
    for t in extra_facts:
        if t.p == RDF_TYPE and t.s == head:
            if t.o == comp_cls and has_hit:
                raise InconsistencyDetected(head, comp_cls, has_cls)


def check_intra(ms: MaterializedSpan, prop: PropertySpec, strategy: str = "rl-list",
                deadline: Optional[float] = None,
                extra_facts: Iterable[Triple] = ()) -> Verdict:
    """Check one span property; extra_facts may carry user assertions
    whose complement-class clashes surface as InconsistencyDetected."""
    if strategy not in STRATEGIES:
        raise CommandError(f"unknown strategy {strategy!r}")
    _require_model(ms, strategy)
    extra_facts = list(extra_facts)
    _cell, has_cls, comp_cls = intra_classes(prop)
    if strategy == "dl-list":
        hit, witness = _dl_list_intra(ms, prop, deadline)
    elif strategy == "dl-set":
        hit, witness = _dl_set_intra(ms, prop, deadline)
    else:
        hit, witness = _rl_list_intra(ms, prop, deadline, extra_facts)
    _assertion_clash(extra_facts, ms.head, has_cls, comp_cls, hit)
    if prop.kind == EXISTENTIAL:
        value = "True" if hit else "False"
    else:
        value = "False" if hit else "True"
    classes = (has_cls,) if hit else (comp_cls,)
    return Verdict(value, witness if hit else None, strategy, classes)


def check_inter(ms1: MaterializedSpan, ms2: MaterializedSpan, rel: str,
                strategy: str = "rl-list", deadline: Optional[float] = None,
                extra_facts: Iterable[Triple] = ()) -> Verdict:
    """Check 'rel holds value-wise at every index' over two spans."""
    if strategy not in STRATEGIES:
        raise CommandError(f"unknown strategy {strategy!r}")
    if rel not in RELATIONS:
        raise CommandError(f"unknown span relation {rel!r}")
    _require_model(ms1, strategy)
    _require_model(ms2, strategy)
    if not comparable(decode(ms1.triples), decode(ms2.triples)):
        raise NotComparable(
            f"spans {ms1.name!r} and {ms2.name!r} do not interleave index-wise")
    extra_facts = list(extra_facts)
    _cell, has_cls, comp_cls = inter_classes(rel)
    if strategy == "dl-list":
        hit, witness = _dl_list_inter(ms1, ms2, rel, deadline)
    elif strategy == "dl-set":
        hit, witness = _dl_set_inter(ms1, ms2, rel, deadline)
    else:
        hit, witness = _rl_list_inter(ms1, ms2, rel, deadline, extra_facts)
    _assertion_clash(extra_facts, ms1.head, has_cls, comp_cls, hit)
    value = "False" if hit else "True"
    classes = (has_cls,) if hit else (comp_cls,)
    return Verdict(value, witness if hit else None, strategy, classes)
