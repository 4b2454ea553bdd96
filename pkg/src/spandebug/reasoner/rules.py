"""Horn rules over triples with semi-naive forward chaining.

Rules are DL-safe: variables range over individuals present in the
facts, consequents introduce no fresh individuals, and every variable
must be bound by a class or property atom before any builtin uses it.
Builtins compare two terms (variables or constants): eq, ne, lt, le,
gt, ge. Ordering builtins apply to integers; eq/ne to any term.

Rule text format, one rule per line::

    zero_head: rdf:List(?l), rdf:first(?l, ?v), eq(?v, 0) -> pd:ListWithZeroElement(?l)
    zero_rest: rdf:List(?l1), rdf:rest(?l1, ?l2), pd:ListWithZeroElement(?l2) -> pd:ListWithZeroElement(?l1)
    complement(pd:SpanWithAllNon-ZeroElements, pd:ListWithZeroElement)

`complement(A, B)` declares two classes disjoint; deriving both for one
individual raises InconsistencyDetected.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Iterable, Optional, Union

from ..errors import InconsistencyDetected, RuleParseError, TimeoutExceeded
from ..query import Var
from ..terms import Graph, PrefixTable, RDF_TYPE, Str, Triple

Term = Union[Var, str, int, Str]

BUILTINS = {
    "eq": lambda a, b: a == b,
    "ne": lambda a, b: a != b,
    "lt": lambda a, b: isinstance(a, int) and isinstance(b, int) and a < b,
    "le": lambda a, b: isinstance(a, int) and isinstance(b, int) and a <= b,
    "gt": lambda a, b: isinstance(a, int) and isinstance(b, int) and a > b,
    "ge": lambda a, b: isinstance(a, int) and isinstance(b, int) and a >= b,
}


@dataclass(frozen=True)
class ClassAtom:
    cls: str
    term: Term


@dataclass(frozen=True)
class PropAtom:
    pred: str
    s: Term
    o: Term


@dataclass(frozen=True)
class BuiltinAtom:
    rel: str
    left: Term
    right: Term


Atom = Union[ClassAtom, PropAtom, BuiltinAtom]


@dataclass(frozen=True)
class Rule:
    name: str
    antecedent: tuple
    consequent: tuple

    def __post_init__(self):
        body_vars: set[str] = set()
        for atom in self.antecedent:
            if isinstance(atom, ClassAtom) and isinstance(atom.term, Var):
                body_vars.add(atom.term.name)
            elif isinstance(atom, PropAtom):
                for t in (atom.s, atom.o):
                    if isinstance(t, Var):
                        body_vars.add(t.name)
        for atom in self.antecedent:
            if isinstance(atom, BuiltinAtom):
                for t in (atom.left, atom.right):
                    if isinstance(t, Var) and t.name not in body_vars:
                        raise RuleParseError(
                            f"rule {self.name}: builtin variable ?{t.name} is not bound by any atom")
        for atom in self.consequent:
            if isinstance(atom, BuiltinAtom):
                raise RuleParseError(f"rule {self.name}: builtins cannot appear in the head")
            terms = [atom.term] if isinstance(atom, ClassAtom) else [atom.s, atom.o]
            for t in terms:
                if isinstance(t, Var) and t.name not in body_vars:
                    raise RuleParseError(
                        f"rule {self.name}: head variable ?{t.name} would create a fresh individual")


# -- text format ----------------------------------------------------------

def _parse_term(text: str, prefixes: PrefixTable, line: int) -> Term:
    text = text.strip()
    if not text:
        raise RuleParseError("empty term", line)
    if text.startswith("?"):
        return Var(text[1:])
    if text.startswith("<") and text.endswith(">"):
        return text[1:-1]
    if text.startswith('"') and text.endswith('"'):
        return Str(text[1:-1])
    try:
        return int(text)
    except ValueError:
        pass
    return prefixes.expand(text)


def _parse_atom(text: str, prefixes: PrefixTable, line: int) -> Atom:
    text = text.strip()
    open_paren = text.find("(")
    if open_paren < 0 or not text.endswith(")"):
        raise RuleParseError(f"malformed atom {text!r}", line)
    functor = text[:open_paren].strip()
    args = [a for a in text[open_paren + 1:-1].split(",")]
    terms = [_parse_term(a, prefixes, line) for a in args]
    if functor in BUILTINS:
        if len(terms) != 2:
            raise RuleParseError(f"builtin {functor} takes two terms", line)
        return BuiltinAtom(functor, terms[0], terms[1])
    if functor.startswith("<") and functor.endswith(">"):
        iri = functor[1:-1]
    elif "://" in functor:
        iri = functor
    else:
        iri = prefixes.expand(functor)
    if len(terms) == 1:
        return ClassAtom(iri, terms[0])
    if len(terms) == 2:
        return PropAtom(iri, terms[0], terms[1])
    raise RuleParseError(f"atom {functor} takes one or two terms", line)


def _split_atoms(text: str, line: int) -> list[str]:
    """Split on commas that sit outside parentheses."""
    parts = []
    depth = 0
    current = []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise RuleParseError("unbalanced parentheses", line)
        if ch == "," and depth == 0:
            parts.append("".join(current))
            current = []
        else:
            current.append(ch)
    if current:
        parts.append("".join(current))
    return [p for p in (part.strip() for part in parts) if p]


def parse_rules(text: str, prefixes: Optional[PrefixTable] = None):
    """Returns (rules, complements). complements is a list of class IRI pairs."""
    prefixes = prefixes if prefixes is not None else PrefixTable()
    rules: list[Rule] = []
    complements: list[tuple] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("complement(") and line.endswith(")"):
            inner = line[len("complement("):-1]
            parts = [p.strip() for p in inner.split(",")]
            if len(parts) != 2:
                raise RuleParseError("complement takes two classes", lineno)
            pair = tuple(_parse_term(p, prefixes, lineno) for p in parts)
            if not all(isinstance(t, str) for t in pair):
                raise RuleParseError("complement takes two class IRIs", lineno)
            complements.append(pair)
            continue
        if "->" not in line:
            raise RuleParseError("rule needs '->'", lineno)
        head_text, _, tail = line.partition("->")
        name = f"r{lineno}"
        if ":" in head_text.split("(")[0]:
            candidate, _, rest = head_text.partition(":")
            # A name label's colon is followed by whitespace; the colon of
            # a qname like rdf:List( or of a full IRI never is.
            if "(" not in candidate and rest[:1].isspace():
                name = candidate.strip()
                head_text = rest
        antecedent = tuple(_parse_atom(a, prefixes, lineno) for a in _split_atoms(head_text, lineno))
        consequent = tuple(_parse_atom(a, prefixes, lineno) for a in _split_atoms(tail, lineno))
        if not antecedent or not consequent:
            raise RuleParseError("rule needs a body and a head", lineno)
        rules.append(Rule(name, antecedent, consequent))
    return rules, complements


def load_rules(path, prefixes: Optional[PrefixTable] = None):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_rules(fh.read(), prefixes)


# -- forward chaining -------------------------------------------------------

class _FactIndex:
    def __init__(self):
        self.all: set[tuple] = set()
        self.by_p: dict = {}
        self.by_ps: dict = {}
        self.by_po: dict = {}

    def add(self, fact: tuple) -> bool:
        if fact in self.all:
            return False
        self.all.add(fact)
        s, p, o = fact
        self.by_p.setdefault(p, []).append(fact)
        self.by_ps.setdefault((p, s), []).append(fact)
        self.by_po.setdefault((p, o), []).append(fact)
        return True

    def match(self, s, p, o) -> Iterable[tuple]:
        # p is always a constant in rule atoms.
        if s is not None and o is not None:
            return [f for f in self.by_ps.get((p, s), ()) if f[2] == o]
        if s is not None:
            return self.by_ps.get((p, s), ())
        if o is not None:
            return self.by_po.get((p, o), ())
        return self.by_p.get(p, ())


def _atom_to_pattern(atom: Atom):
    if isinstance(atom, ClassAtom):
        return (atom.term, RDF_TYPE, atom.cls)
    return (atom.s, atom.pred, atom.o)


def _compile_pattern(atom: Atom) -> tuple:
    """(pred, s var name or None, s const, o var name or None, o const)."""
    s, p, o = _atom_to_pattern(atom)
    s_name = s.name if isinstance(s, Var) else None
    o_name = o.name if isinstance(o, Var) else None
    return (p, s_name, None if s_name else s, o_name, None if o_name else o)


def _extend(bnd: dict, cp: tuple, fact: tuple):
    """Extend a binding with one matched fact; None on clash.

    Returns bnd itself (unshared, never mutated) when the fact adds no
    new bindings; extensions always copy.
    """
    _, s_name, s_const, o_name, o_const = cp
    out = bnd
    if s_name is None:
        if s_const != fact[0]:
            return None
    else:
        cur = out.get(s_name)
        if cur is None:
            out = dict(out)
            out[s_name] = fact[0]
        elif cur != fact[0]:
            return None
    if o_name is None:
        if o_const != fact[2]:
            return None
    else:
        cur = out.get(o_name)
        if cur is None:
            if out is bnd:
                out = dict(out)
            out[o_name] = fact[2]
        elif cur != fact[2]:
            return None
    return out


def forward_chain(rules: list, facts: Iterable[Triple], complements: Iterable[tuple] = (),
                  deadline: Optional[float] = None, out_graph: Graph = Graph.EXTERNAL) -> list[Triple]:
    """Fixpoint of the rules over the facts; returns only inferred triples.

    Semi-naive rounds: the first round evaluates each rule naively, every
    later round only joins starting from the previous round's new facts.
    Raises InconsistencyDetected when an individual acquires a class and
    its declared complement (counting both asserted and derived
    memberships), and TimeoutExceeded when the deadline passes.
    """
    index = _FactIndex()
    delta: list[tuple] = []
    for t in facts:
        fact = (t.s, t.p, t.o)
        if index.add(fact):
            delta.append(fact)

    complement_of: dict = {}
    for a, b in complements:
        complement_of.setdefault(a, set()).add(b)
        complement_of.setdefault(b, set()).add(a)

    def check_consistency(fact: tuple):
        s, p, o = fact
        if p != RDF_TYPE:
            return
        for other in complement_of.get(o, ()):
            if (s, RDF_TYPE, other) in index.all:
                raise InconsistencyDetected(s, o, other)

    for fact in delta:
        check_consistency(fact)

    rule_parts = []
    for rule in rules:
        rel_pats = [_compile_pattern(a) for a in rule.antecedent if not isinstance(a, BuiltinAtom)]
        builtin_parts = [
            (BUILTINS[a.rel],
             a.left.name if isinstance(a.left, Var) else None,
             None if isinstance(a.left, Var) else a.left,
             a.right.name if isinstance(a.right, Var) else None,
             None if isinstance(a.right, Var) else a.right)
            for a in rule.antecedent if isinstance(a, BuiltinAtom)]
        head_parts = [_compile_pattern(a) for a in rule.consequent]
        rule_parts.append((rel_pats, builtin_parts, head_parts))

    inferred: list[Triple] = []
    steps = 0
    first_round = True

    while delta:
        delta_set = None if first_round else set(delta)
        new_facts: list[tuple] = []

        for rel_pats, builtin_parts, head_parts in rule_parts:
            if first_round:
                # Naive pass: seed once from the most selective atom.
                sizes = [len(index.match(cp[2], cp[0], cp[4])) for cp in rel_pats]
                pivots = (sizes.index(min(sizes)),)
            else:
                pivots = range(len(rel_pats))
            for pivot in pivots:
                cp = rel_pats[pivot]
                matches = index.match(cp[2], cp[0], cp[4])
                # Seed from whichever side is smaller so late rounds with
                # a tiny delta stay proportional to the delta, not the
                # graph. Copy: the index lists grow during derivation.
                if first_round:
                    pivot_candidates = list(matches)
                elif len(delta) < len(matches):
                    pivot_candidates = [f for f in delta
                                        if f[1] == cp[0]
                                        and (cp[2] is None or f[0] == cp[2])
                                        and (cp[4] is None or f[2] == cp[4])]
                else:
                    pivot_candidates = [f for f in matches if f in delta_set]
                if not pivot_candidates:
                    continue
                rest = rel_pats[:pivot] + rel_pats[pivot + 1:]
                for fact in pivot_candidates:
                    binding = _extend({}, cp, fact)
                    if binding is None:
                        continue
                    # Join remaining atoms most-selective-first; bound
                    # builtins prune as soon as their terms resolve.
                    stack = [(rest, binding)]
                    while stack:
                        steps += 1
                        if deadline is not None and steps % 2048 == 0 and time.monotonic() > deadline:
                            raise TimeoutExceeded("forward chaining exceeded its deadline")
                        remaining, bnd = stack.pop()
                        pruned = False
                        for fn, l_name, l_const, r_name, r_const in builtin_parts:
                            left = bnd.get(l_name) if l_name else l_const
                            right = bnd.get(r_name) if r_name else r_const
                            if left is not None and right is not None and not fn(left, right):
                                pruned = True
                                break
                        if pruned:
                            continue
                        if not remaining:
                            for hp in head_parts:
                                fact_out = (bnd[hp[1]] if hp[1] else hp[2],
                                            hp[0],
                                            bnd[hp[3]] if hp[3] else hp[4])
                                if index.add(fact_out):
                                    check_consistency(fact_out)
                                    new_facts.append(fact_out)
                                    inferred.append(Triple(*fact_out, out_graph))
                            continue
                        best_at = 0
                        best_cands = None
                        for at, rp in enumerate(remaining):
                            s = bnd.get(rp[1]) if rp[1] else rp[2]
                            o = bnd.get(rp[3]) if rp[3] else rp[4]
                            cands = index.match(s, rp[0], o)
                            if best_cands is None or len(cands) < len(best_cands):
                                best_at, best_cands = at, cands
                                if not cands:
                                    break
                        rp = remaining[best_at]
                        rest_remaining = remaining[:best_at] + remaining[best_at + 1:]
                        for candidate in best_cands:
                            extended = _extend(bnd, rp, candidate)
                            if extended is not None:
                                stack.append((rest_remaining, extended))
        delta = new_facts
        first_round = False
    return inferred
