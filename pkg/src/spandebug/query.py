"""Query language over the triple store.

Supported shape::

    PREFIX pd: <http://...>
    SELECT DISTINCT ?v ?t
    WHERE {
      ?st pd:afterStatement file:ln5 .
      ?st pd:value ?v .
      ?st pd:timeStamp ?t .
      FILTER (?v > 0 && ?t != 9)
    }
    ORDER BY ASC(?t) LIMIT 10

Evaluation performs an index-backed join of the basic graph patterns.
Row order is deterministic: without ORDER BY it follows the join order,
which is itself a pure function of the query text and store content.
Filter comparisons: `=` and `!=` apply to all term types (terms of
different types are unequal); `<`, `<=`, `>`, `>=` apply to integers and
evaluate to false on any non-integer operand.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

from .errors import QueryParseError
from .terms import Graph, PrefixTable, Str, Term, term_sort_key


@dataclass(frozen=True)
class Var:
    name: str

    def __repr__(self):
        return f"?{self.name}"


PatternTerm = Union[Var, str, int, Str]


@dataclass(frozen=True)
class TriplePattern:
    s: PatternTerm
    p: PatternTerm
    o: PatternTerm


@dataclass(frozen=True)
class Comparison:
    op: str  # = != < <= > >=
    left: PatternTerm
    right: PatternTerm


@dataclass(frozen=True)
class BoolExpr:
    op: str  # && || !
    args: tuple


FilterExpr = Union[Comparison, BoolExpr]


@dataclass
class Query:
    select: list[str]
    distinct: bool
    patterns: list[TriplePattern]
    filters: list[FilterExpr]
    order: list[tuple[str, str]] = field(default_factory=list)  # (var, ASC|DESC)
    limit: Optional[int] = None


@dataclass
class BindingTable:
    columns: list[str]
    rows: list[tuple]

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [row[i] for row in self.rows]

    def render(self, prefixes: Optional[PrefixTable] = None) -> str:
        def show(v):
            if isinstance(v, int):
                return str(v)
            if isinstance(v, Str):
                return f'"{v.value}"'
            return prefixes.compact(v) if prefixes else v

        header = " | ".join(f"?{c}" for c in self.columns)
        lines = [header, "-" * len(header)]
        for row in self.rows:
            lines.append(" | ".join(show(v) for v in row))
        lines.append(f"({len(self.rows)} row{'s' if len(self.rows) != 1 else ''})")
        return "\n".join(lines)


# -- tokenizer ----------------------------------------------------------

_PUNCT2 = ("&&", "||", "!=", "<=", ">=")
_PUNCT1 = "{}().,!=<>"


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    """Returns (kind, value, offset) tuples; kind in
    word/var/iri/qname/int/str/punct."""
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == "?":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            if j == i + 1:
                raise QueryParseError(f"bare '?' at offset {i}")
            tokens.append(("var", text[i + 1:j], i))
            i = j
            continue
        if ch == "<" and i + 1 < n and text[i + 1].isalpha():
            j = text.find(">", i)
            if j < 0:
                raise QueryParseError("unterminated IRI")
            tokens.append(("iri", text[i + 1:j], i))
            i = j + 1
            continue
        if ch == '"':
            j = i + 1
            buf = []
            while j < n and text[j] != '"':
                if text[j] == "\\" and j + 1 < n:
                    buf.append(text[j + 1])
                    j += 2
                else:
                    buf.append(text[j])
                    j += 1
            if j >= n:
                raise QueryParseError("unterminated string literal")
            tokens.append(("str", "".join(buf), i))
            i = j + 1
            continue
        if text[i:i + 2] in _PUNCT2:
            tokens.append(("punct", text[i:i + 2], i))
            i += 2
            continue
        if ch in _PUNCT1:
            tokens.append(("punct", ch, i))
            i += 1
            continue
        if ch.isdigit() or (ch == "-" and i + 1 < n and text[i + 1].isdigit()):
            j = i + 1
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(("int", text[i:j], i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] in "_:-"):
                j += 1
            word = text[i:j]
            # A ':' makes it a prefixed name rather than a keyword.
            tokens.append(("qname" if ":" in word else "word", word, i))
            i = j
            continue
        raise QueryParseError(f"unexpected character {ch!r} at offset {i}")
    return tokens


class _TokenCursor:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else ("eof", "", -1)

    def next(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def accept_word(self, *words):
        kind, value, _ = self.peek()
        if kind == "word" and value.upper() in words:
            self.pos += 1
            return value.upper()
        return None

    def expect_word(self, word):
        got = self.accept_word(word)
        if got is None:
            kind, value, off = self.peek()
            raise QueryParseError(f"expected {word}, found {value!r} at offset {off}")

    def expect_punct(self, p):
        kind, value, off = self.peek()
        if kind != "punct" or value != p:
            raise QueryParseError(f"expected {p!r}, found {value!r} at offset {off}")
        self.pos += 1


def parse_query(text: str, prefixes: PrefixTable) -> Query:
    local = prefixes.copy()
    cur = _TokenCursor(_tokenize(text))

    while cur.accept_word("PREFIX"):
        kind, value, off = cur.next()
        if kind != "qname" or not value.endswith(":"):
            raise QueryParseError(f"bad prefix name {value!r} at offset {off}")
        name = value[:-1]
        kind, iri, off = cur.next()
        if kind != "iri":
            raise QueryParseError(f"expected <IRI> after PREFIX at offset {off}")
        local.bind(name, iri)

    cur.expect_word("SELECT")
    distinct = cur.accept_word("DISTINCT") is not None
    select: list[str] = []
    while cur.peek()[0] == "var":
        select.append(cur.next()[1])
    if not select:
        raise QueryParseError("SELECT needs at least one variable")

    cur.expect_word("WHERE")
    cur.expect_punct("{")

    def term(tok) -> PatternTerm:
        kind, value, off = tok
        if kind == "var":
            return Var(value)
        if kind == "int":
            return int(value)
        if kind == "str":
            return Str(value)
        if kind == "iri":
            return value
        if kind in ("qname", "word"):
            return local.expand(value)
        raise QueryParseError(f"unexpected token {value!r} at offset {off}")

    patterns: list[TriplePattern] = []
    filters: list[FilterExpr] = []
    while True:
        kind, value, off = cur.peek()
        if kind == "punct" and value == "}":
            cur.next()
            break
        if kind == "eof":
            raise QueryParseError("unterminated WHERE block")
        if kind == "word" and value.upper() == "FILTER":
            cur.next()
            cur.expect_punct("(")
            filters.append(_parse_or(cur, term))
            cur.expect_punct(")")
        else:
            s = term(cur.next())
            p = term(cur.next())
            o = term(cur.next())
            patterns.append(TriplePattern(s, p, o))
            kind, value, _ = cur.peek()
            if kind == "punct" and value == ".":
                cur.next()
    if not patterns:
        raise QueryParseError("WHERE block needs at least one triple pattern")

    order: list[tuple[str, str]] = []
    if cur.accept_word("ORDER"):
        cur.expect_word("BY")
        while True:
            kind, value, off = cur.peek()
            if kind == "word" and value.upper() in ("ASC", "DESC"):
                direction = cur.next()[1].upper()
                cur.expect_punct("(")
                kind, var, off = cur.next()
                if kind != "var":
                    raise QueryParseError(f"expected variable in ORDER BY at offset {off}")
                cur.expect_punct(")")
                order.append((var, direction))
            elif kind == "var":
                order.append((cur.next()[1], "ASC"))
            else:
                break
        if not order:
            raise QueryParseError("ORDER BY needs at least one key")

    limit = None
    if cur.accept_word("LIMIT"):
        kind, value, off = cur.next()
        if kind != "int" or int(value) < 0:
            raise QueryParseError(f"LIMIT needs a non-negative integer at offset {off}")
        limit = int(value)

    if cur.peek()[0] != "eof":
        kind, value, off = cur.peek()
        raise QueryParseError(f"trailing content {value!r} at offset {off}")

    q = Query(select, distinct, patterns, filters, order, limit)
    _check_variables(q)
    return q


def _parse_or(cur, term) -> FilterExpr:
    left = _parse_and(cur, term)
    while cur.peek()[:2] == ("punct", "||"):
        cur.next()
        right = _parse_and(cur, term)
        left = BoolExpr("||", (left, right))
    return left


def _parse_and(cur, term) -> FilterExpr:
    left = _parse_not(cur, term)
    while cur.peek()[:2] == ("punct", "&&"):
        cur.next()
        right = _parse_not(cur, term)
        left = BoolExpr("&&", (left, right))
    return left


def _parse_not(cur, term) -> FilterExpr:
    if cur.peek()[:2] == ("punct", "!"):
        cur.next()
        return BoolExpr("!", (_parse_not(cur, term),))
    if cur.peek()[:2] == ("punct", "("):
        cur.next()
        inner = _parse_or(cur, term)
        cur.expect_punct(")")
        return inner
    left = term(cur.next())
    kind, op, off = cur.peek()
    if kind == "punct" and op in ("=", "!=", "<", "<=", ">", ">="):
        cur.next()
        right = term(cur.next())
        return Comparison(op, left, right)
    raise QueryParseError(f"expected comparison operator at offset {off}")


def _expr_vars(e) -> set[str]:
    if isinstance(e, Comparison):
        return {t.name for t in (e.left, e.right) if isinstance(t, Var)}
    out: set[str] = set()
    for a in e.args:
        out |= _expr_vars(a)
    return out


def _check_variables(q: Query) -> None:
    bound: set[str] = set()
    for pat in q.patterns:
        for t in (pat.s, pat.p, pat.o):
            if isinstance(t, Var):
                bound.add(t.name)
    for v in q.select:
        if v not in bound:
            raise QueryParseError(f"SELECT variable ?{v} not bound by any pattern")
    for f in q.filters:
        loose = _expr_vars(f) - bound
        if loose:
            raise QueryParseError(f"FILTER uses unbound variable ?{sorted(loose)[0]}")
    for v, _ in q.order:
        if v not in bound:
            raise QueryParseError(f"ORDER BY variable ?{v} not bound by any pattern")
        if v not in q.select:
            raise QueryParseError(f"ORDER BY variable ?{v} must be selected")


# -- evaluation ---------------------------------------------------------

def _eval_filter(e: FilterExpr, binding: dict) -> bool:
    if isinstance(e, Comparison):
        left = binding[e.left.name] if isinstance(e.left, Var) else e.left
        right = binding[e.right.name] if isinstance(e.right, Var) else e.right
        if e.op == "=":
            return left == right
        if e.op == "!=":
            return left != right
        if not (isinstance(left, int) and isinstance(right, int)):
            return False
        return {"<": left < right, "<=": left <= right,
                ">": left > right, ">=": left >= right}[e.op]
    if e.op == "!":
        return not _eval_filter(e.args[0], binding)
    if e.op == "&&":
        return all(_eval_filter(a, binding) for a in e.args)
    return any(_eval_filter(a, binding) for a in e.args)


def evaluate(q: Query, match: Callable, graphs: Optional[Sequence[Graph]] = None) -> BindingTable:
    """Joins patterns most-selective-first; `match` is TripleStore.match
    or any function with the same (s, p, o, graphs) -> triples contract."""

    def boundness(pat: TriplePattern, bound: set[str]) -> int:
        score = 0
        for t in (pat.s, pat.p, pat.o):
            if not isinstance(t, Var) or t.name in bound:
                score += 1
        return score

    remaining = list(enumerate(q.patterns))
    pending_filters = list(q.filters)
    solutions: list[dict] = [{}]
    bound: set[str] = set()

    while remaining:
        remaining.sort(key=lambda item: (-boundness(item[1], bound), item[0]))
        index, pat = remaining.pop(0)

        next_solutions = []
        for sol in solutions:
            def resolve(t):
                if isinstance(t, Var):
                    return sol.get(t.name)
                return t

            cs, cp, co = resolve(pat.s), resolve(pat.p), resolve(pat.o)
            for t in match(cs, cp, co, graphs):
                new = dict(sol)
                ok = True
                for term, value in ((pat.s, t.s), (pat.p, t.p), (pat.o, t.o)):
                    if isinstance(term, Var):
                        seen = new.get(term.name)
                        if seen is None:
                            new[term.name] = value
                        elif seen != value:
                            ok = False
                            break
                if ok:
                    next_solutions.append(new)
        solutions = next_solutions
        for t in (pat.s, pat.p, pat.o):
            if isinstance(t, Var):
                bound.add(t.name)
        # Apply every filter whose variables are now all bound.
        ready = [f for f in pending_filters if _expr_vars(f) <= bound]
        if ready:
            pending_filters = [f for f in pending_filters if f not in ready]
            solutions = [s for s in solutions if all(_eval_filter(f, s) for f in ready)]
        if not solutions:
            break

    rows = [tuple(sol[v] for v in q.select) for sol in solutions]
    if q.distinct:
        seen = set()
        unique = []
        for row in rows:
            if row not in seen:
                seen.add(row)
                unique.append(row)
        rows = unique
    for var, direction in reversed(q.order):
        col = q.select.index(var)
        rows.sort(key=lambda r: term_sort_key(r[col]), reverse=(direction == "DESC"))
    if q.limit is not None:
        rows = rows[: q.limit]
    return BindingTable(list(q.select), rows)
