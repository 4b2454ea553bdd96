"""Query engine vs a naive nested-loop oracle, plus grammar edge cases.

The oracle shares the parser but evaluates patterns by brute force over
every triple, so any indexing or join-order bug in the engine shows up
as a result mismatch.
"""
import random

import pytest

from spandebug.errors import QueryParseError, UnknownPrefix
from spandebug.lang import extract_facts, parse
from spandebug.query import BoolExpr, Comparison, Var, parse_query
from spandebug.store import TripleStore
from spandebug.terms import Graph, Str, Triple

from conftest import MAXSUB

C = "http://example.org/lang/c#"
PD = "http://example.org/debug#"
F = "http://example.org/programs/main/"


# -- the oracle -------------------------------------------------------------

def _unify(pattern_term, value, binding):
    if isinstance(pattern_term, Var):
        bound = binding.get(pattern_term.name, value)
        if bound != value:
            return None
        out = dict(binding)
        out[pattern_term.name] = value
        return out
    return binding if pattern_term == value else None


def _filter_value(term, binding):
    return binding.get(term.name) if isinstance(term, Var) else term


def _eval_filter(expr, binding) -> bool:
    if isinstance(expr, Comparison):
        left = _filter_value(expr.left, binding)
        right = _filter_value(expr.right, binding)
        if expr.op == "=":
            return left == right
        if expr.op == "!=":
            return left != right
        if not isinstance(left, int) or not isinstance(right, int):
            return False
        return {"<": left < right, "<=": left <= right,
                ">": left > right, ">=": left >= right}[expr.op]
    if expr.op == "!":
        return not _eval_filter(expr.args[0], binding)
    results = [_eval_filter(a, binding) for a in expr.args]
    return all(results) if expr.op == "&&" else any(results)


def nested_loop_rows(query_text, store, graphs=None) -> set:
    """Reference evaluation: cross product of all triples per pattern."""
    q = parse_query(query_text, store.prefixes)
    triples = store.triples(graphs)
    bindings = [{}]
    for pat in q.patterns:
        grown = []
        for b in bindings:
            for tr in triples:
                b1 = _unify(pat.s, tr.s, b)
                if b1 is None:
                    continue
                b2 = _unify(pat.p, tr.p, b1)
                if b2 is None:
                    continue
                b3 = _unify(pat.o, tr.o, b2)
                if b3 is not None:
                    grown.append(b3)
        bindings = grown
    kept = [b for b in bindings
            if all(_eval_filter(f, b) for f in q.filters)]
    return {tuple(b[c] for c in q.select) for b in kept}


# -- fixed stores ----------------------------------------------------------

@pytest.fixture
def source_store():
    store = TripleStore()
    store.insert(extract_facts(parse(MAXSUB.read_text())))
    return store


def test_variable_names_query(source_store):
    rows = source_store.query(
        "SELECT ?v WHERE { ?d rdf:type c:VariableDecl . "
        "?d c:hasVariable ?var . ?var c:hasName ?v }")
    names = {row[0].value for row in rows.rows}
    assert Str("globalMax").value in names
    assert "localMax" in names


def test_no_match_keeps_declared_columns(source_store):
    rows = source_store.query(
        "SELECT ?a ?b WHERE { ?a c:hasName ?b . ?a rdf:type c:WhileStatement }")
    assert rows.columns == ["a", "b"]
    assert rows.rows == []


def test_unknown_prefix_raises(source_store):
    with pytest.raises(UnknownPrefix):
        source_store.query("SELECT ?x WHERE { ?x nope:p ?y }")


def test_parse_error_on_garbage(source_store):
    with pytest.raises(QueryParseError):
        source_store.query("SELECT WHERE {")


def test_prefix_declaration_inside_query(source_store):
    source_store.insert([Triple(F + "ln1_ln12", "http://example.org/rdf#type",
                                "http://example.org/watch#Watched",
                                Graph.EXTERNAL)])
    rows = source_store.query(
        "PREFIX w: <http://example.org/watch#>\n"
        "PREFIX r: <http://example.org/rdf#>\n"
        "SELECT ?f WHERE { ?f r:type w:Watched }")
    assert rows.rows == [(F + "ln1_ln12",)]


def test_order_by_and_limit():
    store = TripleStore()
    store.insert([Triple(F + f"s{i}", PD + "value", v, Graph.TRACE)
                  for i, v in enumerate([5, 3, 9, 1])])
    rows = store.query(
        "SELECT ?v WHERE { ?s pd:value ?v } ORDER BY DESC(?v) LIMIT 3")
    assert [r[0] for r in rows.rows] == [9, 5, 3]


def test_distinct_deduplicates():
    store = TripleStore()
    store.insert([Triple(F + f"s{i}", PD + "value", 7, Graph.TRACE)
                  for i in range(3)])
    plain = store.query("SELECT ?v WHERE { ?s pd:value ?v }")
    dedup = store.query("SELECT DISTINCT ?v WHERE { ?s pd:value ?v }")
    assert len(plain.rows) == 3
    assert dedup.rows == [(7,)]


def test_filter_comparisons_are_integer_only():
    store = TripleStore()
    store.insert([
        Triple(F + "a", PD + "value", 5, Graph.TRACE),
        Triple(F + "b", PD + "value", Str("5"), Graph.TRACE),
        Triple(F + "c", PD + "value", F + "iri", Graph.TRACE),
    ])
    rows = store.query("SELECT ?s WHERE { ?s pd:value ?v . FILTER (?v > 0) }")
    assert [r[0] for r in rows.rows] == [F + "a"]
    eq = store.query('SELECT ?s WHERE { ?s pd:value ?v . FILTER (?v = "5") }')
    assert [r[0] for r in eq.rows] == [F + "b"]


def test_graph_selection_excludes_other_graphs(source_store):
    source_store.insert([Triple(F + "x", C + "hasName", Str("ghost"),
                                Graph.EXTERNAL)])
    rows = source_store.query(
        'SELECT ?s WHERE { ?s c:hasName "ghost" }', graphs=[Graph.SOURCE])
    assert rows.rows == []
    rows = source_store.query('SELECT ?s WHERE { ?s c:hasName "ghost" }')
    assert rows.rows == [(F + "x",)]


def test_query_insert_commute(source_store):
    q = "SELECT ?st WHERE { ?st rdf:type c:AssignmentStatement }"
    before = set(source_store.query(q).rows)
    source_store.insert([Triple(F + "unrelated", PD + "value", 1, Graph.TRACE)])
    assert set(source_store.query(q).rows) == before


def test_monotonicity_without_filters(source_store):
    q = "SELECT ?st ?f WHERE { ?st c:inFunction ?f }"
    before = set(source_store.query(q).rows)
    source_store.insert([Triple(F + "ln99", C + "inFunction", F + "ln1_ln12",
                                Graph.SOURCE)])
    after = set(source_store.query(q).rows)
    assert before <= after


def test_row_order_is_deterministic(source_store):
    q = "SELECT ?st ?p WHERE { ?st c:hasParent ?p }"
    assert source_store.query(q).rows == source_store.query(q).rows


# -- randomized agreement -----------------------------------------------------

SUBJECTS = [F + f"s{i}" for i in range(12)]
PREDS = [PD + f"p{i}" for i in range(4)]
OBJECTS = SUBJECTS[:4] + list(range(-5, 10)) + [Str("x"), Str("y")]
VAR_NAMES = ["a", "b", "c", "d"]


def random_store(rng: random.Random) -> TripleStore:
    store = TripleStore()
    n = rng.randint(0, 400)
    seen = set()
    batch = []
    for _ in range(n):
        tr = Triple(rng.choice(SUBJECTS), rng.choice(PREDS),
                    rng.choice(OBJECTS), rng.choice(list(Graph)))
        if tr not in seen:
            seen.add(tr)
            batch.append(tr)
    store.insert(batch)
    return store


def random_query(rng: random.Random) -> str:
    n_patterns = rng.randint(1, 3)
    used_vars = []

    def term(kind):
        if rng.random() < 0.55:
            name = rng.choice(VAR_NAMES)
            if name not in used_vars:
                used_vars.append(name)
            return f"?{name}"
        if kind == "s":
            return f"<{rng.choice(SUBJECTS)}>"
        if kind == "p":
            return f"<{rng.choice(PREDS)}>"
        obj = rng.choice(OBJECTS)
        if isinstance(obj, Str):
            return f'"{obj.value}"'
        if isinstance(obj, int):
            return str(obj)
        return f"<{obj}>"

    patterns = [
        f"{term('s')} {term('p')} {term('o')} ." for _ in range(n_patterns)
    ]
    if not used_vars:
        patterns[0] = f"?a {term('p')} {term('o')} ."
        used_vars.append("a")

    filters = ""
    if rng.random() < 0.5:
        def comparison():
            left = f"?{rng.choice(used_vars)}"
            op = rng.choice(["=", "!=", "<", "<=", ">", ">="])
            if rng.random() < 0.7:
                right = str(rng.randint(-5, 10))
            else:
                right = f"?{rng.choice(used_vars)}"
            return f"{left} {op} {right}"

        expr = comparison()
        if rng.random() < 0.4:
            expr = f"{expr} {rng.choice(['&&', '||'])} {comparison()}"
        filters = f" FILTER ({expr})"

    n_select = rng.randint(1, min(2, len(used_vars)))
    select = " ".join(f"?{v}" for v in rng.sample(used_vars, n_select))
    distinct = "DISTINCT " if rng.random() < 0.3 else ""
    return (f"SELECT {distinct}{select} WHERE {{ "
            + " ".join(patterns) + filters + " }")


def test_random_queries_match_nested_loop_oracle():
    rng = random.Random(20260822)
    for i in range(150):
        store = random_store(rng)
        q = random_query(rng)
        got = set(store.query(q).rows)
        want = nested_loop_rows(q, store)
        assert got == want, f"case {i}: {q}"
