"""Rule engine, the three checking strategies, and three-valued queries.

Strategy agreement runs every property over randomized spans in all
three strategies and compares each verdict against a direct value-list
oracle that never touches a triple.
"""
import random
import time

import pytest

from spandebug.errors import (
    BadSpecShape, CaseBudgetExceeded, CommandError, InconsistencyDetected,
    ModelMismatch, NotComparable, RuleParseError, TimeoutExceeded)
from spandebug.reasoner import (
    BuiltinAtom, ClassAtom, ConsecutiveQuery, DomainAxiom, PropAtom,
    check_inter, check_intra, check_open_world, forward_chain,
    inter_classes, intra_classes, parse_property, parse_rules)
from spandebug.reasoner.openworld import FALSE, TRUE, UNKNOWN
from spandebug.spans import Span, SpanCell, materialize_graph
from spandebug.terms import Graph, PD, RDF_TYPE, Str, Triple

FAM = "http://example.org/fam#"


def fact(s, p, o):
    return Triple(s, p, o, Graph.SPAN)


def span_models(values, name="s"):
    cells = [SpanCell(v, 2 * i + 1) for i, v in enumerate(values)]
    span = Span(name, FAM + "v", cells)
    return materialize_graph(span, "list"), materialize_graph(span, "set")


def pair_models(values1, values2):
    """Two interleaved spans of equal length in both models."""
    c1 = [SpanCell(v, 2 * i + 1) for i, v in enumerate(values1)]
    c2 = [SpanCell(v, 2 * i + 2) for i, v in enumerate(values2)]
    a, b = Span("a", FAM + "v1", c1), Span("b", FAM + "v2", c2)
    return ((materialize_graph(a, "list"), materialize_graph(b, "list")),
            (materialize_graph(a, "set"), materialize_graph(b, "set")))


# -- rule parsing ----------------------------------------------------------


def test_parse_rules_names_and_atom_kinds():
    rules, complements = parse_rules(
        "zero_head: rdf:List(?l), rdf:first(?l, ?v), eq(?v, 0) -> pd:Z(?l)\n"
        "# a comment line\n"
        "\n"
        "rdf:List(?l) -> pd:AnyList(?l)\n"
        "complement(pd:A, pd:B)\n")
    assert [r.name for r in rules] == ["zero_head", "r4"]
    body = rules[0].antecedent
    assert isinstance(body[0], ClassAtom) and body[0].cls.endswith("#List")
    assert isinstance(body[1], PropAtom) and body[1].pred.endswith("#first")
    assert isinstance(body[2], BuiltinAtom) and body[2].rel == "eq"
    assert rules[0].consequent[0].cls == PD + "Z"
    assert complements == [(PD + "A", PD + "B")]


def test_parse_rules_term_forms():
    rules, _ = parse_rules(
        'r: <http://x.org/p>(?a, "tag"), eq(?a, 7) -> <http://x.org/Q>(?a)\n')
    atom = rules[0].antecedent[0]
    assert atom.pred == "http://x.org/p"
    assert atom.o == Str("tag")
    assert rules[0].antecedent[1].right == 7


@pytest.mark.parametrize("text,match", [
    ("eq(?x, 0) -> pd:X(?x)", "not bound"),
    ("rdf:List(?l), lt(?l, ?m) -> pd:X(?l)", "not bound"),
    ("rdf:List(?l) -> pd:X(?m)", "fresh individual"),
    ("rdf:List(?l) -> eq(?l, 0)", "head"),
    ("rdf:List(?l) -> ", "body and a head"),
    (" -> pd:X(?l)", "body and a head"),
    ("rdf:List(?l), pd:X -> pd:Y(?l)", "malformed"),
    ("rdf:List(?l) pd:Y(?l)", "->"),
    ("complement(pd:A)", "two classes"),
    ("complement(pd:A, 7)", "class IRIs"),
    ("rdf:first(?l, ?v, ?w) -> pd:X(?l)", "one or two"),
    ("gt(?a, ?b, ?c) -> pd:X(?a)", "two terms"),
])
def test_rule_safety_and_shape_errors(text, match):
    with pytest.raises(RuleParseError, match=match):
        parse_rules(text)


# -- forward chaining --------------------------------------------------------


ANCESTRY = (
    f"base: <{FAM}parent>(?x, ?y) -> <{FAM}ancestor>(?x, ?y)\n"
    f"step: <{FAM}parent>(?x, ?y), <{FAM}ancestor>(?y, ?z) -> <{FAM}ancestor>(?x, ?z)\n"
)


def test_forward_chain_reaches_the_fixpoint():
    rules, complements = parse_rules(ANCESTRY)
    facts = [fact(FAM + "a", FAM + "parent", FAM + "b"),
             fact(FAM + "b", FAM + "parent", FAM + "c"),
             fact(FAM + "c", FAM + "parent", FAM + "d")]
    inferred = forward_chain(rules, facts, complements)
    assert all(t.p == FAM + "ancestor" for t in inferred)
    assert {(t.s, t.o) for t in inferred} == {
        (FAM + s, FAM + o) for s, o in
        [("a", "b"), ("a", "c"), ("a", "d"), ("b", "c"), ("b", "d"), ("c", "d")]}


def test_forward_chain_returns_only_new_triples():
    rules, _ = parse_rules(ANCESTRY)
    facts = [fact(FAM + "a", FAM + "parent", FAM + "b")]
    inferred = forward_chain(rules, facts)
    assert len(inferred) == 1
    only = inferred[0]
    assert (only.s, only.p, only.o) == (FAM + "a", FAM + "ancestor", FAM + "b")
    assert only.g is Graph.EXTERNAL
    # a second application adds nothing
    assert forward_chain(rules, facts + inferred) == []


def test_ordering_builtins_are_integer_only():
    rules, _ = parse_rules(
        f"r: <{FAM}val>(?x, ?vx), <{FAM}val>(?y, ?vy), lt(?vx, ?vy) -> <{FAM}less>(?x, ?y)\n")
    int_facts = [fact(FAM + "a", FAM + "val", 3), fact(FAM + "b", FAM + "val", 5)]
    inferred = forward_chain(rules, int_facts)
    assert [(t.s, t.o) for t in inferred] == [(FAM + "a", FAM + "b")]
    str_facts = [fact(FAM + "a", FAM + "val", Str("3")),
                 fact(FAM + "b", FAM + "val", Str("5"))]
    assert forward_chain(rules, str_facts) == []
    # eq and ne still compare arbitrary terms
    rules_eq, _ = parse_rules(f"r: <{FAM}p>(?x, ?y), ne(?x, ?y) -> <{FAM}Q>(?x)\n")
    assert len(forward_chain(rules_eq, [fact(FAM + "a", FAM + "p", FAM + "b")])) == 1


def test_inconsistency_between_asserted_and_derived():
    rules, complements = parse_rules(
        f"r: <{FAM}p>(?x, ?y) -> <{FAM}B>(?x)\n"
        f"complement(<{FAM}A>, <{FAM}B>)\n")
    facts = [fact(FAM + "a", RDF_TYPE, FAM + "A"),
             fact(FAM + "a", FAM + "p", FAM + "b")]
    with pytest.raises(InconsistencyDetected) as err:
        forward_chain(rules, facts, complements)
    assert err.value.individual == FAM + "a"


def test_inconsistency_between_two_assertions():
    facts = [fact(FAM + "a", RDF_TYPE, FAM + "A"),
             fact(FAM + "a", RDF_TYPE, FAM + "B")]
    with pytest.raises(InconsistencyDetected):
        forward_chain([], facts, [(FAM + "A", FAM + "B")])


def test_forward_chain_deadline():
    rules, _ = parse_rules(
        f"r: <{FAM}p>(?x, ?y), <{FAM}p>(?y, ?z), <{FAM}p>(?z, ?w) -> <{FAM}q>(?x, ?w)\n")
    nodes = [FAM + f"n{i}" for i in range(20)]
    facts = [fact(a, FAM + "p", b) for a in nodes for b in nodes]
    with pytest.raises(TimeoutExceeded):
        forward_chain(rules, facts, deadline=time.monotonic() - 1.0)


# -- property naming ---------------------------------------------------------


def test_property_parsing():
    assert parse_property("all-positive").kind == "universal"
    assert parse_property("has-zero").kind == "existential"
    assert parse_property("ascending").kind == "comparison"
    assert parse_property("all-non-positive").pred == "non-positive"
    assert parse_property("has-duplicate").label() == "has-duplicate"
    for bad in ("positively", "all-", "has-prime", "sorted", ""):
        with pytest.raises(CommandError):
            parse_property(bad)


def test_derived_class_names():
    assert intra_classes(parse_property("all-positive")) == (
        PD + "CellWithNon-PositiveValue",
        PD + "ListWithNon-PositiveElement",
        PD + "SpanWithAllPositiveElements")
    assert intra_classes(parse_property("has-zero")) == (
        PD + "CellWithZeroValue",
        PD + "ListWithZeroElement",
        PD + "ListWithNoZeroElement")
    assert intra_classes(parse_property("ascending")) == (
        PD + "CellWithAscendingViolation",
        PD + "ListWithAscendingViolation",
        PD + "AscendingSpan")
    assert inter_classes(">") == (
        PD + "CellWithGreaterPairViolation",
        PD + "ListWithGreaterPairViolation",
        PD + "PairwiseGreaterSpan")


# -- the value-list oracle ---------------------------------------------------


ORDER_HOLDS = {
    "ascending": lambda a, b: a < b,
    "descending": lambda a, b: a > b,
    "non-ascending": lambda a, b: a >= b,
    "non-descending": lambda a, b: a <= b,
}

REL_HOLDS = {
    "=": lambda a, b: a == b, "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b, "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b, ">=": lambda a, b: a >= b,
}


def holds(pred, v, values):
    if pred == "duplicate":
        return values.count(v) >= 2
    if pred == "unique":
        return values.count(v) == 1
    return {"positive": v > 0, "negative": v < 0, "zero": v == 0,
            "non-positive": v <= 0, "non-negative": v >= 0,
            "non-zero": v != 0}[pred]


def oracle_intra(values, name):
    if name in ORDER_HOLDS:
        for i in range(len(values) - 1):
            if not ORDER_HOLDS[name](values[i], values[i + 1]):
                return "False", i
        return "True", None
    pred = name.split("-", 1)[1]
    if name.startswith("all-"):
        for i, v in enumerate(values):
            if not holds(pred, v, values):
                return "False", i
        return "True", None
    for i, v in enumerate(values):
        if holds(pred, v, values):
            return "True", i
    return "False", None


def oracle_inter(values1, values2, rel):
    for i, (a, b) in enumerate(zip(values1, values2)):
        if not REL_HOLDS[rel](a, b):
            return "False", i
    return "True", None


PREDS = ["positive", "negative", "zero", "non-positive", "non-negative",
         "non-zero", "duplicate", "unique"]
ALL_PROPERTIES = ([f"all-{p}" for p in PREDS] + [f"has-{p}" for p in PREDS]
                  + list(ORDER_HOLDS))


def every_strategy(ms_list, ms_set, prop_name):
    prop = parse_property(prop_name)
    out = []
    for strategy in ("dl-list", "dl-set", "rl-list"):
        ms = ms_set if strategy == "dl-set" else ms_list
        out.append(check_intra(ms, prop, strategy))
    return out


def test_strategies_agree_with_the_oracle():
    rng = random.Random(88100)
    for _ in range(120):
        values = [rng.randint(-3, 3) for _ in range(rng.randint(0, 20))]
        ms_list, ms_set = span_models(values)
        for prop_name in ALL_PROPERTIES:
            expected = oracle_intra(values, prop_name)
            for verdict in every_strategy(ms_list, ms_set, prop_name):
                assert (verdict.value, verdict.witness) == expected, \
                    f"{prop_name} on {values} via {verdict.strategy}"


def test_verdict_carries_the_derived_class():
    values = [2, 0, 5]
    ms_list, ms_set = span_models(values)
    cell_cls, has_cls, comp_cls = intra_classes(parse_property("all-positive"))
    for verdict in every_strategy(ms_list, ms_set, "all-positive"):
        assert verdict.value == "False" and verdict.witness == 1
        assert verdict.classes == (has_cls,)
    for verdict in every_strategy(*span_models([2, 1, 5]), "all-positive"):
        assert verdict.value == "True" and verdict.witness is None
        assert verdict.classes == (comp_cls,)


def test_empty_span_verdicts():
    ms_list, ms_set = span_models([])
    for prop_name, value in (("all-zero", "True"), ("has-zero", "False"),
                             ("ascending", "True"), ("all-duplicate", "True"),
                             ("has-unique", "False")):
        for verdict in every_strategy(ms_list, ms_set, prop_name):
            assert verdict.value == value, prop_name
            assert verdict.witness is None


def test_universal_existential_duality():
    rng = random.Random(88200)
    viol = {"positive": "non-positive", "negative": "non-negative",
            "zero": "non-zero", "non-positive": "positive",
            "non-negative": "negative", "non-zero": "zero",
            "duplicate": "unique", "unique": "duplicate"}
    for _ in range(60):
        values = [rng.randint(-3, 3) for _ in range(rng.randint(0, 15))]
        ms_list, _ = span_models(values)
        for pred in PREDS:
            forall = check_intra(ms_list, parse_property(f"all-{pred}"))
            exists_viol = check_intra(ms_list, parse_property(f"has-{viol[pred]}"))
            assert (forall.value == "True") == (exists_viol.value == "False")
            assert forall.witness == exists_viol.witness


def test_strict_orders_imply_their_weak_forms():
    rng = random.Random(88300)
    for _ in range(60):
        values = [rng.randint(-3, 3) for _ in range(rng.randint(0, 12))]
        ms_list, _ = span_models(values)
        for strict, weak in (("ascending", "non-descending"),
                             ("descending", "non-ascending")):
            if check_intra(ms_list, parse_property(strict)).value == "True":
                assert check_intra(ms_list, parse_property(weak)).value == "True"


def test_span_pair_checks_agree_with_the_oracle():
    rng = random.Random(88400)
    for _ in range(80):
        n = rng.randint(0, 12)
        v1 = [rng.randint(-4, 4) for _ in range(n)]
        v2 = [rng.randint(-4, 4) for _ in range(n)]
        (l1, l2), (s1, s2) = pair_models(v1, v2)
        for rel in REL_HOLDS:
            expected = oracle_inter(v1, v2, rel)
            for strategy in ("dl-list", "dl-set", "rl-list"):
                a, b = (s1, s2) if strategy == "dl-set" else (l1, l2)
                verdict = check_inter(a, b, rel, strategy)
                assert (verdict.value, verdict.witness) == expected, \
                    f"{rel} on {v1} {v2} via {strategy}"


def test_incomparable_spans_are_rejected():
    (l1, _), _ = pair_models([1, 2], [3, 4])
    (l3, _), _ = pair_models([1], [3])
    with pytest.raises(NotComparable):
        check_inter(l1, l3, "=")


def test_strategy_model_requirements():
    ms_list, ms_set = span_models([1, 2])
    with pytest.raises(ModelMismatch):
        check_intra(ms_set, parse_property("all-positive"), "dl-list")
    with pytest.raises(ModelMismatch):
        check_intra(ms_list, parse_property("all-positive"), "dl-set")
    with pytest.raises(ModelMismatch):
        check_intra(ms_set, parse_property("all-positive"), "rl-list")
    with pytest.raises(CommandError, match="strategy"):
        check_intra(ms_list, parse_property("all-positive"), "guess")
    with pytest.raises(CommandError, match="relation"):
        check_inter(ms_list, ms_list, "~")


def test_deadline_stops_the_scan_strategies():
    ms_list, ms_set = span_models([1, 2, 3])
    past = time.monotonic() - 1.0
    with pytest.raises(TimeoutExceeded):
        check_intra(ms_list, parse_property("all-positive"), "dl-list", deadline=past)
    with pytest.raises(TimeoutExceeded):
        check_intra(ms_set, parse_property("all-positive"), "dl-set", deadline=past)


def test_asserted_complement_clashes_with_derivation():
    ms_list, ms_set = span_models([2, -1, 5])
    comp_cls = intra_classes(parse_property("all-positive"))[2]
    assertion = Triple(ms_list.head, RDF_TYPE, comp_cls, Graph.EXTERNAL)
    for strategy, ms in (("dl-list", ms_list), ("dl-set", ms_set), ("rl-list", ms_list)):
        with pytest.raises(InconsistencyDetected):
            check_intra(ms, parse_property("all-positive"), strategy,
                        extra_facts=[assertion])
    # consistent assertions pass through untouched
    ok = check_intra(ms_list, parse_property("all-negative"), "rl-list",
                     extra_facts=[assertion])
    assert ok.value == "False"


# -- open-world queries ------------------------------------------------------


P1, P2 = FAM + "p1", FAM + "p2"
C1, C2, SUB = FAM + "C1", FAM + "C2", FAM + "Sub"
DEMO_QUERY = ConsecutiveQuery((P1, P2), (C1, C2))
DEMO_KNOWN = [(P1, C1), (P1, C2), (P2, SUB)]


def test_unknown_without_the_axiom():
    res = check_open_world(DEMO_QUERY, known=DEMO_KNOWN)
    assert (res.value, res.cases, res.per_case) == (UNKNOWN, 1, [UNKNOWN])


def test_false_under_the_closed_reading():
    res = check_open_world(DEMO_QUERY, known=DEMO_KNOWN, mode="closed")
    assert (res.value, res.cases, res.per_case) == (FALSE, 1, [FALSE])


def test_true_once_the_axiom_splits_the_cases():
    axiom = DomainAxiom(SUB, (C1, C2))
    res = check_open_world(DEMO_QUERY, axioms=[axiom], known=DEMO_KNOWN)
    assert (res.value, res.cases, res.per_case) == (TRUE, 2, [TRUE, TRUE])


def test_mixed_branches_stay_unknown():
    axiom = DomainAxiom(SUB, (C1, FAM + "C3"))
    res = check_open_world(DEMO_QUERY, axioms=[axiom], known=DEMO_KNOWN)
    assert res.value == UNKNOWN
    assert sorted(res.per_case) == [TRUE, UNKNOWN]


def test_adjacent_known_memberships_need_no_axioms():
    query = ConsecutiveQuery((P1, P2, FAM + "p3"), (C1,))
    res = check_open_world(query, known=[(P2, C1), (FAM + "p3", C1)], mode="closed")
    assert res.value == TRUE


def test_single_point_queries_are_false():
    res = check_open_world(ConsecutiveQuery((P1,), (C1,)), known=[(P1, C1)])
    assert res.value == FALSE


def test_negative_assertions_close_single_gaps():
    res = check_open_world(ConsecutiveQuery((P1, P2), (C1,)),
                           known=[(P1, C1)], negatives=[(P2, C1)])
    assert res.value == FALSE


def test_negatives_prune_axiom_branches():
    axiom = DomainAxiom(SUB, (C1, C2))
    res = check_open_world(DEMO_QUERY, axioms=[axiom], known=DEMO_KNOWN,
                           negatives=[(P2, C2)])
    assert (res.value, res.cases) == (TRUE, 1)


def test_exhausted_axioms_mean_unsatisfiable_knowledge():
    axiom = DomainAxiom(SUB, (C1, C2))
    res = check_open_world(DEMO_QUERY, axioms=[axiom], known=DEMO_KNOWN,
                           negatives=[(P2, C1), (P2, C2)])
    assert (res.value, res.cases, res.per_case) == (FALSE, 0, [])


def test_case_budget():
    axioms = [DomainAxiom(SUB, (C1, C2, FAM + "C3"))]
    known = [(P1, SUB), (P2, SUB)]
    query = ConsecutiveQuery((P1, P2), (C1,))
    assert check_open_world(query, axioms=axioms, known=known).cases == 9
    with pytest.raises(CaseBudgetExceeded):
        check_open_world(query, axioms=axioms, known=known, case_budget=8)


def test_axiom_and_mode_shape_errors():
    with pytest.raises(BadSpecShape):
        DomainAxiom(SUB, (C1, C2, FAM + "C3", FAM + "C4", FAM + "C5"))
    with pytest.raises(BadSpecShape):
        DomainAxiom(SUB, ())
    with pytest.raises(BadSpecShape, match="mode"):
        check_open_world(DEMO_QUERY, mode="ajar")


def test_true_verdicts_survive_new_axioms():
    rng = random.Random(88500)
    classes = [FAM + f"K{i}" for i in range(4)]
    points = [FAM + f"q{i}" for i in range(4)]
    survived = 0
    for _ in range(200):
        known = {(p, c) for p in points for c in classes if rng.random() < 0.4}
        query = ConsecutiveQuery(tuple(points[:rng.randint(2, 4)]),
                                 tuple(rng.sample(classes, rng.randint(1, 3))))
        before = check_open_world(query, known=known)
        if before.value != TRUE:
            continue
        survived += 1
        axioms = [DomainAxiom(rng.choice(classes),
                              tuple(rng.sample(classes, rng.randint(1, 4))))
                  for _ in range(rng.randint(1, 2))]
        after = check_open_world(query, axioms=axioms, known=known, case_budget=None)
        assert after.value == TRUE
    assert survived > 20  # the generator must actually exercise the claim
