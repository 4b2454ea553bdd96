"""Execution semantics: capture points, timestamps, error exits, and the
trace-triple encoding.

The faithfulness tests replay each program through reference_interp.py, an
independent tree walker that knows nothing about clocks or triples, and
demand identical observation sequences, return values, prints, and frames.
"""
import random

import pytest

from spandebug.errors import CommandError, SourceSyntaxError
from spandebug.instrument import InstrumentationPlan, PlanEntry, instrument, plan_from_query
from spandebug.lang import extract_facts, parse, parse_expression, walk_statements
from spandebug.lang.nodes import Assignment, MemberAssign, VariableDecl, VarRef, stmt_iri
from spandebug.runtime import records_from_triples, run, to_trace_triples
from spandebug.store import TripleStore
from spandebug.terms import Graph, PD, Triple

from conftest import (
    LOCALMAX_SEQUENCE, MAXSUB, MAXSUB_FIXED, OBSERVE, OBSERVE_LOCALMAX,
    PROGRAMS, SAMPLE_INPUT)
from reference_interp import ReferenceInterpreter, RefError

F = "http://example.org/programs/main/"

DIVZERO = """int main() {
  int x = 5;
  int y = x / 0;
  return y;
}
"""

OOB_READ = """int main() {
  int a[3];
  a[0] = 1;
  int y = a[5];
  return y;
}
"""

NEG_INDEX = """int main() {
  int a[3];
  int y = a[-1];
  return y;
}
"""

ARRAY_MISUSE = """int main() {
  int a[3];
  int x = a + 1;
  return x;
}
"""

SPIN = """int main() {
  int i = 0;
  while (1) {
    i = i + 1;
  }
  return i;
}
"""

RUNAWAY_RECURSION = """int boom(int n) {
  return boom(n + 1);
}
"""

PRINT_SQUARES = """int main() {
  int i = 1;
  while (i <= 3) {
    print(i * i);
    i = i + 1;
  }
  print(-7);
  return 0;
}
"""

ALIAS_THROUGH_CALL = """int poke(int a[]) {
  a[0] = 42;
  return 0;
}
int main() {
  int a[2];
  a[0] = 1;
  a[1] = 2;
  poke(a);
  return a[0];
}
"""

SCALAR_BY_VALUE = """int bump(int x) {
  x = x + 1;
  return x;
}
int main() {
  int a = 5;
  int b = bump(a);
  return a * 10 + b;
}
"""

STRUCT_BY_VALUE = """struct Box {
  int v;
};
int scrub(struct Box b) {
  b.v = 0;
  return b.v;
}
int main() {
  struct Box b;
  b.v = 9;
  int z = scrub(b);
  return b.v * 10 + z;
}
"""

POINT_PROGRAM = """struct Point {
  int x;
  int y;
};
int main() {
  struct Point p;
  p.x = 3;
  p.y = 4;
  return p.x * p.x + p.y * p.y;
}
"""

ELSE_AND_UNARY = """int main() {
  int x = -5;
  int y = 0;
  if (x < 0) {
    y = -x;
  } else {
    y = x;
  }
  int z = !y;
  return y * 10 + z;
}
"""

GCD = """int gcd(int a, int b) {
  if (b == 0) {
    return a;
  }
  return gcd(b, a % b);
}
"""

DIGIT_SUM = """int digitSum(int n) {
  int s = 0;
  while (n != 0) {
    s = s + n % 10;
    n = n / 10;
  }
  return s;
}
"""

SHORT_CIRCUIT = """int main() {
  int x = 0;
  if (x != 0 && 10 / x > 0) {
    x = 1;
  }
  if (x == 0 || 10 / x > 0) {
    x = 2;
  }
  return x;
}
"""

WRAPAROUND = """int main() {
  int big = 9223372036854775807;
  int y = big + 1;
  return y < 0;
}
"""

INIT_LIST = """int main() {
  int a[5] = {9, 8, 7};
  int s = a[0] + a[1] + a[2] + a[3] + a[4];
  return s;
}
"""


def localmax_run(sample=SAMPLE_INPUT):
    unit = parse(MAXSUB.read_text())
    store = TripleStore()
    store.insert(extract_facts(unit))
    plan = plan_from_query(store, unit, OBSERVE_LOCALMAX.read_text())
    inst = instrument(unit, plan)
    return run(inst, "maxSubArraySum", [list(sample), len(sample)])


def observe_everything(unit) -> InstrumentationPlan:
    """One capture per assignment-like statement: the assigned scalar, the
    written array element, or the written struct member."""
    plan = InstrumentationPlan()
    seen = set()
    expr_n = 0
    for item in unit.items:
        for st, _parent in walk_statements(item):
            iri = stmt_iri(unit.file_prefix, st.lines)
            if isinstance(st, VariableDecl):
                v_id, label, decl, expr = st.var.iri, st.var.name, None, VarRef(st.var.name, st.var)
            elif isinstance(st, Assignment) and isinstance(st.target, VarRef):
                v = st.target.var
                v_id, label, decl, expr = v.iri, v.name, None, st.target
            elif isinstance(st, Assignment):
                expr_n += 1
                v_id, label, decl, expr = f"{F}expr{expr_n}", "element", None, st.target
            elif isinstance(st, MemberAssign):
                expr_n += 1
                v_id, label, decl, expr = (
                    f"{F}expr{expr_n}", "member", st.target.base.var.iri, st.target)
            else:
                continue
            if (iri, v_id) in seen:
                continue
            seen.add((iri, v_id))
            plan.entries.append(PlanEntry(iri, v_id, label, decl))
            plan.observables[v_id] = expr
    return plan


def run_both(text: str, entry: str, args: list):
    """Same instrumented program through the engine under test and through
    the reference walker; args are copied so neither run sees the other."""
    unit = parse(text)
    inst = instrument(unit, observe_everything(unit))

    def cp(a):
        return list(a) if isinstance(a, list) else dict(a) if isinstance(a, dict) else a

    result = run(inst, entry, [cp(a) for a in args])
    ref = ReferenceInterpreter(inst.unit, inst.plan.observables)
    try:
        ref_return, ref_env = ref.run(entry, [cp(a) for a in args])
        ref_error = None
    except RefError as exc:
        ref_return, ref_env, ref_error = None, None, exc.kind
    return result, ref, ref_return, ref_env, ref_error


# -- the running example ------------------------------------------------------


def test_running_example_observation_sequence():
    res = localmax_run()
    assert res.exit.kind == "normal"
    assert [r.val for r in res.records] == LOCALMAX_SEQUENCE
    assert [r.timestamp for r in res.records] == [6, 12, 19, 25, 31, 37]
    assert all(r.v_id == F + "ln3Var" and r.s_id == F + "ln5" for r in res.records)
    # the buggy comparison never lets a positive sum through
    assert res.return_value == -32767


def test_timestamps_strictly_increase_across_log_points():
    unit = parse(MAXSUB.read_text())
    store = TripleStore()
    store.insert(extract_facts(unit))
    plan = plan_from_query(store, unit, OBSERVE.read_text())
    res = run(instrument(unit, plan), "maxSubArraySum",
              [list(SAMPLE_INPUT), len(SAMPLE_INPUT)])
    stamps = [r.timestamp for r in res.records]
    assert len(res.records) == 18
    assert stamps == sorted(stamps)
    assert len(set(stamps)) == len(stamps)
    assert all(t > 0 for t in stamps)


# -- trace graph encoding ------------------------------------------------------


def test_trace_triples_shape_and_round_trip():
    res = localmax_run()
    triples = to_trace_triples(res)
    assert len(triples) == 4 * len(res.records)  # no member accesses logged
    assert all(t.g is Graph.TRACE for t in triples)
    first = res.records[0]
    assert Triple(first.v_id, PD + "hasState", PD + "st1", Graph.TRACE) in triples
    assert Triple(PD + "st1", PD + "afterStatement", F + "ln5", Graph.TRACE) in triples
    assert Triple(PD + "st1", PD + "timeStamp", 6, Graph.TRACE) in triples
    assert Triple(PD + "st1", PD + "value", 3, Graph.TRACE) in triples

    noisy = list(triples)
    # an orphan state and an incomplete one must both be ignored
    noisy.append(Triple(PD + "st99", PD + "timeStamp", 5, Graph.TRACE))
    noisy.append(Triple(F + "ln3Var", PD + "hasState", PD + "st98", Graph.TRACE))
    random.Random(7).shuffle(noisy)
    assert records_from_triples(noisy) == res.records


def test_trace_triples_carry_declaration_for_members():
    unit = parse(POINT_PROGRAM)
    plan = InstrumentationPlan()
    expr = parse_expression("p.x", unit, F + "ln7")
    plan.entries.append(PlanEntry(F + "ln7", F + "expr1", "p.x", F + "ln6Var"))
    plan.observables[F + "expr1"] = expr
    res = run(instrument(unit, plan), "main", [])
    assert res.exit.kind == "normal" and res.return_value == 25
    assert [(r.val, r.decl_id) for r in res.records] == [(3, F + "ln6Var")]
    triples = to_trace_triples(res)
    assert len(triples) == 5  # the extra hasDeclaration link
    assert Triple(PD + "st1", PD + "hasDeclaration", F + "ln6Var", Graph.TRACE) in triples
    assert records_from_triples(triples) == res.records


# -- error exits ---------------------------------------------------------------


@pytest.mark.parametrize("source,kind,line", [
    (DIVZERO, "division-by-zero", "ln3"),
    (OOB_READ, "index-out-of-bounds", "ln4"),
    (NEG_INDEX, "index-out-of-bounds", "ln3"),
    (ARRAY_MISUSE, "type-error", "ln3"),
    (RUNAWAY_RECURSION, "stack-overflow", "ln2"),
])
def test_runtime_error_exits(source, kind, line):
    entry = "boom" if "boom" in source else "main"
    args = [0] if entry == "boom" else []
    res = run(parse(source), entry, args)
    assert res.exit.kind == "runtime-error"
    assert res.exit.error == kind
    assert res.exit.stmt_iri == F + line
    assert res.return_value is None


def test_step_limit_exit():
    res = run(parse(SPIN), "main", [], max_ticks=50)
    assert res.exit.kind == "runtime-error"
    assert res.exit.error == "step-limit"


def test_partial_records_survive_an_error():
    unit = parse(DIVZERO)
    plan = observe_everything(unit)
    res = run(instrument(unit, plan), "main", [])
    assert res.exit.error == "division-by-zero"
    assert [(r.v_id, r.s_id, r.val) for r in res.records] == [(F + "ln2Var", F + "ln2", 5)]


def test_calls_to_undefined_functions_fail_at_parse_time():
    with pytest.raises(SourceSyntaxError, match="mystery"):
        parse("int main() {\n  int x = mystery(1);\n  return x;\n}\n")


# -- entry validation ----------------------------------------------------------


def test_unknown_entry_point():
    with pytest.raises(CommandError, match="no function named"):
        run(parse(SCALAR_BY_VALUE), "nope", [])


def test_wrong_arity():
    with pytest.raises(CommandError, match="takes 0 arguments"):
        run(parse(SCALAR_BY_VALUE), "main", [1])


@pytest.mark.parametrize("args", [["x", 6], [[3, "x"], 6], [[3], "6"], [3, 6]])
def test_entry_argument_types_are_checked(args):
    unit = parse(MAXSUB.read_text())
    with pytest.raises(CommandError):
        run(unit, "maxSubArraySum", args)


def test_struct_entry_arguments():
    source = POINT_PROGRAM + "int flat(struct Point q) {\n  return q.x + q.y;\n}\n"
    unit = parse(source)
    assert run(unit, "flat", [{"x": 3, "y": 4}]).return_value == 7
    # omitted members default to zero; unknown members are rejected
    assert run(unit, "flat", [{"x": 3}]).return_value == 3
    with pytest.raises(CommandError, match="unknown struct member"):
        run(unit, "flat", [{"z": 1}])


def test_entry_arrays_are_copied_in():
    caller_owned = [5, 2, 9, 1]
    unit = parse((PROGRAMS / "insertion_sort.c").read_text())
    res = run(unit, "sortArray", [caller_owned, 4])
    assert res.final_env[F + "ln1Var"] == [1, 2, 5, 9]
    assert caller_owned == [5, 2, 9, 1]  # the launch boundary is a copy


# -- calling conventions inside the language ------------------------------------


def test_arrays_alias_through_calls():
    res = run(parse(ALIAS_THROUGH_CALL), "main", [])
    assert res.return_value == 42


def test_scalars_pass_by_value():
    res = run(parse(SCALAR_BY_VALUE), "main", [])
    assert res.return_value == 56
    assert res.final_env[F + "ln6Var"] == 5


def test_structs_pass_by_value():
    res = run(parse(STRUCT_BY_VALUE), "main", [])
    assert res.return_value == 90


def test_print_builtin_writes_lines():
    res = run(parse(PRINT_SQUARES), "main", [])
    assert res.stdout == "1\n4\n9\n-7\n"
    assert res.return_value == 0


def test_sort_program_against_python_sort():
    unit = parse((PROGRAMS / "insertion_sort.c").read_text())
    rng = random.Random(1405)
    for _ in range(25):
        data = [rng.randint(-100, 100) for _ in range(rng.randint(0, 12))]
        res = run(unit, "sortArray", [list(data), len(data)])
        assert res.exit.kind == "normal"
        assert res.final_env[F + "ln1Var"] == sorted(data)


# -- faithfulness against the reference walker ----------------------------------

CORPUS = [
    ("maxsub", MAXSUB.read_text(), "maxSubArraySum", [list(SAMPLE_INPUT), 6]),
    ("maxsub-fixed", MAXSUB_FIXED.read_text(), "maxSubArraySum", [list(SAMPLE_INPUT), 6]),
    ("sort", (PROGRAMS / "insertion_sort.c").read_text(), "sortArray", [[5, 2, 9, 1], 4]),
    ("else-unary", ELSE_AND_UNARY, "main", []),
    ("gcd", GCD, "gcd", [252, 105]),
    ("digitsum", DIGIT_SUM, "digitSum", [1234]),
    ("digitsum-negative", DIGIT_SUM, "digitSum", [-17]),
    ("point", POINT_PROGRAM, "main", []),
    ("struct-by-value", STRUCT_BY_VALUE, "main", []),
    ("alias", ALIAS_THROUGH_CALL, "main", []),
    ("short-circuit", SHORT_CIRCUIT, "main", []),
    ("wraparound", WRAPAROUND, "main", []),
    ("init-list", INIT_LIST, "main", []),
    ("print", PRINT_SQUARES, "main", []),
    ("divzero", DIVZERO, "main", []),
    ("oob", OOB_READ, "main", []),
]


@pytest.mark.parametrize("name,text,entry,args", CORPUS, ids=[c[0] for c in CORPUS])
def test_engine_matches_reference_walker(name, text, entry, args):
    result, ref, ref_return, ref_env, ref_error = run_both(text, entry, args)
    assert [(r.v_id, r.s_id, r.val) for r in result.records] == ref.log
    assert result.stdout == "".join(line + "\n" for line in ref.printed)
    if ref_error is None:
        assert result.exit.kind == "normal"
        assert result.return_value == ref_return
        assert result.final_env == ref_env
    else:
        assert result.exit.kind == "runtime-error"
        assert result.exit.error == ref_error


def test_engine_matches_reference_on_random_sorts():
    text = (PROGRAMS / "insertion_sort.c").read_text()
    rng = random.Random(20260822)
    for _ in range(15):
        data = [rng.randint(-30, 30) for _ in range(rng.randint(0, 10))]
        result, ref, ref_return, ref_env, ref_error = run_both(
            text, "sortArray", [data, len(data)])
        assert ref_error is None
        assert [(r.v_id, r.s_id, r.val) for r in result.records] == ref.log
        assert result.final_env == ref_env
