"""Extraction of source facts into the source graph.

Every statement node yields exactly one rdf:type triple, a c:hasParent
link to the nearest enclosing statement, and a c:inFunction link. When
several constructs share a line range they merge onto one resource and
the outermost construct supplies the type. Declarations additionally
expose their variable node; statements that write a variable carry
c:assignsVariable so instrumentation queries need no property paths.
"""
from __future__ import annotations

from ..terms import C, Graph, RDF_TYPE, Str, Triple
from .nodes import (
    ArrayIndex, Assignment, Block, CallStmt, For, FunctionDecl, FunctionDef,
    If, MemberAccess, MemberAssign, Return, SourceUnit, StructDecl, VarInfo,
    VarRef, VariableDecl, While, stmt_iri, walk_statements,
)

CLASS_OF_KIND = {
    "FunctionDef": C + "FunctionDecl",
    "FunctionDecl": C + "FunctionDecl",
    "VariableDecl": C + "VariableDecl",
    "Assignment": C + "AssignmentStatement",
    "MemberAssignment": C + "AssignmentStatement",
    "For": C + "ForStatement",
    "While": C + "WhileStatement",
    "If": C + "IfStatement",
    "Return": C + "ReturnStatement",
    "Call": C + "CallStatement",
    "Block": C + "BlockStatement",
    "StructDecl": C + "StructDecl",
}

HAS_NAME = C + "hasName"
HAS_TYPE = C + "hasType"
HAS_DATA_TYPE = C + "hasDataType"
HAS_RETURN_TYPE = C + "hasReturnType"
HAS_DEFINITION = C + "hasDefinition"
HAS_VARIABLE = C + "hasVariable"
HAS_PARENT = C + "hasParent"
HAS_PARAMETER = C + "hasParameter"
ASSIGNS_VARIABLE = C + "assignsVariable"
IN_FUNCTION = C + "inFunction"
FUNCTION_TYPE = C + "Function_type"


def _data_type_iri(info: VarInfo) -> str:
    if info.data_type == "int":
        return C + "int"
    if info.data_type == "int[]":
        return C + "int_array"
    return C + "struct_" + info.struct_name


def _return_type_iri(return_type: str) -> str:
    return C + ("int_type" if return_type == "int" else "void_type")


def _assign_target_var(target) -> VarInfo | None:
    if isinstance(target, VarRef):
        return target.var
    if isinstance(target, ArrayIndex) and isinstance(target.array, VarRef):
        return target.array.var
    if isinstance(target, MemberAccess):
        return target.member_info
    return None


def extract_facts(unit: SourceUnit) -> list[Triple]:
    triples: list[Triple] = []
    typed: set[str] = set()
    parented: set[str] = set()

    def add(s, p, o):
        triples.append(Triple(s, p, o, Graph.SOURCE))

    def add_type(iri: str, cls: str):
        if iri not in typed:
            typed.add(iri)
            add(iri, RDF_TYPE, cls)

    def add_parent(iri: str, parent_iri: str):
        if iri not in parented and parent_iri != iri:
            parented.add(iri)
            add(iri, HAS_PARENT, parent_iri)

    def var_facts(info: VarInfo):
        add(info.iri, HAS_NAME, Str(info.name))
        add(info.iri, HAS_DATA_TYPE, _data_type_iri(info))

    def decl_facts(iri: str, decl: VariableDecl):
        add(iri, HAS_VARIABLE, decl.var.iri)
        var_facts(decl.var)
        if decl.init is not None or decl.init_list is not None:
            add(iri, ASSIGNS_VARIABLE, decl.var.iri)

    for item in unit.items:
        if isinstance(item, StructDecl):
            siri = stmt_iri(unit.file_prefix, item.lines)
            add_type(siri, CLASS_OF_KIND["StructDecl"])
            add(siri, HAS_NAME, Str(item.name))
            for m in item.members:
                miri = stmt_iri(unit.file_prefix, m.lines)
                add_type(miri, CLASS_OF_KIND["VariableDecl"])
                add_parent(miri, siri)
                add(miri, HAS_VARIABLE, m.var.iri)
                var_facts(m.var)
            continue

        fn_iri = stmt_iri(unit.file_prefix, item.lines)
        add_type(fn_iri, CLASS_OF_KIND["FunctionDecl"])
        add(fn_iri, HAS_NAME, Str(item.name))
        add(fn_iri, HAS_TYPE, FUNCTION_TYPE)
        add(fn_iri, HAS_RETURN_TYPE, _return_type_iri(item.return_type))
        for p in item.params:
            add(fn_iri, HAS_PARAMETER, p.iri)
            var_facts(p)
        if isinstance(item, FunctionDecl):
            continue

        body_iri = stmt_iri(unit.file_prefix, item.body.lines)
        add(fn_iri, HAS_DEFINITION, body_iri)

        for st, parent in walk_statements(item.body, item):
            iri = stmt_iri(unit.file_prefix, st.lines)
            add_type(iri, CLASS_OF_KIND[st.KIND])
            add_parent(iri, stmt_iri(unit.file_prefix, parent.lines))
            add(iri, IN_FUNCTION, fn_iri)
            if isinstance(st, VariableDecl):
                decl_facts(iri, st)
            elif isinstance(st, (Assignment, MemberAssign)):
                target = _assign_target_var(st.target)
                if target is not None:
                    add(iri, ASSIGNS_VARIABLE, target.iri)
            elif isinstance(st, For):
                if isinstance(st.init, VariableDecl):
                    add(iri, HAS_VARIABLE, st.init.var.iri)
                    var_facts(st.init.var)
                    add(iri, ASSIGNS_VARIABLE, st.init.var.iri)
                elif isinstance(st.init, Assignment):
                    target = _assign_target_var(st.init.target)
                    if target is not None:
                        add(iri, ASSIGNS_VARIABLE, target.iri)
                if st.incr is not None:
                    target = _assign_target_var(st.incr.target)
                    if target is not None:
                        add(iri, ASSIGNS_VARIABLE, target.iri)

    # Duplicates can arise on merged resources; keep first occurrence.
    seen: set[Triple] = set()
    unique: list[Triple] = []
    for t in triples:
        if t not in seen:
            seen.add(t)
            unique.append(t)
    return unique
