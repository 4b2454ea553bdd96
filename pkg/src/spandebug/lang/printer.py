"""Canonical source printer.

Prints one statement per line with two-space indentation. Re-parsing the
output yields the same tree shape, with statement identities recomputed
from the new line numbers (the round-trip property the tests rely on).
Bodies keep their original form: a single-statement body stays unbraced.
"""
from __future__ import annotations

from .nodes import (
    ArrayIndex, Assignment, Binary, Block, CallExpr, CallStmt, Expr, For,
    FunctionDecl, FunctionDef, If, IntLit, MemberAccess, MemberAssign,
    Return, SourceUnit, StructDecl, Unary, VarInfo, VarRef, VariableDecl,
    While,
)

_PRECEDENCE = {
    "||": 1, "&&": 2, "==": 3, "!=": 3,
    "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5, "*": 6, "/": 6, "%": 6,
}


def expr_to_source(e: Expr, parent_prec: int = 0) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, VarRef):
        return e.name
    if isinstance(e, ArrayIndex):
        return f"{expr_to_source(e.array, 99)}[{expr_to_source(e.index)}]"
    if isinstance(e, MemberAccess):
        return f"{expr_to_source(e.base, 99)}.{e.member}"
    if isinstance(e, Unary):
        return f"{e.op}{expr_to_source(e.operand, 98)}"
    if isinstance(e, CallExpr):
        args = ", ".join(expr_to_source(a) for a in e.args)
        return f"{e.name}({args})"
    if isinstance(e, Binary):
        prec = _PRECEDENCE[e.op]
        text = f"{expr_to_source(e.left, prec)} {e.op} {expr_to_source(e.right, prec + 1)}"
        if prec < parent_prec:
            return f"({text})"
        return text
    raise TypeError(f"cannot print {e!r}")


def _param_to_source(p: VarInfo) -> str:
    if p.data_type == "int[]":
        return f"int {p.name}[]"
    if p.data_type.startswith("struct "):
        return f"{p.data_type} {p.name}"
    return f"int {p.name}"


def _decl_to_source(d: VariableDecl, semi: bool = True) -> str:
    tail = ";" if semi else ""
    if d.var.data_type.startswith("struct "):
        return f"{d.var.data_type} {d.var.name}{tail}"
    if d.var.data_type == "int[]":
        if d.init_list is not None:
            items = ", ".join(str(v) for v in d.init_list)
            return f"int {d.var.name}[{d.array_size}] = {{{items}}}{tail}"
        return f"int {d.var.name}[{d.array_size}]{tail}"
    if d.init is not None:
        return f"int {d.var.name} = {expr_to_source(d.init)}{tail}"
    return f"int {d.var.name}{tail}"


def _simple_to_source(st, semi: bool = True) -> str:
    tail = ";" if semi else ""
    if isinstance(st, VariableDecl):
        return _decl_to_source(st, semi)
    if isinstance(st, (Assignment, MemberAssign)):
        return f"{expr_to_source(st.target, 99)} = {expr_to_source(st.value)}{tail}"
    if isinstance(st, CallStmt):
        return f"{expr_to_source(st.call)}{tail}"
    if isinstance(st, Return):
        if st.expr is None:
            return f"return{tail}"
        return f"return {expr_to_source(st.expr)}{tail}"
    raise TypeError(f"not a simple statement: {st!r}")


class _Printer:
    def __init__(self):
        self.lines: list[str] = []

    def emit(self, depth: int, text: str):
        self.lines.append("  " * depth + text)

    def block_body(self, block: Block, depth: int):
        for st in block.stmts:
            self.statement(st, depth)

    def body(self, st, depth: int, header: str, depth0: int):
        """Emit a compound-statement header plus its body, braced or not."""
        if isinstance(st, Block):
            self.emit(depth0, header + " {")
            self.block_body(st, depth)
            self.emit(depth0, "}")
            return True
        self.emit(depth0, header)
        self.statement(st, depth)
        return False

    def statement(self, st, depth: int):
        if isinstance(st, (VariableDecl, Assignment, MemberAssign, CallStmt, Return)):
            self.emit(depth, _simple_to_source(st))
        elif isinstance(st, Block):
            self.emit(depth, "{")
            self.block_body(st, depth + 1)
            self.emit(depth, "}")
        elif isinstance(st, For):
            init = _simple_to_source(st.init, semi=False) if st.init is not None else ""
            cond = expr_to_source(st.cond) if st.cond is not None else ""
            incr = _simple_to_source(st.incr, semi=False) if st.incr is not None else ""
            header = f"for ({init}; {cond}; {incr})"
            self.body(st.body, depth + 1, header, depth)
        elif isinstance(st, While):
            self.body(st.body, depth + 1, f"while ({expr_to_source(st.cond)})", depth)
        elif isinstance(st, If):
            braced = self.body(st.then, depth + 1, f"if ({expr_to_source(st.cond)})", depth)
            if st.els is not None:
                if braced and isinstance(st.els, Block):
                    # Merge '} else {' onto one line.
                    self.lines.pop()
                    self.emit(depth, "} else {")
                    self.block_body(st.els, depth + 1)
                    self.emit(depth, "}")
                else:
                    self.emit(depth, "else")
                    self.statement(st.els, depth + 1)
        else:
            raise TypeError(f"cannot print {st!r}")


def to_source(unit: SourceUnit) -> str:
    pr = _Printer()
    for i, item in enumerate(unit.items):
        if i > 0:
            pr.lines.append("")
        if isinstance(item, StructDecl):
            pr.emit(0, f"struct {item.name} {{")
            for m in item.members:
                pr.emit(1, f"int {m.var.name};")
            pr.emit(0, "};")
        elif isinstance(item, FunctionDecl):
            params = ", ".join(_param_to_source(p) for p in item.params)
            pr.emit(0, f"{item.return_type} {item.name}({params});")
        elif isinstance(item, FunctionDef):
            params = ", ".join(_param_to_source(p) for p in item.params)
            pr.emit(0, f"{item.return_type} {item.name}({params}) {{")
            pr.block_body(item.body, 1)
            pr.emit(0, "}")
    return "\n".join(pr.lines) + "\n"
