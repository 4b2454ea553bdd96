"""AST node types for the supported C subset.

Statement nodes carry their source line range; the range doubles as the
statement's identity (`file:lnX` for one line, `file:lnX_lnY` for a
range). Variable declarations expose a separate variable node
(`file:lnXVar`, with an ordinal suffix when one line declares several
variables, as parameter lists do).

Every statement node has an ``after_logs`` list. Instrumentation fills
it with plan entries; an empty list means the node is untouched, and
tree equality includes it, so stripping instrumentation is checkable.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(frozen=True)
class VarInfo:
    name: str
    iri: str
    data_type: str  # 'int' | 'int[]' | 'struct <Name>'
    decl_line: int
    is_param: bool = False
    struct_name: Optional[str] = None


# -- expressions --------------------------------------------------------

@dataclass
class IntLit:
    value: int


@dataclass
class VarRef:
    name: str
    var: Optional[VarInfo] = None


@dataclass
class ArrayIndex:
    array: "Expr"
    index: "Expr"


@dataclass
class MemberAccess:
    base: "Expr"
    member: str
    member_info: Optional[VarInfo] = None
    base_info: Optional[VarInfo] = None


@dataclass
class Unary:
    op: str
    operand: "Expr"


@dataclass
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass
class CallExpr:
    name: str
    args: list


Expr = Union[IntLit, VarRef, ArrayIndex, MemberAccess, Unary, Binary, CallExpr]


def expr_has_call(e: Expr) -> bool:
    if isinstance(e, CallExpr):
        return True
    if isinstance(e, Unary):
        return expr_has_call(e.operand)
    if isinstance(e, Binary):
        return expr_has_call(e.left) or expr_has_call(e.right)
    if isinstance(e, ArrayIndex):
        return expr_has_call(e.array) or expr_has_call(e.index)
    if isinstance(e, MemberAccess):
        return expr_has_call(e.base)
    return False


# -- statements ----------------------------------------------------------

Lines = tuple  # (first_line, last_line)


@dataclass
class VariableDecl:
    KIND = "VariableDecl"
    lines: Lines
    var: VarInfo
    array_size: Optional[int] = None
    init: Optional[Expr] = None
    init_list: Optional[list] = None
    after_logs: list = field(default_factory=list)


@dataclass
class Assignment:
    KIND = "Assignment"
    lines: Lines
    target: Expr  # VarRef or ArrayIndex
    value: Expr
    after_logs: list = field(default_factory=list)


@dataclass
class MemberAssign:
    KIND = "MemberAssignment"
    lines: Lines
    target: MemberAccess
    value: Expr
    after_logs: list = field(default_factory=list)


@dataclass
class For:
    KIND = "For"
    lines: Lines
    init: Optional[Union[VariableDecl, Assignment]]
    cond: Optional[Expr]
    incr: Optional[Assignment]
    body: "Stmt"
    after_logs: list = field(default_factory=list)


@dataclass
class While:
    KIND = "While"
    lines: Lines
    cond: Expr
    body: "Stmt"
    after_logs: list = field(default_factory=list)


@dataclass
class If:
    KIND = "If"
    lines: Lines
    cond: Expr
    then: "Stmt"
    els: Optional["Stmt"] = None
    after_logs: list = field(default_factory=list)


@dataclass
class Return:
    KIND = "Return"
    lines: Lines
    expr: Optional[Expr] = None
    after_logs: list = field(default_factory=list)


@dataclass
class CallStmt:
    KIND = "Call"
    lines: Lines
    call: CallExpr = None
    after_logs: list = field(default_factory=list)


@dataclass
class Block:
    KIND = "Block"
    lines: Lines
    stmts: list = field(default_factory=list)
    after_logs: list = field(default_factory=list)


@dataclass
class StructDecl:
    KIND = "StructDecl"
    lines: Lines
    name: str = ""
    members: list = field(default_factory=list)  # VariableDecl nodes
    after_logs: list = field(default_factory=list)


@dataclass
class FunctionDecl:
    KIND = "FunctionDecl"
    lines: Lines
    name: str = ""
    return_type: str = "int"
    params: list = field(default_factory=list)  # VarInfo
    after_logs: list = field(default_factory=list)


@dataclass
class FunctionDef:
    KIND = "FunctionDef"
    lines: Lines
    name: str = ""
    return_type: str = "int"
    params: list = field(default_factory=list)  # VarInfo
    body: Block = None
    after_logs: list = field(default_factory=list)


Stmt = Union[
    VariableDecl, Assignment, MemberAssign, For, While, If, Return,
    CallStmt, Block, StructDecl, FunctionDecl, FunctionDef,
]


@dataclass
class SourceUnit:
    file_prefix: str
    source: str
    items: list  # top-level StructDecl / FunctionDecl / FunctionDef in order
    by_range: dict  # (a, b) -> outermost Stmt with that range
    line_index: dict  # line -> innermost Stmt starting there
    vars_by_iri: dict  # var iri -> VarInfo
    scope_at: dict  # (a, b) -> {name: VarInfo} visible at the capture point
    structs: dict  # struct name -> StructDecl

    def functions(self) -> list:
        return [i for i in self.items if isinstance(i, FunctionDef)]

    def function(self, name: str) -> Optional[FunctionDef]:
        for f in self.items:
            if isinstance(f, FunctionDef) and f.name == name:
                return f
        return None


def stmt_iri(file_prefix: str, lines: Lines) -> str:
    a, b = lines
    if a == b:
        return f"{file_prefix}ln{a}"
    return f"{file_prefix}ln{a}_ln{b}"


def iri_to_lines(file_prefix: str, iri: str) -> Optional[Lines]:
    """Inverse of stmt_iri; None when the IRI is not in this unit's scheme."""
    if not iri.startswith(file_prefix):
        return None
    local = iri[len(file_prefix):]
    parts = local.split("_")
    try:
        if len(parts) == 1 and parts[0].startswith("ln"):
            n = int(parts[0][2:])
            return (n, n)
        if len(parts) == 2 and parts[0].startswith("ln") and parts[1].startswith("ln"):
            return (int(parts[0][2:]), int(parts[1][2:]))
    except ValueError:
        return None
    return None


def walk_statements(node, parent=None):
    """Yields (stmt, parent) pairs, parents before children."""
    yield node, parent
    children = []
    if isinstance(node, FunctionDef):
        children = [node.body]
    elif isinstance(node, StructDecl):
        children = list(node.members)
    elif isinstance(node, Block):
        children = list(node.stmts)
    elif isinstance(node, For):
        children = [node.body]
    elif isinstance(node, While):
        children = [node.body]
    elif isinstance(node, If):
        children = [node.then] + ([node.els] if node.els is not None else [])
    for child in children:
        yield from walk_statements(child, node)
