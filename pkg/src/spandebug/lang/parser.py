"""Recursive-descent parser for the C subset.

The grammar is documented in docs/grammar.md. Parsing also performs name
resolution: every variable reference is bound to the VarInfo of its
declaration, and each statement records the scope visible at its capture
point (used later to validate observables).

Statements are identified by line range. When several constructs share a
range (e.g. ``int main(){int x = 0;}`` on one line) they merge onto one
resource; the outermost construct supplies the statement kind and
`statement_at` resolves to it.
"""
from __future__ import annotations

import copy
from typing import Optional

from ..errors import SourceSyntaxError, UnknownStatement, UnknownVariable, UnsupportedConstruct
from ..terms import DEFAULT_FILE_PREFIX
from .lexer import Token, tokenize
from .nodes import (
    ArrayIndex, Assignment, Binary, Block, CallExpr, CallStmt, Expr, For,
    FunctionDecl, FunctionDef, If, IntLit, MemberAccess, MemberAssign,
    Return, SourceUnit, Stmt, StructDecl, Unary, VarInfo, VarRef,
    VariableDecl, While, iri_to_lines, stmt_iri, walk_statements,
)

BUILTIN_FUNCTIONS = {"print": 1}


class _Parser:
    def __init__(self, tokens: list[Token], file_prefix: str):
        self.tokens = tokens
        self.pos = 0
        self.file_prefix = file_prefix
        self.scopes: list[dict] = []
        self.line_var_counts: dict[int, int] = {}
        self.vars_by_iri: dict[str, VarInfo] = {}
        self.structs: dict[str, StructDecl] = {}
        self.snapshots: dict[tuple, dict] = {}
        self.functions: dict[str, object] = {}

    # -- token plumbing --------------------------------------------------

    def peek(self, ahead=0) -> Token:
        i = min(self.pos + ahead, len(self.tokens) - 1)
        return self.tokens[i]

    def next(self) -> Token:
        tok = self.peek()
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at(self, kind: str, value: Optional[str] = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (value is None or tok.value == value)

    def accept(self, kind: str, value: Optional[str] = None) -> Optional[Token]:
        if self.at(kind, value):
            return self.next()
        return None

    def expect(self, kind: str, value: Optional[str] = None) -> Token:
        tok = self.peek()
        if not self.at(kind, value):
            want = value if value is not None else kind
            raise SourceSyntaxError(f"expected {want!r}, found {tok.value!r}", tok.line, tok.col)
        return self.next()

    def err(self, message: str) -> SourceSyntaxError:
        tok = self.peek()
        return SourceSyntaxError(message, tok.line, tok.col)

    # -- scope handling ----------------------------------------------------

    def push_scope(self):
        self.scopes.append({})

    def pop_scope(self):
        self.scopes.pop()

    def declare(self, name: str, line: int, data_type: str,
                is_param=False, struct_name=None) -> VarInfo:
        count = self.line_var_counts.get(line, 0) + 1
        self.line_var_counts[line] = count
        suffix = "" if count == 1 else str(count)
        iri = f"{self.file_prefix}ln{line}Var{suffix}"
        info = VarInfo(name, iri, data_type, line, is_param, struct_name)
        if self.scopes and name in self.scopes[-1]:
            raise SourceSyntaxError(f"redeclaration of '{name}'", line)
        if self.scopes:
            self.scopes[-1][name] = info
        self.vars_by_iri[iri] = info
        return info

    def resolve(self, name: str, line: int) -> VarInfo:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        raise SourceSyntaxError(f"undeclared variable '{name}'", line)

    def flat_scope(self) -> dict:
        flat: dict = {}
        for scope in self.scopes:
            flat.update(scope)
        return flat

    def snapshot(self, lines: tuple):
        # Inner nodes snapshot first; keep their entries on merged ranges.
        existing = self.snapshots.get(lines, {})
        merged = self.flat_scope()
        merged.update(existing)
        self.snapshots[lines] = merged

    # -- top level ---------------------------------------------------------

    def parse_unit(self) -> list:
        items = []
        while not self.at("eof"):
            if self.at("keyword", "struct") and self.peek(2).value == "{":
                items.append(self.parse_struct_decl())
            elif self.at("keyword", "int") or self.at("keyword", "void"):
                items.append(self.parse_function())
            else:
                raise self.err("expected a struct or function definition")
        return items

    def parse_struct_decl(self) -> StructDecl:
        start = self.expect("keyword", "struct")
        name = self.expect("ident").value
        if name in self.structs:
            raise SourceSyntaxError(f"redefinition of struct '{name}'", start.line)
        self.expect("punct", "{")
        members = []
        while not self.at("punct", "}"):
            mline = self.expect("keyword", "int").line
            mname = self.expect("ident").value
            if any(m.var.name == mname for m in members):
                raise SourceSyntaxError(f"duplicate member '{mname}'", mline)
            semi = self.expect("punct", ";")
            info = self.declare_member(mname, mline)
            decl = VariableDecl((mline, semi.line), info)
            self.snapshots[decl.lines] = {}
            members.append(decl)
        close = self.expect("punct", "}")
        self.expect("punct", ";")
        node = StructDecl((start.line, close.line), name, members)
        self.structs[name] = node
        self.snapshots.setdefault(node.lines, {})
        return node

    def declare_member(self, name: str, line: int) -> VarInfo:
        count = self.line_var_counts.get(line, 0) + 1
        self.line_var_counts[line] = count
        suffix = "" if count == 1 else str(count)
        iri = f"{self.file_prefix}ln{line}Var{suffix}"
        info = VarInfo(name, iri, "int", line)
        self.vars_by_iri[iri] = info
        return info

    def parse_function(self):
        rtype_tok = self.next()  # int or void
        return_type = rtype_tok.value
        name = self.expect("ident").value
        if name in self.functions or name in BUILTIN_FUNCTIONS:
            raise SourceSyntaxError(f"redefinition of '{name}'", rtype_tok.line)
        self.expect("punct", "(")
        self.push_scope()
        params = self.parse_params(rtype_tok.line)
        self.expect("punct", ")")
        if self.accept("punct", ";"):
            self.pop_scope()
            node = FunctionDecl((rtype_tok.line, rtype_tok.line), name, return_type, params)
            self.snapshots.setdefault(node.lines, {p.name: p for p in params})
            self.functions[name] = node
            return node
        fn_snapshot = self.flat_scope()
        # Register before the body so recursive calls resolve.
        node = FunctionDef((rtype_tok.line, 0), name, return_type, params, None)
        self.functions[name] = node
        body = self.parse_block()
        self.pop_scope()
        node.lines = (rtype_tok.line, body.lines[1])
        node.body = body
        self.snapshot_merge(node.lines, fn_snapshot)
        return node

    def snapshot_merge(self, lines, scope):
        existing = self.snapshots.get(lines, {})
        merged = dict(scope)
        merged.update(existing)
        self.snapshots[lines] = merged

    def parse_params(self, fn_line: int) -> list:
        params = []
        if self.at("punct", ")"):
            return params
        while True:
            if self.accept("keyword", "void") and self.at("punct", ")") and not params:
                return params
            if self.at("keyword", "struct"):
                self.next()
                sname = self.expect("ident").value
                if sname not in self.structs:
                    raise SourceSyntaxError(f"unknown struct '{sname}'", fn_line)
                pname_tok = self.expect("ident")
                info = self.declare(pname_tok.value, pname_tok.line, f"struct {sname}",
                                    is_param=True, struct_name=sname)
            else:
                self.expect("keyword", "int")
                pname_tok = self.expect("ident")
                dtype = "int"
                if self.accept("punct", "["):
                    self.expect("punct", "]")
                    dtype = "int[]"
                info = self.declare(pname_tok.value, pname_tok.line, dtype, is_param=True)
            params.append(info)
            if not self.accept("punct", ","):
                return params

    # -- statements ----------------------------------------------------------

    def parse_block(self) -> Block:
        open_tok = self.expect("punct", "{")
        self.push_scope()
        stmts = []
        while not self.at("punct", "}"):
            if self.at("eof"):
                raise SourceSyntaxError("unterminated block", open_tok.line)
            stmts.append(self.parse_statement())
        close = self.expect("punct", "}")
        self.pop_scope()
        first = stmts[0].lines[0] if stmts else close.line
        node = Block((first, close.line), stmts)
        self.snapshot(node.lines)
        return node

    def parse_statement(self, naked=False) -> Stmt:
        tok = self.peek()
        if tok.kind == "punct" and tok.value == "{":
            return self.parse_block()
        if tok.kind == "keyword":
            if tok.value in ("int", "struct"):
                if naked:
                    raise SourceSyntaxError("a declaration needs an enclosing block", tok.line)
                return self.parse_declaration()
            if tok.value == "for":
                return self.parse_for()
            if tok.value == "while":
                return self.parse_while()
            if tok.value == "if":
                return self.parse_if()
            if tok.value == "return":
                return self.parse_return()
            if tok.value == "void":
                raise SourceSyntaxError("'void' is only valid as a return type", tok.line)
            if tok.value == "else":
                raise SourceSyntaxError("'else' without a matching 'if'", tok.line)
        if tok.kind == "ident":
            return self.parse_simple_stmt()
        if tok.kind == "punct" and tok.value == ";":
            raise UnsupportedConstruct("empty statements are not supported", tok.line)
        raise self.err("expected a statement")

    def parse_declaration(self, end_semi=True) -> VariableDecl:
        tok = self.peek()
        if tok.value == "struct":
            self.next()
            sname = self.expect("ident").value
            if sname not in self.structs:
                raise SourceSyntaxError(f"unknown struct '{sname}'", tok.line)
            name_tok = self.expect("ident")
            end = name_tok
            if end_semi:
                end = self.expect("punct", ";")
            info = self.declare(name_tok.value, tok.line, f"struct {sname}", struct_name=sname)
            node = VariableDecl((tok.line, end.line), info)
            self.snapshot(node.lines)
            return node
        self.expect("keyword", "int")
        name_tok = self.expect("ident")
        array_size = None
        init = None
        init_list = None
        dtype = "int"
        if self.accept("punct", "["):
            dtype = "int[]"
            size_tok = self.accept("int")
            array_size = int(size_tok.value) if size_tok else None
            self.expect("punct", "]")
        if self.accept("punct", "="):
            if dtype == "int[]":
                self.expect("punct", "{")
                init_list = []
                if not self.at("punct", "}"):
                    while True:
                        init_list.append(self.parse_const_int())
                        if not self.accept("punct", ","):
                            break
                self.expect("punct", "}")
                if array_size is None:
                    array_size = len(init_list)
                elif len(init_list) > array_size:
                    raise SourceSyntaxError("too many array initializers", tok.line)
            else:
                init = self.parse_expr()
        if dtype == "int[]" and array_size is None:
            raise SourceSyntaxError("array declaration needs a size or initializer", tok.line)
        if end_semi:
            end_line = self.expect("punct", ";").line
        else:
            end_line = self.tokens[self.pos - 1].line
        info = self.declare(name_tok.value, tok.line, dtype)
        node = VariableDecl((tok.line, end_line), info, array_size, init, init_list)
        self.snapshot(node.lines)
        return node

    def parse_const_int(self) -> int:
        neg = self.accept("punct", "-") is not None
        tok = self.expect("int")
        return -int(tok.value) if neg else int(tok.value)

    def parse_simple_stmt(self, end_semi=True) -> Stmt:
        start = self.peek()
        if self.peek(1).kind == "punct" and self.peek(1).value == "(":
            name_tok = self.next()
            call = self.parse_call(name_tok)
            end_line = self.tokens[self.pos - 1].line
            if end_semi:
                end_line = self.expect("punct", ";").line
            node = CallStmt((start.line, end_line), call)
            self.snapshot(node.lines)
            return node
        target = self.parse_lvalue()
        if self.at("punct", "++") or self.at("punct", "--"):
            op_tok = self.next()
            op = "+" if op_tok.value == "++" else "-"
            value = Binary(op, copy.deepcopy(target), IntLit(1))
        else:
            eq = self.peek()
            if eq.kind == "punct" and eq.value in ("+", "-", "*", "/", "%") \
                    and self.peek(1).value == "=":
                raise UnsupportedConstruct("compound assignment is not supported", eq.line)
            self.expect("punct", "=")
            value = self.parse_expr()
        end_line = self.tokens[self.pos - 1].line
        if end_semi:
            end_line = self.expect("punct", ";").line
        if isinstance(target, MemberAccess):
            node = MemberAssign((start.line, end_line), target, value)
        else:
            node = Assignment((start.line, end_line), target, value)
        self.snapshot(node.lines)
        return node

    def parse_lvalue(self) -> Expr:
        name_tok = self.expect("ident")
        info = self.resolve(name_tok.value, name_tok.line)
        base = VarRef(name_tok.value, info)
        if self.accept("punct", "["):
            if info.data_type != "int[]":
                raise SourceSyntaxError(f"'{info.name}' is not an array", name_tok.line)
            index = self.parse_expr()
            self.expect("punct", "]")
            return ArrayIndex(base, index)
        if self.accept("punct", "."):
            if not info.data_type.startswith("struct "):
                raise SourceSyntaxError(f"'{info.name}' is not a struct", name_tok.line)
            member_tok = self.expect("ident")
            member_info = self.member_info(info, member_tok)
            return MemberAccess(base, member_tok.value, member_info, info)
        return base

    def member_info(self, var_info: VarInfo, member_tok: Token) -> VarInfo:
        struct = self.structs[var_info.struct_name]
        for m in struct.members:
            if m.var.name == member_tok.value:
                return m.var
        raise SourceSyntaxError(
            f"struct '{var_info.struct_name}' has no member '{member_tok.value}'",
            member_tok.line, member_tok.col)

    def parse_for(self) -> For:
        start = self.expect("keyword", "for")
        self.expect("punct", "(")
        self.push_scope()
        init = None
        if not self.at("punct", ";"):
            if self.at("keyword", "int"):
                init = self.parse_declaration(end_semi=False)
            else:
                init = self.parse_simple_stmt(end_semi=False)
                if not isinstance(init, Assignment):
                    raise SourceSyntaxError("for-init must be a declaration or assignment", start.line)
        self.expect("punct", ";")
        cond = None
        if not self.at("punct", ";"):
            cond = self.parse_expr()
        self.expect("punct", ";")
        incr = None
        if not self.at("punct", ")"):
            incr = self.parse_simple_stmt(end_semi=False)
            if not isinstance(incr, Assignment):
                raise SourceSyntaxError("for-increment must be an assignment", start.line)
        self.expect("punct", ")")
        body = self.parse_statement(naked=not self.at("punct", "{"))
        self.pop_scope()
        node = For((start.line, body.lines[1]), init, cond, incr, body)
        # The header scope (including the loop variable) is the capture scope.
        if init is not None and isinstance(init, VariableDecl):
            self.snapshot_merge(node.lines, {**self.flat_scope(), init.var.name: init.var})
        else:
            self.snapshot_merge(node.lines, self.flat_scope())
        return node

    def parse_while(self) -> While:
        start = self.expect("keyword", "while")
        self.expect("punct", "(")
        cond = self.parse_expr()
        self.expect("punct", ")")
        body = self.parse_statement(naked=not self.at("punct", "{"))
        node = While((start.line, body.lines[1]), cond, body)
        self.snapshot(node.lines)
        return node

    def parse_if(self) -> If:
        start = self.expect("keyword", "if")
        self.expect("punct", "(")
        cond = self.parse_expr()
        self.expect("punct", ")")
        then = self.parse_statement(naked=not self.at("punct", "{"))
        els = None
        if self.accept("keyword", "else"):
            els = self.parse_statement(naked=not self.at("punct", "{"))
        end = els.lines[1] if els is not None else then.lines[1]
        node = If((start.line, end), cond, then, els)
        self.snapshot(node.lines)
        return node

    def parse_return(self) -> Return:
        start = self.expect("keyword", "return")
        expr = None
        if not self.at("punct", ";"):
            expr = self.parse_expr()
        end = self.expect("punct", ";")
        node = Return((start.line, end.line), expr)
        self.snapshot(node.lines)
        return node

    # -- expressions -----------------------------------------------------

    def parse_expr(self) -> Expr:
        return self.parse_or()

    def parse_or(self) -> Expr:
        left = self.parse_and()
        while self.accept("punct", "||"):
            left = Binary("||", left, self.parse_and())
        return left

    def parse_and(self) -> Expr:
        left = self.parse_equality()
        while self.accept("punct", "&&"):
            left = Binary("&&", left, self.parse_equality())
        return left

    def parse_equality(self) -> Expr:
        left = self.parse_relational()
        while True:
            if self.accept("punct", "=="):
                left = Binary("==", left, self.parse_relational())
            elif self.accept("punct", "!="):
                left = Binary("!=", left, self.parse_relational())
            else:
                return left

    def parse_relational(self) -> Expr:
        left = self.parse_additive()
        while True:
            tok = self.peek()
            if tok.kind == "punct" and tok.value in ("<", "<=", ">", ">="):
                self.next()
                left = Binary(tok.value, left, self.parse_additive())
            else:
                return left

    def parse_additive(self) -> Expr:
        left = self.parse_multiplicative()
        while True:
            tok = self.peek()
            if tok.kind == "punct" and tok.value in ("+", "-"):
                self.next()
                left = Binary(tok.value, left, self.parse_multiplicative())
            else:
                return left

    def parse_multiplicative(self) -> Expr:
        left = self.parse_unary()
        while True:
            tok = self.peek()
            if tok.kind == "punct" and tok.value in ("*", "/", "%"):
                self.next()
                left = Binary(tok.value, left, self.parse_unary())
            else:
                return left

    def parse_unary(self) -> Expr:
        if self.accept("punct", "-"):
            return Unary("-", self.parse_unary())
        if self.accept("punct", "!"):
            return Unary("!", self.parse_unary())
        return self.parse_postfix()

    def parse_postfix(self) -> Expr:
        tok = self.peek()
        if tok.kind == "int":
            self.next()
            return IntLit(int(tok.value))
        if tok.kind == "punct" and tok.value == "(":
            self.next()
            inner = self.parse_expr()
            self.expect("punct", ")")
            return inner
        if tok.kind == "ident":
            name_tok = self.next()
            if self.at("punct", "("):
                return self.parse_call(name_tok)
            info = self.resolve(name_tok.value, name_tok.line)
            base = VarRef(name_tok.value, info)
            if self.accept("punct", "["):
                if info.data_type != "int[]":
                    raise SourceSyntaxError(f"'{info.name}' is not an array", name_tok.line)
                index = self.parse_expr()
                self.expect("punct", "]")
                return ArrayIndex(base, index)
            if self.accept("punct", "."):
                if not info.data_type.startswith("struct "):
                    raise SourceSyntaxError(f"'{info.name}' is not a struct", name_tok.line)
                member_tok = self.expect("ident")
                return MemberAccess(base, member_tok.value,
                                    self.member_info(info, member_tok), info)
            return base
        raise self.err("expected an expression")

    def parse_call(self, name_tok: Token) -> CallExpr:
        self.expect("punct", "(")
        args = []
        if not self.at("punct", ")"):
            while True:
                args.append(self.parse_expr())
                if not self.accept("punct", ","):
                    break
        self.expect("punct", ")")
        return CallExpr(name_tok.value, args)


def _validate_calls(items: list, functions: dict) -> None:
    def check_expr(e: Expr, line: int, as_value: bool):
        if isinstance(e, CallExpr):
            if e.name in BUILTIN_FUNCTIONS:
                if as_value:
                    raise SourceSyntaxError(f"'{e.name}' does not return a value", line)
                if len(e.args) != BUILTIN_FUNCTIONS[e.name]:
                    raise SourceSyntaxError(f"'{e.name}' takes {BUILTIN_FUNCTIONS[e.name]} argument", line)
            else:
                fn = functions.get(e.name)
                if fn is None:
                    raise SourceSyntaxError(f"call to undefined function '{e.name}'", line)
                if len(e.args) != len(fn.params):
                    raise SourceSyntaxError(
                        f"'{e.name}' takes {len(fn.params)} arguments, got {len(e.args)}", line)
                if as_value and fn.return_type == "void":
                    raise SourceSyntaxError(f"void function '{e.name}' used as a value", line)
            for a in e.args:
                check_expr(a, line, True)
            return
        if isinstance(e, Unary):
            check_expr(e.operand, line, True)
        elif isinstance(e, Binary):
            check_expr(e.left, line, True)
            check_expr(e.right, line, True)
        elif isinstance(e, ArrayIndex):
            check_expr(e.index, line, True)
        elif isinstance(e, MemberAccess):
            pass

    def check_stmt(st):
        line = st.lines[0]
        if isinstance(st, VariableDecl) and st.init is not None:
            check_expr(st.init, line, True)
        elif isinstance(st, (Assignment, MemberAssign)):
            if isinstance(st.target, ArrayIndex):
                check_expr(st.target.index, line, True)
            check_expr(st.value, line, True)
        elif isinstance(st, For):
            if st.init is not None:
                check_stmt(st.init)
            if st.cond is not None:
                check_expr(st.cond, line, True)
            if st.incr is not None:
                check_stmt(st.incr)
        elif isinstance(st, While):
            check_expr(st.cond, line, True)
        elif isinstance(st, If):
            check_expr(st.cond, line, True)
        elif isinstance(st, Return) and st.expr is not None:
            check_expr(st.expr, line, True)
        elif isinstance(st, CallStmt):
            check_expr(st.call, line, False)

    for item in items:
        for st, _parent in walk_statements(item):
            check_stmt(st)


def parse(text: str, file_prefix: str = DEFAULT_FILE_PREFIX) -> SourceUnit:
    """Parse a translation unit into a SourceUnit."""
    parser = _Parser(tokenize(text), file_prefix)
    items = parser.parse_unit()
    _validate_calls(items, parser.functions)

    by_range: dict = {}
    line_index: dict = {}
    for item in items:
        for st, _parent in walk_statements(item):
            by_range.setdefault(st.lines, st)  # outermost wins
            line_index[st.lines[0]] = st  # innermost wins
    return SourceUnit(
        file_prefix=file_prefix,
        source=text,
        items=items,
        by_range=by_range,
        line_index=line_index,
        vars_by_iri=dict(parser.vars_by_iri),
        scope_at=dict(parser.snapshots),
        structs={name: node for name, node in parser.structs.items()},
    )


def statement_at(unit: SourceUnit, iri: str):
    lines = iri_to_lines(unit.file_prefix, iri)
    if lines is None or lines not in unit.by_range:
        raise UnknownStatement(f"no statement with identifier {iri}")
    return unit.by_range[lines]


def parse_expression(text: str, unit: SourceUnit, stmt_iri_: str) -> Expr:
    """Parse an expression and resolve its names in the scope visible at
    the given statement; raises UnknownVariable on resolution failure."""
    st = statement_at(unit, stmt_iri_)
    scope = unit.scope_at.get(st.lines, {})
    parser = _Parser(tokenize(text), unit.file_prefix)
    parser.structs = {name: node for name, node in unit.structs.items()}
    parser.scopes = [dict(scope)]
    try:
        expr = parser.parse_expr()
    except SourceSyntaxError as exc:
        if "undeclared variable" in str(exc):
            raise UnknownVariable(str(exc)) from None
        raise
    if not parser.at("eof"):
        raise SourceSyntaxError("trailing content after expression", parser.peek().line)
    return expr
