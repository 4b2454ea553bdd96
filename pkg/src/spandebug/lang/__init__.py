"""Frontend for the C subset: lexer, parser, facts, printer."""

from .facts import extract_facts
from .nodes import SourceUnit, VarInfo, iri_to_lines, stmt_iri, walk_statements
from .parser import parse, parse_expression, statement_at
from .printer import expr_to_source, to_source

__all__ = [
    "SourceUnit", "VarInfo", "extract_facts", "expr_to_source",
    "iri_to_lines", "parse", "parse_expression", "statement_at",
    "stmt_iri", "to_source", "walk_statements",
]
