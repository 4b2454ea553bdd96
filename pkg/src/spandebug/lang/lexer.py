"""Tokenizer for the C subset."""
from __future__ import annotations

from dataclasses import dataclass

from ..errors import SourceSyntaxError, UnsupportedConstruct

KEYWORDS = {"int", "void", "struct", "for", "while", "if", "else", "return"}

# Recognized so we can refuse them with a clear message instead of a
# confusing parse error.
UNSUPPORTED_KEYWORDS = {
    "float", "double", "char", "long", "short", "unsigned", "signed",
    "break", "continue", "switch", "case", "default", "do", "goto",
    "typedef", "static", "const", "extern", "enum", "union", "sizeof",
}

_TWO_CHAR = {"==", "!=", "<=", ">=", "&&", "||", "++", "--"}
_ONE_CHAR = set("(){}[];,=<>!+-*/%.")


@dataclass(frozen=True)
class Token:
    kind: str  # ident, keyword, int, punct, eof
    value: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i, n = 0, len(text)

    def err(message):
        raise SourceSyntaxError(message, line, col)

    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            col += 1
            i += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if text.startswith("/*", i):
            end = text.find("*/", i + 2)
            if end < 0:
                err("unterminated block comment")
            skipped = text[i:end + 2]
            line += skipped.count("\n")
            col = 1 if "\n" in skipped else col + len(skipped)
            i = end + 2
            continue
        if ch == "#":
            raise UnsupportedConstruct("preprocessor directives are not supported", line)
        if ch in ('"', "'"):
            raise UnsupportedConstruct("string and character literals are not supported", line)
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and (text[j].isalpha() or text[j] == "."):
                raise UnsupportedConstruct("only decimal integer literals are supported", line)
            tokens.append(Token("int", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            if word in UNSUPPORTED_KEYWORDS:
                raise UnsupportedConstruct(f"'{word}' is not in the supported subset", line)
            kind = "keyword" if word in KEYWORDS else "ident"
            tokens.append(Token(kind, word, line, col))
            col += j - i
            i = j
            continue
        two = text[i:i + 2]
        if two in _TWO_CHAR:
            tokens.append(Token("punct", two, line, col))
            col += 2
            i += 2
            continue
        if ch in _ONE_CHAR:
            tokens.append(Token("punct", ch, line, col))
            col += 1
            i += 1
            continue
        if ch in ("&", "|", "^", "~"):
            raise UnsupportedConstruct(f"bitwise '{ch}' is not supported", line)
        err(f"unexpected character {ch!r}")
    tokens.append(Token("eof", "", line, col))
    return tokens
