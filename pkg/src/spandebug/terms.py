"""RDF terms, named graphs and prefix handling.

Terms are represented directly: an IRI is a plain ``str``, an integer
literal is a plain ``int``, and a string literal is wrapped in ``Str`` so
it can never be confused with an IRI.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple, Union

from .errors import UnknownPrefix


class Graph(enum.Enum):
    SOURCE = "source"
    TRACE = "trace"
    SPAN = "span"
    EXTERNAL = "external"


@dataclass(frozen=True)
class Str:
    """String literal object value."""

    value: str

    def __repr__(self):
        return f'"{self.value}"'


Term = Union[str, int, Str]


class Triple(NamedTuple):
    s: str
    p: str
    o: Term
    g: Graph


RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
C = "http://example.org/lang/c#"
PD = "http://example.org/debug#"
DEFAULT_FILE_PREFIX = "http://example.org/programs/main/"

# Common vocabulary, expanded once so modules can compare against constants.
RDF_TYPE = RDF + "type"
RDF_LIST = RDF + "List"
RDF_FIRST = RDF + "first"
RDF_REST = RDF + "rest"
RDF_NIL = RDF + "nil"


class PrefixTable:
    """Mutable prefix -> namespace IRI map with expand/compact helpers."""

    def __init__(self, mapping=None):
        self.mapping: dict[str, str] = {
            "rdf": RDF,
            "c": C,
            "pd": PD,
            "file": DEFAULT_FILE_PREFIX,
        }
        if mapping:
            self.mapping.update(mapping)

    def bind(self, prefix: str, iri: str) -> None:
        self.mapping[prefix] = iri

    def expand(self, qname: str) -> str:
        """Expand ``prefix:local`` to a full IRI.

        Full IRIs (anything containing ``://``) pass through unchanged.
        """
        if "://" in qname:
            return qname
        prefix, sep, local = qname.partition(":")
        if not sep:
            raise UnknownPrefix(f"not a prefixed name: {qname!r}")
        try:
            return self.mapping[prefix] + local
        except KeyError:
            raise UnknownPrefix(f"undeclared prefix {prefix!r} in {qname!r}") from None

    def compact(self, iri: str) -> str:
        """Compact an IRI to a qname using the longest matching namespace."""
        best = None
        for prefix, ns in self.mapping.items():
            if iri.startswith(ns) and (best is None or len(ns) > len(self.mapping[best])):
                best = prefix
        if best is None:
            return iri
        return f"{best}:{iri[len(self.mapping[best]):]}"

    def copy(self) -> "PrefixTable":
        return PrefixTable(dict(self.mapping))

    def load(self, path) -> None:
        """Read ``prefix = IRI`` lines; blank lines and # comments ignored."""
        with open(path, "r", encoding="utf-8") as fh:
            for raw in fh:
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                name, sep, iri = line.partition("=")
                if not sep:
                    raise UnknownPrefix(f"bad prefix line: {line!r}")
                self.bind(name.strip(), iri.strip())


def term_sort_key(value: Term):
    """Deterministic total order across the three term types."""
    if isinstance(value, int):
        return (0, value, "")
    if isinstance(value, Str):
        return (1, 0, value.value)
    return (2, 0, value)
