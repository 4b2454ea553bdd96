"""In-memory triple store with named graphs.

The store keeps four named graphs (source, trace, span, external) and
maintains per-graph hash indexes so basic graph pattern queries stay fast
on traces in the 1e5-triple range. Concurrency follows a many-readers /
one-writer discipline; a query evaluates against a consistent snapshot
simply by holding the read lock for its duration.
"""
from __future__ import annotations

import threading
from typing import Iterable, Optional, Sequence

from .errors import TripleParseError
from .terms import Graph, PrefixTable, Str, Term, Triple


class _RWLock:
    """Reader-writer lock, writer-preference not required here."""

    def __init__(self):
        self._mutex = threading.Lock()
        self._writer = threading.Lock()
        self._readers = 0

    def acquire_read(self):
        with self._mutex:
            self._readers += 1
            if self._readers == 1:
                self._writer.acquire()

    def release_read(self):
        with self._mutex:
            self._readers -= 1
            if self._readers == 0:
                self._writer.release()

    def acquire_write(self):
        self._writer.acquire()

    def release_write(self):
        self._writer.release()


class _GraphIndex:
    """Insertion-ordered triple list plus lookup dicts for one graph."""

    __slots__ = ("triples", "seen", "by_s", "by_p", "by_o", "by_sp", "by_po")

    def __init__(self):
        self.triples: list[Triple] = []
        self.seen: set[Triple] = set()
        self.by_s: dict = {}
        self.by_p: dict = {}
        self.by_o: dict = {}
        self.by_sp: dict = {}
        self.by_po: dict = {}

    def add(self, t: Triple) -> bool:
        if t in self.seen:
            return False
        self.seen.add(t)
        self.triples.append(t)
        self.by_s.setdefault(t.s, []).append(t)
        self.by_p.setdefault(t.p, []).append(t)
        self.by_o.setdefault(t.o, []).append(t)
        self.by_sp.setdefault((t.s, t.p), []).append(t)
        self.by_po.setdefault((t.p, t.o), []).append(t)
        return True

    def candidates(self, s, p, o) -> list[Triple]:
        # Narrowest available index first; remaining constants are checked
        # by the caller.
        if s is not None and p is not None:
            return self.by_sp.get((s, p), [])
        if p is not None and o is not None:
            return self.by_po.get((p, o), [])
        if s is not None:
            return self.by_s.get(s, [])
        if p is not None:
            return self.by_p.get(p, [])
        if o is not None:
            return self.by_o.get(o, [])
        return self.triples


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def _unescape(text: str, line: int) -> str:
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\":
            if i + 1 >= len(text):
                raise TripleParseError("dangling escape in string literal", line)
            nxt = text[i + 1]
            if nxt not in ('"', "\\"):
                raise TripleParseError(f"bad escape \\{nxt}", line)
            out.append(nxt)
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def format_term(value: Term) -> str:
    if isinstance(value, int):
        return str(value)
    if isinstance(value, Str):
        return f'"{_escape(value.value)}"'
    return f"<{value}>"


def _parse_object(text: str, line: int) -> Term:
    if text.startswith("<") and text.endswith(">"):
        return text[1:-1]
    if text.startswith('"') and text.endswith('"') and len(text) >= 2:
        return Str(_unescape(text[1:-1], line))
    try:
        return int(text)
    except ValueError:
        raise TripleParseError(f"unrecognized object term {text!r}", line) from None


class TripleStore:
    """Named-graph triple store with line-oriented import/export."""

    def __init__(self, prefixes: Optional[PrefixTable] = None):
        self.prefixes = prefixes if prefixes is not None else PrefixTable()
        self._graphs: dict[Graph, _GraphIndex] = {g: _GraphIndex() for g in Graph}
        self._lock = _RWLock()

    # -- write side -----------------------------------------------------

    def insert(self, triples: Iterable[Triple]) -> int:
        """Insert triples; returns how many were new (duplicates are no-ops)."""
        self._lock.acquire_write()
        try:
            added = 0
            for t in triples:
                if not isinstance(t.g, Graph):
                    raise ValueError(f"triple without a named graph: {t!r}")
                if self._graphs[t.g].add(t):
                    added += 1
            return added
        finally:
            self._lock.release_write()

    def clear(self, graph: Graph) -> None:
        self._lock.acquire_write()
        try:
            self._graphs[graph] = _GraphIndex()
        finally:
            self._lock.release_write()

    # -- read side ------------------------------------------------------

    def size(self, graph: Optional[Graph] = None) -> int:
        self._lock.acquire_read()
        try:
            if graph is not None:
                return len(self._graphs[graph].triples)
            return sum(len(g.triples) for g in self._graphs.values())
        finally:
            self._lock.release_read()

    def triples(self, graphs: Optional[Sequence[Graph]] = None) -> list[Triple]:
        self._lock.acquire_read()
        try:
            out: list[Triple] = []
            for g in graphs if graphs is not None else list(Graph):
                out.extend(self._graphs[g].triples)
            return out
        finally:
            self._lock.release_read()

    def match(self, s=None, p=None, o=None, graphs: Optional[Sequence[Graph]] = None) -> list[Triple]:
        """All triples matching the given constants (None = wildcard)."""
        self._lock.acquire_read()
        try:
            return self._match_unlocked(s, p, o, graphs)
        finally:
            self._lock.release_read()

    def _match_unlocked(self, s, p, o, graphs) -> list[Triple]:
        out: list[Triple] = []
        for g in graphs if graphs is not None else list(Graph):
            for t in self._graphs[g].candidates(s, p, o):
                if s is not None and t.s != s:
                    continue
                if p is not None and t.p != p:
                    continue
                if o is not None and t.o != o:
                    continue
                out.append(t)
        return out

    def query(self, text: str, graphs: Optional[Sequence[Graph]] = None):
        """Evaluate a query (see the query module) under the read lock."""
        from . import query as _query

        parsed = _query.parse_query(text, self.prefixes)
        self._lock.acquire_read()
        try:
            return _query.evaluate(parsed, self._match_unlocked, graphs)
        finally:
            self._lock.release_read()

    # -- serialization --------------------------------------------------

    def export(self, graph: Graph, path) -> int:
        """Write one graph as `<subj> <pred> <obj> .` lines; returns count."""
        rows = self.triples([graph])
        with open(path, "w", encoding="utf-8") as fh:
            for t in rows:
                fh.write(f"<{t.s}> <{t.p}> {format_term(t.o)} .\n")
        return len(rows)

    def load(self, path, graph: Graph) -> int:
        """Load a line-per-triple file into a graph; returns triples added."""
        added = []
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                added.append(parse_triple_line(line, lineno, graph))
        return self.insert(added)


def parse_triple_line(line: str, lineno: int, graph: Graph) -> Triple:
    if not line.endswith("."):
        raise TripleParseError("triple line must end with '.'", lineno)
    body = line[:-1].rstrip()
    if not body.startswith("<"):
        raise TripleParseError("subject must be an IRI", lineno)
    end = body.find(">")
    if end < 0:
        raise TripleParseError("unterminated subject IRI", lineno)
    subject = body[1:end]
    rest = body[end + 1:].lstrip()
    if not rest.startswith("<"):
        raise TripleParseError("predicate must be an IRI", lineno)
    end = rest.find(">")
    if end < 0:
        raise TripleParseError("unterminated predicate IRI", lineno)
    predicate = rest[1:end]
    obj_text = rest[end + 1:].strip()
    if not obj_text:
        raise TripleParseError("missing object term", lineno)
    if obj_text.startswith('"'):
        # Find the closing unescaped quote; anything after it is an error.
        i = 1
        while i < len(obj_text):
            if obj_text[i] == "\\":
                i += 2
                continue
            if obj_text[i] == '"':
                break
            i += 1
        if i >= len(obj_text):
            raise TripleParseError("unterminated string literal", lineno)
        if obj_text[i + 1:].strip():
            raise TripleParseError("trailing content after object", lineno)
        return Triple(subject, predicate, Str(_unescape(obj_text[1:i], lineno)), graph)
    obj = _parse_object(obj_text, lineno)
    return Triple(subject, predicate, obj, graph)
