"""HTTP service exposing debugging sessions.

Wire contract (documented in docs/api.md): JSON bodies both ways,
every response carries `version` and `ok`, successful responses carry
`output` (the exact REPL rendering, keeping the two surfaces in parity)
plus endpoint-specific fields. Clients pick their session with the
`X-Session-Token` header; each token owns one isolated session, and
commands within a session are serialized by a per-session lock.

Error mapping: malformed requests and command errors are 400, unknown
spans and unknown paths are 404, commands invalid in the current
session state (no program, no trace, no cursor) are 409.
"""
from __future__ import annotations

import json
import mimetypes
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional
from urllib.parse import parse_qs, urlparse

from .errors import CommandError, DebuggerError, SessionStateError
from .session import Session
from .store import Graph
from .terms import Str

WIRE_VERSION = 1
DEFAULT_PORT = 8651
MAX_BODY = 4 * 1024 * 1024


class SessionRegistry:
    """Token -> (Session, lock); sessions are created on first use."""

    def __init__(self, base_dir: Optional[str] = None):
        self.base_dir = base_dir
        self._guard = threading.Lock()
        self._sessions: dict = {}

    def get(self, token: str):
        with self._guard:
            entry = self._sessions.get(token)
            if entry is None:
                entry = (Session(base_dir=self.base_dir), threading.Lock())
                self._sessions[token] = entry
            return entry

    def tokens(self) -> list:
        with self._guard:
            return sorted(self._sessions)


def _json_term(session: Session, value):
    """Render a store term for a JSON payload."""
    if isinstance(value, int):
        return value
    if isinstance(value, Str):
        return value.value
    return session._compact(value)


def _atom_token(value) -> str:
    """Render one argument for a rebuilt REPL command line."""
    if isinstance(value, list):
        return "[" + ", ".join(_atom_token(v) for v in value) + "]"
    return str(value)


class _HttpError(Exception):
    def __init__(self, status: int, kind: str, message: str):
        super().__init__(message)
        self.status = status
        self.kind = kind


def _status_for(exc: DebuggerError) -> int:
    if isinstance(exc, SessionStateError):
        return 409
    if isinstance(exc, CommandError) and str(exc).startswith("unknown span"):
        return 404
    return 400


class DebugRequestHandler(BaseHTTPRequestHandler):
    """One handler per request; state lives in server.registry."""

    server_version = "spandebug/0.1"
    protocol_version = "HTTP/1.1"

    # -- plumbing -----------------------------------------------------------

    def log_message(self, fmt, *args):
        if getattr(self.server, "quiet", True):
            return
        super().log_message(fmt, *args)

    def _session(self):
        token = self.headers.get("X-Session-Token", "default")
        return self.server.registry.get(token)

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length > MAX_BODY:
            raise _HttpError(413, "BodyTooLarge", f"body exceeds {MAX_BODY} bytes")
        if length == 0:
            return {}
        raw = self.rfile.read(length)
        try:
            body = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise _HttpError(400, "BadJson", str(exc))
        if not isinstance(body, dict):
            raise _HttpError(400, "BadJson", "body must be a JSON object")
        return body

    def _reply(self, status: int, payload: dict):
        data = json.dumps(payload, sort_keys=True).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(data)

    def _ok(self, output: str, **fields):
        payload = {"version": WIRE_VERSION, "ok": True, "output": output}
        payload.update(fields)
        self._reply(200, payload)

    def _fail(self, status: int, kind: str, message: str):
        self._reply(status, {
            "version": WIRE_VERSION, "ok": False,
            "error": {"kind": kind, "message": message},
        })

    def _require(self, body: dict, *names):
        for name in names:
            if name not in body:
                raise _HttpError(400, "MissingField", f"missing field {name!r}")
        return [body[n] for n in names]

    # -- request entry ------------------------------------------------------

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers",
                         "Content-Type, X-Session-Token")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_POST(self):
        self._handle("POST")

    def do_GET(self):
        self._handle("GET")

    def _handle(self, method: str):
        url = urlparse(self.path)
        route = (method, url.path.rstrip("/") or "/")
        handler = _ROUTES.get(route)
        try:
            if handler is not None:
                session, lock = self._session()
                body = self._read_body() if method == "POST" else {}
                query = {k: v[0] for k, v in parse_qs(url.query).items()}
                with lock:
                    handler(self, session, body, query)
                return
            if method == "GET":
                self._static(url.path)
                return
            self._fail(404, "UnknownEndpoint", f"no endpoint {method} {url.path}")
        except _HttpError as exc:
            self._fail(exc.status, exc.kind, str(exc))
        except DebuggerError as exc:
            self._fail(_status_for(exc), type(exc).__name__, str(exc))
        except BrokenPipeError:
            pass

    # -- static files (the web console build) ---------------------------------

    def _static(self, path: str):
        root = getattr(self.server, "static_dir", None)
        if root is None:
            if path == "/":
                self._ok("spandebug service; see docs/api.md for endpoints")
                return
            self._fail(404, "UnknownEndpoint", f"no endpoint GET {path}")
            return
        name = path.lstrip("/") or "index.html"
        target = (root / name).resolve()
        if not str(target).startswith(str(root.resolve())) or not target.is_file():
            self._fail(404, "NotFound", f"no file {path}")
            return
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        data = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


# -- endpoint handlers --------------------------------------------------------

def _post_program(h, session, body, query):
    if "text" in body:
        count = session.load_source(body["text"], body.get("label"))
        label = body.get("label") or "<inline>"
        h._ok(f"loaded {label}: {count} source facts", facts=count)
        return
    (path,) = h._require(body, "path")
    output = session.dispatch(f"load({path})")
    h._ok(output, facts=session.store.size(Graph.SOURCE))


def _post_spec(h, session, body, query):
    if "text" in body:
        plan = session.load_spec(body["text"])
        output = session._plan_text(plan)
    else:
        (path,) = h._require(body, "path")
        output = session.dispatch(f"spec({path})")
        plan = session.plan
    entries = [{"stmt": session._compact(e.stmt_iri), "observes": e.label}
               for e in plan.entries]
    h._ok(output, plan=entries)


def _post_run(h, session, body, query):
    (entry,) = h._require(body, "entry")
    args = body.get("args", [])
    line = f"run({entry}" + "".join(f", {_atom_token(a)}" for a in args) + ")"
    output = session.dispatch(line)
    result = session.result
    h._ok(output,
          exit=result.exit.kind,
          returned=result.return_value,
          records=len(session.records),
          stdout=result.stdout)


def _post_break(h, session, body, query):
    (stmt,) = h._require(body, "stmt")
    output = session.dispatch(f"break({stmt})")
    iri = session._expand(stmt)
    hits = [r.timestamp for r in session.records if r.s_id == iri]
    cursor = (session.records[session.cursor].timestamp
              if session.cursor is not None else None)
    h._ok(output, hits=hits, cursor=cursor)


def _post_inspect(h, session, body, query):
    (var,) = h._require(body, "var")
    output = session.dispatch(f"inspect({var})")
    value: object = "Unknown"
    stamp = None
    if not output.endswith("Unknown"):
        iri = session._expand(var)
        limit = session.records[session.cursor].timestamp
        for r in session.records:
            if r.timestamp > limit:
                break
            if r.v_id == iri:
                value, stamp = r.val, r.timestamp
    h._ok(output, value=value, t=stamp)


def _post_step(h, session, body, query):
    (n,) = h._require(body, "n")
    if not isinstance(n, int):
        raise _HttpError(400, "BadField", "n must be an integer")
    output = session.dispatch(f"step({n})")
    h._ok(output,
          cursor=session.records[session.cursor].timestamp,
          clamped="clamped" in output)


def _post_goto(h, session, body, query):
    (t,) = h._require(body, "t")
    if not isinstance(t, int):
        raise _HttpError(400, "BadField", "t must be an integer")
    output = session.dispatch(f"goto({t})")
    h._ok(output, cursor=t)


def _post_query(h, session, body, query):
    (text,) = h._require(body, "text")
    table = session.store.query(text)
    session.history.append(f"query({text})")
    rows = [[_json_term(session, v) for v in row] for row in table.rows]
    h._ok(table.render(session.prefixes), columns=table.columns, rows=rows)


def _filter_line(flt: dict) -> str:
    def cond(c):
        return f"cond({c['stmt']}, {c['var']}, {c['rel']}, {c['val']})"

    kind = flt.get("kind")
    if kind == "interval":
        lower = cond(flt["lower"]) if flt.get("lower") else ""
        upper = cond(flt["upper"]) if flt.get("upper") else ""
        inner = f"{lower}, {upper}" if upper else lower
        return f"interval({inner})"
    if kind == "set":
        if not flt.get("condition"):
            raise _HttpError(400, "BadField", "set filter needs a condition")
        return f"set({cond(flt['condition'])})"
    raise _HttpError(400, "BadField", f"unknown filter kind {kind!r}")


def _span_cells(span) -> list:
    return [{"value": c.val, "t": c.timestamp} for c in span.cells]


def _post_span(h, session, body, query):
    name, var, stmt = h._require(body, "name", "var", "stmt")
    parts = [str(name), str(var), str(stmt)]
    if body.get("filter") is not None:
        parts.append(_filter_line(body["filter"]))
    output = session.dispatch(f"span({', '.join(parts)})")
    span = session.spans[name]
    h._ok(output, name=name, cells=_span_cells(span))


def _post_verify(h, session, body, query):
    name, prop = h._require(body, "span", "property")
    if name not in session.spans:
        raise _HttpError(404, "UnknownSpan", f"unknown span {name!r}")
    parts = [str(name), str(prop)]
    if body.get("span2") is not None:
        if body["span2"] not in session.spans:
            raise _HttpError(404, "UnknownSpan", f"unknown span {body['span2']!r}")
        parts.append(str(body["span2"]))
    output = session.dispatch(f"verify({', '.join(parts)})")
    witness = None
    marker = "witness cell "
    if marker in output:
        index = int(output.split(marker)[1].split()[0])
        cell = session.spans[name].cells[index]
        witness = {"index": index, "value": cell.val, "t": cell.timestamp}
    verdict = output.split(": ", 1)[1].split()[0].rstrip(",")
    h._ok(output, verdict=verdict, witness=witness, strategy=session.strategy)


def _post_strategy(h, session, body, query):
    (name,) = h._require(body, "name")
    output = session.dispatch(f"strategy({name})")
    h._ok(output, strategy=session.strategy)


def _post_axiom(h, session, body, query):
    sub, alternatives = h._require(body, "sub", "alternatives")
    if not isinstance(alternatives, list) or not alternatives:
        raise _HttpError(400, "BadField", "alternatives must be a non-empty list")
    output = session.dispatch(f"axiom({sub}, {'|'.join(alternatives)})")
    h._ok(output, axioms=len(session.axioms))


def _post_classify(h, session, body, query):
    point, cls = h._require(body, "point", "class")
    suffix = ", not" if body.get("negated") else ""
    output = session.dispatch(f"classify({point}, {cls}{suffix})")
    h._ok(output)


def _post_oworld(h, session, body, query):
    points, classes = h._require(body, "points", "classes")
    if not isinstance(points, list) or not isinstance(classes, list):
        raise _HttpError(400, "BadField", "points and classes must be lists")
    parts = ["|".join(points), "|".join(classes)]
    if body.get("mode"):
        parts.append(body["mode"])
    output = session.dispatch(f"oworld({', '.join(parts)})")
    verdict = output.rsplit(": ", 1)[1].split()[0]
    h._ok(output, verdict=verdict)


def _post_save(h, session, body, query):
    (path,) = h._require(body, "path")
    h._ok(session.dispatch(f"save({path})"))


def _post_restore(h, session, body, query):
    (path,) = h._require(body, "path")
    h._ok(session.dispatch(f"restore({path})"))


def _get_trace(h, session, body, query):
    session._need_trace()
    var = query.get("var")
    iri = session._expand(var) if var else None
    records = [
        {"var": session._compact(r.v_id), "stmt": session._compact(r.s_id),
         "value": r.val, "t": r.timestamp}
        for r in session.records if iri is None or r.v_id == iri
    ]
    shown = var or "all"
    h._ok(f"trace {shown}: {len(records)} records", records=records)


def _get_spans(h, session, body, query):
    spans = [
        {"name": name, "var": session._compact(span.var),
         "cells": _span_cells(span)}
        for name, span in sorted(session.spans.items())
    ]
    names = ", ".join(s["name"] for s in spans) if spans else "-"
    h._ok(f"spans [{names}]", spans=spans)


def _get_facts(h, session, body, query):
    output = session.dispatch("facts()")
    triples = [[_json_term(session, t.s), _json_term(session, t.p),
                _json_term(session, t.o)]
               for t in session.store.triples([Graph.SOURCE])]
    h._ok(output, triples=triples)


def _get_history(h, session, body, query):
    h._ok("\n".join(session.history), history=list(session.history))


def _get_session(h, session, body, query):
    state = {
        "program": session.program_path,
        "has_spec": session.spec_text is not None,
        "run_count": session.run_count,
        "records": len(session.records),
        "cursor": (session.records[session.cursor].timestamp
                   if session.cursor is not None else None),
        "strategy": session.strategy,
        "spans": sorted(session.spans),
        "axioms": [
            {"sub": session._compact(a.sub),
             "alternatives": [session._compact(x) for x in a.alternatives]}
            for a in session.axioms
        ],
    }
    h._ok(f"session: program={state['program']} records={state['records']}",
          state=state)


_ROUTES = {
    ("POST", "/program"): _post_program,
    ("POST", "/spec"): _post_spec,
    ("POST", "/run"): _post_run,
    ("POST", "/break"): _post_break,
    ("POST", "/inspect"): _post_inspect,
    ("POST", "/step"): _post_step,
    ("POST", "/goto"): _post_goto,
    ("POST", "/query"): _post_query,
    ("POST", "/span"): _post_span,
    ("POST", "/verify"): _post_verify,
    ("POST", "/strategy"): _post_strategy,
    ("POST", "/axiom"): _post_axiom,
    ("POST", "/classify"): _post_classify,
    ("POST", "/oworld"): _post_oworld,
    ("POST", "/save"): _post_save,
    ("POST", "/restore"): _post_restore,
    ("GET", "/trace"): _get_trace,
    ("GET", "/spans"): _get_spans,
    ("GET", "/facts"): _get_facts,
    ("GET", "/session/history"): _get_history,
    ("GET", "/session"): _get_session,
}


def make_server(port: int = DEFAULT_PORT, base_dir: Optional[str] = None,
                static_dir: Optional[str] = None,
                quiet: bool = True) -> ThreadingHTTPServer:
    """Build (but do not start) the service; port 0 picks a free port."""
    server = ThreadingHTTPServer(("127.0.0.1", port), DebugRequestHandler)
    server.registry = SessionRegistry(base_dir)
    server.quiet = quiet
    server.static_dir = Path(static_dir) if static_dir else None
    return server


def serve(port: int = DEFAULT_PORT, base_dir: Optional[str] = None,
          static_dir: Optional[str] = None, quiet: bool = False):
    """Run the service until interrupted."""
    server = make_server(port, base_dir, static_dir, quiet)
    host, bound = server.server_address[:2]
    print(f"spandebug service on http://{host}:{bound}/")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return server
