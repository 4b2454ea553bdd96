"""Command line entry points.

`spandebug repl` starts the interactive loop, `--batch script` replays
a command file non-interactively and prints the transcript (the replay
format the tests rely on), `spandebug serve` starts the HTTP service,
and `spandebug bench` runs the strategy scaling benchmark.
"""
from __future__ import annotations

import argparse
import sys
from typing import Optional

from .bench import BUDGET_SECONDS, SIZES, format_table, run_bench
from .session import Session, repl


def _preload(session: Session, program: Optional[str], spec: Optional[str]):
    if program:
        print(session.execute(f"load({program})"))
    if spec:
        print(session.execute(f"spec({spec})"))


def _cmd_repl(args) -> int:
    session = Session(base_dir=args.dir)
    if args.batch:
        if args.program:
            session.execute(f"load({args.program})")
        if args.spec:
            session.execute(f"spec({args.spec})")
        try:
            lines = open(args.batch).read().splitlines()
        except OSError as exc:
            print(f"cannot read {args.batch}: {exc.strerror or exc}", file=sys.stderr)
            return 2
        sys.stdout.write(session.transcript(lines))
        return 0
    _preload(session, args.program, args.spec)
    repl(session)
    return 0


def _cmd_serve(args) -> int:
    from .server import DEFAULT_PORT, serve

    static = args.static
    if static is None:
        from pathlib import Path

        candidate = Path(args.dir or ".") / "frontend" / "dist"
        if candidate.is_dir():
            static = str(candidate)
    serve(port=args.port if args.port is not None else DEFAULT_PORT,
          base_dir=args.dir, static_dir=static)
    return 0


def _cmd_bench(args) -> int:
    sizes = tuple(int(s) for s in args.sizes.split(",")) if args.sizes else SIZES
    rows = run_bench(sizes=sizes, budget=args.budget, quiet=False)
    print(format_table(rows))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spandebug",
        description="Log debugger over RDF traces with span property checks")
    parser.add_argument("--dir", default=None,
                        help="base directory for relative paths in commands")
    sub = parser.add_subparsers(dest="command", required=True)

    p_repl = sub.add_parser("repl", help="interactive session (or batch replay)")
    p_repl.add_argument("--program", help="program to load on startup")
    p_repl.add_argument("--spec", help="instrumentation spec to apply on startup")
    p_repl.add_argument("--batch", help="command script to replay non-interactively")
    p_repl.set_defaults(func=_cmd_repl)

    p_serve = sub.add_parser("serve", help="HTTP service")
    p_serve.add_argument("--port", type=int, default=None)
    p_serve.add_argument("--static",
                         help="directory of web console files to serve at /")
    p_serve.set_defaults(func=_cmd_serve)

    p_bench = sub.add_parser("bench", help="strategy scaling benchmark")
    p_bench.add_argument("--sizes", help="comma-separated span sizes")
    p_bench.add_argument("--budget", type=float, default=BUDGET_SECONDS,
                         help="per-strategy time budget in seconds")
    p_bench.set_defaults(func=_cmd_bench)

    return parser


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
