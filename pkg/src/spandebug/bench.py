"""Scaling harness comparing the reasoning strategies on growing spans.

Runs the universal non-zero check over synthetic all-non-zero spans of
fixed sizes and reports wall-clock times per strategy. Each run gets a
time budget; a strategy that exceeds it is marked timed out and skipped
at every larger size, since the cost profiles only grow.
"""
from __future__ import annotations

import statistics
import time
from dataclasses import dataclass
from typing import Optional

from .errors import TimeoutExceeded
from .reasoner import check_intra, parse_property
from .spans import Span, SpanCell, materialize_graph

SIZES = (10, 50, 200, 1000, 5000)
BUDGET_SECONDS = 120.0
CHECK_NAME = "all-non-zero"

# Repeats per (strategy, size); medians damp scheduler noise where runs
# are cheap enough to repeat.
def _repeats(size: int) -> int:
    return 5 if size <= 200 else 1


@dataclass(frozen=True)
class BenchRow:
    strategy: str
    size: int
    seconds: Optional[float]  # None unless status == 'completed'
    status: str  # completed | timeout | skipped


def synthetic_span(size: int) -> Span:
    """A span of non-zero values with strictly increasing timestamps."""
    cells = [SpanCell((i % 9) + 1, 3 + 7 * i) for i in range(size)]
    return Span(f"bench{size}", "http://example.org/debug#benchVar", cells)


def run_bench(sizes=SIZES, budget: float = BUDGET_SECONDS, quiet: bool = True) -> list:
    """Times every strategy at every size; returns BenchRow entries."""
    prop = parse_property(CHECK_NAME)
    rows: list[BenchRow] = []
    dead: set[str] = set()
    for size in sizes:
        span = synthetic_span(size)
        materialized = {
            "list": materialize_graph(span, "list"),
            "set": materialize_graph(span, "set"),
        }
        for strategy in ("rl-list", "dl-set", "dl-list"):
            if strategy in dead:
                rows.append(BenchRow(strategy, size, None, "skipped"))
                continue
            ms = materialized["set" if strategy == "dl-set" else "list"]
            times = []
            timed_out = False
            for _ in range(_repeats(size)):
                start = time.perf_counter()
                try:
                    check_intra(ms, prop, strategy, deadline=time.monotonic() + budget)
                except TimeoutExceeded:
                    timed_out = True
                    break
                times.append(time.perf_counter() - start)
            if timed_out:
                dead.add(strategy)
                rows.append(BenchRow(strategy, size, None, "timeout"))
            else:
                rows.append(BenchRow(strategy, size, statistics.median(times), "completed"))
            if not quiet:
                print(format_row(rows[-1]))
    return rows


def format_row(row: BenchRow) -> str:
    if row.status == "completed":
        return f"{row.strategy:8s} n={row.size:<6d} {row.seconds * 1000:12.2f} ms"
    return f"{row.strategy:8s} n={row.size:<6d} {row.status:>12s}"


def format_table(rows: list) -> str:
    lines = [f"{'strategy':8s} {'size':<8s} {'time':>12s}"]
    lines.extend(format_row(r) for r in rows)
    return "\n".join(lines)
