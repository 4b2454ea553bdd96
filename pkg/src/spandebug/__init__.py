"""spandebug: an ontology-backed log debugger for a small C-like language.

Programs are parsed into source facts, executed by a deterministic
interpreter that logs planned observables into a trace graph, abstracted
into spans (timestamped value sequences), and checked against span
properties by exchangeable reasoning strategies.
"""

__version__ = "0.1.0"

from .session import Session, parse_command, repl  # noqa: E402
from .store import TripleStore  # noqa: E402

__all__ = ["Session", "TripleStore", "parse_command", "repl", "__version__"]
