"""Exception types shared across the package."""


class DebuggerError(Exception):
    """Base class for all errors raised by this package."""


class SourceSyntaxError(DebuggerError):
    def __init__(self, message, line, column=None):
        self.line = line
        self.column = column
        at = f"line {line}" if column is None else f"line {line}, column {column}"
        super().__init__(f"{message} ({at})")


class UnsupportedConstruct(DebuggerError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)


class UnknownStatement(DebuggerError):
    pass


class UnknownVariable(DebuggerError):
    pass


class QueryParseError(DebuggerError):
    pass


class UnknownPrefix(DebuggerError):
    pass


class TripleParseError(DebuggerError):
    def __init__(self, message, line):
        self.line = line
        super().__init__(f"{message} (line {line})")


class BadSpecShape(DebuggerError):
    pass


class TargetRuntimeError(DebuggerError):
    """Raised inside the interpreter; surfaced to callers as RunResult.exit."""

    def __init__(self, kind, stmt_iri=None):
        self.kind = kind
        self.stmt_iri = stmt_iri
        where = f" at {stmt_iri}" if stmt_iri else ""
        super().__init__(f"{kind}{where}")


class RuleParseError(DebuggerError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)


class NotComparable(DebuggerError):
    pass


class ModelMismatch(DebuggerError):
    pass


class InconsistencyDetected(DebuggerError):
    def __init__(self, individual, cls, complement_cls):
        self.individual = individual
        self.cls = cls
        self.complement_cls = complement_cls
        super().__init__(
            f"individual {individual} belongs to both {cls} and its complement {complement_cls}"
        )


class CaseBudgetExceeded(DebuggerError):
    pass


class TimeoutExceeded(DebuggerError):
    pass


class CommandError(DebuggerError):
    pass


class SessionStateError(DebuggerError):
    pass


class NoTrace(SessionStateError):
    """A command needed trace records before any run produced them."""


class NoCursor(SessionStateError):
    """A navigation command ran before the cursor was set."""
