"""Error types shared across the compiler and runtime."""

from __future__ import annotations


class TreeqError(Exception):
    """Base class for all errors raised by this package."""


class SourceError(TreeqError):
    """An error with a position in a source file."""

    def __init__(self, message: str, line: int = 0, col: int = 0) -> None:
        self.line = line
        self.col = col
        self.message = message
        if line:
            super().__init__(f"{line}:{col}: {message}")
        else:
            super().__init__(message)


class QuerySyntaxError(SourceError):
    """Malformed query or tree-declaration source."""


class QueryTypeError(SourceError):
    """Well-formed but ill-typed query."""


class UnknownIdentifier(QueryTypeError):
    """Reference to a name that is not a parameter, binder, or set."""


class UnsupportedKernel(QueryTypeError):
    """Geometric relation or metric applied to a shape pair with no kernel."""

    def __init__(self, op: str, kind_a: str, kind_b: str) -> None:
        self.op = op
        self.pair = (kind_a, kind_b)
        super().__init__(f"no kernel for {op}({kind_a}, {kind_b})")


class TreeSpecError(SourceError):
    """Invalid tree declaration (bad fields, annotations, or recursion)."""


class LoweringError(TreeqError):
    """Query shape that cannot be fused into a traversal plan."""


class BuildError(TreeqError):
    """Tree construction failure (unreachable leaf configuration, bad data)."""


class EvalError(TreeqError):
    """Runtime evaluation failure (missing params, arity mismatch)."""


class DataError(TreeqError):
    """Malformed data file (CSV header/typing/geometry literals)."""


class PruneSoundnessError(TreeqError):
    """Debug shadow check found a pruned match or a scanned non-match."""
