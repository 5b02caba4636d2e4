"""Exception hierarchy shared across the package (mapped to CLI exit codes)."""
from __future__ import annotations


class BergerFlowError(Exception):
    """Base class for all package errors."""


class ConfigError(BergerFlowError, ValueError):
    """Invalid run configuration (CLI exit code 4)."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class NumericalBreakdown(BergerFlowError, ArithmeticError):
    """Non-finite values or loss of positivity (CLI exit code 3)."""

    def __init__(self, message: str, node: int | None = None, snapshot=None):
        self.node = node
        self.snapshot = snapshot
        super().__init__(message if node is None else f"{message} at node {node}")


class MonitorFailure(BergerFlowError):
    """A hard monitor violation, e.g. c/b leaving its band (CLI exit code 2)."""


class ResolutionExhausted(BergerFlowError):
    """The time step fell below dt_min."""
