"""Exception hierarchy shared by every pedflow module."""

from __future__ import annotations


class PedflowError(Exception):
    """Base class for all errors raised by pedflow."""


class ModelDefinitionError(PedflowError):
    """A model refers to undeclared attributes, undefined constants or mistyped values.

    Raised while a model is loaded, never in the middle of a run.
    """


class InvariantViolation(PedflowError):
    """Internal consistency check failed during a simulation run."""


class GraphSpecError(PedflowError):
    """Malformed or inconsistent graph-spec document.

    ``code`` is one of ``syntax``, ``dangling-endpoint``, ``unreachable-goal``,
    ``colour-mismatch``, ``self-loop``, ``duplicate-node``, ``bad-param``.
    """

    def __init__(self, code: str, message: str, line: int | None = None):
        self.code = code
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"[{code}] {where}{message}")
