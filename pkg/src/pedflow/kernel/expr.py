"""Expression trees for guards, update right-hand sides and broadcast predicates.

Expressions are evaluated against a component store (``my.<attr>`` references)
and a table of named functions.  The topology functions of a spatial model
(``ExistsPath``, ``AtGoal``, ...) are supplied through that table.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Iterable, Mapping

from ..errors import ModelDefinitionError

FunctionTable = Mapping[str, Callable[..., Any]]


class Expr:
    __slots__ = ()

    def evaluate(self, store: Mapping[str, Any], functions: FunctionTable) -> Any:
        raise NotImplementedError

    def attributes(self) -> frozenset[str]:
        """Names of store attributes read by this expression."""
        raise NotImplementedError

    def functions(self) -> frozenset[str]:
        raise NotImplementedError


@dataclass(frozen=True)
class Const(Expr):
    value: Any

    def evaluate(self, store, functions):
        return self.value

    def attributes(self):
        return frozenset()

    def functions(self):
        return frozenset()

    def __str__(self):
        if isinstance(self.value, bool):
            return "true" if self.value else "false"
        return str(self.value)


@dataclass(frozen=True)
class Attr(Expr):
    """``my.<name>``."""

    name: str

    def evaluate(self, store, functions):
        return store[self.name]

    def attributes(self):
        return frozenset((self.name,))

    def functions(self):
        return frozenset()

    def __str__(self):
        return f"my.{self.name}"


@dataclass(frozen=True)
class Call(Expr):
    name: str
    args: tuple[Expr, ...]

    def evaluate(self, store, functions):
        fn = functions[self.name]
        return fn(*[a.evaluate(store, functions) for a in self.args])

    def attributes(self):
        return frozenset().union(*(a.attributes() for a in self.args))

    def functions(self):
        return frozenset((self.name,)).union(*(a.functions() for a in self.args))

    def __str__(self):
        return f"{self.name}({', '.join(str(a) for a in self.args)})"


@dataclass(frozen=True)
class Not(Expr):
    arg: Expr

    def evaluate(self, store, functions):
        return not self.arg.evaluate(store, functions)

    def attributes(self):
        return self.arg.attributes()

    def functions(self):
        return self.arg.functions()

    def __str__(self):
        return f"!({self.arg})"


@dataclass(frozen=True)
class And(Expr):
    args: tuple[Expr, ...]

    def evaluate(self, store, functions):
        return all(a.evaluate(store, functions) for a in self.args)

    def attributes(self):
        return frozenset().union(*(a.attributes() for a in self.args))

    def functions(self):
        return frozenset().union(*(a.functions() for a in self.args))

    def __str__(self):
        return " && ".join(f"({a})" for a in self.args)


@dataclass(frozen=True)
class Or(Expr):
    args: tuple[Expr, ...]

    def evaluate(self, store, functions):
        return any(a.evaluate(store, functions) for a in self.args)

    def attributes(self):
        return frozenset().union(*(a.attributes() for a in self.args))

    def functions(self):
        return frozenset().union(*(a.functions() for a in self.args))

    def __str__(self):
        return " || ".join(f"({a})" for a in self.args)


@dataclass(frozen=True)
class Eq(Expr):
    lhs: Expr
    rhs: Expr

    def evaluate(self, store, functions):
        return self.lhs.evaluate(store, functions) == self.rhs.evaluate(store, functions)

    def attributes(self):
        return self.lhs.attributes() | self.rhs.attributes()

    def functions(self):
        return self.lhs.functions() | self.rhs.functions()

    def __str__(self):
        return f"{self.lhs} == {self.rhs}"


TRUE = Const(True)
FALSE = Const(False)  # the broadcast predicate written as bottom


def evaluate_predicate(pred: Expr, store: Mapping[str, Any], functions: FunctionTable) -> bool:
    """Evaluate a guard or broadcast predicate; the result is coerced to ``bool``."""
    return bool(pred.evaluate(store, functions))


def check_expression(expr: Expr, declared: Iterable[str], functions: FunctionTable,
                     where: str = "") -> None:
    """Fail fast if ``expr`` reads an undeclared attribute or calls an unknown function."""
    declared = frozenset(declared)
    missing = expr.attributes() - declared
    if missing:
        raise ModelDefinitionError(
            f"{where}: undeclared attribute(s) {sorted(missing)} in '{expr}'")
    unknown = expr.functions() - frozenset(functions)
    if unknown:
        raise ModelDefinitionError(f"{where}: unknown function(s) {sorted(unknown)} in '{expr}'")
