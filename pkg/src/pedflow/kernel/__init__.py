"""Attribute-based process kernel: stores, guarded processes, broadcast prefixes."""

from .expr import FALSE, TRUE, And, Attr, Call, Const, Eq, Expr, Not, Or, evaluate_predicate
from .process import (
    ActionInstance,
    Choice,
    Component,
    ComponentKind,
    EnvironmentUpdate,
    EvaluationContext,
    Guard,
    Kernel,
    Kill,
    Nil,
    Prefix,
    ProcConst,
    Process,
    action_label,
    apply_local_update,
    variant_of,
)

__all__ = [
    "FALSE", "TRUE", "ActionInstance", "And", "Attr", "Call", "Choice", "Component",
    "ComponentKind", "Const", "EnvironmentUpdate", "EvaluationContext", "Eq", "Expr", "Guard",
    "Kernel", "Kill", "Nil", "Not", "Or", "Prefix", "ProcConst", "Process", "action_label",
    "apply_local_update", "evaluate_predicate", "variant_of",
]
