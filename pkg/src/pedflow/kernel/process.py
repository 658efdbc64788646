"""Process terms, components and the interpreter that enumerates enabled actions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, NamedTuple, Protocol, Sequence

from ..errors import ModelDefinitionError
from .expr import FALSE, Const, Expr, FunctionTable, check_expression, evaluate_predicate

Store = Mapping[str, Any]


def variant_of(value: Any) -> str:
    """Attribute variant tag: ``bool``, ``int``, ``real`` or ``symbol``."""
    # bool before int: bool is an int subclass
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, int):
        return "int"
    if isinstance(value, float):
        return "real"
    if isinstance(value, str):
        return "symbol"
    raise ModelDefinitionError(f"unsupported attribute value {value!r}")


# -- process syntax ---------------------------------------------------------

class Process:
    __slots__ = ()


@dataclass(frozen=True)
class Nil(Process):
    def __str__(self):
        return "nil"


@dataclass(frozen=True)
class Kill(Process):
    def __str__(self):
        return "kill"


@dataclass(frozen=True)
class Prefix(Process):
    """Broadcast prefix ``name*[predicate]<payload>{update}.continuation``.

    ``params`` distinguishes instances of an indexed action family such as
    ``move_ij``; they are part of the action label.
    """

    name: str
    continuation: Process
    params: tuple = ()
    predicate: Expr = FALSE
    payload: tuple[Expr, ...] = ()
    update: tuple[tuple[str, Expr], ...] = ()

    @property
    def label(self) -> str:
        return action_label(self.name, self.params)

    def __str__(self):
        upd = ", ".join(f"my.{k} <- {v}" for k, v in self.update)
        pay = ", ".join(str(p) for p in self.payload)
        return f"{self.label}*[{self.predicate}]<{pay}>{{{upd}}}.{self.continuation}"


@dataclass(frozen=True)
class Choice(Process):
    terms: tuple[Process, ...]

    def __str__(self):
        return " + ".join(f"({t})" for t in self.terms)


@dataclass(frozen=True)
class Guard(Process):
    predicate: Expr
    body: Process

    def __str__(self):
        return f"[{self.predicate}]({self.body})"


@dataclass(frozen=True)
class ProcConst(Process):
    name: str

    def __str__(self):
        return self.name


def action_label(name: str, params: tuple = ()) -> str:
    if not params:
        return name
    return name + "_" + "_".join(str(p) for p in params)


# -- components -------------------------------------------------------------

@dataclass(frozen=True)
class ComponentKind:
    """Declared attribute variants and initial behaviour of one component type."""

    name: str
    attributes: Mapping[str, str]
    initial: Process

    def check_store(self, store: Store) -> None:
        if set(store) != set(self.attributes):
            raise ModelDefinitionError(
                f"{self.name}: store keys {sorted(store)} != declared {sorted(self.attributes)}")
        for key, value in store.items():
            if variant_of(value) != self.attributes[key]:
                raise ModelDefinitionError(
                    f"{self.name}.{key}: expected {self.attributes[key]}, got {value!r}")


@dataclass(frozen=True)
class Component:
    id: int
    kind: str
    store: Mapping[str, Any]
    process: Process


class ActionInstance(NamedTuple):
    """An enabled action of one component with its update resolved and rate priced."""

    component_id: int
    name: str
    params: tuple
    update: tuple[tuple[str, Any], ...]
    continuation: Process
    rate: float
    label: str
    predicate: Expr = FALSE
    payload: tuple = ()


@dataclass(frozen=True)
class EnvironmentUpdate:
    global_store: Any
    spawns: tuple[tuple[str, Mapping[str, Any]], ...] = ()
    remove_sender: bool = False


class EvaluationContext(Protocol):
    """The four evolution-rule functions of an environment."""

    def probability(self, sender: Store, receiver: Store, name: str, params: tuple) -> float: ...

    def weight(self, sender: Store, receiver: Store, name: str, params: tuple) -> float: ...

    def rate(self, sender: Store, name: str, params: tuple, view: Any) -> float: ...

    def update(self, global_store: Any, sender: Store, name: str, params: tuple,
               now: float) -> EnvironmentUpdate: ...


def apply_local_update(component: Component, update: Sequence[tuple[str, Any]],
                       continuation: Process | None = None) -> Component:
    """Apply resolved assignments in order; identifier and kind never change."""
    if not update and continuation is None:
        return component
    store = dict(component.store)
    for name, value in update:
        if name not in store:
            raise ModelDefinitionError(f"update targets undeclared attribute '{name}'")
        if variant_of(value) != variant_of(store[name]):
            raise ModelDefinitionError(
                f"update of '{name}' changes variant {variant_of(store[name])} -> {variant_of(value)}")
        store[name] = value
    return Component(component.id, component.kind, store,
                     component.process if continuation is None else continuation)


# -- interpreter ------------------------------------------------------------

class _Resolved(NamedTuple):
    name: str
    params: tuple
    label: str
    update: tuple[tuple[str, Any], ...]
    continuation: Process
    predicate: Expr
    payload: tuple


class Kernel:
    """Interpreter for a table of process definitions over an evaluation context.

    Enabled prefixes depend only on the store attributes a term reads, so they
    are memoised per ``(term, relevant attribute values)``.  Rates are never
    cached: they may read the whole collective.
    """

    def __init__(self, definitions: Mapping[str, Process], functions: FunctionTable,
                 kinds: Sequence[ComponentKind], environment: EvaluationContext):
        self.definitions = dict(definitions)
        self.functions = functions
        self.kinds = {k.name: k for k in kinds}
        self.environment = environment
        self._reads: dict[Process, tuple[str, ...]] = {}
        self._cache: dict[tuple, tuple[_Resolved, ...]] = {}
        for kind in self.kinds.values():
            self._validate(kind)

    # load-time checks
    def _validate(self, kind: ComponentKind) -> None:
        declared = kind.attributes
        seen: set[str] = set()

        def walk(term: Process, unguarded: frozenset[str]) -> None:
            if isinstance(term, (Nil, Kill)):
                return
            if isinstance(term, ProcConst):
                if term.name not in self.definitions:
                    raise ModelDefinitionError(f"undefined process constant '{term.name}'")
                if term.name in unguarded:
                    raise ModelDefinitionError(f"unguarded recursion through '{term.name}'")
                if term.name in seen and not unguarded:
                    return
                seen.add(term.name)
                walk(self.definitions[term.name], unguarded | {term.name})
            elif isinstance(term, Choice):
                for t in term.terms:
                    walk(t, unguarded)
            elif isinstance(term, Guard):
                check_expression(term.predicate, declared, self.functions, kind.name)
                walk(term.body, unguarded)
            elif isinstance(term, Prefix):
                for _, rhs in term.update:
                    check_expression(rhs, declared, self.functions, kind.name)
                for target, _ in term.update:
                    if target not in declared:
                        raise ModelDefinitionError(
                            f"{kind.name}: update targets undeclared attribute '{target}'")
                for p in term.payload:
                    check_expression(p, declared, self.functions, kind.name)
                walk(term.continuation, frozenset())
            else:
                raise ModelDefinitionError(f"unknown process term {term!r}")

        walk(kind.initial, frozenset())

    def reads(self, term: Process) -> tuple[str, ...]:
        """Attributes whose values decide which prefixes of ``term`` are enabled."""
        cached = self._reads.get(term)
        if cached is not None:
            return cached
        names: set[str] = set()
        visiting: set[str] = set()

        def walk(t: Process) -> None:
            if isinstance(t, ProcConst):
                if t.name in visiting:
                    return
                visiting.add(t.name)
                walk(self.definitions[t.name])
            elif isinstance(t, Choice):
                for s in t.terms:
                    walk(s)
            elif isinstance(t, Guard):
                names.update(t.predicate.attributes())
                walk(t.body)
            elif isinstance(t, Prefix):
                for _, rhs in t.update:
                    names.update(rhs.attributes())
                for p in t.payload:
                    names.update(p.attributes())

        walk(term)
        result = tuple(sorted(names))
        self._reads[term] = result
        return result

    def _prefixes(self, term: Process, store: Store, out: list, active: frozenset) -> None:
        if isinstance(term, Prefix):
            out.append(_Resolved(
                term.name, term.params, term.label,
                tuple((k, v.evaluate(store, self.functions)) for k, v in term.update),
                term.continuation, term.predicate,
                tuple(p.evaluate(store, self.functions) for p in term.payload)))
        elif isinstance(term, Choice):
            for t in term.terms:
                self._prefixes(t, store, out, active)
        elif isinstance(term, Guard):
            if evaluate_predicate(term.predicate, store, self.functions):
                self._prefixes(term.body, store, out, active)
        elif isinstance(term, ProcConst):
            if term.name not in active:
                self._prefixes(self.definitions[term.name], store, out, active | {term.name})
        # nil and kill offer nothing

    def enabled_prefixes(self, component: Component) -> tuple[_Resolved, ...]:
        term = component.process
        store = component.store
        key = (term, tuple(store[a] for a in self.reads(term)))
        hit = self._cache.get(key)
        if hit is None:
            out: list[_Resolved] = []
            self._prefixes(term, store, out, frozenset())
            out.sort(key=lambda p: p.label)
            hit = tuple(out)
            self._cache[key] = hit
        return hit

    def enabled_actions(self, component: Component, view: Any) -> list[ActionInstance]:
        """Every guard-satisfied prefix of ``component`` priced by the rate function.

        Ordered by action label.  Zero-rate instances are kept here; the engine
        drops them.
        """
        rate = self.environment.rate
        store = component.store
        cid = component.id
        return [ActionInstance(cid, p.name, p.params, p.update, p.continuation,
                               rate(store, p.name, p.params, view), p.label,
                               p.predicate, p.payload)
                for p in self.enabled_prefixes(component)]

    def receivers(self, sender: Component, action: ActionInstance,
                  collective: Mapping[int, Component]) -> list[tuple[Component, float]]:
        """Components whose stores satisfy the broadcast predicate, with their probabilities."""
        pred = action.predicate
        if isinstance(pred, Const) and not pred.value:
            return []
        out = []
        for other in collective.values():
            if other.id == sender.id:
                continue
            if not evaluate_predicate(pred, other.store, self.functions):
                continue
            p = self.environment.probability(sender.store, other.store, action.name, action.params)
            if p > 0.0:
                out.append((other, p))
        return out

    def new_component(self, cid: int, kind: str, store: Mapping[str, Any]) -> Component:
        k = self.kinds[kind]
        k.check_store(store)
        return Component(cid, kind, dict(store), k.initial)


__all__ = [
    "ActionInstance", "Choice", "Component", "ComponentKind", "EnvironmentUpdate",
    "EvaluationContext", "Guard", "Kernel", "Kill", "Nil", "Prefix", "ProcConst", "Process",
    "Store", "action_label", "apply_local_update", "variant_of",
]
