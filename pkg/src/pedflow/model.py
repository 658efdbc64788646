"""The pedestrian counter-flow model: Pedestrian and Arrival components plus their environment.

The topology functions are supplied by a :class:`Topology`; the in-memory
:class:`GraphTopology` answers them from a :class:`~pedflow.spatial.SpatialGraph`,
while :mod:`pedflow.codegen` provides a table-driven one read back from an
emitted model file.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any, Mapping, Protocol, Sequence

from . import spatial
from .errors import InvariantViolation
from .kernel import (
    FALSE,
    Attr,
    Call,
    Choice,
    ComponentKind,
    Const,
    EnvironmentUpdate,
    Guard,
    Kernel,
    Nil,
    Prefix,
    ProcConst,
    Process,
)
from .spatial import RateParams, SpatialGraph

PEDESTRIAN = "Pedestrian"
ARRIVAL = "Arrival"

PEDESTRIAN_ATTRS = {"P": "symbol", "x": "int", "y": "int", "stime": "real"}
ARRIVAL_ATTRS = {"P": "symbol"}


@dataclass(frozen=True)
class GlobalStore:
    count_A: int = 0
    count_B: int = 0
    total_A: float = 0.0
    total_B: float = 0.0

    def count(self, ptype: str) -> int:
        return self.count_A if ptype == "A" else self.count_B

    def total(self, ptype: str) -> float:
        return self.total_A if ptype == "A" else self.total_B

    def record_completion(self, ptype: str, duration: float) -> GlobalStore:
        if ptype == "A":
            return replace(self, count_A=self.count_A + 1, total_A=self.total_A + duration)
        return replace(self, count_B=self.count_B + 1, total_B=self.total_B + duration)


class Topology(Protocol):
    coordinates: tuple[tuple[int, int], ...]

    def exists_path(self, ptype: str, x: int, y: int, i: int, j: int) -> bool: ...

    def at_goal(self, ptype: str, x: int, y: int) -> bool: ...

    def start(self, ptype: str) -> tuple[int, int]: ...


class GraphTopology:
    """Topology functions answered directly from a spatial graph."""

    def __init__(self, graph: SpatialGraph):
        self.graph = graph
        self.coordinates = graph.coordinates

    def exists_path(self, ptype, x, y, i, j):
        return spatial.exists_path(self.graph, ptype, x, y, i, j)

    def at_goal(self, ptype, x, y):
        return spatial.at_goal(self.graph, ptype, x, y)

    def start(self, ptype):
        return spatial.start_coords(self.graph, ptype)


def topology_functions(topology: Topology, params: RateParams) -> dict[str, Any]:
    return {
        "ExistsPath": topology.exists_path,
        "AtGoal": topology.at_goal,
        "ArrivalRate": params.arrival,
        "Start_x": lambda p: topology.start(p)[0],
        "Start_y": lambda p: topology.start(p)[1],
        "MoveRate": lambda p, a, b: spatial.move_rate(params, p, a, b),
    }


_P, _X, _Y = Attr("P"), Attr("x"), Attr("y")


def move_prefix(i: int, j: int) -> Prefix:
    return Prefix("move", ProcConst("Ped"), params=(i, j), predicate=FALSE,
                  update=(("x", Const(i)), ("y", Const(j))))


def fin_summand() -> Guard:
    return Guard(Call("AtGoal", (_P, _X, _Y)), Prefix("fin", Nil()))


def pedestrian_definitions(coordinates: Sequence[tuple[int, int]]) -> dict[str, Process]:
    """``Ped`` sums one ExistsPath-guarded move per node plus the AtGoal-guarded fin."""
    moves = [Guard(Call("ExistsPath", (_P, _X, _Y, Const(i), Const(j))), move_prefix(i, j))
             for i, j in coordinates]
    return {
        "Ped": Choice(tuple(moves) + (fin_summand(),)),
        "Arr": Prefix("arrive", ProcConst("Arr")),
    }


def apply_environment_update(g: GlobalStore, now: float, name: str, sender: Mapping[str, Any],
                             start: Mapping[str, tuple[int, int]] | Any) -> EnvironmentUpdate:
    """Global-store and collective effects of an action fired at ``now``.

    ``start`` maps a pedestrian type to its entry coordinates (a callable is
    accepted too).  A completed pedestrian is removed from the collective.
    """
    if name == "arrive":
        ptype = sender["P"]
        x, y = start(ptype) if callable(start) else start[ptype]
        spawn = (PEDESTRIAN, {"P": ptype, "x": x, "y": y, "stime": float(now)})
        return EnvironmentUpdate(g, (spawn,), False)
    if name == "fin":
        if now < sender["stime"]:
            raise InvariantViolation(f"completion at {now} precedes arrival at {sender['stime']}")
        return EnvironmentUpdate(g.record_completion(sender["P"], now - sender["stime"]), (), True)
    return EnvironmentUpdate(g, (), False)


class PedestrianEnvironment:
    """Evaluation context: unit probabilities and weights, congestion-aware rates.

    ``routes`` pins each type's first move out of its start node to a single
    target.  That move carries the whole entry rate of the start node (its
    MoveRate times the number of entry moves); every other entry move gets
    rate 0.
    """

    def __init__(self, topology: Topology, params: RateParams,
                 routes: Mapping[str, tuple[int, int]] | None = None):
        self.topology = topology
        self.params = params
        self.routes = dict(routes) if routes else {}
        self._start = {p: topology.start(p) for p in spatial.TYPES}
        self._entries = {
            p: sum(1 for i, j in topology.coordinates if topology.exists_path(p, *self._start[p], i, j))
            for p in spatial.TYPES
        }

    def probability(self, sender, receiver, name, params):
        return 1.0

    def weight(self, sender, receiver, name, params):
        return 1.0

    def rate(self, sender, name, params, view):
        if name == "move":
            ptype = sender["P"]
            i, j = params
            # the same-type count never enters the rate, so it is not read
            if ptype == "A":
                r = spatial.move_rate(self.params, ptype, 0, view.count_at("B", i, j))
            else:
                r = spatial.move_rate(self.params, ptype, view.count_at("A", i, j), 0)
            if self.routes and (sender["x"], sender["y"]) == self._start[ptype]:
                route = self.routes.get(ptype)
                if route is not None:
                    return r * self._entries[ptype] if route == (i, j) else 0.0
            return r
        if name == "arrive":
            return self.params.arrival(sender["P"])
        return self.params.fast

    def update(self, global_store, sender, name, params, now):
        return apply_environment_update(global_store, now, name, sender, self._start)


class PedestrianModel:
    """A loaded, immutable model: definitions, kernel, environment and initial collective.

    ``preload`` places that many pedestrians of each type on their start node
    at time 0 (used to admit a single pedestrian for first-passage checks).
    """

    def __init__(self, topology: Topology, params: RateParams,
                 definitions: Mapping[str, Process] | None = None,
                 routes: Mapping[str, tuple[int, int]] | None = None,
                 preload: Mapping[str, int] | None = None):
        self.topology = topology
        self.params = params
        self.routes = dict(routes) if routes else {}
        self.preload = dict(preload) if preload else {}
        if definitions is None:
            definitions = pedestrian_definitions(topology.coordinates)
        self.definitions = dict(definitions)
        self.environment = PedestrianEnvironment(topology, params, self.routes)
        kinds = [ComponentKind(PEDESTRIAN, PEDESTRIAN_ATTRS, ProcConst("Ped")),
                 ComponentKind(ARRIVAL, ARRIVAL_ATTRS, ProcConst("Arr"))]
        self.kernel = Kernel(self.definitions, topology_functions(topology, params), kinds,
                             self.environment)

    @classmethod
    def from_graph(cls, graph: SpatialGraph, params: RateParams | None = None, *,
                   routes: Mapping[str, tuple[int, int]] | None = None,
                   preload: Mapping[str, int] | None = None) -> PedestrianModel:
        return cls(GraphTopology(graph), params or RateParams(), routes=routes, preload=preload)

    def with_params(self, params: RateParams) -> PedestrianModel:
        return PedestrianModel(self.topology, params, self.definitions, self.routes, self.preload)

    def initial_collective(self) -> list[tuple[str, dict[str, Any]]]:
        """``(Arrival, {P: A}) || (Arrival, {P: B})`` plus any preloaded pedestrians."""
        out: list[tuple[str, dict[str, Any]]] = [(ARRIVAL, {"P": "A"}), (ARRIVAL, {"P": "B"})]
        for ptype in spatial.TYPES:
            x, y = self.topology.start(ptype)
            for _ in range(self.preload.get(ptype, 0)):
                out.append((PEDESTRIAN, {"P": ptype, "x": x, "y": y, "stime": 0.0}))
        return out
