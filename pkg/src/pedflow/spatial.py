"""Spatial graphs with per-type mobility subgraphs and the cross-bar network generator.

Coordinates of a cross-bar network of width ``W`` and height ``H``::

    y=H   o---o---...---o
          |   |         |          column c sits at x = c, c = 1..W+1
    L  ---o---o---...---o---  R    L = (0, 0), R = (W+2, 0)
          |   |         |
    y=0   o---o---...---o

Every row is joined to ``L`` and ``R``.  Type A walks the Red subgraph left to
right, type B the Blue subgraph right to left; both may change rows along the
vertical cross-bars in either direction.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

from .errors import GraphSpecError, ModelDefinitionError

TYPES = ("A", "B")
TYPE_COLOUR = {"A": "Red", "B": "Blue"}
COLOURS = ("Red", "Blue")


def other_type(ptype: str) -> str:
    return "B" if ptype == "A" else "A"


@dataclass(frozen=True, order=True)
class Node:
    id: int
    x: int
    y: int

    @property
    def coords(self) -> tuple[int, int]:
        return (self.x, self.y)


@dataclass(frozen=True, order=True)
class DirectedEdge:
    """Edge ``src -> dst``; a bidirectional edge is also traversable ``dst -> src``."""

    src: int
    dst: int
    colour: str
    bidirectional: bool = False


@dataclass(frozen=True)
class Subgraph:
    edges: tuple[int, ...]
    start: int
    goal: int


@dataclass(frozen=True)
class SpatialGraph:
    nodes: tuple[Node, ...]
    edges: tuple[DirectedEdge, ...]
    subgraphs: Mapping[str, Subgraph]
    connection_count: int
    name: str = field(default="", compare=True)

    @cached_property
    def node_by_id(self) -> dict[int, Node]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def node_at(self) -> dict[tuple[int, int], Node]:
        return {n.coords: n for n in self.nodes}

    @cached_property
    def coordinates(self) -> tuple[tuple[int, int], ...]:
        """The node set as coordinate pairs, in node-id order."""
        return tuple(n.coords for n in sorted(self.nodes))

    def traversals(self, ptype: str) -> list[tuple[int, int]]:
        """Admissible directed moves ``(from_id, to_id)`` of ``ptype``, one per direction."""
        out = []
        for idx in self.subgraphs[ptype].edges:
            e = self.edges[idx]
            out.append((e.src, e.dst))
            if e.bidirectional:
                out.append((e.dst, e.src))
        return sorted(set(out))

    @cached_property
    def _successors(self) -> dict[str, dict[int, frozenset[int]]]:
        table: dict[str, dict[int, set[int]]] = {}
        for ptype in self.subgraphs:
            succ: dict[int, set[int]] = {}
            for a, b in self.traversals(ptype):
                succ.setdefault(a, set()).add(b)
            table[ptype] = succ
        return {p: {k: frozenset(v) for k, v in s.items()} for p, s in table.items()}

    def successors(self, ptype: str, node_id: int) -> frozenset[int]:
        return self._successors[ptype].get(node_id, frozenset())

    def subgraph_nodes(self, ptype: str) -> frozenset[int]:
        sub = self.subgraphs[ptype]
        ids = {sub.start, sub.goal}
        for a, b in self.traversals(ptype):
            ids.add(a)
            ids.add(b)
        return frozenset(ids)

    def reachable(self, ptype: str, source: int) -> set[int]:
        seen = {source}
        queue = deque([source])
        while queue:
            v = queue.popleft()
            for w in self.successors(ptype, v):
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return seen


def validate_graph(g: SpatialGraph) -> None:
    """Raise :class:`GraphSpecError` unless ``g`` satisfies every graph invariant."""
    ids: set[int] = set()
    coords: set[tuple[int, int]] = set()
    for n in g.nodes:
        if n.id in ids or n.coords in coords:
            raise GraphSpecError("duplicate-node", f"node {n.id} at {n.coords} is not unique")
        ids.add(n.id)
        coords.add(n.coords)
    for k, e in enumerate(g.edges):
        if e.src not in ids or e.dst not in ids:
            raise GraphSpecError("dangling-endpoint", f"edge {k} ({e.src}->{e.dst}) has a missing endpoint")
        if e.src == e.dst:
            raise GraphSpecError("self-loop", f"edge {k} is a self-loop on node {e.src}")
        if e.colour not in COLOURS:
            raise GraphSpecError("colour-mismatch", f"edge {k} has unknown colour {e.colour!r}")
    for ptype, sub in g.subgraphs.items():
        if ptype not in TYPE_COLOUR:
            raise GraphSpecError("colour-mismatch", f"unknown pedestrian type {ptype!r}")
        for end in (sub.start, sub.goal):
            if end not in ids:
                raise GraphSpecError("dangling-endpoint", f"subgraph {ptype} names missing node {end}")
        for idx in sub.edges:
            if not 0 <= idx < len(g.edges):
                raise GraphSpecError("dangling-endpoint", f"subgraph {ptype} names missing edge {idx}")
            if g.edges[idx].colour != TYPE_COLOUR[ptype]:
                raise GraphSpecError(
                    "colour-mismatch",
                    f"edge {idx} is {g.edges[idx].colour} but belongs to subgraph {ptype}")
        if sub.goal not in g.reachable(ptype, sub.start):
            raise GraphSpecError("unreachable-goal", f"goal of {ptype} unreachable from its start")


# -- generator ----------------------------------------------------------------

def crossbar_counts(width: int, height: int) -> tuple[int, int]:
    """Closed forms ``(nodes, connections)`` of the cross-bar network."""
    return (height + 3) + width * (height + 1), (2 * height + 2) + width * (3 * height + 1)


def generate_crossbar(width: int, height: int) -> SpatialGraph:
    """Build the ``width`` x ``height`` cross-bar network.

    The middle grid has ``height + 1`` rows and ``width + 1`` columns.  Each
    row contributes ``width + 2`` horizontal connections (L, the columns, R).
    A vertical slot counts as one drawn connection on the two boundary
    columns and as two (separate Red and Blue lanes) on interior columns;
    in the subgraphs every slot carries one Red and one Blue bidirectional
    copy either way.
    """
    if not isinstance(width, int) or not isinstance(height, int) or width < 1 or height < 1:
        raise ValueError(f"width and height must be positive integers, got {width}x{height}")
    rows = height + 1
    cols = width + 1

    def gid(c: int, r: int) -> int:
        return 1 + (c - 1) * rows + r

    left = 0
    right = 1 + cols * rows
    nodes = [Node(left, 0, 0)]
    nodes += [Node(gid(c, r), c, r) for c in range(1, cols + 1) for r in range(rows)]
    nodes.append(Node(right, width + 2, 0))

    raw: list[DirectedEdge] = []
    connections = 0
    for r in range(rows):
        chain = [left] + [gid(c, r) for c in range(1, cols + 1)] + [right]
        for a, b in zip(chain, chain[1:]):
            raw.append(DirectedEdge(a, b, "Red"))
            raw.append(DirectedEdge(b, a, "Blue"))
            connections += 1
    for c in range(1, cols + 1):
        boundary = c in (1, cols)
        for r in range(height):
            a, b = gid(c, r), gid(c, r + 1)
            raw.append(DirectedEdge(a, b, "Red", True))
            raw.append(DirectedEdge(a, b, "Blue", True))
            connections += 1 if boundary else 2

    edges = tuple(sorted(raw, key=lambda e: (e.src, e.dst, e.colour)))
    subgraphs = {
        "A": Subgraph(tuple(k for k, e in enumerate(edges) if e.colour == "Red"), left, right),
        "B": Subgraph(tuple(k for k, e in enumerate(edges) if e.colour == "Blue"), right, left),
    }
    return SpatialGraph(tuple(nodes), edges, subgraphs, connections, name=f"{height}x{width}")


# -- topology functions ---------------------------------------------------------

def _node(g: SpatialGraph, x: int, y: int) -> Node:
    node = g.node_at.get((x, y))
    if node is None:
        raise ModelDefinitionError(f"({x}, {y}) is not a node of the graph")
    return node


def exists_path(g: SpatialGraph, ptype: str, x: int, y: int, i: int, j: int) -> bool:
    src = _node(g, x, y)
    dst = g.node_at.get((i, j))
    return dst is not None and dst.id in g.successors(ptype, src.id)


def at_goal(g: SpatialGraph, ptype: str, x: int, y: int) -> bool:
    return _node(g, x, y).id == g.subgraphs[ptype].goal


def start_coords(g: SpatialGraph, ptype: str) -> tuple[int, int]:
    return g.node_by_id[g.subgraphs[ptype].start].coords


def goal_coords(g: SpatialGraph, ptype: str) -> tuple[int, int]:
    return g.node_by_id[g.subgraphs[ptype].goal].coords


@dataclass(frozen=True)
class RateParams:
    """Base rates, all per unit of simulation time."""

    move_A: float = 1.0
    move_B: float = 1.0
    arr_A: float = 1.0
    arr_B: float = 1.0
    fast: float = 1000.0

    def __post_init__(self):
        for name in ("move_A", "move_B", "fast"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be strictly positive")
        for name in ("arr_A", "arr_B"):
            if not getattr(self, name) >= 0.0:
                raise ValueError(f"{name} must be nonnegative")

    def move(self, ptype: str) -> float:
        return self.move_A if ptype == "A" else self.move_B

    def arrival(self, ptype: str) -> float:
        return self.arr_A if ptype == "A" else self.arr_B


def arrival_rate(params: RateParams, ptype: str) -> float:
    return params.arrival(ptype)


def move_rate(params: RateParams, ptype: str, count_a: int, count_b: int) -> float:
    """Congested movement rate into a node holding ``count_a`` A's and ``count_b`` B's.

    Only the opposing type slows a pedestrian down.
    """
    if ptype == "A":
        return params.move_A / (count_b + 1)
    return params.move_B / (count_a + 1)


def count_at(collective: Iterable, ptype: str, i: int, j: int) -> int:
    """Number of live pedestrians of ``ptype`` standing on ``(i, j)``."""
    if isinstance(collective, Mapping):
        collective = collective.values()
    n = 0
    for c in collective:
        s = c.store
        if c.kind == "Pedestrian" and s["P"] == ptype and s["x"] == i and s["y"] == j:
            n += 1
    return n


def routing_entries(g: SpatialGraph) -> dict[str, tuple[int, int]]:
    """The single entry node each type is routed to: A to the topmost, B to the bottommost."""
    entries = {}
    for ptype, pick in (("A", max), ("B", min)):
        sub = g.subgraphs[ptype]
        targets = [g.node_by_id[t] for t in g.successors(ptype, sub.start)]
        best = pick(targets, key=lambda n: (n.y, n.x))
        entries[ptype] = best.coords
    return entries


def mirror(g: SpatialGraph) -> SpatialGraph:
    """Swap A/B and Red/Blue and reflect x; a symmetric network maps onto itself."""
    xmax = max(n.x for n in g.nodes)
    xmin = min(n.x for n in g.nodes)
    by_coords = {n.coords: n.id for n in g.nodes}
    image = {n.id: by_coords.get((xmax + xmin - n.x, n.y)) for n in g.nodes}
    if None in image.values():
        raise ValueError("node set is not mirror-symmetric")
    swap = {"Red": "Blue", "Blue": "Red"}
    edges = [DirectedEdge(image[e.src], image[e.dst], swap[e.colour], e.bidirectional)
             for e in g.edges]
    order = sorted(range(len(edges)), key=lambda k: (edges[k].src, edges[k].dst, edges[k].colour))
    new_index = {old: new for new, old in enumerate(order)}
    subgraphs = {
        other_type(p): Subgraph(tuple(sorted(new_index[k] for k in s.edges)),
                                image[s.start], image[s.goal])
        for p, s in g.subgraphs.items()
    }
    return SpatialGraph(g.nodes, tuple(edges[k] for k in order), subgraphs,
                        g.connection_count, name=g.name)
