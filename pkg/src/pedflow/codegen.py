"""Graph-spec files (``.cbgraph``) and generated model files (``.cbmodel``).

A ``.cbgraph`` document is UTF-8 text, one record per line, ``#`` comments::

    CBGRAPH 1 <name>
    NODES
    <id> <x> <y>
    EDGES
    <from-id> <to-id> <Red|Blue> <bidirectional 0|1>
    SUBGRAPHS
    <type> <start-id> <goal-id> <edge-index,...|->
    PARAMS
    <key> = <value>
    CONNECTIONS <count>

Sections appear in exactly that order; PARAMS may be empty.  Edge indices
count EDGES records from zero.

A ``.cbmodel`` file holds a readable model listing followed by a
``%% CLAUSES`` table that :func:`load_model` reads back.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from decimal import Decimal
from typing import Mapping

from . import spatial
from .errors import GraphSpecError, ModelDefinitionError
from .kernel import And, Attr, Call, Choice, Const, Eq, Guard, Prefix, ProcConst, Process
from .model import PedestrianModel, fin_summand, move_prefix
from .spatial import DirectedEdge, Node, RateParams, SpatialGraph, Subgraph

FORMAT_VERSION = 1
SECTIONS = ("NODES", "EDGES", "SUBGRAPHS", "PARAMS", "CONNECTIONS")
LOC_BASE = 128
LOC_PER_CONNECTION = 10


def format_real(v: float) -> str:
    """Shortest round-tripping decimal without an exponent (``1e-05`` -> ``0.00001``)."""
    text = format(Decimal(repr(float(v))), "f")
    return text if "." in text else text + ".0"


def loc_estimate(g: SpatialGraph) -> int:
    """Line count of the reference editor's output: 128 fixed plus 10 per drawn connection."""
    return LOC_BASE + LOC_PER_CONNECTION * g.connection_count


# -- graph spec -----------------------------------------------------------------

def emit_graph_spec(g: SpatialGraph, params: RateParams | None = None) -> str:
    nodes = sorted(g.nodes, key=lambda n: n.id)
    order = sorted(range(len(g.edges)), key=lambda k: (g.edges[k].src, g.edges[k].dst,
                                                       g.edges[k].colour, g.edges[k].bidirectional))
    new_index = {old: new for new, old in enumerate(order)}
    lines = [f"# pedflow graph spec: {len(nodes)} nodes, {g.connection_count} connections",
             f"CBGRAPH {FORMAT_VERSION} {g.name or '-'}", "NODES"]
    lines += [f"{n.id} {n.x} {n.y}" for n in nodes]
    lines.append("EDGES")
    for k in order:
        e = g.edges[k]
        lines.append(f"{e.src} {e.dst} {e.colour} {int(e.bidirectional)}")
    lines.append("SUBGRAPHS")
    for ptype in sorted(g.subgraphs):
        sub = g.subgraphs[ptype]
        idx = ",".join(str(i) for i in sorted(new_index[k] for k in sub.edges)) or "-"
        lines.append(f"{ptype} {sub.start} {sub.goal} {idx}")
    lines.append("PARAMS")
    if params is not None:
        lines += [f"{f.name} = {format_real(getattr(params, f.name))}" for f in fields(params)]
    lines.append(f"CONNECTIONS {g.connection_count}")
    return "\n".join(lines) + "\n"


def _int(tok: str, lineno: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise GraphSpecError("syntax", f"expected an integer, got {tok!r}", lineno) from None


def read_graph_document(text: str) -> tuple[SpatialGraph, RateParams | None]:
    """Parse and validate a ``.cbgraph`` document, returning the graph and its parameters."""
    records = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            records.append((lineno, line))
    if not records:
        raise GraphSpecError("syntax", "empty document", 1)
    lineno, head = records[0]
    tok = head.split()
    if len(tok) != 3 or tok[0] != "CBGRAPH":
        raise GraphSpecError("syntax", "missing 'CBGRAPH <version> <name>' header", lineno)
    if _int(tok[1], lineno) != FORMAT_VERSION:
        raise GraphSpecError("syntax", f"unsupported format version {tok[1]}", lineno)
    name = "" if tok[2] == "-" else tok[2]

    body: dict[str, list[tuple[int, list[str]]]] = {s: [] for s in SECTIONS}
    connections: int | None = None
    expected = 0
    current = None
    for lineno, line in records[1:]:
        tok = line.split()
        if tok[0] in SECTIONS:
            if tok[0] not in SECTIONS[expected:] or (current is None and tok[0] != SECTIONS[0]):
                raise GraphSpecError("syntax", f"section {tok[0]} out of order", lineno)
            k = SECTIONS.index(tok[0])
            if k != expected:
                raise GraphSpecError("syntax", f"missing section {SECTIONS[expected]}", lineno)
            expected = k + 1
            current = tok[0]
            if current == "CONNECTIONS":
                if len(tok) != 2:
                    raise GraphSpecError("syntax", "expected 'CONNECTIONS <count>'", lineno)
                connections = _int(tok[1], lineno)
            elif len(tok) != 1:
                raise GraphSpecError("syntax", f"unexpected tokens after {current}", lineno)
            continue
        if current is None or current == "CONNECTIONS":
            raise GraphSpecError("syntax", f"record outside a section: {line!r}", lineno)
        body[current].append((lineno, tok))
    if connections is None:
        raise GraphSpecError("syntax", "missing CONNECTIONS line", records[-1][0])

    nodes: list[Node] = []
    seen_ids: set[int] = set()
    seen_xy: set[tuple[int, int]] = set()
    for lineno, tok in body["NODES"]:
        if len(tok) != 3:
            raise GraphSpecError("syntax", "node record needs '<id> <x> <y>'", lineno)
        n = Node(*(_int(t, lineno) for t in tok))
        if n.id in seen_ids or n.coords in seen_xy:
            raise GraphSpecError("duplicate-node", f"node {n.id} at {n.coords} repeated", lineno)
        seen_ids.add(n.id)
        seen_xy.add(n.coords)
        nodes.append(n)

    edges: list[DirectedEdge] = []
    edge_lines: list[int] = []
    for lineno, tok in body["EDGES"]:
        if len(tok) != 4 or tok[3] not in ("0", "1"):
            raise GraphSpecError("syntax", "edge record needs '<from> <to> <colour> <0|1>'", lineno)
        src, dst = _int(tok[0], lineno), _int(tok[1], lineno)
        if src not in seen_ids or dst not in seen_ids:
            missing = src if src not in seen_ids else dst
            raise GraphSpecError("dangling-endpoint",
                                 f"edge {src}->{dst} references missing node {missing}", lineno)
        if src == dst:
            raise GraphSpecError("self-loop", f"edge {src}->{dst} is a self-loop", lineno)
        if tok[2] not in spatial.COLOURS:
            raise GraphSpecError("colour-mismatch", f"unknown colour {tok[2]!r}", lineno)
        edges.append(DirectedEdge(src, dst, tok[2], tok[3] == "1"))
        edge_lines.append(lineno)

    subgraphs: dict[str, Subgraph] = {}
    sub_lines: dict[str, int] = {}
    for lineno, tok in body["SUBGRAPHS"]:
        if len(tok) != 4:
            raise GraphSpecError("syntax", "subgraph record needs '<type> <start> <goal> <edges>'", lineno)
        ptype = tok[0]
        if ptype not in spatial.TYPE_COLOUR:
            raise GraphSpecError("colour-mismatch", f"unknown pedestrian type {ptype!r}", lineno)
        if ptype in subgraphs:
            raise GraphSpecError("syntax", f"subgraph {ptype} declared twice", lineno)
        start, goal = _int(tok[1], lineno), _int(tok[2], lineno)
        for end in (start, goal):
            if end not in seen_ids:
                raise GraphSpecError("dangling-endpoint", f"subgraph {ptype} names missing node {end}", lineno)
        idx = () if tok[3] == "-" else tuple(_int(t, lineno) for t in tok[3].split(","))
        for k in idx:
            if not 0 <= k < len(edges):
                raise GraphSpecError("dangling-endpoint", f"subgraph {ptype} names missing edge {k}", lineno)
            if edges[k].colour != spatial.TYPE_COLOUR[ptype]:
                raise GraphSpecError(
                    "colour-mismatch",
                    f"edge {k} (line {edge_lines[k]}) is {edges[k].colour}, subgraph {ptype} "
                    f"needs {spatial.TYPE_COLOUR[ptype]}", lineno)
        subgraphs[ptype] = Subgraph(idx, start, goal)
        sub_lines[ptype] = lineno

    params = None
    if body["PARAMS"]:
        known = {f.name for f in fields(RateParams)}
        values: dict[str, float] = {}
        for lineno, tok in body["PARAMS"]:
            if len(tok) != 3 or tok[1] != "=":
                raise GraphSpecError("syntax", "param record needs '<key> = <value>'", lineno)
            if tok[0] not in known:
                raise GraphSpecError("bad-param", f"unknown parameter {tok[0]!r}", lineno)
            try:
                values[tok[0]] = float(tok[2])
            except ValueError:
                raise GraphSpecError("syntax", f"expected a real, got {tok[2]!r}", lineno) from None
        try:
            params = RateParams(**values)
        except ValueError as exc:
            raise GraphSpecError("bad-param", str(exc), body["PARAMS"][0][0]) from None

    g = SpatialGraph(tuple(nodes), tuple(edges), subgraphs, connections, name=name)
    for ptype, sub in subgraphs.items():
        if sub.goal not in g.reachable(ptype, sub.start):
            raise GraphSpecError("unreachable-goal",
                                 f"goal {sub.goal} of {ptype} unreachable from {sub.start}",
                                 sub_lines[ptype])
    spatial.validate_graph(g)
    return g, params


def parse_graph_spec(text: str) -> SpatialGraph:
    return read_graph_document(text)[0]


# -- generated model ------------------------------------------------------------

@dataclass(frozen=True)
class GeneratedModel:
    text: str
    line_count: int
    movement_clauses: int
    exists_path_clauses: int
    at_goal_clauses: int
    arrival_clauses: int
    start_clauses: int


CLAUSE_MARKER = "%% CLAUSES"


def emit_model(g: SpatialGraph, params: RateParams | None = None,
               routes: Mapping[str, tuple[int, int]] | None = None) -> GeneratedModel:
    """Render the model for ``g``: topology functions, behaviours, environment, clause table.

    One movement clause is emitted per type and per admissible directed move.
    """
    params = params or RateParams()
    coords = g.node_by_id
    moves = {p: [(coords[a].coords, coords[b].coords) for a, b in g.traversals(p)]
             for p in sorted(g.subgraphs)}
    starts = {p: spatial.start_coords(g, p) for p in sorted(g.subgraphs)}
    goals = {p: spatial.goal_coords(g, p) for p in sorted(g.subgraphs)}

    out: list[str] = []
    w = out.append
    w(f"// pedestrian counter-flow model for graph {g.name or '-'}: "
      f"{len(g.nodes)} nodes, {g.connection_count} connections")
    w("enum ptype { A, B };")
    w(f"const V = {{{', '.join(f'({x},{y})' for x, y in g.coordinates)}}};")
    w("")
    w("fun bool ExistsPath(ptype P, int x, int y, int i, int j) {")
    for p, ms in moves.items():
        for (x, y), (i, j) in ms:
            w(f"    if (P == {p} && x == {x} && y == {y} && i == {i} && j == {j}) {{ return true; }}")
    w("    return false;")
    w("}")
    w("fun bool AtGoal(ptype P, int x, int y) {")
    for p, (x, y) in goals.items():
        w(f"    if (P == {p} && x == {x} && y == {y}) {{ return true; }}")
    w("    return false;")
    w("}")
    w("fun real ArrivalRate(ptype P) {")
    for p in goals:
        w(f"    if (P == {p}) {{ return {format_real(params.arrival(p))}; }}")
    w("    return 0.0;")
    w("}")
    for axis, k in (("x", 0), ("y", 1)):
        w(f"fun int Start_{axis}(ptype P) {{")
        for p, s in starts.items():
            w(f"    if (P == {p}) {{ return {s[k]}; }}")
        w("    return 0;")
        w("}")
    w("fun real MoveRate(ptype P, int x, int y, int i, int j, int A_ij, int B_ij) {")
    w(f"    if (P == A) {{ return {format_real(params.move_A)} / (B_ij + 1); }}")
    w(f"    return {format_real(params.move_B)} / (A_ij + 1);")
    w("}")
    w("")
    w("component Pedestrian(ptype P, int x, int y, real stime) {")
    w("    behaviour {")
    first = True
    for p, ms in moves.items():
        for (x, y), (i, j) in ms:
            lead = "        Ped = " if first else "            + "
            first = False
            w(f"{lead}[my.P == {p} && my.x == {x} && my.y == {y} && "
              f"ExistsPath(my.P, my.x, my.y, {i}, {j})] "
              f"move_{i}_{j}*[false]<>{{my.x := {i}, my.y := {j}}}.Ped")
    w(f"{'        Ped = ' if first else '            + '}[AtGoal(my.P, my.x, my.y)] fin*[false]<>.nil;")
    w("    }")
    w("    init { Ped }")
    w("}")
    w("component Arrival(ptype P) {")
    w("    behaviour { Arr = arrive*[false]<>.Arr; }")
    w("    init { Arr }")
    w("}")
    w("")
    w("measure average_A = global.count_A > 0 ? global.total_A / global.count_A : 0.0;")
    w("measure average_B = global.count_B > 0 ? global.total_B / global.count_B : 0.0;")
    w("")
    w("environment {")
    w("    store { int count_A := 0; int count_B := 0; real total_A := 0.0; real total_B := 0.0; }")
    w("    prob { default : 1.0; }")
    w("    weight { default : 1.0; }")
    w("    rate {")
    w("        [true] arrive* : ArrivalRate(sender.P);")
    for p, ms in moves.items():
        for (x, y), (i, j) in ms:
            rate = f"MoveRate(sender.P, sender.x, sender.y, {i}, {j}, #{{Pedestrian[A] | my.x == {i} && my.y == {j}}}, #{{Pedestrian[B] | my.x == {i} && my.y == {j}}})"
            if routes and p in routes and (x, y) == starts[p]:
                n_entry = sum(1 for s, _ in ms if s == starts[p])
                rate = f"{n_entry} * {rate}" if routes[p] == (i, j) else "0.0"
            w(f"        [sender.P == {p} && sender.x == {x} && sender.y == {y}] move_{i}_{j}* : {rate};")
    w(f"        default : {format_real(params.fast)};")
    w("    }")
    w("    update {")
    w("        arrive* : new Pedestrian(sender.P, Start_x(sender.P), Start_y(sender.P), now);")
    w("        fin* : global.count_{sender.P} := global.count_{sender.P} + 1, "
      "global.total_{sender.P} := global.total_{sender.P} + (now - sender.stime);")
    w("    }")
    w("}")
    w("")
    w("system PedAB { collective { new Arrival(A); new Arrival(B); } }")
    w("")
    w(CLAUSE_MARKER)
    for x, y in g.coordinates:
        w(f"NODE {x} {y}")
    n_exists = 0
    for p, ms in moves.items():
        for (x, y), (i, j) in ms:
            w(f"EXISTSPATH {p} {x} {y} {i} {j}")
            n_exists += 1
    for p, (x, y) in goals.items():
        w(f"ATGOAL {p} {x} {y}")
    for p, (x, y) in starts.items():
        w(f"START {p} {x} {y}")
    for p in goals:
        w(f"ARRIVALRATE {p} {format_real(params.arrival(p))}")
        w(f"MOVEBASE {p} {format_real(params.move(p))}")
    w(f"FAST {format_real(params.fast)}")
    for p in sorted(routes or {}):
        w(f"ROUTE {p} {routes[p][0]} {routes[p][1]}")
    n_moves = 0
    for p, ms in moves.items():
        for (x, y), (i, j) in ms:
            w(f"MOVE {p} {x} {y} {i} {j}")
            n_moves += 1
    for p in goals:
        w(f"FIN {p}")
        w(f"ARRIVE {p}")
    text = "\n".join(out) + "\n"
    return GeneratedModel(text, len(out), n_moves, n_exists, len(goals), len(goals), 2 * len(starts))


class TableTopology:
    """Topology functions answered from an emitted clause table."""

    def __init__(self, coordinates, exists, goals, starts):
        self.coordinates = tuple(coordinates)
        self._exists = frozenset(exists)
        self._goals = dict(goals)
        self._starts = dict(starts)
        self._nodes = frozenset(self.coordinates)

    def exists_path(self, ptype, x, y, i, j):
        if (x, y) not in self._nodes:
            raise ModelDefinitionError(f"({x}, {y}) is not a node of the graph")
        return (ptype, x, y, i, j) in self._exists

    def at_goal(self, ptype, x, y):
        if (x, y) not in self._nodes:
            raise ModelDefinitionError(f"({x}, {y}) is not a node of the graph")
        return self._goals[ptype] == (x, y)

    def start(self, ptype):
        return self._starts[ptype]


def load_model(text: str) -> PedestrianModel:
    """Build a runnable model from the clause table of a ``.cbmodel`` file.

    The behaviour is assembled from the per-edge movement clauses, not from
    the node-set summation used for in-memory models.
    """
    try:
        table = text[text.index(CLAUSE_MARKER) + len(CLAUSE_MARKER):]
    except ValueError:
        raise ModelDefinitionError(f"no '{CLAUSE_MARKER}' section in model text") from None
    nodes, exists, moves, fins, arrivals = [], [], [], [], []
    goals, starts, routes = {}, {}, {}
    rates: dict[str, float] = {}
    for raw in table.split("\n"):
        tok = raw.split()
        if not tok:
            continue
        head, args = tok[0], tok[1:]
        try:
            if head == "NODE":
                nodes.append((int(args[0]), int(args[1])))
            elif head == "EXISTSPATH":
                exists.append((args[0], *map(int, args[1:5])))
            elif head == "MOVE":
                moves.append((args[0], *map(int, args[1:5])))
            elif head == "ATGOAL":
                goals[args[0]] = (int(args[1]), int(args[2]))
            elif head == "START":
                starts[args[0]] = (int(args[1]), int(args[2]))
            elif head == "ARRIVALRATE":
                rates[f"arr_{args[0]}"] = float(args[1])
            elif head == "MOVEBASE":
                rates[f"move_{args[0]}"] = float(args[1])
            elif head == "FAST":
                rates["fast"] = float(args[0])
            elif head == "ROUTE":
                routes[args[0]] = (int(args[1]), int(args[2]))
            elif head == "FIN":
                fins.append(args[0])
            elif head == "ARRIVE":
                arrivals.append(args[0])
            else:
                raise ModelDefinitionError(f"unknown clause {head!r}")
        except (IndexError, ValueError) as exc:
            raise ModelDefinitionError(f"malformed clause {raw!r}: {exc}") from None
    if set(fins) != set(spatial.TYPES) or set(arrivals) != set(spatial.TYPES):
        raise ModelDefinitionError("model must declare fin and arrive for both types")

    p, x, y = Attr("P"), Attr("x"), Attr("y")
    summands: list[Process] = []
    for ptype, x0, y0, i, j in moves:
        guard = And((Eq(p, Const(ptype)), Eq(x, Const(x0)), Eq(y, Const(y0)),
                     Call("ExistsPath", (p, x, y, Const(i), Const(j)))))
        summands.append(Guard(guard, move_prefix(i, j)))
    summands.append(fin_summand())
    definitions = {"Ped": Choice(tuple(summands)), "Arr": Prefix("arrive", ProcConst("Arr"))}
    topology = TableTopology(nodes, exists, goals, starts)
    return PedestrianModel(topology, RateParams(**rates), definitions, routes=routes or None)
