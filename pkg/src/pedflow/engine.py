"""Kinetic Monte-Carlo (exact SSA) execution of a :class:`~pedflow.model.PedestrianModel`."""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

import numpy as np

from .errors import InvariantViolation
from .kernel import ActionInstance, Component, Kill, apply_local_update
from .model import PEDESTRIAN, GlobalStore, PedestrianModel
from .spatial import RateParams, SpatialGraph
from .stats import average_traversal

EventCandidate = ActionInstance

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Seed of replication ``index``: ``splitmix64(splitmix64(seed) ^ index)``."""
    return splitmix64(splitmix64(seed & MASK64) ^ (index & MASK64))


@dataclass(frozen=True)
class RunConfig:
    stop_time: float = 200.0
    sample_interval: float = 1.0
    seed: int = 0
    scenario: str = "no-routing"

    def validate(self) -> None:
        if not (self.stop_time > 0 and math.isfinite(self.stop_time)):
            raise ValueError(f"stop_time must be positive and finite, got {self.stop_time}")
        if not (self.sample_interval > 0 and math.isfinite(self.sample_interval)):
            raise ValueError(f"sample_interval must be positive, got {self.sample_interval}")
        if not 0 <= self.seed <= MASK64:
            raise ValueError("seed must fit in 64 bits")

    def sample_times(self) -> list[float]:
        n = int(math.floor(self.stop_time / self.sample_interval + 1e-9))
        return [k * self.sample_interval for k in range(n + 1)]


@dataclass(frozen=True)
class EventRecord:
    time: float
    action: str
    component_id: int
    ptype: str
    src: tuple[int, int] | None = None
    dst: tuple[int, int] | None = None

    def to_line(self) -> str:
        def node(v):
            return "-" if v is None else f"{v[0]},{v[1]}"
        return "\t".join((repr(self.time), self.action, str(self.component_id), self.ptype,
                          node(self.src), node(self.dst)))

    @classmethod
    def from_line(cls, line: str) -> EventRecord:
        t, action, cid, ptype, src, dst = line.rstrip("\n").split("\t")

        def node(v):
            if v == "-":
                return None
            a, b = v.split(",")
            return (int(a), int(b))
        return cls(float(t), action, int(cid), ptype, node(src), node(dst))


@dataclass(frozen=True)
class MeasureSample:
    time: float
    average_A: float
    average_B: float
    count_A: int
    count_B: int
    live_A: int
    live_B: int


class _RecordingView:
    """Read view that remembers which nodes a rate function inspected."""

    __slots__ = ("state", "nodes")

    def __init__(self, state: SimulationState):
        self.state = state
        self.nodes: set[tuple[str, int, int]] = set()

    def count_at(self, ptype: str, i: int, j: int) -> int:
        key = (ptype, i, j)
        self.nodes.add(key)
        return self.state.occupancy.get(key, 0)


class SimulationState:
    """Clock, collective, global store and random stream of one run.

    Keeps an occupancy index ``(type, x, y) -> count`` so congestion counts
    are O(1); :func:`pedflow.spatial.count_at` is the reference it must agree
    with.

    With ``incremental=True`` each component's priced candidates are cached
    and recomputed only when its own store changes or when the occupancy of
    a ``(type, node)`` count its rates read changes.  The flattened candidate list is the same
    as full recomputation, so both modes draw identical trajectories.
    """

    def __init__(self, model: PedestrianModel, seed: int, incremental: bool = True):
        self.model = model
        self.now = 0.0
        self.collective: dict[int, Component] = {}
        self.global_store = GlobalStore()
        self.rng = random.Random(seed)
        self.next_id = 0
        self.occupancy: Counter = Counter()
        self.live: Counter = Counter()
        self.incremental = incremental
        self._cache: dict[int, list[EventCandidate]] = {}
        self._reads: dict[int, set[tuple[str, int, int]]] = {}
        self._watchers: dict[tuple[str, int, int], set[int]] = {}
        self._dirty: set[int] = set()
        self._touched: set[tuple[str, int, int]] = set()
        for kind, store in model.initial_collective():
            self.spawn(kind, store)

    def count_at(self, ptype: str, i: int, j: int) -> int:
        return self.occupancy.get((ptype, i, j), 0)

    def _occupy(self, ptype: str, x: int, y: int, delta: int) -> None:
        key = (ptype, x, y)
        n = self.occupancy[key] + delta
        if n:
            self.occupancy[key] = n
        else:
            del self.occupancy[key]
        self._touched.add(key)

    def spawn(self, kind: str, store: Mapping[str, Any]) -> Component:
        c = self.model.kernel.new_component(self.next_id, kind, store)
        self.next_id += 1
        self.collective[c.id] = c
        self._dirty.add(c.id)
        if kind == PEDESTRIAN:
            s = c.store
            self._occupy(s["P"], s["x"], s["y"], 1)
            self.live[s["P"]] += 1
        return c

    def remove(self, cid: int) -> None:
        c = self.collective.pop(cid)
        self._forget(cid)
        self._dirty.discard(cid)
        if c.kind == PEDESTRIAN:
            s = c.store
            self._occupy(s["P"], s["x"], s["y"], -1)
            self.live[s["P"]] -= 1

    def replace(self, new: Component) -> None:
        old = self.collective[new.id]
        if new.kind == PEDESTRIAN:
            o, s = old.store, new.store
            if (o["x"], o["y"]) != (s["x"], s["y"]):
                self._occupy(o["P"], o["x"], o["y"], -1)
                self._occupy(s["P"], s["x"], s["y"], 1)
        self.collective[new.id] = new
        self._dirty.add(new.id)

    def _forget(self, cid: int) -> None:
        self._cache.pop(cid, None)
        for node in self._reads.pop(cid, ()):
            watchers = self._watchers.get(node)
            if watchers is not None:
                watchers.discard(cid)

    def refresh(self) -> None:
        """Reprice every component whose cached candidates may be stale."""
        dirty = self._dirty
        for node in self._touched:
            watchers = self._watchers.get(node)
            if watchers:
                dirty |= watchers
        self._touched.clear()
        kernel = self.model.kernel
        for cid in dirty:
            self._forget(cid)
            view = _RecordingView(self)
            self._cache[cid] = _positive(kernel.enabled_actions(self.collective[cid], view))
            self._reads[cid] = view.nodes
            for node in view.nodes:
                self._watchers.setdefault(node, set()).add(cid)
        dirty.clear()

    def sample(self, time: float) -> MeasureSample:
        g = self.global_store
        return MeasureSample(time, average_traversal(g, "A"), average_traversal(g, "B"),
                             g.count_A, g.count_B, self.live["A"], self.live["B"])


def _positive(actions: list[EventCandidate]) -> list[EventCandidate]:
    out = []
    for a in actions:
        r = a.rate
        if r > 0.0:
            if not math.isfinite(r):
                raise InvariantViolation(f"non-finite rate {r} for {a.label}")
            out.append(a)
    return out


def collect_candidates(state: SimulationState) -> list[EventCandidate]:
    """Enabled actions with positive rate, ordered by component id then action label."""
    if state.incremental:
        state.refresh()
        cache = state._cache
        out = []
        for cid in state.collective:
            out.extend(cache[cid])
        return out
    kernel = state.model.kernel
    out = []
    for c in state.collective.values():
        out.extend(_positive(kernel.enabled_actions(c, state)))
    return out


def draw_event(state: SimulationState, candidates: list[EventCandidate]
               ) -> tuple[float, EventCandidate]:
    """Exponential holding time at the total rate and a rate-proportional choice."""
    total = math.fsum(c.rate for c in candidates)
    rng = state.rng
    u = 1.0 - rng.random()  # (0, 1]
    while u == 1.0:
        u = 1.0 - rng.random()
    dt = -math.log(u) / total
    target = rng.random() * total
    acc = 0.0
    for cand in candidates:
        acc += cand.rate
        if target < acc:
            return dt, cand
    return dt, candidates[-1]


def fire(state: SimulationState, cand: EventCandidate, time: float) -> EventRecord:
    """Apply the local update and then the environment update of ``cand`` at ``time``."""
    if not time > state.now:
        raise InvariantViolation(f"clock did not advance: {state.now} -> {time}")
    kernel = state.model.kernel
    sender = state.collective[cand.component_id]
    if kernel.receivers(sender, cand, state.collective):
        raise InvariantViolation(f"broadcast {cand.label} found receivers but no input is modelled")
    state.now = time
    moved = apply_local_update(sender, cand.update, cand.continuation)
    effect = kernel.environment.update(state.global_store, sender.store, cand.name, cand.params, time)
    state.global_store = effect.global_store
    state.replace(moved)
    if effect.remove_sender or isinstance(moved.process, Kill):
        state.remove(moved.id)
    spawned = [state.spawn(kind, store) for kind, store in effect.spawns]

    ptype = sender.store["P"]
    here = (sender.store["x"], sender.store["y"]) if sender.kind == PEDESTRIAN else None
    if cand.name == "arrive":
        s = spawned[0].store
        return EventRecord(time, cand.label, spawned[0].id, ptype, None, (s["x"], s["y"]))
    if cand.name == "move":
        return EventRecord(time, cand.label, sender.id, ptype, here,
                           (moved.store["x"], moved.store["y"]))
    return EventRecord(time, cand.label, sender.id, ptype, here, None)


def step(state: SimulationState) -> EventRecord | None:
    """Fire exactly one event; ``None`` when nothing is enabled (deadlock)."""
    candidates = collect_candidates(state)
    if not candidates:
        return None
    dt, cand = draw_event(state, candidates)
    return fire(state, cand, state.now + dt)


@dataclass
class RunResult:
    samples: list[MeasureSample]
    final: GlobalStore
    events: int
    deadlocked: bool = False
    live: dict[str, int] = field(default_factory=dict)


def run(model: PedestrianModel, cfg: RunConfig, event_log: list[EventRecord] | None = None,
        incremental: bool = True) -> RunResult:
    """Simulate until the next event would pass ``cfg.stop_time``.

    Each sample carries the state left by the last event at or before its
    grid time.
    """
    cfg.validate()
    state = SimulationState(model, cfg.seed, incremental)
    grid = cfg.sample_times()
    samples: list[MeasureSample] = []
    k = 0
    events = 0
    deadlocked = False
    while True:
        candidates = collect_candidates(state)
        if not candidates:
            deadlocked = True
            break
        dt, cand = draw_event(state, candidates)
        t = state.now + dt
        while k < len(grid) and grid[k] < t:
            samples.append(state.sample(grid[k]))
            k += 1
        if t > cfg.stop_time:
            break
        rec = fire(state, cand, t)
        events += 1
        if event_log is not None:
            event_log.append(rec)
    while k < len(grid):
        samples.append(state.sample(grid[k]))
        k += 1
    return RunResult(samples, state.global_store, events, deadlocked, dict(state.live))


def run_to_completion(model: PedestrianModel, seed: int, max_events: int = 10_000_000,
                      event_log: list[EventRecord] | None = None) -> SimulationState:
    """Step until no action is enabled; for models with arrivals switched off."""
    state = SimulationState(model, seed)
    for _ in range(max_events):
        rec = step(state)
        if rec is None:
            return state
        if event_log is not None:
            event_log.append(rec)
    raise InvariantViolation(f"no deadlock after {max_events} events")


def replicate(model: PedestrianModel, cfg: RunConfig, replications: int) -> list[RunResult]:
    """Independent runs with seeds ``derive_seed(cfg.seed, i)``, in replication order."""
    if replications < 1:
        raise ValueError("replications must be >= 1")
    return [run(model, RunConfig(cfg.stop_time, cfg.sample_interval,
                                 derive_seed(cfg.seed, i), cfg.scenario))
            for i in range(replications)]


def expected_first_passage(g: SpatialGraph, ptype: str, params: RateParams | None = None) -> float:
    """Mean traversal time of a lone pedestrian, by a dense linear solve.

    With every move at the constant rate ``move_P``, the expected hitting times
    satisfy ``R_v m_v - sum_w r_vw m_w = 1`` on transient nodes and
    ``m_goal = 0``.  The fin delay ``1 / fast`` is added on top.
    """
    params = params or RateParams()
    sub = g.subgraphs[ptype]
    nodes = sorted(g.reachable(ptype, sub.start))
    if sub.goal not in nodes:
        raise ValueError(f"goal of {ptype} is unreachable")
    transient = [v for v in nodes if v != sub.goal]
    index = {v: k for k, v in enumerate(transient)}
    rate = params.move(ptype)
    a = np.zeros((len(transient), len(transient)))
    b = np.ones(len(transient))
    for v in transient:
        succ = g.successors(ptype, v)
        a[index[v], index[v]] = rate * len(succ)
        for w in succ:
            if w != sub.goal:
                a[index[v], index[w]] -= rate
    m = np.linalg.solve(a, b)
    return float(m[index[sub.start]]) + 1.0 / params.fast


def completion_times(events: Iterable[EventRecord]) -> dict[str, list[float]]:
    """Per-type traversal durations recomputed from an event log."""
    born: dict[int, float] = {}
    out: dict[str, list[float]] = {"A": [], "B": []}
    for e in events:
        if e.action == "arrive":
            born[e.component_id] = e.time
        elif e.action == "fin":
            out[e.ptype].append(e.time - born.get(e.component_id, 0.0))
    return out
