"""Scenario suites over cross-bar structures and the ordering claims checked against them.

Structure labels are ``<height>x<width>``, matching the reference line-count
table (``1x2`` is one cross-bar high and two wide).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .engine import MeasureSample, RunConfig, derive_seed, run
from .model import PedestrianModel
from .spatial import RateParams, SpatialGraph, generate_crossbar, routing_entries
from .stats import SummaryStats, Verdict, aggregate, average_traversal, compare_means

SCENARIOS = ("no-congestion", "routing", "no-routing")
STUDY_STRUCTURES = ((1, 1), (2, 1), (1, 2), (2, 2))  # (width, height)
MEASURES = ("average_A", "average_B", "count_A", "count_B", "live_A", "live_B")


def structure_label(width: int, height: int) -> str:
    return f"{height}x{width}"


@dataclass(frozen=True)
class Scenario:
    """Arrival overrides and entry routing of one experimental condition."""

    tag: str
    arrivals: Mapping[str, float] = field(default_factory=dict)
    routed: bool = False

    def model(self, graph: SpatialGraph, params: RateParams) -> PedestrianModel:
        if self.arrivals:
            params = replace(params, **{f"arr_{p}": r for p, r in self.arrivals.items()})
        routes = routing_entries(graph) if self.routed else None
        return PedestrianModel.from_graph(graph, params, routes=routes)


def scenario(tag: str, only: str = "A") -> Scenario:
    """``no-congestion`` keeps a single type (``only``) arriving."""
    if tag == "no-congestion":
        return Scenario(tag, {"B" if only == "A" else "A": 0.0})
    if tag == "routing":
        return Scenario(tag, routed=True)
    if tag == "no-routing":
        return Scenario(tag)
    raise ValueError(f"unknown scenario {tag!r}; expected one of {', '.join(SCENARIOS)}")


def replication_config(cfg: RunConfig, index: int, sub: int = 0) -> RunConfig:
    seed = derive_seed(cfg.seed, index)
    if sub:
        seed = derive_seed(seed, sub)
    return RunConfig(cfg.stop_time, cfg.sample_interval, seed, cfg.scenario)


@dataclass
class Ensemble:
    """Replication-aggregated measures of one model."""

    times: list[float]
    per_time: list[dict[str, SummaryStats]]
    final_average: dict[str, SummaryStats]
    replications: int


def simulate_ensemble(model: PedestrianModel, cfg: RunConfig, replications: int,
                      event_log: list | None = None) -> Ensemble:
    """Aggregate ``replications`` runs; ``event_log`` receives the events of replication 0."""
    if replications < 1:
        raise ValueError("replications must be at least 1")
    runs = [run(model, replication_config(cfg, i), event_log if i == 0 else None)
            for i in range(replications)]
    times = [s.time for s in runs[0].samples]
    per_time = []
    for k in range(len(times)):
        column: list[MeasureSample] = [r.samples[k] for r in runs]
        per_time.append({m: aggregate(float(getattr(s, m)) for s in column) for m in MEASURES})
    final = {p: aggregate(average_traversal(r.final, p) for r in runs) for p in ("A", "B")}
    return Ensemble(times, per_time, final, replications)


def _mean_over_types(store, types: Iterable[str]) -> float:
    vals = [average_traversal(store, p) for p in types if store.count(p) > 0]
    return math.fsum(vals) / len(vals) if vals else 0.0


def cell_values(graph: SpatialGraph, tag: str, cfg: RunConfig, replications: int,
                params: RateParams | None = None) -> list[float]:
    """Per-replication travel time averaged over both pedestrian types.

    The congestion-free baseline runs an A-only and a B-only model per
    replication and averages their traversal times.
    """
    params = params or RateParams()
    values = []
    if tag == "no-congestion":
        model_a = scenario(tag, "A").model(graph, params)
        model_b = scenario(tag, "B").model(graph, params)
        for i in range(replications):
            ra = run(model_a, replication_config(cfg, i))
            rb = run(model_b, replication_config(cfg, i, 1))
            values.append(_mean_over_types(ra.final, "A") / 2 + _mean_over_types(rb.final, "B") / 2)
    else:
        model = scenario(tag).model(graph, params)
        for i in range(replications):
            r = run(model, replication_config(cfg, i))
            values.append(_mean_over_types(r.final, ("A", "B")))
    return values


@dataclass(frozen=True)
class Cell:
    width: int
    height: int
    scenario: str
    stats: SummaryStats

    @property
    def structure(self) -> str:
        return structure_label(self.width, self.height)


@dataclass(frozen=True)
class Claim:
    name: str
    passed: bool
    detail: str


def run_experiment(cfg: RunConfig, replications: int,
                   structures: Sequence[tuple[int, int]] = STUDY_STRUCTURES,
                   scenarios: Sequence[str] = SCENARIOS,
                   params: RateParams | None = None, progress=None) -> list[Cell]:
    cells = []
    for width, height in structures:
        graph = generate_crossbar(width, height)
        for tag in scenarios:
            values = cell_values(graph, tag, cfg, replications, params)
            cells.append(Cell(width, height, tag, aggregate(values)))
            if progress is not None:
                progress(cells[-1])
    return cells


def check_claims(cells: Sequence[Cell], alpha: float = 0.05) -> list[Claim]:
    """Orderings read off the travel-time results, one verdict each.

    * per structure: no-congestion < routing < no-routing (Welch, ``alpha``);
    * taller beats shorter at equal width under both congestion scenarios;
    * the routing benefit (no-routing minus routing mean) of each height-1
      structure exceeds that of every height-2 structure.
    """
    table = {(c.structure, c.scenario): c.stats for c in cells}
    structures = sorted({c.structure for c in cells})
    claims: list[Claim] = []

    def ordered(lo: SummaryStats, hi: SummaryStats, name: str) -> None:
        v: Verdict = compare_means(lo, hi, alpha)
        claims.append(Claim(name, v.relation == "<",
                            f"{lo.mean:.4f} vs {hi.mean:.4f}, Welch {v}"))

    for s in structures:
        if (s, "no-congestion") in table and (s, "routing") in table:
            ordered(table[s, "no-congestion"], table[s, "routing"], f"{s}: no-congestion < routing")
        if (s, "routing") in table and (s, "no-routing") in table:
            ordered(table[s, "routing"], table[s, "no-routing"], f"{s}: routing < no-routing")
    for tall, short in (("2x1", "1x1"), ("2x2", "1x2")):
        for tag in ("routing", "no-routing"):
            if (tall, tag) in table and (short, tag) in table:
                ordered(table[tall, tag], table[short, tag], f"{tag}: {tall} < {short}")
    gaps = {s: table[s, "no-routing"].mean - table[s, "routing"].mean
            for s in structures if (s, "routing") in table and (s, "no-routing") in table}
    narrow = [s for s in ("1x1", "1x2") if s in gaps]
    wide = [s for s in ("2x1", "2x2") if s in gaps]
    if narrow and wide:
        lo = min(gaps[s] for s in narrow)
        hi = max(gaps[s] for s in wide)
        detail = ", ".join(f"{s}={gaps[s]:.4f}" for s in narrow + wide)
        claims.append(Claim("routing gap: height 1 > height 2", lo > hi, detail))
    return claims
