"""Command-line harness.

    pedflow generate --width W --height H [--out FILE.cbgraph]
    pedflow table --width 3 --height 3
    pedflow simulate (--graph FILE | --width W --height H) --scenario TAG [...]
    pedflow experiment --out DIR [--replications N] [--stop-time T] [--seed S]

Exit codes: 0 success, 2 argument error, 3 input-file error, 4 invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from pathlib import Path

from .codegen import emit_graph_spec, emit_model, loc_estimate, read_graph_document
from .engine import RunConfig
from .errors import GraphSpecError, InvariantViolation, ModelDefinitionError
from .experiment import (
    STUDY_STRUCTURES,
    MEASURES,
    SCENARIOS,
    check_claims,
    run_experiment,
    scenario,
    simulate_ensemble,
    structure_label,
)
from .spatial import RateParams, generate_crossbar
from .stats import SummaryStats

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_INVARIANT = 4

DEFAULT_SEED = 2016

SIMULATE_COLUMNS = ["kind", "time", "n"] + [f"{m}_{s}" for m in MEASURES for s in ("mean", "half_width")]
RESULT_COLUMNS = ["structure", "width", "height", "scenario", "n", "mean", "variance", "half_width"]


class UsageError(Exception):
    pass


def _num(v: float) -> str:
    return repr(float(v))


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _positive_real(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"expected a positive finite number, got {text}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}") from None
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be in [0, 2**64)")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pedflow", description="Cross-bar pedestrian counter-flow simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="build a cross-bar network and print 'nodes connections loc'")
    gen.add_argument("--width", type=_positive_int, required=True)
    gen.add_argument("--height", type=_positive_int, required=True)
    gen.add_argument("--out", type=Path, help="write the .cbgraph here (and the .cbmodel beside it)")

    tab = sub.add_parser("table", help="nodes, connections and line counts for every W x H up to a bound")
    tab.add_argument("--width", type=_positive_int, default=3, help="largest width (default 3)")
    tab.add_argument("--height", type=_positive_int, default=3, help="largest height (default 3)")

    sim = sub.add_parser("simulate", help="replicate one scenario and write per-sample statistics as CSV")
    src = sim.add_mutually_exclusive_group()
    src.add_argument("--graph", type=Path, help="a .cbgraph file")
    sim.add_argument("--width", type=_positive_int)
    sim.add_argument("--height", type=_positive_int)
    sim.add_argument("--scenario", choices=SCENARIOS, default="no-routing")
    sim.add_argument("--stop-time", type=_positive_real, default=200.0)
    sim.add_argument("--sample-interval", type=_positive_real, default=1.0)
    sim.add_argument("--replications", type=_positive_int, default=10)
    sim.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
    sim.add_argument("--out", type=Path, help="CSV destination (default stdout)")
    sim.add_argument("--event-log", type=Path, help="dump the events of replication 0 here")

    exp = sub.add_parser("experiment", help="the 4 structures x 3 scenarios travel-time study")
    exp.add_argument("--stop-time", type=_positive_real, default=200.0)
    exp.add_argument("--replications", type=_positive_int, default=100)
    exp.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
    exp.add_argument("--out", type=Path, required=True, help="output directory")
    return parser


def cmd_generate(args, out) -> int:
    try:
        g = generate_crossbar(args.width, args.height)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.out is not None:
        params = RateParams()
        args.out.write_text(emit_graph_spec(g, params), encoding="utf-8")
        args.out.with_suffix(".cbmodel").write_text(emit_model(g, params).text, encoding="utf-8")
    print(f"{len(g.nodes)} {g.connection_count} {loc_estimate(g)}", file=out)
    return EXIT_OK


def table_rows(max_width: int, max_height: int) -> list[tuple[str, int, int, int]]:
    rows = []
    for h in range(1, max_height + 1):
        for w in range(1, max_width + 1):
            g = generate_crossbar(w, h)
            rows.append((structure_label(w, h), len(g.nodes), g.connection_count, loc_estimate(g)))
    return rows


def cmd_table(args, out) -> int:
    print("Model\tNodes\tConnections\tLoC", file=out)
    for row in table_rows(args.width, args.height):
        print("\t".join(str(v) for v in row), file=out)
    return EXIT_OK


def _load_graph(args):
    if args.graph is not None:
        if args.width is not None or args.height is not None:
            raise UsageError("--graph cannot be combined with --width/--height")
        try:
            text = args.graph.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise GraphSpecError("syntax", f"cannot read {args.graph}: {exc}") from None
        g, params = read_graph_document(text)
        return g, params or RateParams()
    if args.width is None or args.height is None:
        raise UsageError("simulate needs --graph or both --width and --height")
    return generate_crossbar(args.width, args.height), RateParams()


def _stat_cells(s: SummaryStats) -> list[str]:
    return [_num(s.mean), _num(s.half_width)]


def simulate_csv(graph, params, tag: str, cfg: RunConfig, replications: int,
                 event_log: list | None = None) -> str:
    """CSV text: one ``sample`` row per sample time and a closing ``summary`` row.

    The summary row holds the final average_A/average_B statistics; its
    count and live columns repeat the last sample.
    """
    model = scenario(tag).model(graph, params)
    ens = simulate_ensemble(model, cfg, replications, event_log)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SIMULATE_COLUMNS)
    for t, stats in zip(ens.times, ens.per_time):
        row = ["sample", _num(t), str(replications)]
        for m in MEASURES:
            row += _stat_cells(stats[m])
        writer.writerow(row)
    last = ens.per_time[-1]
    row = ["summary", _num(ens.times[-1]), str(replications)]
    for m in MEASURES:
        if m == "average_A":
            row += _stat_cells(ens.final_average["A"])
        elif m == "average_B":
            row += _stat_cells(ens.final_average["B"])
        else:
            row += _stat_cells(last[m])
    writer.writerow(row)
    return buf.getvalue()


def cmd_simulate(args, out) -> int:
    graph, params = _load_graph(args)
    cfg = RunConfig(args.stop_time, args.sample_interval, args.seed, args.scenario)
    try:
        cfg.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    events: list | None = [] if args.event_log is not None else None
    text = simulate_csv(graph, params, args.scenario, cfg, args.replications, events)
    if args.out is None:
        out.write(text)
    else:
        args.out.write_text(text, encoding="utf-8")
    if events is not None:
        args.event_log.write_text("".join(e.to_line() + "\n" for e in events), encoding="utf-8")
    return EXIT_OK


def experiment_outputs(cells, claims) -> dict[str, str]:
    """File name -> content for results.csv, the grouped-bar travel_times.dat and verdicts.txt."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULT_COLUMNS)
    for c in cells:
        s = c.stats
        writer.writerow([c.structure, c.width, c.height, c.scenario, s.n,
                         _num(s.mean), _num(s.variance), _num(s.half_width)])
    table = {(c.structure, c.scenario): c.stats for c in cells}
    structures = list(dict.fromkeys(c.structure for c in cells))
    tags = list(dict.fromkeys(c.scenario for c in cells))
    dat = ["# structure " + " ".join(f"{t}_mean {t}_half_width" for t in tags)]
    for s in structures:
        vals = []
        for t in tags:
            st = table.get((s, t))
            vals += ["NaN", "NaN"] if st is None else [_num(st.mean), _num(st.half_width)]
        dat.append(" ".join([s] + vals))
    verdicts = [f"{'PASS' if c.passed else 'FAIL'}\t{c.name}\t{c.detail}" for c in claims]
    return {"results.csv": buf.getvalue(), "travel_times.dat": "\n".join(dat) + "\n",
            "verdicts.txt": "\n".join(verdicts) + "\n"}


def cmd_experiment(args, out) -> int:
    cfg = RunConfig(stop_time=args.stop_time, seed=args.seed)
    cells = run_experiment(cfg, args.replications, STUDY_STRUCTURES, SCENARIOS)
    claims = check_claims(cells)
    files = experiment_outputs(cells, claims)
    args.out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (args.out / name).write_text(text, encoding="utf-8")
    out.write(files["verdicts.txt"])
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "table": cmd_table, "simulate": cmd_simulate,
            "experiment": cmd_experiment}


def main(argv: list[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"pedflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GraphSpecError as exc:
        print(f"pedflow: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InvariantViolation, ModelDefinitionError) as exc:
        print(f"pedflow: invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
