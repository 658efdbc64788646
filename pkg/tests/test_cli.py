import csv
import io
import subprocess
import sys

import pytest

from pedflow import cli
from pedflow.engine import EventRecord, expected_first_passage
from pedflow.spatial import generate_crossbar


def call(*argv):
    out = io.StringIO()
    code = cli.main(list(argv), out=out)
    return code, out.getvalue()


def test_generate_prints_triple():
    assert call("generate", "--width", "1", "--height", "1") == (0, "6 8 208\n")
    assert call("generate", "--width", "3", "--height", "2") == (0, "14 27 398\n")
    assert call("generate", "--width", "2", "--height", "3") == (0, "14 28 408\n")


def test_generate_writes_files(tmp_path):
    path = tmp_path / "net.cbgraph"
    assert call("generate", "--width", "2", "--height", "2", "--out", str(path))[0] == 0
    assert path.read_text().rstrip().endswith("CONNECTIONS 20")
    assert "%% CLAUSES" in path.with_suffix(".cbmodel").read_text()


@pytest.mark.parametrize("argv", [["generate", "--width", "0", "--height", "1"],
                                  ["generate", "--width", "x", "--height", "1"],
                                  ["simulate", "--width", "1", "--height", "1", "--scenario", "bogus"],
                                  ["simulate", "--width", "1"],
                                  ["frobnicate"]])
def test_argument_errors_exit_2(argv):
    assert call(*argv)[0] == 2


def test_table_full():
    code, text = call("table", "--width", "3", "--height", "3")
    assert code == 0
    assert text == (
        "Model\tNodes\tConnections\tLoC\n"
        "1x1\t6\t8\t208\n1x2\t8\t12\t248\n1x3\t10\t16\t288\n"
        "2x1\t8\t13\t258\n2x2\t11\t20\t328\n2x3\t14\t27\t398\n"
        "3x1\t10\t18\t308\n3x2\t14\t28\t408\n3x3\t18\t38\t508\n")


def test_table_single_row_and_monotone():
    assert call("table", "--width", "1", "--height", "1")[1].splitlines()[1:] == ["1x1\t6\t8\t208"]
    rows = call("table", "--width", "5", "--height", "5")[1].splitlines()[1:]
    loc = {tuple(map(int, r.split()[0].split("x"))): int(r.split()[3]) for r in rows}
    for (h, w), v in loc.items():
        if (h + 1, w) in loc:
            assert loc[h + 1, w] > v
        if (h, w + 1) in loc:
            assert loc[h, w + 1] > v


def _simulate(tmp_path, name, *extra):
    out, log = tmp_path / f"{name}.csv", tmp_path / f"{name}.tsv"
    code, _ = call("simulate", "--out", str(out), "--event-log", str(log), *extra)
    assert code == 0
    return out.read_bytes(), log.read_bytes()


def test_simulate_deterministic(tmp_path):
    args = ["--width", "2", "--height", "1", "--scenario", "routing", "--stop-time", "20",
            "--replications", "3", "--seed", "42"]
    assert _simulate(tmp_path, "a", *args) == _simulate(tmp_path, "b", *args)


def test_simulate_csv_schema(tmp_path):
    data, log = _simulate(tmp_path, "s", "--width", "1", "--height", "1", "--stop-time", "10",
                          "--replications", "2")
    rows = list(csv.DictReader(io.StringIO(data.decode())))
    assert list(rows[0]) == cli.SIMULATE_COLUMNS
    assert [r["kind"] for r in rows] == ["sample"] * 11 + ["summary"]
    for line in log.decode().splitlines():
        EventRecord.from_line(line)


def test_no_congestion_has_no_b(tmp_path):
    data, _ = _simulate(tmp_path, "nc", "--width", "1", "--height", "1", "--scenario",
                        "no-congestion", "--stop-time", "30", "--replications", "3")
    rows = list(csv.DictReader(io.StringIO(data.decode())))
    assert all(float(r["count_B_mean"]) == 0.0 for r in rows)


def test_no_congestion_summary_matches_oracle(tmp_path):
    data, _ = _simulate(tmp_path, "o", "--width", "1", "--height", "1", "--scenario",
                        "no-congestion", "--replications", "20", "--seed", "5")
    summary = list(csv.DictReader(io.StringIO(data.decode())))[-1]
    oracle = expected_first_passage(generate_crossbar(1, 1), "A")
    mean, hw = float(summary["average_A_mean"]), float(summary["average_A_half_width"])
    assert abs(mean - oracle) <= hw


def test_graph_file_input(tmp_path):
    path = tmp_path / "g.cbgraph"
    call("generate", "--width", "1", "--height", "1", "--out", str(path))
    a = _simulate(tmp_path, "f", "--graph", str(path), "--stop-time", "10", "--replications", "2")
    b = _simulate(tmp_path, "w", "--width", "1", "--height", "1", "--stop-time", "10",
                  "--replications", "2")
    assert a == b


def test_input_file_errors_exit_3(tmp_path):
    assert call("simulate", "--graph", str(tmp_path / "missing.cbgraph"))[0] == 3
    bad = tmp_path / "bad.cbgraph"
    bad.write_text("CBGRAPH 1 x\nNODES\n0 0 0\nEDGES\n0 7 Red 0\n")
    assert call("simulate", "--graph", str(bad))[0] == 3


def test_invariant_violation_exit_4(monkeypatch):
    from pedflow.errors import InvariantViolation

    def boom(*a, **k):
        raise InvariantViolation("clock went backwards")
    monkeypatch.setattr(cli, "simulate_csv", boom)
    assert call("simulate", "--width", "1", "--height", "1")[0] == 4


def test_experiment_outputs(tmp_path):
    code, text = call("experiment", "--out", str(tmp_path), "--replications", "2",
                      "--stop-time", "15")
    assert code == 0
    rows = list(csv.DictReader(open(tmp_path / "results.csv")))
    assert len(rows) == 12 and list(rows[0]) == cli.RESULT_COLUMNS
    dat = (tmp_path / "travel_times.dat").read_text().splitlines()
    assert dat[0].startswith("#") and [l.split()[0] for l in dat[1:]] == ["1x1", "1x2", "2x1", "2x2"]
    verdicts = (tmp_path / "verdicts.txt").read_text().splitlines()
    assert len(verdicts) == 13 and all(v.split("\t")[0] in ("PASS", "FAIL") for v in verdicts)
    assert text.splitlines() == verdicts


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "pedflow.cli", "generate", "--width", "1",
                        "--height", "1"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout == "6 8 208\n"
