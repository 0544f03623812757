import csv
import io
import json
import tempfile
from pathlib import Path

import pytest

from agpm import cli
from agpm.cost import HardwareProfile
from agpm.exact import exact_count
from agpm.generators import erdos_renyi
from agpm.graph import from_edges, load_binary, load_graph, write_edge_list
from agpm.pattern import builtin_pattern, compile_plan

HW = HardwareProfile(2e-9, op_overhead=4.0, sample_overhead=180.0, step_overhead=80.0,
                     sampler_unit_scale=4.0, preprocess_per_edge=120.0,
                     preprocess_per_kept_edge=110.0)


def _graph_file(tmp_path, g, name="g.txt"):
    path = tmp_path / name
    write_edge_list(g, path)
    return str(path)


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def t3_file(tmp_path):
    return _graph_file(tmp_path, from_edges([(0, 1), (1, 2), (2, 0)]), "t3.txt")


@pytest.fixture
def er_file(tmp_path):
    return _graph_file(tmp_path, erdos_renyi(120, 0.1, 3), "er.txt")


def test_count_triangle_on_t3(capsys, t3_file):
    code, out, _ = run(capsys, "count", "--graph", t3_file, "--pattern", "triangle",
                       "--scheme", "ns", "--error", "0.2", "--no-timing")
    assert code == cli.EXIT_OK
    rep = json.loads(out)
    assert rep["scheme"] == "ns"
    assert rep["converged"]
    assert abs(rep["estimate"] - 1.0) <= 0.2
    assert rep["config"]["pattern"] == "triangle"


def test_count_output_is_reproducible(capsys, er_file):
    argv = ("count", "--graph", er_file, "--pattern", "4cycle", "--seed", "7",
            "--threads", "1", "--no-timing")
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first == second
    assert "seconds" not in first[1] and "timing" not in first[1]


def test_timing_present_by_default(capsys, t3_file):
    _, out, _ = run(capsys, "count", "--graph", t3_file, "--pattern", "triangle")
    rep = json.loads(out)
    assert rep["seconds"] >= 0 and "sampling" in rep["timing"]


def test_gs_with_one_color_is_exact(capsys, er_file):
    truth = exact_count(load_graph(er_file), compile_plan(builtin_pattern("4cycle"))).count
    code, out, _ = run(capsys, "count", "--graph", er_file, "--pattern", "4cycle",
                       "--scheme", "gs", "--colors", "1")
    assert code == cli.EXIT_OK
    rep = json.loads(out)
    assert rep["estimate"] == truth and rep["scale"] == 1.0


def test_gs_sizes_colors_when_unspecified(capsys, er_file):
    code, out, _ = run(capsys, "count", "--graph", er_file, "--pattern", "triangle",
                       "--scheme", "gs", "--error", "0.3")
    assert code == cli.EXIT_OK
    rep = json.loads(out)
    assert set(rep["sizing"]) == {"count_estimate", "gamma", "keep_probability"}
    assert rep["params"]["color_count"] >= 1


def test_exact_subcommand(capsys, er_file):
    truth = exact_count(load_graph(er_file), compile_plan(builtin_pattern("triangle"))).count
    code, out, _ = run(capsys, "exact", "--graph", er_file, "--pattern", "triangle")
    assert code == cli.EXIT_OK
    assert json.loads(out)["count"] == truth


def test_custom_pattern_spec(capsys, t3_file):
    code, out, _ = run(capsys, "exact", "--graph", t3_file, "--pattern", "custom:3:0-1,1-2,2-0")
    assert code == cli.EXIT_OK and json.loads(out)["count"] == 1


def test_missing_graph_is_io_error(capsys, tmp_path):
    code, _, err = run(capsys, "count", "--graph", str(tmp_path / "nope.txt"),
                       "--pattern", "triangle")
    assert code == cli.EXIT_IO and "cannot read" in err


def test_malformed_graph_is_io_error(capsys, tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("0 1\nnot an edge\n")
    code, _, _ = run(capsys, "exact", "--graph", str(bad), "--pattern", "triangle")
    assert code == cli.EXIT_IO


@pytest.mark.parametrize("spec", ["nonesuch", "custom:3:0-1", "custom:2:0-5"])
def test_bad_pattern_exit_code(capsys, t3_file, spec):
    code, _, _ = run(capsys, "count", "--graph", t3_file, "--pattern", spec)
    assert code == cli.EXIT_PATTERN


@pytest.mark.parametrize("flags", [("--error", "1.5"), ("--confidence", "1.0"),
                                   ("--colors", "2", "--keep-prob", "0.5", "--scheme", "gs"),
                                   ("--threads", "0")])
def test_bad_parameters_exit_code(capsys, t3_file, flags):
    code, _, _ = run(capsys, "count", "--graph", t3_file, "--pattern", "triangle", *flags)
    assert code == cli.EXIT_PARAMETER


def test_not_converged_exit_code(capsys, er_file):
    code, out, _ = run(capsys, "count", "--graph", er_file, "--pattern", "5clique",
                       "--error", "0.01", "--max-samples", "2000")
    assert code == cli.EXIT_NOT_CONVERGED
    assert json.loads(out)["converged"] is False


def test_usage_error_exits_via_argparse(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["count", "--mode", "sideways"])
    assert info.value.code == 2


def test_env_threads_override(monkeypatch):
    monkeypatch.setenv("AGPM_THREADS", "3")
    assert cli.resolve_threads(8) == 3
    monkeypatch.setenv("AGPM_THREADS", "many")
    with pytest.raises(cli.CliError):
        cli.resolve_threads(None)
    monkeypatch.delenv("AGPM_THREADS")
    assert cli.resolve_threads(2) == 2


def test_csv_format(capsys, t3_file):
    code, out, _ = run(capsys, "exact", "--graph", t3_file, "--pattern", "triangle",
                       "--format", "csv", "--no-timing")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == cli.EXIT_OK and rows[0]["count"] == "1"


def test_profile_subcommand(capsys, er_file):
    code, out, _ = run(capsys, "profile", "--graph", er_file, "--pattern", "triangle",
                       "--fraction", "0.5")
    rep = json.loads(out)
    assert code == cli.EXIT_OK and rep["scaled_count"] >= 0


def test_sparsify_and_convert_round_trip(capsys, tmp_path, er_file):
    out_bin = tmp_path / "sparse.agpm"
    code, out, _ = run(capsys, "sparsify", "--graph", er_file, "--colors", "2",
                       "-o", str(out_bin))
    assert code == cli.EXIT_OK
    summary = json.loads(out)
    h = load_binary(out_bin)
    assert h.edge_count == summary["edges"] < load_graph(er_file).edge_count

    text = tmp_path / "back.txt"
    code, out, _ = run(capsys, "convert", "--graph", str(out_bin), "-o", str(text))
    assert code == cli.EXIT_OK and json.loads(out)["format"] == "text"
    again = load_graph(text)
    assert again.edge_count == h.edge_count
    assert (again.edges() == h.edges()).all()


def test_sparsify_requires_a_scheme(capsys, tmp_path, er_file):
    code, _, _ = run(capsys, "sparsify", "--graph", er_file, "-o", str(tmp_path / "x.agpm"))
    assert code == cli.EXIT_PARAMETER


def test_loose_mode_records_decision(capsys, monkeypatch, tmp_path):
    monkeypatch.setattr(cli, "calibrate_hardware", lambda *a, **k: HW)
    path = _graph_file(tmp_path, erdos_renyi(400, 0.3, 1))
    code, out, _ = run(capsys, "count", "--graph", path, "--pattern", "triangle",
                       "--mode", "loose", "--error", "0.005", "--fraction", "0.5")
    rep = json.loads(out)
    assert code == cli.EXIT_OK
    assert rep["decision"] == "gs" and rep["scheme"] == "gs"
    assert rep["cone"]["lower_time"] <= rep["cone"]["upper_time"]
    assert rep["gs_model"]["total_seconds"] < rep["cone"]["lower_time"]


def test_bench_corpus(capsys, tmp_path):
    _graph_file(tmp_path, erdos_renyi(100, 0.15, 1), "a.txt")
    _graph_file(tmp_path, erdos_renyi(100, 0.2, 2), "b.txt")
    corpus = {"defaults": {"error": 0.2, "confidence": 0.9},
              "cells": [{"graph": ["a.txt", "b.txt"], "pattern": ["triangle", "4cycle"]},
                        {"graph": "missing.txt", "pattern": "triangle"},
                        {"graph": "a.txt", "pattern": "triangle", "schemes": ["gs"],
                         "colors": 2}]}
    path = tmp_path / "corpus.json"
    path.write_text(json.dumps(corpus))
    code, out, _ = run(capsys, "bench", "--corpus", str(path))
    assert code == cli.EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out)))
    assert tuple(rows[0]) == cli.BENCH_COLUMNS
    assert len(rows) == 6
    assert all(r["status"] == "ok" for r in rows[:4])
    assert all(float(r["actual_error"]) < 0.5 for r in rows[:4])
    assert rows[4]["status"].startswith("io_error")
    assert rows[5]["scheme"] == "gs" and rows[5]["status"] == "ok"


def test_bench_eager_hits_at_least_lazy():
    g = erdos_renyi(200, 0.1, 4)
    with tempfile.TemporaryDirectory() as d:
        write_edge_list(g, Path(d) / "g.txt")
        rows = cli.run_bench({"cells": [{"graph": "g.txt", "pattern": "4clique",
                                         "verify": ["eager", "lazy"], "max_samples": 20000,
                                         "error": 0.05, "exact": False}]},
                             base=Path(d))
    eager, lazy = rows
    assert eager["verify"] == "eager" and lazy["verify"] == "lazy"
    assert eager["hit_rate"] >= lazy["hit_rate"]


def test_bench_bad_cell_becomes_status_row():
    rows = cli.run_bench({"cells": [{"graph": "nowhere.txt", "pattern": "triangle"}]})
    assert len(rows) == 1 and rows[0]["status"].startswith("io_error")
    text = cli.bench_csv(rows)
    assert text.splitlines()[0] == ",".join(cli.BENCH_COLUMNS)


def test_bench_bad_corpus_json(capsys, tmp_path):
    path = tmp_path / "c.json"
    path.write_text("{nope")
    code, _, _ = run(capsys, "bench", "--corpus", str(path))
    assert code == cli.EXIT_IO
