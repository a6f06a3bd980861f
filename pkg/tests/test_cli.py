"""Command line interface: subcommands, file formats, exit codes and determinism."""

import csv
import json
from pathlib import Path

import jsonschema
import pytest

from minitwistor.cli import main

SCHEMAS = Path(__file__).resolve().parents[1] / "schemas"


def validate(path, name):
    schema = json.loads((SCHEMAS / f"{name}.schema.json").read_text())
    doc = json.loads(Path(path).read_text())
    jsonschema.validate(doc, schema)
    return doc


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert run("config", "--m", 2, "--k", 1, "--seed", 0, "--out", d / "c.json") == 0
    assert run("solve", "--config", d / "c.json", "--out", d / "w.json") == 0
    return d


def test_config_and_solve(workdir):
    cfg = validate(workdir / "c.json", "config")
    assert cfg["m"] == 2 and len(cfg["points"]) == 4
    doc = validate(workdir / "w.json", "curve")
    assert doc["ordinary_nodes"] == 1 and doc["incidence_residual"] < 1e-8


def test_solve_deterministic(workdir, tmp_path):
    assert run("solve", "--config", workdir / "c.json", "--out", tmp_path / "w.json") == 0
    assert (tmp_path / "w.json").read_bytes() == (workdir / "w.json").read_bytes()


def test_lattice_stdout(capsys):
    assert run("lattice", "--class", "3,2:1,1,1,1,1,1") == 0
    out, err = capsys.readouterr()
    doc = json.loads(out)
    jsonschema.validate(doc, json.loads((SCHEMAS / "lattice.schema.json").read_text()))
    assert doc["self_intersection"] == 6 and doc["nodes"] == 2
    assert "lattice" in err


def test_lattice_file(tmp_path):
    assert run("lattice", "--class", "2,2:1,1,1,1", "--out", tmp_path / "l.json") == 0
    doc = validate(tmp_path / "l.json", "lattice")
    assert doc["nodes"] == 1 and doc["severi_dim"] == 3 and doc["minimal"]


def test_metric(workdir, tmp_path):
    assert run("metric", "--curve", workdir / "w.json", "--out", tmp_path / "m.json") == 0
    doc = validate(tmp_path / "m.json", "metric")
    assert doc["rank"] == 3
    assert doc["null_cone"]["polarization_residual"] < 1e-8


@pytest.mark.parametrize("mode,schema", [("geodesic", "trace"), ("nodal", "trace"),
                                         ("nullgeo", "trace"), ("nullsurf", "nullsurf")])
def test_trace_modes(workdir, tmp_path, mode, schema):
    rc = run("trace", "--config", workdir / "c.json", "--curve", workdir / "w.json", "--mode", mode,
             "--steps", 5, "--grid", 3, "--out", tmp_path / "t.json")
    assert rc == 0
    validate(tmp_path / "t.json", schema)


def test_trace_both_and_render(workdir, tmp_path):
    rc = run("trace", "--curve", workdir / "w.json", "--steps", 4, "--both", "--out", tmp_path / "t.json",
             "--svg", tmp_path / "t.svg")
    assert rc == 0
    doc = validate(tmp_path / "t.json", "trace")
    assert len(doc["states"]) == 9
    assert run("render", "--trace", tmp_path / "t.json", "--out", tmp_path / "r.svg") == 0
    assert (tmp_path / "r.svg").read_text().startswith("<svg")


def test_manifest(workdir, tmp_path):
    man = tmp_path / "man.json"
    assert run("--manifest", man, "metric", "--curve", workdir / "w.json", "--seed", 4,
               "--out", tmp_path / "m.json") == 0
    doc = validate(man, "manifest")
    assert doc["subcommand"] == "metric" and doc["seed"] == 4
    assert doc["tolerance_source"] == "default"
    assert doc["outputs"] == [str(tmp_path / "m.json")]


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as exc:
        run("config", "--m", 2)
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        run("trace", "--curve", "x.json", "--steps", 0, "--out", "t.json")
    assert exc.value.code == 2


def test_missing_file_exit_code(tmp_path, capsys):
    assert run("solve", "--config", tmp_path / "nope.json", "--out", tmp_path / "w.json") == 2
    doc = json.loads(capsys.readouterr().out)
    jsonschema.validate(doc, json.loads((SCHEMAS / "error.schema.json").read_text()))


def test_validation_failure_honours_tolerance(workdir, tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("MTL_TOL", "1e-30")
    assert run("solve", "--config", workdir / "c.json", "--out", tmp_path / "w.json") == 1
    doc = json.loads(capsys.readouterr().out)
    assert doc["error"] in ("ValidationFailure", "InvalidConfig")
    monkeypatch.setenv("MTL_TOL", "1e-6")
    man = tmp_path / "man.json"
    assert run("--manifest", man, "solve", "--config", workdir / "c.json", "--out", tmp_path / "w.json") == 0
    assert json.loads(man.read_text())["tolerance"] == 1e-6


def test_curve_off_configuration_rejected(workdir, tmp_path):
    run("config", "--m", 2, "--k", 1, "--seed", 5, "--out", tmp_path / "c5.json")
    rc = run("trace", "--config", tmp_path / "c5.json", "--curve", workdir / "w.json",
             "--steps", 2, "--out", tmp_path / "t.json")
    assert rc == 1


def test_real(tmp_path):
    rc = run("real", "--steps", 6, "--states", 2, "--out", tmp_path / "r.json", "--csv", tmp_path / "r.csv")
    assert rc == 0
    doc = validate(tmp_path / "r.json", "real")
    assert doc["reality"]["conditions"] == [True, True, True]
    assert min(doc["eigenvalues"]) > 0
    rows = list(csv.DictReader(open(tmp_path / "r.csv")))
    assert all(float(r["ev1"]) > 0 for r in rows)


@pytest.mark.slow
def test_ew_check(tmp_path):
    run("config", "--m", 2, "--k", 1, "--seed", 3, "--out", tmp_path / "c.json")
    run("solve", "--config", tmp_path / "c.json", "--out", tmp_path / "w.json")
    rc = run("ew-check", "--config", tmp_path / "c.json", "--curve", tmp_path / "w.json",
             "--levels", 2, "--samples", 300, "--out", tmp_path / "ew.json")
    assert rc == 0
    validate(tmp_path / "ew.json", "ew_report")
    rows = list(csv.DictReader(open(tmp_path / "ew.csv")))
    res = [float(r["residual_tracefree"]) for r in rows]
    assert len(res) == 2 and res[1] < res[0]
