import json

import pytest

from nilcone.reachability.cli import main, parse_eps_grid


def run(capsys, *argv):
    assert main(list(argv)) == 0
    return json.loads(capsys.readouterr().out)


def test_eps_grid_parsing():
    g = parse_eps_grid("0.5:0.05:6")
    assert len(g) == 6 and g[0] == pytest.approx(0.5) and g[-1] == pytest.approx(0.05)


def test_algebra_build_and_info(tmp_path, capsys):
    out = tmp_path / "alg"
    spec = run(capsys, "algebra", "build", "--kind", "free", "--l", "2", "--d", "3", "--out", str(out))
    assert spec["dim"] == 5
    info = run(capsys, "algebra", "info", "--algebra", str(out / "report.json"), "--l", "2")
    assert info["verified"] and info["witt"] == [2, 1, 2]


def test_group_commands(capsys):
    assert run(capsys, "group", "product", "--x", "1,0,0", "--y", "0,1,0")["product"] == [1, 1, "1/2"]
    assert run(capsys, "group", "dilate", "--x", "1,1,1", "--t", "2")["dilated"] == [2, 2, 4]


def test_ccdist(capsys):
    rep = run(capsys, "ccdist", "--x", "1,0,0")
    assert rep["upper"] == rep["lower"] == 1.0 and rep["sound"]


def test_cone_commands(tmp_path, capsys):
    cone = tmp_path / "cone.json"
    cone.write_text(json.dumps({"kind": "lorentz", "axis": [0, 0, 1]}))
    assert run(capsys, "cone", "dist", "--cone", str(cone), "--point", "0,0,-1")["distance"] == pytest.approx(1)
    rep = run(capsys, "cone", "contact", "--cone", str(cone), "--point", "1,0,1", "--subspace", "1,0,1;0,1,0")
    assert rep["exponent"] == pytest.approx(2, abs=0.05)


def test_reach_writes_outputs(tmp_path, capsys):
    out = tmp_path / "l1"
    rep = run(capsys, "reach", "lemma1", "--x", "0,0,1", "--eps-grid", "0.5:0.25:2", "--out", str(out))
    assert rep["complete"] and all(r["witnessed"] for r in rep["rows"])
    assert (out / "table.csv").read_text().startswith("eps,")
    assert len(json.loads((out / "witnesses.json").read_text())) == 2
    rep = run(capsys, "reach", "lemma2", "--x", "1,0,0")
    assert rep["closes"] and rep["offsets_ok"]


def test_budget_exhaustion_is_flagged(capsys):
    rep = run(capsys, "reach", "lemma1", "--x", "0,0,1", "--eps-grid", "0.5:0.25:2", "--budget", "10")
    assert rep["complete"] is False


def test_attain_sample_records_seed(tmp_path, capsys):
    cone = tmp_path / "cone.json"
    cone.write_text(json.dumps({"kind": "polyhedral", "generators": [[1, 0, 0], [0, 1, 0], [-1, -1, 0]]}))
    rep = run(capsys, "attain", "sample", "--cone", str(cone), "--samples", "50", "--seed", "7")
    assert rep["seed"] == 7 and rep["admissible"] and rep["samples"] == 50


def test_demo_control_is_rejected(capsys):
    rep = run(capsys, "demo", "theorem1", "--alpha", "1/2")
    assert rep["claim"] == "no claim" and rep["hypotheses"]["failed"] == ["contact"]
