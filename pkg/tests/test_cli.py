import csv
import json

import pytest

from magtorus.cli import main


@pytest.fixture
def config(tmp_path):
    def make(**extra):
        cfg = {"version": 1,
               "grid": {"n": 16, "h_time": 0.0625},
               "potential_grid": {"n": 16, "h_time": 0.0625},
               "lagrangian": {"f_kind": "two_well"},
               "sweep": {"num_perturbations": 1},
               **extra}
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps(cfg, indent=2))
        return str(p)
    return make


def test_alpha_grid(config, tmp_path):
    out = tmp_path / "out"
    assert main(["alpha", "--config", config(), "--out", str(out), "--classes-grid", "5x5"]) == 0
    rows = list(csv.reader((out / "alpha.csv").open()))
    assert rows[0] == ["c1", "c2", "alpha"] and len(rows) == 26
    cert = json.loads((out / "certificate.json").read_text())
    assert cert["mean_cost"] == -2.0
    report = json.loads((out / "report.json").read_text())
    assert report["results"]["alpha_at_zero"] == 2.0
    assert (out / "timings.json").exists()


def test_invalid_grid_exits_1(config, tmp_path, capsys):
    code = main(["alpha", "--config", config(), "--out", str(tmp_path / "o"), "--n", "4"])
    assert code == 1
    assert "grid.n" in capsys.readouterr().err


def test_bad_arguments_exit_1(config, tmp_path):
    out = str(tmp_path / "o")
    assert main(["alpha", "--config", config(), "--out", out, "--classes-grid", "five"]) == 1
    assert main(["nonsense"]) == 1
    assert main(["alpha", "--config", str(tmp_path / "missing.json"), "--out", out]) == 1


def test_classes_and_potential(config, tmp_path):
    out = tmp_path / "out"
    assert main(["classes", "--config", config(), "--out", str(out)]) == 0
    part = json.loads((out / "classes.json").read_text())
    assert len(part["classes"]) == 2
    assert main(["potential", "--config", config(), "--out", str(out), "--threshold", "0"]) == 0
    assert (out / "potential.csv").read_text().startswith("i,j,phi\n")


def test_measure_and_integrate(config, tmp_path):
    out = tmp_path / "out"
    assert main(["measure", "--config", config(), "--out", str(out)]) == 0
    m = json.loads((out / "measure.json").read_text())
    assert m["value"] == -2.0
    assert main(["integrate", "--config", config(integrate={"T": 1.0, "h": 0.01}),
                 "--out", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["results"]["energy_drift"] < 1e-12


def test_example_verify_smoke(config, tmp_path):
    out = tmp_path / "out"
    assert main(["example-verify", "--config", config(), "--out", str(out)]) == 0
    for name in ("report.json", "alpha.csv", "classes.json", "measure.json"):
        assert (out / name).exists()
    rep = json.loads((out / "report.json").read_text())
    assert rep["results"]["classes"]["count"] == 2


def test_example_verify_needs_example(config, tmp_path):
    cfg = config(lagrangian={"oneform": {"coeffs2": [[-1.0, 0.0, 0, 0]]}})
    assert main(["example-verify", "--config", cfg, "--out", str(tmp_path / "o")]) == 1


def test_sweep_is_byte_identical(config, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["sweep", "--config", config(), "--out", str(a), "--seed", "3"]) == 0
    assert main(["sweep", "--config", config(), "--out", str(b), "--seed", "3"]) == 0
    assert (a / "sweep.csv").read_bytes() == (b / "sweep.csv").read_bytes()
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
