import csv
import io

import numpy as np
import pytest

from magtorus.config import Tolerances
from magtorus.examples import ExampleSpec, build_example, default_grid
from magtorus.lagrangian import CohomologyClass
from magtorus.sweep import COLUMNS, SweepSpec, perturb_sweep, random_one_form

SPEC = ExampleSpec("two_well")
GRID = default_grid(SPEC, 16, 1 / 16)


def run(**kw):
    sweep = SweepSpec(**{"seed": 5, "num_perturbations": 2,
                         "classes": [CohomologyClass(), CohomologyClass(0.25, 0.0)], **kw})
    return perturb_sweep(build_example(SPEC), sweep, GRID, GRID, Tolerances())


def test_random_form_is_seeded_and_scaled():
    a = random_one_form(3, 1, 2, 0.1)
    assert a == random_one_form(3, 1, 2, 0.1)
    assert a != random_one_form(3, 2, 2, 0.1)
    xs = np.arange(64) / 64
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    e1, e2 = a(gx, gy)
    assert np.sqrt(e1 ** 2 + e2 ** 2).max() == pytest.approx(0.1)
    assert random_one_form(3, 1, 2, 0.0) == random_one_form(4, 0, 3, 0.0)


def test_csv_schema_and_determinism():
    rep, text = run()
    _, again = run()
    assert text == again
    rows = list(csv.DictReader(io.StringIO(text)))
    assert list(rows[0]) == COLUMNS
    assert len(rows) == 4
    assert [(r["perturbation"], r["class_index"]) for r in rows] == [
        ("0", "0"), ("0", "1"), ("1", "0"), ("1", "1")]
    assert all(r["status"] == "ok" for r in rows)
    hist = rep.results["class_count_histogram"]
    assert sum(hist.values()) == 4
    assert "genericity" in rep.results["note"]


def test_zero_amplitude_reproduces_baseline():
    rep, text = run(amplitude=0.0)
    rows = list(csv.DictReader(io.StringIO(text)))
    base = rep.results["baseline"]
    for r in rows:
        b = base[int(r["class_index"])]
        assert float(r["alpha"]) == b["alpha"]
        assert int(r["class_count"]) == b["class_count"]
        assert int(r["aubry_nodes"]) == b["aubry_nodes"]


def test_bad_sweep_rejected():
    with pytest.raises(ValueError):
        SweepSpec(amplitude=-1.0)
    with pytest.raises(ValueError):
        SweepSpec(classes=[])
