"""Seeded random perturbations ``L + omega`` and their static-class counts.

Counts are observations at one resolution.  They say nothing about whether
the few-classes property is generic, and the report says so.
"""
from __future__ import annotations

import csv
import io
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import Tolerances
from .critical import min_mean_cycle
from .examples import classify
from .graph import GridSpec, build_graph
from .lagrangian import CohomologyClass, MagneticLagrangian, OneForm
from .measures import energy_level_check, graph_property_check, min_closed_measure
from .report import RunReport

NOTE = ("Class counts are empirical at a fixed grid resolution; the residual set of "
        "perturbations with finitely many static classes is not computable, so no "
        "genericity claim is made or tested.")

COLUMNS = ["perturbation", "seed", "class_index", "c1", "c2", "alpha", "measure_value",
           "class_count", "aubry_nodes", "energy_residual", "graph_residual", "status"]


@dataclass
class SweepSpec:
    seed: int = 0
    num_perturbations: int = 4
    amplitude: float = 0.05
    fourier_degree: int = 2
    classes: list[CohomologyClass] = field(default_factory=lambda: [CohomologyClass()])

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("amplitude must be nonnegative")
        if self.fourier_degree < 1:
            raise ValueError("fourier_degree must be >= 1")
        if not self.classes:
            raise ValueError("sweep needs at least one class")


def random_one_form(seed: int, index: int, degree: int, amplitude: float,
                    probe: int = 64) -> OneForm:
    """Random trigonometric 1-form with coefficients decaying like
    ``1 / (1 + deg)^2``, scaled to sup-norm ``amplitude`` on a probe grid."""
    if amplitude == 0:
        return OneForm.zero()
    rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
    modes = [(kx, ky) for kx in range(0, degree + 1) for ky in range(-degree, degree + 1)
             if (kx, ky) > (0, 0)]
    rows = [[], []]
    for comp in range(2):
        for kx, ky in modes:
            decay = 1.0 / (1.0 + max(abs(kx), abs(ky))) ** 2
            a, b = rng.normal(0.0, decay, size=2)
            rows[comp].append([a, b, kx, ky])
    form = OneForm(rows[0], rows[1], degree)
    xs = np.arange(probe) / probe
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    e1, e2 = form(gx, gy)
    sup = float(np.sqrt(e1 ** 2 + e2 ** 2).max())
    return form.scaled(amplitude / sup)


def _rows_for(lag: MagneticLagrangian, classes, grid: GridSpec, pgrid: GridSpec,
              tol: Tolerances) -> list[dict]:
    g = build_graph(lag, grid)
    gp = g if pgrid == grid else build_graph(lag, pgrid)
    rows = []
    for ci, c in enumerate(classes):
        row = {"class_index": ci, "c1": c.c1, "c2": c.c2}
        try:
            value, mu = min_closed_measure(g, c)
            alpha = -value
            _, part = classify(gp, c, tol)
            row.update(alpha=alpha, measure_value=value, class_count=part.count,
                       aubry_nodes=int(part.aubry_nodes.size),
                       energy_residual=energy_level_check(mu, alpha),
                       graph_residual=graph_property_check(mu), status="ok")
        except Exception as exc:  # recorded per row; the sweep goes on
            row["status"] = f"failed: {type(exc).__name__}: {exc}"
        rows.append(row)
    return rows


def _perturbation_rows(args):
    lag, sweep, index, grid, pgrid, tol = args
    omega = random_one_form(sweep.seed, index, sweep.fourier_degree, sweep.amplitude)
    rows = _rows_for(lag.perturbed(omega), sweep.classes, grid, pgrid, tol)
    for r in rows:
        r["perturbation"] = index
        r["seed"] = sweep.seed
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([repr(r[k]) if isinstance(r.get(k), float) else r.get(k, "") for k in COLUMNS])
    return buf.getvalue()


def perturb_sweep(lag: MagneticLagrangian, sweep: SweepSpec, grid: GridSpec,
                  potential_grid: GridSpec | None = None, tol: Tolerances | None = None,
                  workers: int = 1, config: dict | None = None) -> tuple[RunReport, str]:
    """One CSV row per (perturbation, class), ordered by perturbation then class."""
    tol = tol or Tolerances()
    pgrid = potential_grid or grid
    rep = RunReport("sweep", config or {})
    with rep.stage("baseline"):
        baseline = _rows_for(lag, sweep.classes, grid, pgrid, tol)
    jobs = [(lag, sweep, i, grid, pgrid, tol) for i in range(sweep.num_perturbations)]
    with rep.stage("perturbations"):
        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                chunks = list(pool.map(_perturbation_rows, jobs))
        else:
            chunks = [_perturbation_rows(j) for j in jobs]
    rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=lambda r: (r["perturbation"], r["class_index"]))
    hist = Counter(r["class_count"] for r in rows if r["status"] == "ok")
    rep.results = {
        "baseline": baseline,
        "rows": len(rows),
        "failed_rows": sum(r["status"] != "ok" for r in rows),
        "class_count_histogram": {str(k): hist[k] for k in sorted(hist)},
        "max_class_count": max(hist) if hist else None,
        "note": NOTE,
    }
    return rep, rows_to_csv(rows)
