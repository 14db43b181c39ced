"""The exactly solvable family ``eta = (0, f(x))`` and its end-to-end check.

For nonpositive ``f`` with minimum value ``f_min < 0`` the critical value at
``c = 0`` is ``f_min^2 / 2``; the vertical circles over the minimum set are
static, and there is one static class per connected component of the minimum
set.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import Tolerances
from .critical import critical_value_bisection, min_mean_cycle, tol_zero
from .flow import energy_drift, integrate
from .graph import GridSpec, PhaseGraph, build_graph
from .lagrangian import (CohomologyClass, MagneticLagrangian, OneForm, PhaseState, XProfile,
                         curve_action)
from .measures import energy_level_check, graph_property_check, min_closed_measure
from .potential import aubry_nodes, mather_semidistance, potential_table, static_classes
from .report import RunReport

DEFAULT_PARAMS = {
    "f_min": -2.0,
    "f_top": 0.0,
    "width": 0.2,
    "base_lo": 0.1,
    "base_hi": 0.9,
}


@dataclass
class ExampleSpec:
    f_kind: str
    params: dict = field(default_factory=dict)
    cantor_stage: int = 0
    grid: GridSpec | None = None
    potential_grid: GridSpec | None = None

    def __post_init__(self):
        if self.f_kind not in ("two_well", "single_well", "cantor_stage"):
            raise ValueError(f"unknown f_kind {self.f_kind!r}")
        if self.cantor_stage < 0:
            raise ValueError("cantor_stage must be >= 0")
        self.params = {**DEFAULT_PARAMS, **self.params}
        f_min, f_top = float(self.params["f_min"]), float(self.params["f_top"])
        if f_top > 0:
            raise ValueError("f must be nonpositive: f_top > 0")
        if not f_min < 0:
            raise ValueError("f_min must be negative")
        if f_min >= f_top:
            raise ValueError("f_min must lie below f_top")
        lo, hi = float(self.params["base_lo"]), float(self.params["base_hi"])
        if not 0.0 <= lo < hi < lo + 1.0:
            raise ValueError("Cantor base interval must fit in one period")

    @property
    def f_min(self) -> float:
        return float(self.params["f_min"])

    @property
    def alpha_exact(self) -> float:
        return 0.5 * self.f_min ** 2


def cantor_intervals(lo: float, hi: float, stage: int) -> list[tuple[float, float]]:
    """The ``2^stage`` intervals of the middle-thirds construction on [lo, hi]."""
    iv = [(lo, hi)]
    for _ in range(stage):
        nxt = []
        for a, b in iv:
            third = (b - a) / 3.0
            nxt += [(a, a + third), (b - third, b)]
        iv = nxt
    return iv


def example_profile(spec: ExampleSpec) -> XProfile:
    p = spec.params
    f_min, f_top = float(p["f_min"]), float(p["f_top"])
    if spec.f_kind in ("two_well", "single_well"):
        centers = [0.25, 0.75] if spec.f_kind == "two_well" else [0.5]
        return XProfile("bumps", {"top": f_top, "depth": f_top - f_min,
                                  "width": float(p["width"]), "centers": centers})
    iv = cantor_intervals(float(p["base_lo"]), float(p["base_hi"]), spec.cantor_stage)
    return XProfile("plateaus", {"bottom": f_min, "top": f_top,
                                 "intervals": [list(ab) for ab in iv]})


def minimum_components(spec: ExampleSpec) -> list[tuple[float, float]]:
    """Connected components of the minimum set (points as degenerate intervals)."""
    prof = example_profile(spec)
    if prof.kind == "bumps":
        return [(c, c) for c in prof.params["centers"]]
    return [tuple(ab) for ab in prof.params["intervals"]]


def build_example(spec: ExampleSpec) -> MagneticLagrangian:
    lag = MagneticLagrangian(OneForm(profile=example_profile(spec)))
    return lag


def default_grid(spec: ExampleSpec, n: int = 64, h_time: float = 1.0 / 32.0) -> GridSpec:
    return GridSpec(n, 2.0 * math.sqrt(2.0 * spec.alpha_exact) + 1.0, h_time, 1)


def grid_quantum(spec: GridSpec) -> float:
    """Action of carrying the smallest stencil velocity for one edge."""
    return 0.5 * spec.h_time * spec.velocity_spacing ** 2


def class_tolerances(grid: GridSpec, tol: Tolerances) -> tuple[float, float]:
    e = grid_quantum(grid)
    eps_aubry = tol.eps_aubry if tol.eps_aubry is not None else e
    eps_class = tol.eps_class if tol.eps_class is not None else 3.0 * e
    return eps_aubry, eps_class


def lift_for(g: PhaseGraph, c: CohomologyClass, tol: Tolerances) -> float:
    if tol.eps_lift is not None:
        return tol.eps_lift
    return 10.0 * tol.tol_zero_rel * g.cost_scale(c) / g.h_time


def classify(g: PhaseGraph, c: CohomologyClass, tol: Tolerances, alpha: float | None = None):
    """Potential table, Aubry nodes and static classes of ``L - c`` on ``g``."""
    if alpha is None:
        alpha = min_mean_cycle(g, c).alpha
    pt = potential_table(g, c, alpha + lift_for(g, c, tol))
    eps_aubry, eps_class = class_tolerances(g.spec, tol)
    aub = aubry_nodes(pt, eps_aubry)
    return pt, static_classes(pt, aub, eps_class, eps_aubry)


def _circular_gap(x: float, a: float, b: float) -> float:
    """Distance on the circle from x to the arc [a, b]."""
    if a <= x <= b:
        return 0.0
    d = min(abs(x - a), abs(x - b))
    return min(d, 1.0 - d) if d > 0.5 else d


def locate_classes(part, g: PhaseGraph, components) -> list[dict]:
    """For each class: its column range and the component it sits next to."""
    n = g.spec.n
    out = []
    for cl in part.classes:
        cols = sorted({int(v) // n for v in cl})
        xs = [i / n for i in cols]
        dist = [max(_circular_gap(x, a, b) for x in xs) for a, b in components]
        j = int(np.argmin(dist))
        out.append({"columns": xs, "size": len(cl), "component": j,
                    "offset_cells": dist[j] * n})
    return out


def audit_actions(lag: MagneticLagrangian, k: float, count: int, seed: int,
                  samples: int = 400) -> list[float]:
    """Actions at level ``k`` of random smooth closed curves with random winding."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 6]))
    vals = []
    for _ in range(count):
        T = rng.uniform(0.2, 3.0)
        w = rng.integers(-2, 3, size=2)
        t = np.linspace(0.0, T, samples + 1)
        pos = []
        for d in range(2):
            amp = rng.normal(0.0, 0.15, size=3)
            ph = rng.uniform(0.0, 2 * np.pi, size=3)
            modes = sum(amp[m] * (np.sin(2 * np.pi * (m + 1) * t / T + ph[m]) - np.sin(ph[m]))
                        for m in range(3))
            pos.append(rng.uniform() + w[d] * t / T + modes)
        x, y = pos
        vx, vy = np.gradient(x, t), np.gradient(y, t)
        path = [(float(t[i]), PhaseState.of(x[i], y[i], vx[i], vy[i])) for i in range(t.size)]
        vals.append(curve_action(lag, CohomologyClass(), k, path))
    return vals


def verify_example(spec: ExampleSpec, tol: Tolerances | None = None, refine: bool = True,
                   seed: int = 0, config: dict | None = None, bisection: bool = True) -> RunReport:
    """Run the whole pipeline on one example and collect residuals.

    Stages that raise are marked failed in the report and the remaining
    stages still run.
    """
    tol = tol or Tolerances()
    grid = spec.grid or default_grid(spec)
    pgrid = spec.potential_grid or grid
    rep = RunReport("example-verify", config or {"f_kind": spec.f_kind, "params": spec.params,
                                                 "cantor_stage": spec.cantor_stage})
    res = rep.results
    res["grid"] = {"n": grid.n, "h_time": grid.h_time, "speed_cap": grid.speed_cap,
                   "windings": grid.windings}
    res["potential_grid"] = {"n": pgrid.n, "h_time": pgrid.h_time, "speed_cap": pgrid.speed_cap,
                             "windings": pgrid.windings}
    res["f_min"] = spec.f_min
    res["alpha_exact"] = spec.alpha_exact
    lag = build_example(spec)
    c0 = CohomologyClass()
    comps = minimum_components(spec)
    state = {}

    def run(name, fn):
        try:
            with rep.stage(name):
                fn()
        except Exception:
            pass

    def alpha_stage():
        g = build_graph(lag, grid)
        state["g"] = g
        cert = min_mean_cycle(g, c0)
        state["alpha"] = cert.alpha
        a = {"alpha_min_mean": cert.alpha, "error": abs(cert.alpha - spec.alpha_exact),
             "relative_error": abs(cert.alpha - spec.alpha_exact) / spec.alpha_exact,
             "cycle_length": len(cert.edges), "tol_zero": tol_zero(g, c0)}
        if bisection:
            ab = critical_value_bisection(g, c0, tol.bisection_tol,
                                          tol.tol_zero_rel * g.cost_scale(c0))
            a["alpha_bisection"] = ab
            a["bisection_gap"] = abs(ab - cert.alpha)
        res["alpha"] = a

    def refine_stage():
        fine = GridSpec(2 * grid.n, grid.speed_cap, grid.h_time / 2.0, grid.windings)
        af = min_mean_cycle(build_graph(lag, fine), c0).alpha
        e0 = abs(state["alpha"] - spec.alpha_exact)
        e1 = abs(af - spec.alpha_exact)
        res["refinement"] = {"n": [grid.n, fine.n], "h_time": [grid.h_time, fine.h_time],
                             "alpha": [state["alpha"], af], "error": [e0, e1],
                             "rate": math.log2(e0 / e1) if e0 > 0 and e1 > 0 else None,
                             "decreased": e1 < e0}

    def static_stage():
        prof = example_profile(spec)
        a0, a1 = comps[0]
        a = 0.5 * (a0 + a1)
        fa = float(prof.value(a))
        tr = integrate(lag, PhaseState.of(a, 0.0, 0.0, -fa), tol.static_T, tol.static_h)
        res["static_curve"] = {
            "a": a, "f_a": fa, "f_prime_a": float(prof.derivative(a)),
            "max_x_deviation": float(np.abs(tr.lifted[:, 0] - a).max()),
            "max_y_deviation": float(np.abs(tr.lifted[:, 1] + fa * tr.t).max()),
            "energy_drift": energy_drift(tr),
            "energy_minus_alpha": abs(float(tr.energies()[0]) - spec.alpha_exact),
        }

    def measure_stage():
        g = state["g"]
        value, mu = min_closed_measure(g, c0)
        res["measure"] = {
            "value": value, "value_plus_alpha": abs(value + state["alpha"]),
            "conservation_residual": mu.conservation_residual(),
            "normalization_residual": mu.normalization_residual(),
            "energy_level": energy_level_check(mu, state["alpha"]),
            "graph_property": graph_property_check(mu),
            "velocity_spacing": grid.velocity_spacing,
            "support_columns": sorted({float(x) for x in g.midpoint[mu.support(), 0]}),
        }
        state["mu"] = mu

    def classes_stage():
        gp = state["g"] if pgrid == grid else build_graph(lag, pgrid)
        alpha_p = state["alpha"] if pgrid == grid else min_mean_cycle(gp, c0).alpha
        pt, part = classify(gp, c0, tol, alpha_p)
        delta = mather_semidistance(pt)
        pos = {int(s): i for i, s in enumerate(pt.sources)}
        between = []
        for i in range(part.count):
            for j in range(i + 1, part.count):
                ii = [pos[v] for v in part.classes[i]]
                jj = [pos[v] for v in part.classes[j]]
                between.append(float(delta[np.ix_(ii, jj)].min()))
        loc = locate_classes(part, gp, comps)
        res["classes"] = {
            "count": part.count, "expected": len(comps),
            "aubry_nodes": int(part.aubry_nodes.size),
            "eps_aubry": part.eps_aubry, "eps_class": part.eps_class,
            "k_used": pt.k_used, "alpha": alpha_p,
            "min_delta_between_classes": min(between) if between else None,
            "locations": loc,
            "max_offset_cells": max((c["offset_cells"] for c in loc), default=None),
            "components_hit": len({c["component"] for c in loc}),
        }
        state["partition"] = part

    def audit_stage():
        vals = audit_actions(lag, state["alpha"], tol.audit_curves, seed)
        res["action_audit"] = {"curves": len(vals), "min_action": min(vals) if vals else None,
                               "k": state["alpha"]}

    run("alpha", alpha_stage)
    if "alpha" in state:
        if refine:
            run("refinement", refine_stage)
        run("measure", measure_stage)
        run("classes", classes_stage)
        run("action_audit", audit_stage)
    run("static_curve", static_stage)
    rep.extra_state = state
    return rep
