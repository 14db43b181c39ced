"""Flow-conserving edge measures: the discrete closed probability measures.

A measure assigns each edge a time density ``w[e] >= 0``; conservation means
inflow equals outflow at every node and normalization means
``sum(w) * h_time == 1``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .critical import min_mean_cycle
from .graph import PhaseGraph
from .lagrangian import CohomologyClass

WEIGHT_FLOOR = 1e-12


@dataclass
class ClosedMeasure:
    graph: PhaseGraph
    weights: np.ndarray  # one entry per edge of ``graph``

    def support(self, floor: float = WEIGHT_FLOOR) -> np.ndarray:
        return np.flatnonzero(self.weights > floor)

    def conservation_residual(self) -> float:
        g = self.graph
        inflow = np.bincount(g.dst, weights=self.weights, minlength=g.n_nodes)
        outflow = np.bincount(g.src, weights=self.weights, minlength=g.n_nodes)
        return float(np.abs(inflow - outflow).max(initial=0.0))

    def normalization_residual(self) -> float:
        return abs(float(self.weights.sum()) * self.graph.h_time - 1.0)

    def to_dict(self, value: float | None = None, c: CohomologyClass | None = None) -> dict:
        g = self.graph
        d = {"edges": [{"from": int(g.src[e]), "to": int(g.dst[e]), "w1": int(g.winding[e, 0]),
                        "w2": int(g.winding[e, 1]), "weight": float(self.weights[e])}
                       for e in self.support()]}
        if value is not None:
            d["value"] = value
        if c is not None:
            d["class"] = [c.c1, c.c2]
        return d


def cycle_measure(g: PhaseGraph, edges: Sequence[int]) -> ClosedMeasure:
    """Uniform time density along a closed walk."""
    w = np.zeros(g.n_edges)
    np.add.at(w, np.asarray(edges, dtype=np.int64), 1.0)
    return ClosedMeasure(g, w / (len(edges) * g.h_time))


def mixture(measures: Sequence[ClosedMeasure], coefficients: Sequence[float]) -> ClosedMeasure:
    coefficients = np.asarray(coefficients, dtype=float)
    if np.any(coefficients < 0) or not np.isclose(coefficients.sum(), 1.0):
        raise ValueError("mixture coefficients must be a probability vector")
    w = sum(a * m.weights for a, m in zip(coefficients, measures))
    return ClosedMeasure(measures[0].graph, w)


def min_closed_measure(g: PhaseGraph, c: CohomologyClass = CohomologyClass(),
                       method: str = "auto") -> tuple[float, ClosedMeasure]:
    """Minimize ``sum_e w[e] * edge_cost(e, c, 0)`` over closed measures.

    Extreme points of the feasible set are uniform measures on simple cycles,
    so the optimum is the minimum mean cycle.
    """
    cert = min_mean_cycle(g, c, method)
    return cert.mean_cost, cycle_measure(g, cert.edges)


def measure_integrate(mu: ClosedMeasure, observable) -> float:
    """Time-average pairing ``sum_e w[e] * h_time * obs[e]``.

    ``observable`` is either a per-edge array or a callable
    ``(graph, edge_ids) -> values``.
    """
    g = mu.graph
    supp = mu.support(0.0)
    if callable(observable):
        vals = np.asarray(observable(g, supp), dtype=float)
    else:
        vals = np.asarray(observable, dtype=float)[supp]
    return float(np.sum(mu.weights[supp] * g.h_time * vals))


def one_form_observable(field: Callable) -> Callable:
    """Observable ``<X(midpoint), velocity>`` for a vector field ``X(x, y)``."""
    def obs(g, edges):
        mx, my = g.midpoint[edges, 0], g.midpoint[edges, 1]
        x1, x2 = field(mx, my)
        return x1 * g.velocity[edges, 0] + x2 * g.velocity[edges, 1]
    return obs


def energy_observable(g: PhaseGraph, edges) -> np.ndarray:
    v = g.velocity[edges]
    return 0.5 * (v[:, 0] ** 2 + v[:, 1] ** 2)


def graph_property_check(mu: ClosedMeasure) -> float:
    """Largest spread of velocities carried out of a single node."""
    g = mu.graph
    supp = mu.support()
    worst = 0.0
    for node in np.unique(g.src[supp]).tolist():
        v = g.velocity[supp[g.src[supp] == node]]
        if len(v) > 1:
            diff = v[:, None, :] - v[None, :, :]
            worst = max(worst, float(np.sqrt((diff ** 2).sum(axis=2)).max()))
    return worst


def energy_level_check(mu: ClosedMeasure, alpha: float) -> float:
    supp = mu.support()
    if supp.size == 0:
        return 0.0
    return float(np.abs(energy_observable(mu.graph, supp) - alpha).max())


def measure_json(mu: ClosedMeasure, value: float, c: CohomologyClass) -> str:
    return json.dumps(mu.to_dict(value, c), sort_keys=True)
