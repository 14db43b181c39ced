"""Brute-force references used by the tests.

Everything here is deliberately naive: exhaustive enumeration of simple
cycles on tiny graphs and dense scans of 1-D profiles.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from magtorus.graph import PhaseGraph


def simple_cycles(g: PhaseGraph) -> list[list[int]]:
    """Every simple directed cycle as an edge list, each listed once.

    A cycle is reported starting from its smallest node; parallel edges give
    distinct cycles.
    """
    out_edges = [[] for _ in range(g.n_nodes)]
    for e in range(g.n_edges):
        out_edges[int(g.src[e])].append(e)
    cycles = []

    def extend(start, node, visited, path):
        for e in out_edges[node]:
            nxt = int(g.dst[e])
            if nxt == start:
                cycles.append(path + [e])
            elif nxt > start and nxt not in visited:
                extend(start, nxt, visited | {nxt}, path + [e])

    for s in range(g.n_nodes):
        extend(s, s, {s}, [])
    return cycles


def exact_min_mean(g: PhaseGraph, cost) -> Fraction:
    """Minimum cycle mean per unit time in exact rational arithmetic.

    Costs must be exactly representable (integers or dyadic floats).
    """
    h = Fraction(g.h_time)
    best = None
    for cyc in simple_cycles(g):
        m = sum(Fraction(float(cost[e])) for e in cyc) / (len(cyc) * h)
        if best is None or m < best:
            best = m
    if best is None:
        raise ValueError("graph has no cycle")
    return best


def random_small_graph(rng: np.random.Generator, max_nodes: int = 8, max_cost: int = 6):
    """A random multigraph on 2..max_nodes nodes with integer costs.

    A Hamiltonian cycle is always included so that a cycle exists.
    """
    n = int(rng.integers(2, max_nodes + 1))
    perm = rng.permutation(n)
    edges = [(int(perm[i]), int(perm[(i + 1) % n])) for i in range(n)]
    extra = int(rng.integers(0, 3 * n))
    edges += [(int(rng.integers(n)), int(rng.integers(n))) for _ in range(extra)]
    costs = rng.integers(-max_cost, max_cost + 1, size=len(edges))
    return PhaseGraph.from_edges(n, [(s, d, float(w)) for (s, d), w in zip(edges, costs)])


def dense_minimum_set(f, samples: int = 2 ** 18, rel: float = 1e-9):
    """Sample points where ``f`` is within ``rel`` of its sampled minimum."""
    xs = np.linspace(0.0, 1.0, samples, endpoint=False)
    vals = f(xs)
    m = vals.min()
    return xs[vals <= m + rel * max(1.0, abs(m))], float(m)


def circular_components(points, gap: float) -> int:
    """Clusters of sorted points on the unit circle separated by more than ``gap``."""
    pts = np.sort(np.asarray(points))
    if pts.size == 0:
        return 0
    jumps = np.diff(np.concatenate([pts, [pts[0] + 1.0]]))
    breaks = int((jumps > gap).sum())
    return max(breaks, 1)
