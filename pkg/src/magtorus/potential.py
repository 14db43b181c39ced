"""Action potential, Mather semi-distance, Aubry nodes and static classes."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, dijkstra

from .critical import bellman_ford, tol_zero
from .errors import NegativeCycleError, NumericalFailure
from .graph import PhaseGraph
from .lagrangian import CohomologyClass

# dense tables above this many nodes are restricted to sampled sources
MAX_DENSE_NODES = 96 * 96


@dataclass
class PotentialTable:
    """Minimal walk costs between nodes at level ``k_used``.

    ``phi[a, j]`` is the cheapest walk of at least one edge from node
    ``sources[a]`` to node ``j``; on the diagonal (``j == sources[a]``) that is
    the cheapest nontrivial cycle, also stored as ``self_loop[a]``.
    """

    k_used: float
    phi: np.ndarray
    self_loop: np.ndarray
    sources: np.ndarray
    node_potential: np.ndarray
    scale: float

    @property
    def is_dense(self) -> bool:
        return self.phi.shape[0] == self.phi.shape[1]

    def square(self) -> np.ndarray:
        """``phi`` restricted to ``sources x sources``."""
        return self.phi[:, self.sources]


def _min_sparse(n, src, dst, w):
    """CSR matrix keeping the cheapest of parallel edges."""
    key = src * n + dst
    order = np.lexsort((w, key))
    key, w = key[order], w[order]
    first = np.concatenate([[True], key[1:] != key[:-1]])
    key, w = key[first], w[first]
    return sp.csr_matrix((w, (key // n, key % n)), shape=(n, n))


def potential_table(g: PhaseGraph, c: CohomologyClass, k: float,
                    sources=None) -> PotentialTable:
    """All-pairs minimal walk costs by Johnson's reweighting.

    A virtual-root relaxation supplies a node potential that makes every
    reduced edge cost nonnegative; Dijkstra then runs from each source.
    """
    zero = tol_zero(g, c)
    cost = g.costs(c, k)
    relax = bellman_ford(g, cost, zero)
    if relax.cycle is not None:
        raise NegativeCycleError(f"negative cycle at k={k}", relax.cycle)
    if not relax.converged:
        raise NumericalFailure(f"relaxation did not settle at k={k}; raise k slightly")
    p = relax.potential
    n = g.n_nodes
    if sources is None:
        if n <= MAX_DENSE_NODES:
            sources = np.arange(n)
        else:
            sources = np.arange(0, n, int(math.ceil(n / MAX_DENSE_NODES)))
    sources = np.asarray(sources, dtype=np.int64)

    reduced = np.maximum(cost + p[g.src] - p[g.dst], 0.0)
    proper = g.src != g.dst
    fwd = _min_sparse(n, g.src[proper], g.dst[proper], reduced[proper])
    d_red = dijkstra(fwd, directed=True, indices=sources)
    # empty walks included here: d0[a, a] = 0
    d0 = d_red - p[sources][:, None] + p[None, :]

    if sources.size == n:
        back = d0  # back[j, a] = cost from j to sources[a]
    else:
        rev = _min_sparse(n, g.dst[proper], g.src[proper], reduced[proper])
        r_red = dijkstra(rev, directed=True, indices=sources)
        back = (r_red + p[sources][:, None] - p[None, :]).T
    # self_loop[a] = min over edges e leaving sources[a] of cost[e] + dist(dst e -> sources[a])
    pos = np.full(n, -1, dtype=np.int64)
    pos[sources] = np.arange(sources.size)
    leaving = pos[g.src]
    mask = leaving >= 0
    vals = cost[mask] + back[g.dst[mask], leaving[mask]]
    loops = np.full(sources.size, np.inf)
    np.minimum.at(loops, leaving[mask], vals)

    phi = d0
    phi[np.arange(sources.size), sources] = loops
    return PotentialTable(float(k), phi, loops, sources, p, g.cost_scale(c))


def mather_semidistance(pt: PotentialTable) -> np.ndarray:
    """``delta[a, b] = phi(a, b) + phi(b, a)`` over the sources; the diagonal
    holds ``self_loop``."""
    sq = pt.square()
    delta = sq + sq.T
    np.fill_diagonal(delta, pt.self_loop)
    return delta


def aubry_nodes(pt: PotentialTable, eps_aubry: float) -> np.ndarray:
    """Sources whose cheapest nontrivial cycle costs at most ``eps_aubry``."""
    return pt.sources[pt.self_loop <= eps_aubry]


@dataclass
class StaticClassPartition:
    aubry_nodes: np.ndarray
    classes: list[list[int]]
    eps_aubry: float
    eps_class: float

    @property
    def count(self) -> int:
        return len(self.classes)

    def to_dict(self) -> dict:
        return {"classes": self.classes, "eps_aubry": self.eps_aubry, "eps_class": self.eps_class}


def static_classes(pt: PotentialTable, aubry, eps_class: float,
                   eps_aubry: float = float("nan")) -> StaticClassPartition:
    """Connected components of ``{delta <= eps_class}`` on the Aubry nodes,
    largest first (ties broken by smallest node id)."""
    aubry = np.sort(np.asarray(aubry, dtype=np.int64))
    pos = np.full(int(pt.sources.max()) + 1, -1, dtype=np.int64)
    pos[pt.sources] = np.arange(pt.sources.size)
    if aubry.size and np.any(pos[aubry] < 0):
        raise ValueError("Aubry nodes must be potential sources")
    if aubry.size == 0:
        return StaticClassPartition(aubry, [], eps_aubry, eps_class)
    delta = mather_semidistance(pt)
    idx = pos[aubry]
    close = delta[np.ix_(idx, idx)] <= eps_class
    _, labels = connected_components(sp.csr_matrix(close), directed=False)
    groups: dict[int, list[int]] = {}
    for node, lab in zip(aubry.tolist(), labels.tolist()):
        groups.setdefault(lab, []).append(node)
    classes = sorted(groups.values(), key=lambda cl: (-len(cl), cl[0]))
    return StaticClassPartition(aubry, classes, eps_aubry, eps_class)


def write_potential_csv(pt: PotentialTable, path, threshold: float = math.inf) -> None:
    """Sparse export: rows ``i,j,phi`` with ``phi <= threshold``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "j", "phi"])
        rows, cols = np.nonzero(pt.phi <= threshold)
        for a, j in zip(rows.tolist(), cols.tolist()):
            w.writerow([int(pt.sources[a]), j, repr(float(pt.phi[a, j]))])


def partition_json(part: StaticClassPartition) -> str:
    return json.dumps(part.to_dict(), sort_keys=True)
