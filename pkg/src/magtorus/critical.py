"""Critical value of ``L - c`` on a phase graph.

Two independent routes:

* measure side: minimum mean cycle (Karp's dynamic program as the reference,
  Howard's policy iteration for large graphs); ``alpha = -mean``;
* action side: smallest ``k`` for which no cycle has negative ``L - c + k``
  action, found by bisection over Bellman-Ford negative-cycle probes.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import BracketError, NumericalFailure
from .graph import PhaseGraph, gather
from .lagrangian import CohomologyClass, MagneticLagrangian

TOL_ZERO_REL = 1e-9
KARP_WORK_LIMIT = 4e7


def tol_zero(g: PhaseGraph, c: CohomologyClass) -> float:
    """Threshold below which a cycle cost counts as zero."""
    return TOL_ZERO_REL * g.cost_scale(c)


@dataclass
class CycleCertificate:
    edges: list[int]
    mean_cost: float
    total_time: float

    @property
    def alpha(self) -> float:
        return -self.mean_cost

    def to_dict(self, g: PhaseGraph | None = None) -> dict:
        d = {"mean_cost": self.mean_cost, "total_time": self.total_time, "edges": list(self.edges)}
        if g is not None:
            d["edge_list"] = [{"id": int(e), "from": int(g.src[e]), "to": int(g.dst[e]),
                               "w1": int(g.winding[e, 0]), "w2": int(g.winding[e, 1])}
                              for e in self.edges]
        return d


def certify(g: PhaseGraph, edges: Sequence[int], cost: np.ndarray) -> CycleCertificate:
    edges = [int(e) for e in edges]
    total_time = len(edges) * g.h_time
    return CycleCertificate(edges, float(cost[edges].sum()) / total_time, total_time)


def _check_closed(g: PhaseGraph, edges: Sequence[int]) -> None:
    for a, b in zip(edges, list(edges[1:]) + [edges[0]]):
        if g.dst[a] != g.src[b]:
            raise AssertionError("certificate is not a closed walk")


def _split_cycles(nodes: list[int], edges: list[int]) -> list[list[int]]:
    """Decompose a walk (``edges[i]`` goes nodes[i] -> nodes[i+1]) into simple cycles."""
    cycles = []
    stack_nodes: list[int] = []
    stack_edges: list[int] = []
    pos: dict[int, int] = {}
    for i, v in enumerate(nodes):
        if v in pos:
            j = pos[v]
            cycles.append(stack_edges[j:])
            for u in stack_nodes[j + 1:]:
                del pos[u]
            del stack_nodes[j + 1:]
            del stack_edges[j:]
        else:
            pos[v] = len(stack_nodes)
            stack_nodes.append(v)
        if i < len(edges):
            stack_edges.append(edges[i])
    return cycles


# --- Karp -------------------------------------------------------------------


def karp(g: PhaseGraph, cost: np.ndarray) -> CycleCertificate:
    """Minimum mean cycle by Karp's theorem, with a virtual zero-cost source."""
    n = g.n_nodes
    tin = g.in_table
    src_tab = gather(g.src, tin, 0).astype(np.int64)
    cost_tab = gather(cost, tin)
    rows = np.arange(n)
    d = np.empty((n + 1, n))
    parent = np.full((n + 1, n), -1, dtype=np.int64)
    d[0] = 0.0
    for step in range(n):
        cand = d[step][src_tab] + cost_tab
        j = cand.argmin(axis=1)
        d[step + 1] = cand[rows, j]
        parent[step + 1] = np.where(np.isfinite(d[step + 1]), tin[rows, j], -1)
    with np.errstate(invalid="ignore"):
        ratios = (d[n][None, :] - d[:n]) / (n - np.arange(n))[:, None]
    ratios = np.where(np.isfinite(d[:n]), ratios, -np.inf)
    worst = ratios.max(axis=0)
    worst = np.where(np.isfinite(d[n]), worst, np.inf)
    v = int(worst.argmin())
    if not np.isfinite(worst[v]):
        raise ValueError("graph has no cycle")
    nodes, edges = [v], []
    for step in range(n, 0, -1):
        e = int(parent[step][v])
        edges.append(e)
        v = int(g.src[e])
        nodes.append(v)
    nodes.reverse()
    edges.reverse()
    best = min((certify(g, cyc, cost) for cyc in _split_cycles(nodes, edges)),
               key=lambda cert: cert.mean_cost)
    return best


# --- Howard -----------------------------------------------------------------


def _evaluate_policy(nxt: np.ndarray, pc: np.ndarray, x_prev: np.ndarray | None = None):
    """Cycle means and relative values of the functional graph ``v -> nxt[v]``.

    Each cycle's reference node keeps its value from ``x_prev``; resetting it
    to zero lets equal-mean cycles trade places forever.
    """
    n = nxt.size
    nxt_l = nxt.tolist()
    pc_l = pc.tolist()
    prev = [0.0] * n if x_prev is None else x_prev.tolist()
    state = [0] * n  # 0 new, 1 on stack, 2 done
    eta = [0.0] * n
    x = [0.0] * n
    cycles = []
    for start in range(n):
        if state[start]:
            continue
        path = []
        v = start
        while state[v] == 0:
            state[v] = 1
            path.append(v)
            v = nxt_l[v]
        if state[v] == 1:
            i = path.index(v)
            cyc = path[i:]
            root = min(cyc)
            r = cyc.index(root)
            ordered = cyc[r:] + cyc[:r]
            mean = sum(pc_l[u] for u in ordered) / len(ordered)
            cycles.append((mean, cyc))
            x[root] = prev[root]
            eta[root] = mean
            for u in reversed(ordered[1:]):
                w = nxt_l[u]
                eta[u] = mean
                x[u] = pc_l[u] - mean + x[w]
            for u in cyc:
                state[u] = 2
            path = path[:i]
        for u in reversed(path):
            w = nxt_l[u]
            eta[u] = eta[w]
            x[u] = pc_l[u] - eta[w] + x[w]
            state[u] = 2
    return np.array(eta), np.array(x), cycles


def howard(g: PhaseGraph, cost: np.ndarray, max_iter: int = 10_000) -> CycleCertificate:
    """Minimum mean cycle by Howard's policy iteration."""
    tout = g.out_table
    if np.any(tout[:, 0] < 0):
        raise ValueError("every node needs an outgoing edge for policy iteration")
    dst_tab = gather(g.dst, tout, 0).astype(np.int64)
    cost_tab = gather(cost, tout)
    valid = tout >= 0
    rows = np.arange(g.n_nodes)
    eps = 1e-12 * max(1.0, float(np.abs(cost).max()))
    slot = cost_tab.argmin(axis=1)
    x = None
    for _ in range(max_iter):
        nxt = dst_tab[rows, slot]
        eta, x, cycles = _evaluate_policy(nxt, cost_tab[rows, slot], x)
        eta_nb = np.where(valid, eta[dst_tab], np.inf)
        m = eta_nb.min(axis=1)
        better = m < eta - eps
        if better.any():
            slot = np.where(better, eta_nb.argmin(axis=1), slot)
            continue
        val = cost_tab - eta[:, None] + x[dst_tab]
        val = np.where(valid & (eta_nb <= eta[:, None] + eps), val, np.inf)
        q = val.min(axis=1)
        # compare with the current edge's own value: on a long cycle it can
        # differ from x by accumulated roundoff
        current = val[rows, slot]
        better = q < current - eps * (1.0 + np.abs(current))
        if not better.any():
            break
        slot = np.where(better, val.argmin(axis=1), slot)
    else:
        raise NumericalFailure("policy iteration did not converge")
    mean, cyc = min(cycles, key=lambda mc: mc[0])
    start = min(cyc)
    i = cyc.index(start)
    cyc = cyc[i:] + cyc[:i]
    return certify(g, [int(tout[u, slot[u]]) for u in cyc], cost)


def min_mean_cycle(g: PhaseGraph, c: CohomologyClass = CohomologyClass(),
                   method: str = "auto") -> CycleCertificate:
    """Cycle minimizing cost per unit time; ``alpha_discrete(c) = -mean_cost``."""
    if g.n_nodes == 0 or g.n_edges == 0:
        raise ValueError("graph is empty")
    cost = g.costs(c)
    if method == "auto":
        method = "karp" if g.n_nodes * g.n_edges <= KARP_WORK_LIMIT else "howard"
    if method == "karp":
        cert = karp(g, cost)
    elif method == "howard":
        cert = howard(g, cost)
    else:
        raise ValueError(f"unknown method {method!r}")
    _check_closed(g, cert.edges)
    return cert


# --- Bellman-Ford -----------------------------------------------------------


def _parent_cycles(g: PhaseGraph, pred: np.ndarray) -> list[list[int]]:
    """All cycles (as edge lists) of the predecessor graph ``v <- src[pred[v]]``."""
    n = g.n_nodes
    has = pred >= 0
    up = np.where(has, g.src[np.where(has, pred, 0)], -1)
    jump = up.copy()
    for _ in range(max(1, int(math.ceil(math.log2(n + 1)))) + 1):
        jump = np.where(jump >= 0, jump[np.where(jump >= 0, jump, 0)], -1)
    on_cycle = np.unique(jump[jump >= 0])
    seen: set[int] = set()
    cycles = []
    for v in on_cycle.tolist():
        if v in seen:
            continue
        edges = []
        u = v
        while True:
            seen.add(u)
            e = int(pred[u])
            edges.append(e)
            u = int(g.src[e])
            if u == v:
                break
        edges.reverse()
        cycles.append(edges)
    return cycles


@dataclass
class RelaxResult:
    potential: np.ndarray
    converged: bool
    cycle: list[int] | None
    iterations: int


def bellman_ford(g: PhaseGraph, cost: np.ndarray, zero: float) -> RelaxResult:
    """Relaxation from a virtual root joined to every node by zero-cost edges.

    Updates smaller than ``zero / (V + 1)`` are ignored, so convergence
    certifies that no cycle costs less than ``-zero``.  A cycle of the
    predecessor graph costing less than ``-zero`` is returned as soon as it
    appears.
    """
    n = g.n_nodes
    tin = g.in_table
    src_tab = gather(g.src, tin, 0).astype(np.int64)
    cost_tab = gather(cost, tin)
    rows = np.arange(n)
    slack = zero / (n + 1)
    dist = np.zeros(n)
    pred = np.full(n, -1, dtype=np.int64)

    def negative_cycle():
        best = None
        for cyc in _parent_cycles(g, pred):
            total = float(cost[cyc].sum())
            if total < -zero and (best is None or total < best[0]):
                best = (total, cyc)
        return None if best is None else best[1]

    for it in range(1, n + 2):
        cand = dist[src_tab] + cost_tab
        j = cand.argmin(axis=1)
        best = cand[rows, j]
        upd = best < dist - slack
        if not upd.any():
            return RelaxResult(dist, True, None, it)
        dist = np.where(upd, best, dist)
        pred = np.where(upd, tin[rows, j], pred)
        cyc = negative_cycle()
        if cyc is not None:
            return RelaxResult(dist, False, cyc, it)
    return RelaxResult(dist, False, negative_cycle(), n + 1)


def has_negative_cycle(g: PhaseGraph, c: CohomologyClass, k: float,
                       zero: float | None = None) -> tuple[bool, CycleCertificate | None]:
    """Whether some cycle has ``L - c + k`` cost below ``-zero``."""
    zero = tol_zero(g, c) if zero is None else zero
    cost = g.costs(c, k)
    res = bellman_ford(g, cost, zero)
    if res.cycle is None:
        return False, None
    _check_closed(g, res.cycle)
    return True, certify(g, res.cycle, g.costs(c))


def cost_rate_bounds(g: PhaseGraph, c: CohomologyClass) -> tuple[float, float]:
    rate = g.costs(c) / g.h_time
    return float(rate.min()), float(rate.max())


def critical_value_bisection(g: PhaseGraph, c: CohomologyClass = CohomologyClass(),
                             tol: float = 1e-9, zero: float | None = None) -> float:
    """Threshold ``k`` between negative cycles (below) and none (above)."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    zero = tol_zero(g, c) if zero is None else zero
    rmin, rmax = cost_rate_bounds(g, c)
    margin = 1.0 + 1e-6 * max(abs(rmin), abs(rmax))
    lo, hi = -rmax - margin, -rmin + margin
    if not has_negative_cycle(g, c, lo, zero)[0]:
        raise BracketError(f"no negative cycle at lower bracket k={lo}")
    if has_negative_cycle(g, c, hi, zero)[0]:
        raise BracketError(f"negative cycle at upper bracket k={hi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if has_negative_cycle(g, c, mid, zero)[0]:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --- alpha over classes -----------------------------------------------------


@dataclass
class AlphaTable:
    classes: list[CohomologyClass]
    values: list[float]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["c1", "c2", "alpha"])
            for c, a in zip(self.classes, self.values):
                w.writerow([repr(c.c1), repr(c.c2), repr(a)])


def alpha_function(g_builder: Callable[[MagneticLagrangian], PhaseGraph], lag: MagneticLagrangian,
                   classes: Sequence[CohomologyClass], method: str = "auto") -> AlphaTable:
    """Discrete alpha at each class, all on one graph."""
    if not classes:
        raise ValueError("need at least one class")
    g = g_builder(lag)
    values = [min_mean_cycle(g, c, method).alpha for c in classes]
    return AlphaTable(list(classes), values)


def class_grid(size: tuple[int, int], radius: float) -> list[CohomologyClass]:
    """``size[0] x size[1]`` classes evenly spaced in ``[-radius, radius]^2``."""
    a = np.linspace(-radius, radius, size[0]) if size[0] > 1 else np.zeros(1)
    b = np.linspace(-radius, radius, size[1]) if size[1] > 1 else np.zeros(1)
    return [CohomologyClass(float(u), float(v)) for u in a for v in b]


def certificate_json(cert: CycleCertificate, g: PhaseGraph) -> str:
    return json.dumps(cert.to_dict(g), sort_keys=True)
