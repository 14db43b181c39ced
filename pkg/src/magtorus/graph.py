"""Speed-capped discretization of the tangent bundle of the torus.

Nodes are the points ``(ix / n, iy / n)``; node id ``ix * n + iy``.  Every
edge takes the same time ``h_time`` and follows a straight lifted segment, so
cycles of the graph are closed polygonal curves with integer winding.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .lagrangian import CohomologyClass, MagneticLagrangian, PhaseState

_NO_EDGE = -1


@dataclass(frozen=True)
class GridSpec:
    n: int
    speed_cap: float
    h_time: float
    windings: int = 1

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 8:
            raise ValueError(f"grid needs n >= 8 cells per axis, got {self.n}")
        if not (math.isfinite(self.h_time) and self.h_time > 0):
            raise ValueError("h_time must be positive")
        if not (math.isfinite(self.speed_cap) and self.speed_cap >= 0):
            raise ValueError("speed_cap must be nonnegative")
        if self.speed_cap * self.h_time >= 0.5:
            raise ValueError("speed_cap * h_time must be below half a period")
        if self.windings < 1 or self.windings > self.speed_cap * self.h_time + 1:
            raise ValueError("windings must satisfy 1 <= windings <= speed_cap * h_time + 1")

    @property
    def velocity_spacing(self) -> float:
        """Velocity of a one-cell step."""
        return 1.0 / (self.n * self.h_time)

    def stencil(self) -> np.ndarray:
        """Integer cell displacements with speed within the cap, rest first."""
        r = int(math.floor(self.speed_cap * self.h_time * self.n + 1e-9))
        d = np.arange(-r, r + 1)
        dx, dy = np.meshgrid(d, d, indexing="ij")
        dx, dy = dx.ravel(), dy.ravel()
        speed = np.hypot(dx, dy) * self.velocity_spacing
        keep = speed <= self.speed_cap * (1 + 1e-12)
        st = np.stack([dx[keep], dy[keep]], axis=1)
        order = np.lexsort((st[:, 1], st[:, 0], np.abs(st).sum(axis=1) > 0))
        return st[order]


@dataclass(frozen=True)
class PhaseEdge:
    src: int
    dst: int
    w1: int
    w2: int
    velocity: tuple[float, float]
    base_action: float
    displacement: tuple[float, float]


class PhaseGraph:
    """Directed multigraph with uniform edge duration.

    Edge data live in parallel arrays: ``src``, ``dst``, ``winding`` (E, 2),
    ``displacement`` (E, 2), ``velocity`` (E, 2), ``midpoint`` (E, 2) and
    ``base_action``.  Grid graphs come from :func:`build_graph`; small abstract
    graphs (for testing the solvers) from :meth:`from_edges`.
    """

    def __init__(self, n_nodes, src, dst, base_action, h_time, displacement=None,
                 winding=None, velocity=None, midpoint=None, spec: GridSpec | None = None,
                 node_xy=None):
        self.n_nodes = int(n_nodes)
        self.src = np.asarray(src, dtype=np.int64)
        self.dst = np.asarray(dst, dtype=np.int64)
        self.base_action = np.asarray(base_action, dtype=float)
        self.h_time = float(h_time)
        m = self.src.size
        if not (self.dst.size == m == self.base_action.size):
            raise ValueError("edge arrays must have equal length")
        if m and (self.src.min() < 0 or self.dst.min() < 0
                  or max(self.src.max(), self.dst.max()) >= self.n_nodes):
            raise ValueError("edge endpoint out of range")
        if not np.all(np.isfinite(self.base_action)):
            raise ValueError("edge actions must be finite")
        zeros = np.zeros((m, 2))
        self.displacement = zeros if displacement is None else np.asarray(displacement, float).reshape(m, 2)
        self.winding = (np.zeros((m, 2), dtype=np.int64) if winding is None
                        else np.asarray(winding, dtype=np.int64).reshape(m, 2))
        self.velocity = self.displacement / self.h_time if velocity is None else np.asarray(velocity, float)
        self.midpoint = zeros if midpoint is None else np.asarray(midpoint, float)
        self.spec = spec
        self.node_xy = node_xy

    @classmethod
    def from_edges(cls, n_nodes: int, edges: Iterable[Sequence], h_time: float = 1.0) -> "PhaseGraph":
        """Build an abstract graph from ``(src, dst, base_action[, d1, d2])`` tuples."""
        rows = [tuple(e) for e in edges]
        src = [r[0] for r in rows]
        dst = [r[1] for r in rows]
        cost = [r[2] for r in rows]
        disp = [(r[3], r[4]) if len(r) >= 5 else (0.0, 0.0) for r in rows]
        return cls(n_nodes, src, dst, cost, h_time, displacement=np.array(disp, float).reshape(-1, 2))

    @property
    def n_edges(self) -> int:
        return int(self.src.size)

    def edge(self, i: int) -> PhaseEdge:
        return PhaseEdge(int(self.src[i]), int(self.dst[i]), int(self.winding[i, 0]),
                         int(self.winding[i, 1]), tuple(self.velocity[i]), float(self.base_action[i]),
                         tuple(self.displacement[i]))

    def edges(self) -> list[PhaseEdge]:
        return [self.edge(i) for i in range(self.n_edges)]

    def costs(self, c: CohomologyClass, k: float = 0.0) -> np.ndarray:
        """Vector of ``edge_cost`` over all edges."""
        return (self.base_action - (c.c1 * self.displacement[:, 0] + c.c2 * self.displacement[:, 1])
                + k * self.h_time)

    def cost_scale(self, c: CohomologyClass) -> float:
        s = float(np.abs(self.costs(c)).max()) if self.n_edges else 0.0
        return s if s > 0 else 1.0

    @cached_property
    def out_table(self) -> np.ndarray:
        """(V, D) edge ids leaving each node, padded with -1."""
        return _incidence_table(self.src, self.n_nodes)

    @cached_property
    def in_table(self) -> np.ndarray:
        """(V, D) edge ids entering each node, padded with -1."""
        return _incidence_table(self.dst, self.n_nodes)

    def node_index(self, ix: int, iy: int) -> int:
        return int(ix) * self.spec.n + int(iy)


def _incidence_table(ends: np.ndarray, n_nodes: int) -> np.ndarray:
    counts = np.bincount(ends, minlength=n_nodes)
    width = int(counts.max()) if counts.size else 0
    table = np.full((n_nodes, max(width, 1)), _NO_EDGE, dtype=np.int64)
    order = np.argsort(ends, kind="stable")
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    slot = np.arange(ends.size) - np.repeat(starts, counts)
    table[ends[order], slot] = order
    return table


def gather(values: np.ndarray, table: np.ndarray, fill: float = np.inf) -> np.ndarray:
    """``values[table]`` with padded slots replaced by ``fill``."""
    out = values[np.where(table >= 0, table, 0)]
    return np.where(table >= 0, out, fill)


def build_graph(lag: MagneticLagrangian, spec: GridSpec) -> PhaseGraph:
    """Grid graph: one edge per node per stencil displacement."""
    n = spec.n
    st = spec.stencil()
    s_count = st.shape[0]
    ix, iy = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    ix = np.repeat(ix.ravel(), s_count)
    iy = np.repeat(iy.ravel(), s_count)
    dx = np.tile(st[:, 0], n * n)
    dy = np.tile(st[:, 1], n * n)
    tx, ty = ix + dx, iy + dy
    w1, w2 = np.floor_divide(tx, n), np.floor_divide(ty, n)
    if np.abs(np.concatenate([w1, w2])).max(initial=0) > spec.windings:
        raise ValueError("stencil exceeds the winding bound")
    src = ix * n + iy
    dst = (tx - w1 * n) * n + (ty - w2 * n)
    disp = np.stack([dx / n, dy / n], axis=1)
    vel = disp / spec.h_time
    mid = np.stack([(ix + 0.5 * dx) / n, (iy + 0.5 * dy) / n], axis=1)
    base = spec.h_time * lag(mid[:, 0], mid[:, 1], vel[:, 0], vel[:, 1])
    # L(q, 0) = 0 exactly
    base = np.where((dx == 0) & (dy == 0), 0.0, base)
    gx, gy = np.meshgrid(np.arange(n) / n, np.arange(n) / n, indexing="ij")
    return PhaseGraph(n * n, src, dst, base, spec.h_time, displacement=disp,
                      winding=np.stack([w1, w2], axis=1), velocity=vel, midpoint=mid,
                      spec=spec, node_xy=np.stack([gx.ravel(), gy.ravel()], axis=1))


def edge_cost(e: PhaseEdge, c: CohomologyClass, k: float, h_time: float) -> float:
    return e.base_action - c.pair(*e.displacement) + k * h_time


def walk_to_path(g: PhaseGraph, walk: Sequence[int]) -> list[tuple[float, PhaseState]]:
    """Lift a walk (edge ids) to a sampled piecewise-straight curve.

    Sample ``i`` carries the velocity of the edge leaving it; the last sample
    repeats the final edge velocity.
    """
    walk = [int(e) for e in walk]
    if not walk:
        raise ValueError("walk must contain at least one edge")
    for a, b in zip(walk[:-1], walk[1:]):
        if g.dst[a] != g.src[b]:
            raise ValueError(f"walk is not contiguous between edges {a} and {b}")
    if g.node_xy is None:
        raise ValueError("walk lifting needs node coordinates")
    x, y = g.node_xy[g.src[walk[0]]]
    path = []
    for i, e in enumerate(walk):
        v1, v2 = g.velocity[e]
        path.append((i * g.h_time, PhaseState.of(x, y, v1, v2)))
        x, y = x + g.displacement[e, 0], y + g.displacement[e, 1]
    v1, v2 = g.velocity[walk[-1]]
    path.append((len(walk) * g.h_time, PhaseState.of(x, y, v1, v2)))
    return path


def walk_winding(g: PhaseGraph, walk: Sequence[int]) -> tuple[int, int]:
    w = g.winding[list(walk)].sum(axis=0)
    return int(w[0]), int(w[1])


def dump_jsonl(g: PhaseGraph, fh) -> None:
    """One JSON object per edge, ordered by source node then stencil slot."""
    order = np.lexsort((np.arange(g.n_edges), g.src))
    for i in order:
        fh.write(json.dumps({"from": int(g.src[i]), "to": int(g.dst[i]),
                             "w1": int(g.winding[i, 0]), "w2": int(g.winding[i, 1]),
                             "base_action": float(g.base_action[i])}) + "\n")
