import io
import json

import numpy as np
import pytest

from magtorus.graph import GridSpec, PhaseGraph, build_graph, dump_jsonl, edge_cost, walk_to_path
from magtorus.graph import walk_winding
from magtorus.lagrangian import CohomologyClass, MagneticLagrangian, OneForm, curve_action


def lag0():
    return MagneticLagrangian(OneForm([[0.2, 0.0, 0, 1]], [[0.0, -0.3, 1, 0]]))


def test_grid_spec_validation():
    with pytest.raises(ValueError):
        GridSpec(4, 1.0, 0.1)
    with pytest.raises(ValueError):
        GridSpec(16, 10.0, 0.1)  # cap * h >= 1/2
    with pytest.raises(ValueError):
        GridSpec(16, 1.0, 0.1, windings=3)
    GridSpec(16, 0.0, 0.1)  # rest-only stencil is allowed


def test_stencil_is_symmetric_with_rest_first():
    st = GridSpec(16, 5.0, 1 / 16).stencil()
    assert st[0].tolist() == [0, 0]
    pairs = {tuple(d) for d in st.tolist()}
    assert all((-a, -b) in pairs for a, b in pairs)
    speeds = np.hypot(st[:, 0], st[:, 1])  # velocity spacing is 1
    assert speeds.max() <= 5.0


def test_build_graph_shapes_and_edge_data():
    spec = GridSpec(8, 3.0, 1 / 8)
    g = build_graph(lag0(), spec)
    s = spec.stencil().shape[0]
    assert g.n_nodes == 64 and g.n_edges == 64 * s
    assert np.all(np.bincount(g.src, minlength=64) == s)
    assert np.all(np.bincount(g.dst, minlength=64) == s)
    rest = (g.displacement == 0).all(axis=1)
    assert np.all(g.base_action[rest] == 0.0)
    i = int(np.flatnonzero(~rest)[5])
    e = g.edge(i)
    mid = g.midpoint[i]
    expect = spec.h_time * float(lag0()(mid[0], mid[1], *g.velocity[i]))
    assert e.base_action == pytest.approx(expect)
    c = CohomologyClass(0.3, -0.7)
    assert edge_cost(e, c, 1.5, g.h_time) == pytest.approx(g.costs(c, 1.5)[i])


def test_wrapping_edges_carry_winding():
    g = build_graph(lag0(), GridSpec(8, 1.0, 1 / 8))
    # node (7, 0) stepping +x lands on (0, 0) with winding (1, 0)
    src = g.node_index(7, 0)
    hit = [i for i in range(g.n_edges) if g.src[i] == src and tuple(g.displacement[i]) == (1 / 8, 0)]
    assert len(hit) == 1
    assert g.dst[hit[0]] == g.node_index(0, 0)
    assert g.winding[hit[0]].tolist() == [1, 0]


def test_walk_cost_equals_curve_action():
    g = build_graph(lag0(), GridSpec(8, 2.0, 1 / 8))
    st = np.flatnonzero((g.displacement[:, 0] == 0) & (g.displacement[:, 1] == 1 / 8))
    by_src = {int(g.src[e]): int(e) for e in st}
    walk, node = [], g.node_index(3, 0)
    for _ in range(8):
        e = by_src[node]
        walk.append(e)
        node = int(g.dst[e])
    assert walk_winding(g, walk) == (0, 1)
    c = CohomologyClass(0.4, 0.25)
    path = walk_to_path(g, walk)
    assert len(path) == 9
    assert curve_action(lag0(), c, 0.7, path) == pytest.approx(g.costs(c, 0.7)[walk].sum())


def test_walk_must_be_contiguous():
    g = PhaseGraph.from_edges(3, [(0, 1, 1.0), (2, 0, 1.0)])
    with pytest.raises(ValueError):
        walk_to_path(g, [0, 1])


def test_from_edges_and_tables():
    g = PhaseGraph.from_edges(3, [(0, 1, 1.0), (0, 2, 2.0), (2, 0, -1.0, 0.5, 0.0)], h_time=0.5)
    assert g.out_table.shape == (3, 2)
    assert sorted(g.out_table[0].tolist()) == [0, 1]
    assert g.out_table[1].tolist() == [-1, -1]
    assert g.costs(CohomologyClass(2.0, 0.0), 1.0).tolist() == [1.5, 2.5, -1.5]


def test_dump_jsonl_is_one_object_per_edge():
    g = build_graph(lag0(), GridSpec(8, 1.0, 1 / 8))
    buf = io.StringIO()
    dump_jsonl(g, buf)
    lines = buf.getvalue().splitlines()
    assert len(lines) == g.n_edges
    assert set(json.loads(lines[0])) == {"from", "to", "w1", "w2", "base_action"}
