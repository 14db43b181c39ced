import numpy as np
import pytest

from magtorus.critical import (AlphaTable, class_grid, critical_value_bisection, has_negative_cycle,
                               howard, karp, min_mean_cycle, tol_zero)
from magtorus.errors import BracketError
from magtorus.graph import GridSpec, PhaseGraph, build_graph
from magtorus.lagrangian import CohomologyClass, MagneticLagrangian, OneForm
from oracles import exact_min_mean, random_small_graph, simple_cycles

C0 = CohomologyClass()


def test_simple_cycle_oracle_counts():
    # complete digraph on 3 nodes with self-loops: 3 loops, 3 two-cycles, 2 three-cycles
    edges = [(i, j, 0.0) for i in range(3) for j in range(3)]
    assert len(simple_cycles(PhaseGraph.from_edges(3, edges))) == 8


def test_two_node_oracle(two_node):
    for method in ("karp", "howard"):
        cert = min_mean_cycle(two_node, C0, method)
        assert cert.mean_cost == -1.0
        assert sorted(cert.edges) == [0, 1]
    assert has_negative_cycle(two_node, C0, 0.999)[0]
    assert not has_negative_cycle(two_node, C0, 1.001)[0]
    # a cycle counts as negative only below -tol_zero, so the threshold sits
    # at most tol_zero / (cycle time) below the exact value
    bias = tol_zero(two_node, C0) / (2 * two_node.h_time)
    assert 1.0 - bias - 1e-9 <= critical_value_bisection(two_node) <= 1.0 + 1e-9


@pytest.mark.parametrize("seed", range(40))
def test_solvers_match_enumeration(seed):
    rng = np.random.default_rng(seed)
    g = random_small_graph(rng)
    cost = g.costs(C0)
    want = exact_min_mean(g, cost)
    for solver in (karp, howard):
        cert = solver(g, cost)
        assert cert.mean_cost == float(want)
        # the certificate is a closed walk with the reported mean
        e = cert.edges
        assert all(g.dst[a] == g.src[b] for a, b in zip(e, e[1:] + e[:1]))
    assert abs(critical_value_bisection(g) + float(want)) <= 1e-9 + tol_zero(g, C0) / g.h_time


def test_wide_cost_range_still_within_contract():
    g = random_small_graph(np.random.default_rng(7), max_cost=20)
    want = float(exact_min_mean(g, g.costs(C0)))
    assert abs(critical_value_bisection(g) + want) <= 1e-9 + tol_zero(g, C0) / g.h_time


def test_parallel_edges_and_self_loops():
    g = PhaseGraph.from_edges(2, [(0, 0, 5.0), (0, 1, 3.0), (0, 1, -4.0), (1, 0, 2.0), (1, 1, -0.5)])
    for method in ("karp", "howard"):
        cert = min_mean_cycle(g, C0, method)
        assert cert.mean_cost == -1.0
    assert exact_min_mean(g, g.costs(C0)) == -1


def test_negative_cycle_certificate_is_real():
    rng = np.random.default_rng(7)
    g = random_small_graph(rng)
    alpha = -min_mean_cycle(g).mean_cost
    neg, cert = has_negative_cycle(g, C0, alpha - 0.5)
    assert neg
    assert (g.costs(C0, alpha - 0.5)[cert.edges].sum()) < 0
    assert not has_negative_cycle(g, C0, alpha + 1e-6)[0]


def test_class_enters_through_displacement():
    # one loop winding once in x (total displacement 1), one rest loop
    g = PhaseGraph.from_edges(2, [(0, 1, 1.0, 0.5, 0.0), (1, 0, 1.0, 0.5, 0.0), (0, 0, 0.0)])
    assert min_mean_cycle(g, C0).alpha == 0.0
    assert min_mean_cycle(g, CohomologyClass(3.0, 0.0)).alpha == pytest.approx(0.5)


def test_empty_graph_rejected():
    with pytest.raises(ValueError):
        min_mean_cycle(PhaseGraph.from_edges(1, []), C0)
    with pytest.raises(ValueError):
        min_mean_cycle(PhaseGraph.from_edges(1, [(0, 0, 1.0)]), C0, "simplex")


def test_bisection_bracket_failure_raises():
    g = PhaseGraph.from_edges(2, [(0, 1, 1.0)])  # acyclic
    with pytest.raises(BracketError):
        critical_value_bisection(g)


def test_karp_and_howard_agree_on_grid_graph():
    lag = MagneticLagrangian(OneForm([[0.3, 0.1, 1, 1]], [[-0.4, 0.2, 1, 0]]))
    g = build_graph(lag, GridSpec(12, 2.0, 1 / 12))
    for c in (C0, CohomologyClass(0.4, -0.2)):
        a = min_mean_cycle(g, c, "karp").mean_cost
        b = min_mean_cycle(g, c, "howard").mean_cost
        assert a == pytest.approx(b, abs=1e-12)


def test_class_grid_and_table(tmp_path):
    classes = class_grid((5, 3), 0.5)
    assert len(classes) == 15
    assert classes[0] == CohomologyClass(-0.5, -0.5)
    assert class_grid((1, 1), 0.5) == [C0]
    AlphaTable(classes[:2], [1.0, 0.25]).write_csv(tmp_path / "a.csv")
    assert (tmp_path / "a.csv").read_text() == "c1,c2,alpha\n-0.5,-0.5,1.0\n-0.5,0.0,0.25\n"


def test_howard_matches_karp_far_from_zero():
    lag = MagneticLagrangian(OneForm([[0.3, 0.1, 1, 1]], [[-1.2, 0.2, 1, 0]]))
    g = build_graph(lag, GridSpec(16, 5.0, 1 / 16))
    for c in class_grid((4, 4), 3.0):
        a = min_mean_cycle(g, c, "karp").mean_cost
        b = min_mean_cycle(g, c, "howard").mean_cost
        assert a == pytest.approx(b, abs=1e-12)


def test_howard_terminates_on_long_critical_cycles():
    # roundoff around a cycle of ~1000 edges once kept policy iteration spinning
    from magtorus.examples import ExampleSpec, build_example, default_grid
    spec = ExampleSpec("two_well")
    g = build_graph(build_example(spec), default_grid(spec))
    cert = howard(g, g.costs(CohomologyClass(3.0, 1.5)), max_iter=200)
    assert cert.alpha == pytest.approx(7.417557436985161, rel=1e-12)
