from __future__ import annotations

import numpy as np
import pytest

from popnet.dynamics import DYNAMICS, IntegratorConfig, simulate
from popnet.model import ChoiceGraph, FlowDigraph, QuadraticPayoffs, arcs_from_edges
from popnet.reduction import (
    ReducedGraph,
    eventually_empty_nodes,
    reduce_graph,
    reduction_dot,
    repeat_reduction,
)

from conftest import random_instance


def quad(a, c=None):
    a = np.asarray(a, float)
    c = np.ones_like(a) if c is None else np.asarray(c, float)
    return QuadraticPayoffs(a, c)


def test_isolated_support_node():
    dg = arcs_from_edges(ChoiceGraph(3, ((1, 2),)))
    red = reduce_graph(dg, np.array([0.7, 0.0, 0.0]), quad([1, 1, 1]))
    assert red.kept_nodes == (0,)
    assert red.digraph.arcs == ()
    np.testing.assert_allclose(red.theta, [0.7, 0.0, 0.0])


def test_two_node_prune():
    # node 1's density at its cap, 3 - 1 = 2, still beats node 0's empty
    # density 1, so the back arc can never carry profitable flow
    dg = arcs_from_edges(ChoiceGraph(2, ((0, 1),)))
    red = repeat_reduction(dg, np.array([1.0, 0.0]), quad([1.0, 3.0]))
    assert red.digraph.arcs == ((0, 1),)
    assert red.kept_nodes == (0, 1)
    np.testing.assert_allclose(red.theta, [1.0, 1.0])


def test_no_removal_keeps_reachable_part():
    # low caps remove nothing; the untouched component still drops out
    g = ChoiceGraph(4, ((0, 1), (1, 2)))
    red = repeat_reduction(arcs_from_edges(g), np.array([0.1, 0.0, 0.0, 0.0]),
                           quad([1, 1, 1, 1]))
    assert red.kept_nodes == (0, 1, 2)
    assert set(red.digraph.arcs) == {(0, 1), (1, 0), (1, 2), (2, 1)}
    np.testing.assert_allclose(red.theta, [0.1, 0.1, 0.1, 0.0])


def test_second_pass_tightens():
    # path 0-1-2 with mass on both ends.  Pass one removes (0,1): node 0 at
    # cap 1.0 has density 0.8 >= node 1's empty density 0.6.  That cuts node
    # 0's mass out of node 2's cap, so pass two sees u_2(0.5) = 0.8 >= 0.6
    # and removes (2,1) as well; node 1 is then unreachable and drops.
    g = ChoiceGraph(3, ((0, 1), (1, 2)))
    pay = quad([1.8, 0.6, 1.3])
    x0 = np.array([0.5, 0.0, 0.5])

    once = repeat_reduction(arcs_from_edges(g), x0, pay)
    assert set(once.digraph.arcs) == {(1, 0), (1, 2), (2, 1)}
    assert once.kept_nodes == (0, 1, 2)
    np.testing.assert_allclose(once.theta, [1.0, 1.0, 1.0])
    assert eventually_empty_nodes(once) == (1,)

    fixed = reduce_graph(arcs_from_edges(g), x0, pay)
    assert fixed.kept_nodes == (0, 2)
    assert fixed.digraph.arcs == ()
    np.testing.assert_allclose(fixed.theta, [0.5, 0.0, 0.5])


def test_fixed_point_is_idempotent():
    for seed in range(15):
        g, pay, state = random_instance(seed, 3, 8)
        red = reduce_graph(arcs_from_edges(g), state.x, pay)
        again = repeat_reduction(red.digraph, state.x, pay)
        assert again.digraph == red.digraph
        assert again.kept_nodes == red.kept_nodes
        np.testing.assert_allclose(again.theta, red.theta)


def test_support_below_threshold_ignored():
    dg = arcs_from_edges(ChoiceGraph(2, ((0, 1),)))
    red = reduce_graph(dg, np.array([1.0, 5e-13]), quad([1.0, 5.0]))
    np.testing.assert_allclose(red.theta, [1.0, 1.0])
    # node 1's sliver did not seed any cap and node 0 keeps only its own mass


def test_reduction_structural_invariants():
    for seed in range(30):
        g, pay, state = random_instance(seed, 3, 8)
        dg = arcs_from_edges(g)
        red1 = repeat_reduction(dg, state.x, pay)
        kept = set(red1.kept_nodes)
        supp = {int(i) for i in np.flatnonzero(state.x > 1e-12)}
        assert supp <= kept
        # a single pass never orphans both directions of a kept pair
        for i, j in g.edges:
            if i in kept and j in kept:
                assert red1.digraph.has_arc(i, j) or red1.digraph.has_arc(j, i)
        red = reduce_graph(dg, state.x, pay)
        kept = set(red.kept_nodes)
        assert supp <= kept
        assert kept == set(red.digraph.reachable_from(sorted(supp)))
        # no kept arc still satisfies the removal condition
        for i, j in red.digraph.arcs:
            assert not pay.u(red.theta)[i] >= pay.u(np.zeros(g.n))[j]


def test_eventually_empty_examples():
    both = ReducedGraph(FlowDigraph(2, ((0, 1), (1, 0))), np.ones(2), (0, 1))
    assert eventually_empty_nodes(both) == ()
    one_way = ReducedGraph(FlowDigraph(2, ((0, 1),)), np.ones(2), (0, 1))
    assert eventually_empty_nodes(one_way) == (0,)


def test_eventually_empty_nodes_drain():
    checked = 0
    for seed in range(20):
        g, pay, state = random_instance(seed, 3, 7)
        red = reduce_graph(arcs_from_edges(g), state.x, pay)
        doomed = eventually_empty_nodes(red)
        if not doomed:
            continue
        traj = simulate(red.digraph, pay, state, "nbrd",
                        IntegratorConfig(h=0.02, t_max=2000.0))
        for i in doomed:
            assert traj.final.x[i] <= 1e-6
        checked += 1
    assert checked >= 3


@pytest.mark.parametrize("dynamic", DYNAMICS)
def test_theta_caps_trajectories(dynamic):
    for seed in (0, 4, 8):
        g, pay, state = random_instance(seed, 3, 7)
        red = reduce_graph(arcs_from_edges(g), state.x, pay)
        traj = simulate(red.digraph, pay, state, dynamic,
                        IntegratorConfig(h=0.02, t_max=50.0), theta=red.theta)
        assert traj.diagnostics["theta_excess"] <= 1e-9


@pytest.mark.parametrize("dynamic", DYNAMICS)
def test_pruning_preserves_trajectories(dynamic):
    # the pruned arcs carry no flow, so full and reduced runs coincide
    cfg = IntegratorConfig(h=0.02, t_max=20.0, record_stride=1)
    for seed in (1, 2, 6):
        g, pay, state = random_instance(seed, 3, 7)
        dg = arcs_from_edges(g)
        red = reduce_graph(dg, state.x, pay)
        full = simulate(dg, pay, state, dynamic, cfg)
        pruned = simulate(red.digraph, pay, state, dynamic, cfg)
        n_common = min(len(full.times), len(pruned.times))
        assert abs(len(full.times) - len(pruned.times)) <= 1
        np.testing.assert_allclose(
            full.states[:n_common], pruned.states[:n_common], atol=1e-9
        )


def test_dot_rendering():
    dg = arcs_from_edges(ChoiceGraph(2, ((0, 1),)))
    red = reduce_graph(dg, np.array([1.0, 0.0]), quad([1.0, 3.0]))
    dot = reduction_dot(red)
    assert dot.startswith("digraph icrg {")
    assert dot.endswith("}\n")
    assert 'n1 [label="1\\ntheta=1"];' in dot
    assert "n1 -> n2;" in dot
    assert "n2 -> n1;" not in dot
