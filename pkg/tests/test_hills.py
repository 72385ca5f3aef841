from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from popnet.hills import (
    Component,
    ComponentPartition,
    NodeNotFound,
    attractive_partition,
    component_graph,
    induced_arcs,
    is_qch,
    is_quasi_concave_sequence,
    partition_dot,
    partition_violations,
    peel_components,
    qc_path_exists,
)
from popnet.model import ChoiceGraph, FlowDigraph, arcs_from_edges
from popnet.reduction import ReducedGraph, reduce_graph

from conftest import random_instance


def make_red(n, arcs, kept=None):
    kept = tuple(range(n)) if kept is None else tuple(kept)
    return ReducedGraph(FlowDigraph(n, arcs), np.ones(n), kept)


# --- rise-then-fall sequences -----------------------------------------------

def test_sequence_examples():
    assert is_quasi_concave_sequence([5])
    assert is_quasi_concave_sequence([1, 3, 2])
    assert not is_quasi_concave_sequence([3, 1, 2])
    assert is_quasi_concave_sequence([1, 2, 3])
    assert is_quasi_concave_sequence([3, 2, 1])
    assert is_quasi_concave_sequence([2, 2, 2])
    with pytest.raises(ValueError):
        is_quasi_concave_sequence([])


@given(st.lists(st.integers(0, 5), min_size=1, max_size=7))
@settings(max_examples=300)
def test_sequence_matches_definition(vals):
    # no interior value may fall below both of a pair bracketing it
    brute = all(
        vals[m] >= min(vals[k], vals[l])
        for k in range(len(vals))
        for l in range(k, len(vals))
        for m in range(k, l + 1)
    )
    assert is_quasi_concave_sequence(vals) == brute


# --- pairwise hill paths ----------------------------------------------------

def test_path_examples():
    line = ChoiceGraph(3, ((0, 1), (1, 2)))
    assert qc_path_exists(line, [3, 1, 2], 0, 1)  # adjacent: always
    assert not qc_path_exists(line, [3, 1, 2], 0, 2)  # the only path dips
    cycle = ChoiceGraph(4, ((0, 1), (1, 2), (2, 3), (0, 3)))
    assert qc_path_exists(cycle, [3, 1, 2, 2], 0, 2)  # around the back
    assert qc_path_exists(line, [3, 1, 2], 1, 1)
    with pytest.raises(NodeNotFound):
        qc_path_exists(line, [3, 1, 2], 0, 5)


def simple_path_oracle(g, peaks, i, j):
    """Try every simple path; the reference for qc_path_exists."""
    found = False

    def walk(v, path):
        nonlocal found
        if found:
            return
        if v == j:
            found = is_quasi_concave_sequence([peaks[u] for u in path])
            if found:
                return
        for w in g.neighbors[v]:
            if w not in path:
                walk(w, path + [w])

    walk(i, [i])
    return found


def test_path_check_matches_exhaustive_enumeration():
    rng = np.random.default_rng(12)
    for seed in range(20):
        g, _, _ = random_instance(seed, 3, 8)
        for _ in range(5):
            peaks = rng.uniform(0.0, 3.0, g.n)
            if rng.random() < 0.5:
                peaks = np.round(peaks)  # exercise plateaus and ties
            for i in range(g.n):
                for j in range(i + 1, g.n):
                    assert qc_path_exists(g, peaks, i, j) == \
                        simple_path_oracle(g, peaks, i, j), (seed, peaks, i, j)


def test_is_qch_examples():
    assert is_qch(ChoiceGraph(1, ()), [2.0])
    line = ChoiceGraph(4, ((0, 1), (1, 2), (2, 3)))
    assert is_qch(line, [1, 2, 3, 4])  # monotone along the path
    assert is_qch(line, [1, 4, 3, 2])
    assert not is_qch(line, [3, 1, 2, 1])
    assert not is_qch(ChoiceGraph(2, ()), [1, 1])  # disconnected
    with pytest.raises(ValueError):
        is_qch(ChoiceGraph(0, ()), [])


# --- greedy peel ------------------------------------------------------------

def test_peel_flat_graph_is_one_component():
    dg = arcs_from_edges(ChoiceGraph(3, ((0, 1), (1, 2))))
    assert peel_components(dg, [1, 1, 1]) == ((0, 1, 2),)


def test_peel_isolated_nodes():
    dg = FlowDigraph(2, ())
    assert peel_components(dg, [2, 2]) == ((0,), (1,))


def test_peel_chain_example():
    # middle peak: both end-to-middle climbs and the full end-to-end path
    # are rise-then-fall, so one hill covers the chain
    dg = FlowDigraph(3, ((0, 1), (1, 2)))
    assert peel_components(dg, [1, 3, 2]) == ((0, 1, 2),)


def test_peel_splits_on_a_dip():
    dg = arcs_from_edges(ChoiceGraph(3, ((0, 1), (1, 2))))
    # seed is node 0 (peak 3); node 2 cannot climb over the dip at node 1
    assert peel_components(dg, [3, 1, 2]) == ((0, 1), (2,))


def test_peel_respects_pool_restriction():
    dg = arcs_from_edges(ChoiceGraph(3, ((0, 1), (1, 2))))
    assert peel_components(dg, [3, 1, 2], pool=(0, 2)) == ((0,), (2,))


def test_peel_covers_exactly_once():
    for seed in range(20):
        g, pay, _ = random_instance(seed, 3, 8)
        dg = arcs_from_edges(g)
        comps = peel_components(dg, pay.a)
        flat = [v for comp in comps for v in comp]
        assert sorted(flat) == list(range(g.n))
        for comp in comps:
            assert list(comp) == sorted(comp)


# --- attractive / leaking partition -----------------------------------------

def test_partition_whole_graph_attractive():
    red = make_red(3, ((0, 1), (1, 0), (1, 2), (2, 1)))
    part = attractive_partition(red, [1, 3, 2])
    assert len(part.components) == 1
    comp = part.components[0]
    assert comp.nodes == (0, 1, 2) and comp.attractive
    assert partition_violations(part, red, [1, 3, 2]) == ()


def test_partition_one_way_pair():
    red = make_red(2, ((0, 1),))
    part = attractive_partition(red, [1, 2])
    assert [c.nodes for c in part.components] == [(0, 1)]
    assert part.components[0].attractive
    assert partition_violations(part, red, [1, 2]) == ()


def test_partition_evicted_middle():
    # node 1 bridges two one-node hills with one-way arcs out of itself:
    # eviction empties its hill entirely, so it must come back leaking
    red = make_red(3, ((1, 0), (1, 2)))
    peaks = [3, 1, 2]
    part = attractive_partition(red, peaks)
    kinds = {c.nodes: c.attractive for c in part.components}
    assert kinds == {(0,): True, (2,): True, (1,): False}
    assert partition_violations(part, red, peaks) == ()


def test_partition_random_instances_validate():
    for seed in range(30):
        g, pay, state = random_instance(seed, 3, 9)
        red = reduce_graph(arcs_from_edges(g), state.x, pay)
        part = attractive_partition(red, pay.peak_density())
        assert partition_violations(part, red, pay.peak_density()) == ()


def test_checker_flags_bad_partitions():
    red = make_red(2, ((0, 1),))
    peaks = [1, 2]
    good = attractive_partition(red, peaks)
    # mislabeled kind
    flipped = ComponentPartition(tuple(
        Component(c.nodes, c.arcs, not c.attractive) for c in good.components
    ))
    assert partition_violations(flipped, red, peaks)
    # dropped node
    partial = ComponentPartition((Component((0,), (), True),))
    assert any("partition" in p for p in partition_violations(partial, red, peaks))
    # split pair: {0} leaks (arc into {1}), but claiming it attractive fails
    split = ComponentPartition((
        Component((0,), (), True), Component((1,), (), True),
    ))
    assert any("arc leaves" in p for p in partition_violations(split, red, peaks))
    # arcs not induced
    bare = ComponentPartition((Component((0, 1), (), True),))
    assert any("induced" in p for p in partition_violations(bare, red, peaks))


def test_induced_arcs():
    dg = FlowDigraph(3, ((0, 1), (1, 2), (2, 0)))
    assert induced_arcs(dg, (0, 1)) == ((0, 1),)
    assert induced_arcs(dg, (0, 1, 2)) == dg.arcs


# --- component super-structure ----------------------------------------------

def test_component_graph_single():
    red = make_red(2, ((0, 1), (1, 0)))
    part = attractive_partition(red, [1, 2])
    cg = component_graph(part, red, np.array([0.3, 0.7]))
    assert cg.arcs == ()
    np.testing.assert_allclose(cg.masses, [1.0])


def test_component_graph_cross_arcs_and_masses():
    red = make_red(3, ((1, 0), (1, 2)))
    part = attractive_partition(red, [3, 1, 2])
    x0 = np.array([0.2, 0.5, 0.3])
    cg = component_graph(part, red, x0)
    owner = part.component_of
    assert set(cg.arcs) == {(owner[1], owner[0]), (owner[1], owner[2])}
    np.testing.assert_allclose(cg.masses.sum(), 1.0)
    for q, comp in enumerate(part.components):
        np.testing.assert_allclose(cg.masses[q], x0[list(comp.nodes)].sum())


def test_partition_dot():
    red = make_red(3, ((1, 0), (1, 2)))
    part = attractive_partition(red, [3, 1, 2])
    dot = partition_dot(part, red)
    assert dot.startswith("digraph partition {")
    assert dot.endswith("}\n")
    assert "subgraph cluster_0" in dot
    assert "fillcolor=lightblue" in dot and "fillcolor=lightsalmon" in dot
    assert "[style=dashed]" in dot  # the cross arcs
    assert "label=\"leaking" in dot and "label=\"attractive" in dot
