from __future__ import annotations

import numpy as np
import pytest

from popnet.bounds import (
    BoundsReport,
    TooLargeForExactEnumeration,
    compute_bounds,
    lower_bound,
    rho_max_caps,
    upper_bound,
)
from popnet.dynamics import IntegratorConfig, simulate
from popnet.hills import attractive_partition, component_graph
from popnet.model import (
    ChoiceGraph,
    FlowDigraph,
    QuadraticPayoffs,
    arcs_from_edges,
    social_utility,
)
from popnet.reduction import ReducedGraph, reduce_graph
from popnet.waterfill import max_welfare, solve_waterfill

from conftest import random_instance


def quad(a, c=None):
    a = np.asarray(a, float)
    c = np.ones_like(a) if c is None else np.asarray(c, float)
    return QuadraticPayoffs(a, c)


def make_red(n, arcs, theta=None, kept=None):
    kept = tuple(range(n)) if kept is None else tuple(kept)
    theta = np.ones(n) if theta is None else np.asarray(theta, float)
    return ReducedGraph(FlowDigraph(n, arcs), theta, kept)


# --- upper bound ------------------------------------------------------------

def test_upper_bound_no_arcs_is_start_utility():
    pay = quad([1.0, 2.0])
    x0 = np.array([0.6, 0.4])
    red = make_red(2, ())
    u_max, w = upper_bound(red, x0, pay)
    assert u_max == pytest.approx(social_utility(x0, pay), abs=1e-12)
    np.testing.assert_allclose(w, x0, atol=1e-12)


def test_upper_bound_worked_pair():
    # everything can migrate to the better node; optimum parks it all there
    red = make_red(2, ((0, 1),))
    u_max, w = upper_bound(red, np.array([1.0, 0.0]), quad([1.0, 2.0]))
    assert u_max == pytest.approx(1.5, abs=1e-7)
    np.testing.assert_allclose(w, [0.0, 1.0], atol=1e-6)


def test_upper_bound_dominates_start():
    for seed in range(20):
        g, pay, state = random_instance(seed, 3, 8)
        red = reduce_graph(arcs_from_edges(g), state.x, pay)
        u_max, _ = upper_bound(red, state.x, pay)
        assert u_max >= social_utility(state.x, pay) - 1e-9


# --- retention caps ---------------------------------------------------------

def test_caps_every_member_draining():
    red = make_red(3, ((0, 1), (1, 2), (2, 0)))  # one-way cycle: all drain
    part = attractive_partition(red, [1.0, 1.0, 1.0])
    assert len(part.components) == 1
    caps = rho_max_caps(part, red, quad([1, 1, 1]), 1.0)
    np.testing.assert_allclose(caps, [0.0])


def test_caps_mixed_hand_value():
    # draining node 1 has peak 2; node 0 holds mass only down to that
    # density, i.e. up to occupancy u_0^{-1}(2) = 3 - 2 = 1
    red = make_red(2, ((1, 0),))
    pay = quad([3.0, 2.0])
    part = attractive_partition(red, pay.peak_density())
    assert [c.nodes for c in part.components] == [(0, 1)]
    caps = rho_max_caps(part, red, pay, 5.0)
    np.testing.assert_allclose(caps, [1.0])


def test_caps_no_draining_member():
    red = make_red(2, ((0, 1), (1, 0)))
    part = attractive_partition(red, [1.0, 2.0])
    caps = rho_max_caps(part, red, quad([1.0, 2.0]), 0.7)
    np.testing.assert_allclose(caps, [0.7])


def test_caps_clip_and_rho_ceiling():
    # the draining peak tops the holder's: no room at all
    red = make_red(2, ((1, 0),))
    pay = quad([1.5, 2.0])
    part = attractive_partition(red, pay.peak_density())
    np.testing.assert_allclose(rho_max_caps(part, red, pay, 1.0), [0.0])
    # plenty of room, but never more than the whole population
    red2 = make_red(2, ((1, 0),))
    pay2 = quad([9.0, 1.0])
    part2 = attractive_partition(red2, pay2.peak_density())
    np.testing.assert_allclose(rho_max_caps(part2, red2, pay2, 0.5), [0.5])


# --- lower bound ------------------------------------------------------------

def test_lower_bound_single_hill():
    red = make_red(2, ((0, 1), (1, 0)))
    pay = quad([2.0, 1.0])
    part = attractive_partition(red, pay.peak_density())
    sg = component_graph(part, red, np.array([0.3, 0.7]))
    caps = rho_max_caps(part, red, pay, 1.0)
    u_min, witness = lower_bound(sg, caps, pay)
    assert u_min == pytest.approx(max_welfare(pay, (0, 1), 1.0), abs=1e-12)
    np.testing.assert_allclose(witness["inflows"], [1.0])


def test_lower_bound_relabeling_invariance():
    for seed in (1, 3, 11):
        g, pay, state = random_instance(seed, 4, 9)
        rep = compute_bounds(g, state.x, pay)
        rng = np.random.default_rng(seed)
        perm = rng.permutation(g.n)
        inv = np.argsort(perm)
        g2 = ChoiceGraph(g.n, tuple(
            (min(perm[i], perm[j]), max(perm[i], perm[j])) for i, j in g.edges
        ))
        pay2 = QuadraticPayoffs(pay.a[inv], pay.c[inv])
        rep2 = compute_bounds(g2, state.x[inv], pay2)
        assert rep2.u_min == pytest.approx(rep.u_min, abs=1e-9)
        assert rep2.u_max == pytest.approx(rep.u_max, abs=1e-9)


@pytest.mark.parametrize("seed", [11, 21, 24, 25, 38])
def test_lower_bound_matches_polytope_grid(seed):
    # dense grid over the transfer amounts; every feasible grid point is an
    # upper bound on the minimum, and the true minimum is a vertex the
    # enumeration visited, so u_min can only sit below the grid's best
    g, pay, state = random_instance(seed, 4, 9)
    rep = compute_bounds(g, state.x, pay)
    sg = rep.supergraph
    d = len(sg.arcs)
    assert 1 <= d <= 4 and len(rep.partition.components) <= 3
    axes = [np.arange(0.0, sg.masses[src] + 0.05, 0.05) for src, _ in sg.arcs]
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([a.ravel() for a in grids], axis=1)
    best = np.inf
    for x in pts:
        xi = sg.masses.copy()
        ok = True
        out_used = np.zeros(len(sg.partition.components))
        for e, (src, dst) in enumerate(sg.arcs):
            xi[src] -= x[e]
            xi[dst] += x[e]
            out_used[src] += x[e]
        if np.any(out_used > sg.masses + 1e-12) or np.any(xi > rep.caps + 1e-12):
            continue
        if np.any(xi < -1e-12):
            continue
        val = sum(
            max_welfare(pay, comp.nodes, float(max(xi[q], 0.0)))
            for q, comp in enumerate(rep.partition.components)
        )
        best = min(best, val)
    assert np.isfinite(best)
    assert rep.u_min <= best + 1e-9
    assert best - rep.u_min <= 0.2  # grid resolution slack


def test_enumeration_budget_enforced():
    g, pay, state = random_instance(11, 4, 9)
    with pytest.raises(TooLargeForExactEnumeration):
        compute_bounds(g, state.x, pay, enum_budget=1)


# --- full pipeline ----------------------------------------------------------

def test_bounds_collapse_on_worked_pair():
    g = ChoiceGraph(2, ((0, 1),))
    pay = quad([2.0, 1.0])
    rep = compute_bounds(g, np.array([0.0, 1.0]), pay)
    assert rep.u_max == pytest.approx(1.5, abs=1e-7)
    assert rep.u_min == pytest.approx(1.5, abs=1e-7)
    assert [c.nodes for c in rep.partition.components] == [(0, 1)]


def test_bounds_collapse_on_hill_instance():
    # peaks rise then fall along a path: one attractive hill, tight bracket
    g = ChoiceGraph(4, ((0, 1), (1, 2), (2, 3)))
    pay = quad([0.9, 1.4, 2.0, 1.2])
    x0 = np.array([0.5, 0.0, 0.0, 0.5])
    rep = compute_bounds(g, x0, pay)
    target = max_welfare(pay, range(4), 1.0)
    assert rep.u_max == pytest.approx(target, abs=1e-6)
    assert rep.u_min == pytest.approx(target, abs=1e-6)


def test_bounds_bracket_start_at_optimum():
    pay = quad([2.0, 1.5, 1.0])
    g = ChoiceGraph(3, ((0, 1), (1, 2), (0, 2)))
    best = solve_waterfill(pay, range(3), 1.0)
    rep = compute_bounds(g, best.x, pay)
    u0 = social_utility(best.x, pay)
    assert rep.u_min - 1e-9 <= u0 <= rep.u_max + 1e-9


def test_bounds_empty_population():
    g = ChoiceGraph(3, ((0, 1), (1, 2)))
    rep = compute_bounds(g, np.zeros(3), quad([1, 1, 1]))
    assert rep.u_max == 0.0
    assert rep.u_min == 0.0


def test_bounds_ordering_invariant():
    for seed in range(25):
        g, pay, state = random_instance(seed, 4, 9)
        rep = compute_bounds(g, state.x, pay)
        assert rep.u_min <= rep.u_max + 1e-9
        assert isinstance(rep, BoundsReport)


@pytest.mark.parametrize("dynamic", ["nbrd", "nrpm"])
def test_settled_utility_lands_in_bracket(dynamic):
    cfg = IntegratorConfig(h=0.02, eq_tol=1e-9, t_max=2000.0)
    for seed in (0, 1, 3, 11):
        g, pay, state = random_instance(seed, 4, 9)
        rep = compute_bounds(g, state.x, pay)
        traj = simulate(g, pay, state, dynamic, cfg)
        u_bar = traj.utilities[-1]
        assert u_bar <= rep.u_max + 1e-4, (seed, u_bar, rep.u_max)
        if traj.converged:
            assert u_bar >= rep.u_min - 1e-4, (seed, u_bar, rep.u_min)


def test_report_json_shape():
    g, pay, state = random_instance(1, 4, 6)
    rep = compute_bounds(g, state.x, pay)
    doc = rep.to_json_dict()
    assert set(doc) == {"u_max", "u_min", "super_nodes", "witness"}
    members = [m for sn in doc["super_nodes"] for m in sn["members"]]
    assert sorted(members) == [v + 1 for v in rep.reduced.kept_nodes]
    for sn in doc["super_nodes"]:
        assert set(sn) == {"members", "mass", "cap", "attractive"}
    assert len(doc["witness"]["upper_received"]) == g.n
    for t in doc["witness"]["lower_transfers"]:
        assert set(t) == {"from", "to", "mass"}
