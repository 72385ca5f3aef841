#!/usr/bin/env python3
"""Search for the bundled scenario parameters and freeze them as JSON.

The shipped scenarios demonstrate orderings and structure (pairwise shifting
beating neighborhood re-leveling, re-leveling beating the coordinated
reallocation, a hill-shaped network where the bounds collapse, and a larger
graph with a nontrivial bound gap).  Graph shapes are fixed; payoff and
initial-state parameters are found here by small grid/seed searches and then
written to src/popnet/scenarios/.  Re-running the script reproduces the same
files.

Usage: python3 tools/find_scenarios.py [--quick]
"""
from __future__ import annotations

import argparse
import itertools
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from popnet.bounds import compute_bounds
from popnet.dynamics import IntegratorConfig, simulate
from popnet.hills import is_qch
from popnet.instances import Instance, save_instance
from popnet.model import ChoiceGraph, PopulationState, QuadraticPayoffs, social_utility
from popnet.waterfill import solve_waterfill

OUT_DIR = Path(__file__).resolve().parent.parent / "src" / "popnet" / "scenarios"

SCREEN = IntegratorConfig(h=0.05, eq_tol=1e-7, t_max=400.0)
VERIFY = IntegratorConfig(h=0.02, eq_tol=1e-9, t_max=30_000.0)


def path_graph(n: int) -> ChoiceGraph:
    return ChoiceGraph(n, tuple((i, i + 1) for i in range(n - 1)))


def settled_utilities(inst: Instance, names, config) -> dict[str, float]:
    out = {}
    for dyn in names:
        traj = simulate(inst.graph, inst.payoffs, inst.state, dyn, config)
        out[dyn] = social_utility(traj.final, inst.payoffs)
    return out


def find_ssd_beats_nbrd(quick: bool) -> Instance:
    """4-node path, all mass on node 3 (1-based).  Wanted: re-leveling keeps
    node 3's outflow pointed at node 4 only, while pairwise shifting also
    leaks into node 2 and from there discovers the high payoff at node 1."""
    g = path_graph(4)
    best = None
    a1_grid = (1.6, 2.0, 2.4, 2.8)
    a3_grid = (0.9, 1.1, 1.3)
    a4_grid = (1.2, 1.5, 1.8)
    for a1, a3, a4 in itertools.product(a1_grid, a3_grid, a4_grid):
        lo = a3 - 1.0 + 0.1  # node 2 must attract pairwise flow out of node 3
        hi = (a3 + a4 - 1.0) / 2.0 - 0.1  # ... yet sit below the {3,4} fill level
        for a2 in np.round(np.arange(0.1, 3.0, 0.1), 10):
            if not (lo <= a2 <= hi):
                continue
            payoffs = QuadraticPayoffs([a1, a2, a3, a4], [1.0, 1.0, 1.0, 1.0])
            inst = Instance(g, payoffs, PopulationState([0.0, 0.0, 1.0, 0.0], 1.0))
            u = settled_utilities(inst, ("ssd", "nbrd"), SCREEN)
            gap = u["ssd"] - u["nbrd"]
            if best is None or gap > best[0]:
                best = (gap, inst)
        if quick and best and best[0] > 0.01:
            break
    gap, inst = best
    print(f"  screen winner gap={gap:.4f} a={inst.payoffs.a}")
    u = settled_utilities(inst, ("ssd", "nbrd"), VERIFY)
    gap = u["ssd"] - u["nbrd"]
    print(f"  verified: U_ssd={u['ssd']:.6f} U_nbrd={u['nbrd']:.6f} gap={gap:.4f}")
    assert gap >= 5e-3, "search failed to reproduce the ordering with margin"
    return inst


def find_nbrd_beats_nrpm(quick: bool) -> Instance:
    """5-node path, mass split between nodes 2 and 3.  Wanted: re-leveling at
    node 3 sees node 2 still occupied and overshoots toward nodes 4-5, while
    the coordinated reallocation anticipates node 2 emptying into node 1 and
    routes less mass toward the high payoff at node 5."""
    g = path_graph(5)
    best = None
    grids = dict(
        a1=(1.4, 1.8),
        a2=(0.8, 1.1),
        a3=(0.5, 0.7),
        a4=(0.9, 1.2),
        a5=(1.8, 2.2),
        m2=(0.4, 0.5, 0.6),
    )
    for a1, a2, a3, a4, a5, m2 in itertools.product(*grids.values()):
        payoffs = QuadraticPayoffs([a1, a2, a3, a4, a5], np.ones(5))
        inst = Instance(g, payoffs, PopulationState([0.0, m2, 1.0 - m2, 0.0, 0.0], 1.0))
        u = settled_utilities(inst, ("nbrd", "nrpm"), SCREEN)
        gap = u["nbrd"] - u["nrpm"]
        if best is None or gap > best[0]:
            best = (gap, inst)
            print(f"  candidate gap={gap:.4f} a={payoffs.a} m2={m2}")
        if quick and best[0] > 0.01:
            break
    gap, inst = best
    u = settled_utilities(inst, ("nbrd", "nrpm"), VERIFY)
    gap = u["nbrd"] - u["nrpm"]
    print(f"  verified: U_nbrd={u['nbrd']:.6f} U_nrpm={u['nrpm']:.6f} gap={gap:.4f}")
    assert gap >= 5e-3, "search failed to reproduce the ordering with margin"
    return inst


def find_qch_hill() -> Instance:
    """6-node path with a single interior peak, so every pair of nodes is
    joined by a path that climbs before it descends.  All three dynamics
    should settle on the one optimum and the bounds should collapse."""
    a = [0.8, 1.2, 2.0, 1.6, 1.0, 0.6]
    c = [1.0, 0.8, 1.0, 1.2, 1.0, 0.9]
    g = path_graph(6)
    payoffs = QuadraticPayoffs(a, c)
    assert is_qch(g, payoffs.peak_density())
    inst = Instance(g, payoffs, PopulationState([0.3, 0.0, 0.0, 0.0, 0.5, 0.2], 1.0))

    report = compute_bounds(inst.graph, inst.state.x, inst.payoffs)
    print(f"  bounds: u_min={report.u_min:.9f} u_max={report.u_max:.9f}")
    assert abs(report.u_min - report.u_max) <= 1e-9

    opt = solve_waterfill(payoffs, tuple(range(6)), 1.0)
    u = settled_utilities(inst, ("ssd", "nbrd", "nrpm"), VERIFY)
    for dyn, val in u.items():
        print(f"  {dyn}: U={val:.9f} (optimum {opt.value:.9f})")
        assert abs(val - opt.value) <= 1e-3
    return inst


def find_bounds_demo(quick: bool) -> Instance:
    """18-node generated graph with the initial mass concentrated on four
    nodes; picked so the pruning drops at least one node and the partition
    mixes attractive and leaking components with a real gap between bounds."""
    masses = {3: 0.1, 9: 0.1, 16: 0.3, 17: 0.5}  # 0-based ids 4,10,17,18
    cfg = IntegratorConfig(h=0.02, eq_tol=1e-9, t_max=2_000.0)
    for seed in range(200):
        rng = np.random.default_rng(seed)
        n = 18
        edges = set()
        for k in range(1, n):
            edges.add((int(rng.integers(0, k)), k))
        for i in range(n):
            for j in range(i + 1, n):
                if (i, j) not in edges and rng.random() < 0.04:
                    edges.add((i, j))
        g = ChoiceGraph(n, tuple(sorted(edges)))
        payoffs = QuadraticPayoffs(rng.uniform(0.4, 2.4, n), rng.uniform(0.5, 2.0, n))
        x0 = np.zeros(n)
        for i, m in masses.items():
            x0[i] = m
        inst = Instance(g, payoffs, PopulationState(x0, 1.0))
        try:
            report = compute_bounds(g, x0, payoffs)
        except Exception:
            continue
        kept = len(report.reduced.kept_nodes)
        n_att = sum(1 for comp in report.partition.components if comp.attractive)
        n_leak = len(report.partition.components) - n_att
        if kept >= n or n_att < 3 or n_leak < 2:
            continue
        if report.u_max - report.u_min < 0.05:
            continue
        u = settled_utilities(inst, ("ssd", "nbrd", "nrpm"), cfg)
        if not all(report.u_min - 1e-4 <= v <= report.u_max + 1e-4 for v in u.values()):
            print(f"  seed {seed}: sandwich failed {u} vs [{report.u_min}, {report.u_max}]")
            continue
        print(
            f"  seed {seed}: kept={kept}/18 attractive={n_att} leaking={n_leak} "
            f"u_min={report.u_min:.4f} u_max={report.u_max:.4f} settled={ {k: round(v, 4) for k, v in u.items()} }"
        )
        return inst
    raise RuntimeError("no seed produced a satisfying bounds demo")


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true", help="stop each search early")
    args = parser.parse_args()

    OUT_DIR.mkdir(parents=True, exist_ok=True)
    t0 = time.time()

    print("ssd-beats-nbrd:")
    inst = find_ssd_beats_nbrd(args.quick)
    inst = Instance(
        inst.graph, inst.payoffs, inst.state,
        note="4-node path, all mass starting on node 3: pairwise shifting leaks "
        "into node 2 and discovers node 1, while neighborhood re-leveling keeps "
        "filling node 4 and never opens node 2.  Parameters found by grid search "
        "(tools/find_scenarios.py).",
    )
    save_instance(inst, OUT_DIR / "ssd-beats-nbrd.json")

    print("nbrd-beats-nrpm:")
    inst = find_nbrd_beats_nrpm(args.quick)
    inst = Instance(
        inst.graph, inst.payoffs, inst.state,
        note="5-node path with mass on nodes 2 and 3: neighborhood re-leveling "
        "overshoots toward node 5 (node 2 still looks full from node 3), which "
        "ends up socially better than the coordinated reallocation.  Parameters "
        "found by grid search (tools/find_scenarios.py).",
    )
    save_instance(inst, OUT_DIR / "nbrd-beats-nrpm.json")

    print("qch-hill:")
    inst = find_qch_hill()
    inst = Instance(
        inst.graph, inst.payoffs, inst.state,
        note="6-node path whose peak densities rise to node 3 and fall after: "
        "a single hill, so the steady state is unique and the utility bounds "
        "coincide.",
    )
    save_instance(inst, OUT_DIR / "qch-hill.json")

    print("bounds-demo-18:")
    inst = find_bounds_demo(args.quick)
    inst = Instance(
        inst.graph, inst.payoffs, inst.state,
        note="18-node generated graph, initial mass 0.1/0.1/0.3/0.5 on nodes "
        "4/10/17/18: pruning drops nodes, the partition mixes attractive and "
        "leaking components, and the bounds leave a visible gap.  Found by seed "
        "search (tools/find_scenarios.py).",
    )
    save_instance(inst, OUT_DIR / "bounds-demo-18.json")

    print(f"done in {time.time() - t0:.1f}s -> {OUT_DIR}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
