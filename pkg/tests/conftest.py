from __future__ import annotations

import numpy as np

from popnet.model import ChoiceGraph, PopulationState, QuadraticPayoffs


def qch_chain_instance(seed: int, n_lo: int = 3, n_hi: int = 8, *, rho: float = 1.0):
    """Seeded path graph with peak densities sorted along the path.  Every
    subpath then has a single interior maximum, so the whole graph is one
    quasi-concave hill regardless of the drawn slopes or starting state."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_lo, n_hi + 1))
    g = ChoiceGraph(n, tuple((i, i + 1) for i in range(n - 1)))
    peaks = np.sort(rng.uniform(0.5, 2.0, n))
    payoffs = QuadraticPayoffs(peaks, rng.uniform(0.5, 2.0, n))
    occupied = rng.random(n) >= 0.4
    if not occupied.any():
        occupied[int(rng.integers(0, n))] = True
    x0 = np.zeros(n)
    x0[occupied] = rho * rng.dirichlet(np.ones(int(occupied.sum())))
    return g, payoffs, PopulationState(x0, rho)


def random_instance(
    seed: int,
    n_lo: int = 3,
    n_hi: int = 8,
    *,
    rho: float = 1.0,
    empty_prob: float = 0.4,
    extra_edge_prob: float = 0.3,
):
    """Seeded connected instance used across the suites: spanning tree plus
    extra edges, uniform quadratic parameters, mass on a random node subset."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_lo, n_hi + 1))
    edges = set()
    for k in range(1, n):
        edges.add((int(rng.integers(0, k)), k))
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) not in edges and rng.random() < extra_edge_prob:
                edges.add((i, j))
    g = ChoiceGraph(n, tuple(sorted(edges)))
    payoffs = QuadraticPayoffs(rng.uniform(0.5, 2.0, n), rng.uniform(0.5, 2.0, n))
    occupied = rng.random(n) >= empty_prob
    if not occupied.any():
        occupied[int(rng.integers(0, n))] = True
    x0 = np.zeros(n)
    x0[occupied] = rho * rng.dirichlet(np.ones(int(occupied.sum())))
    return g, payoffs, PopulationState(x0, rho)
