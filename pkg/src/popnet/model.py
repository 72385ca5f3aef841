"""Core types: choice graphs, flow digraphs, payoff families, population states.

Conventions used throughout the package:

* nodes are 0-based integers internally (instance files are 1-based);
* an undirected edge {i, j} induces the two arcs (i, j) and (j, i);
* a population state lives on the simplex of radius ``rho``;
* payoff families expose cumulative payoff ``p``, payoff density ``u`` (the
  strictly decreasing derivative of ``p``) and a clamped inverse ``u_inv``
  that returns real values for any level (callers clip to their own ranges).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "NumericalFailure",
    "SUPPORT_EPSILON",
    "CORRELATION_EPSILON",
    "LEVEL_TOL",
    "MASS_TOL",
    "ChoiceGraph",
    "FlowDigraph",
    "arcs_from_edges",
    "PayoffSpec",
    "QuadraticPayoffs",
    "PopulationState",
    "social_utility",
    "is_nash",
    "check_strong_positive_correlation",
    "flows_respect_levels",
]

class NumericalFailure(RuntimeError):
    """Base for solver/integrator failures (CLI exit code 3)."""


SUPPORT_EPSILON = 1e-12  # occupancy below this counts as an empty node
CORRELATION_EPSILON = 1e-12  # tolerated flow on a non-improving arc
LEVEL_TOL = 1e-9  # slack for payoff-density level comparisons
MASS_TOL = 1e-9  # slack for state mass balance


def _as_edge_tuple(edges) -> tuple[tuple[int, int], ...]:
    out = set()
    for i, j in edges:
        i, j = int(i), int(j)
        if i == j:
            raise ValueError(f"self edge {i}")
        out.add((min(i, j), max(i, j)))
    return tuple(sorted(out))


@dataclass(frozen=True)
class ChoiceGraph:
    """Undirected graph of choices; nodes 0..n-1, edges stored as (i, j), i < j."""

    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("graph needs at least one node")
        object.__setattr__(self, "edges", _as_edge_tuple(self.edges))
        for i, j in self.edges:
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge ({i},{j}) out of range for n={self.n}")

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        nbrs: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in self.edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        return tuple(tuple(sorted(v)) for v in nbrs)

    def is_connected(self) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for w in self.neighbors[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n


@dataclass(frozen=True)
class FlowDigraph:
    """Directed arc set over nodes 0..n-1; flows may only move along arcs."""

    n: int
    arcs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        seen = set()
        for i, j in self.arcs:
            if i == j:
                raise ValueError(f"self arc {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"arc ({i},{j}) out of range for n={self.n}")
            if (i, j) in seen:
                raise ValueError(f"duplicate arc ({i},{j})")
            seen.add((i, j))
        object.__setattr__(self, "arcs", tuple(sorted(self.arcs)))

    @cached_property
    def out_neighbors(self) -> tuple[tuple[int, ...], ...]:
        nbrs: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in self.arcs:
            nbrs[i].append(j)
        return tuple(tuple(sorted(v)) for v in nbrs)

    @cached_property
    def in_neighbors(self) -> tuple[tuple[int, ...], ...]:
        nbrs: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in self.arcs:
            nbrs[j].append(i)
        return tuple(tuple(sorted(v)) for v in nbrs)

    @cached_property
    def undirected_edges(self) -> tuple[tuple[int, int], ...]:
        """Edge set obtained by forgetting arc directions."""
        return _as_edge_tuple(self.arcs)

    def arc_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(src, dst) index arrays in the canonical (sorted) arc order."""
        if not self.arcs:
            z = np.zeros(0, dtype=np.int64)
            return z, z.copy()
        arr = np.asarray(self.arcs, dtype=np.int64)
        return np.ascontiguousarray(arr[:, 0]), np.ascontiguousarray(arr[:, 1])

    def has_arc(self, i: int, j: int) -> bool:
        return (i, j) in self._arc_set

    @cached_property
    def _arc_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.arcs)

    def reachable_from(self, sources) -> set[int]:
        """Nodes with a directed path from some source (reflexively)."""
        seen = set(int(s) for s in sources)
        stack = list(seen)
        while stack:
            v = stack.pop()
            for w in self.out_neighbors[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return seen

    def reaching(self, target: int) -> set[int]:
        """Nodes with a directed path to ``target`` (reflexively)."""
        seen = {int(target)}
        stack = [int(target)]
        while stack:
            v = stack.pop()
            for w in self.in_neighbors[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return seen


def arcs_from_edges(g: ChoiceGraph) -> FlowDigraph:
    """Both orientations of every edge of ``g``."""
    arcs = []
    for i, j in g.edges:
        arcs.append((i, j))
        arcs.append((j, i))
    return FlowDigraph(g.n, tuple(arcs))


class PayoffSpec:
    """Interface for per-node payoff families.

    ``nodes=None`` means "elementwise over all nodes"; otherwise ``nodes`` is
    an index array and ``y``/``level`` are evaluated per entry at those nodes.
    """

    n: int

    def p(self, y, nodes=None) -> np.ndarray:
        """Cumulative payoff of occupancy ``y``."""
        raise NotImplementedError

    def u(self, y, nodes=None) -> np.ndarray:
        """Payoff density (dp/dy); strictly decreasing in ``y``."""
        raise NotImplementedError

    def u_inv(self, level, nodes=None) -> np.ndarray:
        """Occupancy at which the density equals ``level``.

        Clamped to be total: returns a real value for any level (negative when
        the level exceeds the density at zero occupancy); callers clip.
        """
        raise NotImplementedError

    def peak_density(self) -> np.ndarray:
        """Density of the first population increment at each node, u(0)."""
        return self.u(np.zeros(self.n))


class QuadraticPayoffs(PayoffSpec):
    """p(y) = a*y - c*y**2/2 with c > 0.

    The density is u(y) = a - c*y, so the linear coefficient ``a`` is exactly
    the density at zero occupancy and ``u_inv(level) = (a - level)/c``.
    """

    def __init__(self, a, c):
        self.a = np.ascontiguousarray(a, dtype=np.float64)
        self.c = np.ascontiguousarray(c, dtype=np.float64)
        if self.a.ndim != 1 or self.a.shape != self.c.shape:
            raise ValueError("a and c must be equal-length vectors")
        if not np.all(self.c > 0):
            raise ValueError("curvatures c must be strictly positive")
        self.n = self.a.size

    def _coef(self, nodes):
        if nodes is None:
            return self.a, self.c
        return self.a[nodes], self.c[nodes]

    def p(self, y, nodes=None) -> np.ndarray:
        a, c = self._coef(nodes)
        y = np.asarray(y, dtype=np.float64)
        return a * y - 0.5 * c * y * y

    def u(self, y, nodes=None) -> np.ndarray:
        a, c = self._coef(nodes)
        return a - c * np.asarray(y, dtype=np.float64)

    def u_inv(self, level, nodes=None) -> np.ndarray:
        a, c = self._coef(nodes)
        return (a - np.asarray(level, dtype=np.float64)) / c

    def peak_density(self) -> np.ndarray:
        return self.a.copy()

    def __repr__(self):
        return f"QuadraticPayoffs(a={self.a!r}, c={self.c!r})"


@dataclass(frozen=True)
class PopulationState:
    """Nonnegative occupancies summing to ``rho``; immutable after construction."""

    x: np.ndarray
    rho: float

    def __post_init__(self):
        x = np.array(self.x, dtype=np.float64)  # defensive copy
        if x.ndim != 1:
            raise ValueError("state must be a vector")
        if np.any(x < 0):
            raise ValueError(f"negative occupancy: min={x.min()}")
        if abs(x.sum() - self.rho) > MASS_TOL:
            raise ValueError(f"mass {x.sum()} does not match rho={self.rho}")
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return self.x.size

    def support(self, eps: float = SUPPORT_EPSILON) -> np.ndarray:
        return np.flatnonzero(self.x > eps)


def _state_vector(x) -> np.ndarray:
    return x.x if isinstance(x, PopulationState) else np.asarray(x, dtype=np.float64)


def social_utility(x, payoffs: PayoffSpec) -> float:
    """Aggregate payoff of the population, sum_i [p_i(x_i) - p_i(0)]."""
    xv = _state_vector(x)
    return float(np.sum(payoffs.p(xv) - payoffs.p(np.zeros_like(xv))))


def is_nash(
    x, g: ChoiceGraph, payoffs: PayoffSpec, tol: float = 0.0,
    support_eps: float = SUPPORT_EPSILON,
) -> bool:
    """No occupied node has a neighbor with a density more than ``tol`` higher.

    ``support_eps`` decides what counts as occupied.  When judging the
    endpoint of a finite integration, pass something like 5*eq_tol/tol: a
    node whose density trails a neighbor's by more than ``tol`` sheds mass
    at rate >= tol * x_i under all three dynamics, so once the integrator's
    quiet test (max velocity < eq_tol) has fired, any node it could flag
    holds less than ~eq_tol/tol of stranded mass.
    """
    xv = _state_vector(x)
    dens = payoffs.u(xv)
    for i in np.flatnonzero(xv > support_eps):
        for j in g.neighbors[i]:
            if dens[i] < dens[j] - tol:
                return False
    return True


def check_strong_positive_correlation(
    x, flows, payoffs: PayoffSpec, eps: float = CORRELATION_EPSILON
) -> bool:
    """True iff no arc whose origin density is >= its destination density
    carries more than ``eps`` flow.

    ``flows`` is any object exposing ``arc_src``/``arc_dst``/``values``
    (see dynamics.ArcFlows).
    """
    xv = _state_vector(x)
    dens = payoffs.u(xv)
    bad = dens[flows.arc_src] >= dens[flows.arc_dst]
    return bool(np.all(flows.values[bad] <= eps))


def flows_respect_levels(
    z, flows, payoffs: PayoffSpec,
    eps: float = CORRELATION_EPSILON, level_tol: float = LEVEL_TOL,
) -> bool:
    """True iff every arc carrying more than ``eps`` flow ends at a density
    no more than ``level_tol`` below its origin's, measured at state ``z``.

    This is the correlation property of the simultaneous-reallocation dynamics,
    stated in terms of the post-reallocation masses rather than the current
    state (a coordinated move may push mass into a node that is currently
    worse but about to empty).
    """
    zv = _state_vector(z)
    dens = payoffs.u(zv)
    active = flows.values > eps
    return bool(np.all(dens[flows.arc_dst[active]] >= dens[flows.arc_src[active]] - level_tol))
