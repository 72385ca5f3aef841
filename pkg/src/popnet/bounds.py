"""Certified bracket on the settled social utility, from the start state only.

Upper bound: let every initially occupied node spread its mass over
everything it can reach in the pruned digraph and take the best achievable
welfare — no trajectory can beat an optimum over a superset of its moves.

Lower bound: partition the pruned digraph into hills, cap how much mass
each hill can retain (its draining members cannot hold mass in the limit),
and minimize the summed per-hill optimal welfare over every way mass could
flow between hills subject to those caps.  The per-hill welfare is concave
in the hill's final mass, so the minimum sits at a vertex of the transfer
polytope and exact vertex enumeration is sound; there is deliberately no
heuristic fallback, since an unverified minimum would certify nothing.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from .allocation import AllocationProblem, solve_allocation
from .hills import (
    ComponentGraph,
    ComponentPartition,
    attractive_partition,
    component_graph,
)
from .model import (
    ChoiceGraph,
    NumericalFailure,
    PayoffSpec,
    _state_vector,
    arcs_from_edges,
)
from .reduction import ReducedGraph, eventually_empty_nodes, reduce_graph
from .waterfill import max_welfare

SUBSET_BUDGET = 2_000_000
FEAS_TOL = 1e-9
DEDUP_TOL = 1e-10


class TooLargeForExactEnumeration(NumericalFailure):
    """The transfer polytope has too many constraint subsets to enumerate
    within the configured budget."""


@dataclass(frozen=True)
class BoundsReport:
    u_max: float
    u_min: float
    reduced: ReducedGraph
    partition: ComponentPartition
    supergraph: ComponentGraph
    caps: np.ndarray
    upper_witness: np.ndarray
    lower_witness: dict

    def to_json_dict(self) -> dict:
        """Report shape written by the CLI (node ids 1-based)."""
        super_nodes = [
            {
                "members": [v + 1 for v in comp.nodes],
                "mass": float(self.supergraph.masses[q]),
                "cap": float(self.caps[q]),
                "attractive": comp.attractive,
            }
            for q, comp in enumerate(self.partition.components)
        ]
        return {
            "u_max": self.u_max,
            "u_min": self.u_min,
            "super_nodes": super_nodes,
            "witness": {
                "upper_received": [float(v) for v in self.upper_witness],
                "lower_transfers": [
                    {"from": q, "to": r, "mass": float(v)}
                    for (q, r), v in sorted(self.lower_witness.get("transfers", {}).items())
                ],
                "lower_inflows": [
                    float(v) for v in self.lower_witness.get("inflows", ())
                ],
            },
        }


def upper_bound(red: ReducedGraph, x0, payoffs) -> tuple[float, np.ndarray]:
    """Best welfare achievable if each occupied node could place its mass
    anywhere it reaches in the pruned digraph (itself included).  Keeping
    everything at home is feasible, so this is always >= U(x0)."""
    xv = _state_vector(x0)
    supp = [int(i) for i in np.flatnonzero(xv > 0)]
    sources = tuple(
        (float(xv[i]), tuple(sorted(red.digraph.reachable_from((i,)))))
        for i in supp
    )
    if not sources:
        return 0.0, np.zeros(xv.size)
    result = solve_allocation(AllocationProblem(payoffs, sources))
    return result.value, result.received


def rho_max_caps(
    part: ComponentPartition, red: ReducedGraph, payoffs: PayoffSpec, rho: float
) -> np.ndarray:
    """Limit on the mass each hill can retain.

    Members that keep draining hold nothing in the limit; the rest are
    individually capped by the occupancy at which their density drops to
    the best draining member's peak (mass above that would prefer the
    draining side, which cannot hold it).  Negative per-node terms clip to
    zero and the total never exceeds the population mass.  A hill with no
    draining member gets the trivial cap.
    """
    draining = set(eventually_empty_nodes(red))
    peaks = payoffs.peak_density()
    caps = np.empty(len(part.components))
    for q, comp in enumerate(part.components):
        inside = set(comp.nodes)
        m = inside & draining
        if not m:
            caps[q] = rho
        elif m == inside:
            caps[q] = 0.0
        else:
            a_max = max(peaks[i] for i in m)
            rest = sorted(inside - m)
            room = np.clip(payoffs.u_inv(a_max, rest), 0.0, None).sum()
            caps[q] = min(float(room), rho)
    return caps


def _transfer_constraints(sg: ComponentGraph, caps: np.ndarray):
    """Inequality system A x <= b over the per-super-arc transfer amounts:
    nonnegativity, per-hill outflow limited by its initial mass, and final
    mass (initial + in - out) under the hill's cap."""
    d = len(sg.arcs)
    q_count = len(sg.partition.components)
    rows, rhs = [], []
    for e in range(d):
        row = np.zeros(d)
        row[e] = -1.0
        rows.append(row)
        rhs.append(0.0)
    for q in range(q_count):
        row = np.zeros(d)
        for e, (src, _) in enumerate(sg.arcs):
            if src == q:
                row[e] = 1.0
        rows.append(row)
        rhs.append(float(sg.masses[q]))
    for q in range(q_count):
        row = np.zeros(d)
        for e, (src, dst) in enumerate(sg.arcs):
            if dst == q:
                row[e] += 1.0
            if src == q:
                row[e] -= 1.0
        rows.append(row)
        rhs.append(float(caps[q]) - float(sg.masses[q]))
    return np.array(rows), np.array(rhs)


def _polytope_vertices(
    a_mat: np.ndarray, b_vec: np.ndarray, d: int, budget: int = SUBSET_BUDGET
) -> np.ndarray:
    """All points where d of the constraints hold with equality, filtered
    for feasibility and deduplicated.  Superset of the vertex set, which
    is all a concave minimization needs."""
    n_rows = a_mat.shape[0]
    if comb(n_rows, d) > budget:
        raise TooLargeForExactEnumeration(
            f"{comb(n_rows, d)} constraint subsets exceed the budget of "
            f"{budget}; the exact lower bound is unavailable"
        )
    subsets = np.array(list(combinations(range(n_rows), d)), dtype=np.intp)
    points = []
    chunk = 20_000
    for lo in range(0, subsets.shape[0], chunk):
        idx = subsets[lo:lo + chunk]
        mats = a_mat[idx]
        vecs = b_vec[idx]
        dets = np.abs(np.linalg.det(mats))
        ok = dets > 1e-12
        if not ok.any():
            continue
        try:
            sols = np.linalg.solve(mats[ok], vecs[ok][..., None])[..., 0]
        except np.linalg.LinAlgError:
            sols = []
            for m, v in zip(mats[ok], vecs[ok]):
                try:
                    sols.append(np.linalg.solve(m, v))
                except np.linalg.LinAlgError:
                    sols.append(np.full(d, np.nan))
            sols = np.array(sols)
        feas = np.all(a_mat @ sols.T <= b_vec[:, None] + FEAS_TOL, axis=0)
        points.extend(sols[feas])
    if not points:
        return np.zeros((0, d))
    points = np.array(points)
    keep: list[int] = []
    for i in range(points.shape[0]):
        if all(np.max(np.abs(points[i] - points[j])) > DEDUP_TOL for j in keep):
            keep.append(i)
    return points[keep]


def lower_bound(
    sg: ComponentGraph,
    caps: np.ndarray,
    payoffs: PayoffSpec,
    *,
    enum_budget: int = SUBSET_BUDGET,
) -> tuple[float, dict]:
    """Minimum over the transfer polytope of the summed per-hill optimal
    welfare at the resulting hill masses."""
    q_count = len(sg.partition.components)
    if q_count == 0:
        return 0.0, {"transfers": {}, "inflows": np.zeros(0)}
    d = len(sg.arcs)

    def inflows(x: np.ndarray) -> np.ndarray:
        xi = sg.masses.copy()
        for e, (src, dst) in enumerate(sg.arcs):
            xi[src] -= x[e]
            xi[dst] += x[e]
        return xi

    def objective(xi: np.ndarray) -> float:
        return sum(
            max_welfare(payoffs, comp.nodes, float(xi[q]))
            for q, comp in enumerate(sg.partition.components)
        )

    if d == 0:
        xi = sg.masses.copy()
        if np.any(xi > caps + FEAS_TOL):
            raise NumericalFailure(
                "transfer polytope infeasible: a hill starts above its cap "
                "with no outgoing transfers"
            )
        return objective(xi), {"transfers": {}, "inflows": xi}

    a_mat, b_vec = _transfer_constraints(sg, caps)
    vertices = _polytope_vertices(a_mat, b_vec, d, enum_budget)
    if vertices.shape[0] == 0:
        raise NumericalFailure("transfer polytope has no feasible vertex")
    best_val = np.inf
    best_x = vertices[0]
    for x in vertices:
        val = objective(inflows(x))
        if val < best_val:
            best_val = val
            best_x = x
    transfers = {
        (int(src), int(dst)): float(best_x[e])
        for e, (src, dst) in enumerate(sg.arcs)
    }
    return float(best_val), {"transfers": transfers, "inflows": inflows(best_x)}


def compute_bounds(
    g: ChoiceGraph, x0, payoffs: PayoffSpec, *, enum_budget: int = SUBSET_BUDGET
) -> BoundsReport:
    """Full pipeline: prune, partition into hills, cap, and bound both ways.

    The bracket holds for the settled state of any of the three dynamics
    started at ``x0``.
    """
    xv = _state_vector(x0)
    rho = float(xv.sum())
    flow = arcs_from_edges(g) if isinstance(g, ChoiceGraph) else g
    red = reduce_graph(flow, xv, payoffs)
    u_max, received = upper_bound(red, xv, payoffs)
    part = attractive_partition(red, payoffs.peak_density())
    sg = component_graph(part, red, xv)
    caps = rho_max_caps(part, red, payoffs, rho)
    u_min, witness = lower_bound(sg, caps, payoffs, enum_budget=enum_budget)
    if u_min > u_max + 1e-9:
        raise NumericalFailure(
            f"bound crossing: u_min={u_min!r} exceeds u_max={u_max!r}"
        )
    return BoundsReport(
        u_max=u_max,
        u_min=u_min,
        reduced=red,
        partition=part,
        supergraph=sg,
        caps=caps,
        upper_witness=received,
        lower_witness=witness,
    )
