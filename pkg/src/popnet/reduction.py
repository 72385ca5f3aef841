"""Initial-state arc pruning and the per-node occupancy caps it certifies.

The cap ``theta_i`` is the total initial mass able to reach node i along
directed paths, an upper bound on what can ever sit there.  If i's density
at that cap still matches or beats j's density at zero occupancy, flow
along (i, j) can never profit and the arc is dropped.  Dropping arcs
shrinks reachable sets and therefore the caps, so the pass repeats until
nothing changes.  The fixed point is what the bounds machinery runs on.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    SUPPORT_EPSILON,
    FlowDigraph,
    PayoffSpec,
    _state_vector,
)


@dataclass(frozen=True)
class ReducedGraph:
    """Pruned digraph plus the caps that justified the pruning.

    ``theta`` is full-length (zero outside ``kept_nodes``); node indexing is
    unchanged, so states on the original network line up directly.
    """

    digraph: FlowDigraph
    theta: np.ndarray
    kept_nodes: tuple[int, ...]

    def __post_init__(self):
        theta = np.ascontiguousarray(self.theta, dtype=np.float64)
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)


def _support(xv: np.ndarray) -> list[int]:
    """Nodes treated as initially occupied (entries at or below the support
    threshold count as exact zeros)."""
    return [int(i) for i in np.flatnonzero(xv > SUPPORT_EPSILON)]


def repeat_reduction(flow: FlowDigraph, x0, payoffs: PayoffSpec) -> ReducedGraph:
    """One pruning pass at the current arc set.

    Computes theta from directed reachability (each occupied node reaches
    itself), drops every arc (i, j) with u_i(theta_i) >= u_j(0), then
    restricts to the occupied nodes and whatever they still reach.  The
    comparison is exact on the computed values: a borderline arc that is
    kept merely loosens the result, while a tolerance could drop an arc
    that does carry flow.
    """
    xv = _state_vector(x0)
    if xv.size != flow.n:
        raise ValueError("state length does not match the digraph")
    supp = _support(xv)
    theta = np.zeros(flow.n)
    for s in supp:
        for i in flow.reachable_from((s,)):
            theta[i] += xv[s]
    dens_at_cap = payoffs.u(theta)
    peak = payoffs.u(np.zeros(flow.n))
    arcs = tuple(
        (i, j) for i, j in flow.arcs if not dens_at_cap[i] >= peak[j]
    )
    pruned = FlowDigraph(flow.n, arcs)
    kept = sorted(pruned.reachable_from(supp))
    kept_set = set(kept)
    arcs = tuple((i, j) for i, j in arcs if i in kept_set and j in kept_set)
    theta[[i for i in range(flow.n) if i not in kept_set]] = 0.0
    return ReducedGraph(FlowDigraph(flow.n, arcs), theta, tuple(kept))


def reduce_graph(flow: FlowDigraph, x0, payoffs: PayoffSpec) -> ReducedGraph:
    """Iterate the pruning pass to its fixed point.

    Terminates because each pass can only remove arcs and nodes: caps are
    computed from reachability, so a smaller arc set never makes the
    removal condition harder to meet.
    """
    red = repeat_reduction(flow, x0, payoffs)
    while True:
        nxt = repeat_reduction(red.digraph, x0, payoffs)
        if nxt.digraph == red.digraph and nxt.kept_nodes == red.kept_nodes:
            return nxt
        red = nxt


def eventually_empty_nodes(red: ReducedGraph) -> tuple[int, ...]:
    """Kept nodes with an out-arc whose reverse was pruned.

    Mass at such a node keeps leaking through the one-way arc and can never
    come back through it, so the node drains in the limit.  (Sufficient
    only: nodes draining for other reasons are not detected.)
    """
    dg = red.digraph
    return tuple(
        i for i in red.kept_nodes
        if any(not dg.has_arc(j, i) for j in dg.out_neighbors[i])
    )


def reduction_dot(red: ReducedGraph) -> str:
    """DOT rendering of the pruned digraph, nodes annotated with their caps
    (ids 1-based, matching the file formats)."""
    lines = ["digraph icrg {"]
    for i in red.kept_nodes:
        lines.append(
            f'  n{i + 1} [label="{i + 1}\\ntheta={red.theta[i]:.6g}"];'
        )
    for i, j in red.digraph.arcs:
        lines.append(f"  n{i + 1} -> n{j + 1};")
    lines.append("}")
    return "\n".join(lines) + "\n"
