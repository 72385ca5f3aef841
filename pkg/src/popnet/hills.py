"""Peak-density hills: rise-then-fall path structure over a network.

A "hill" is a connected piece in which every two nodes are joined by a
simple path whose peak densities rise and then fall.  On such a piece the
population settles into a single water-filling profile regardless of the
dynamic, which is what makes hills the unit of the steady-state bounds:
a pruned digraph is partitioned here into hills that trap mass
(attractive: no arc leaves them) and hills that provably leak.

Path existence is decided without enumeration: from each endpoint walk
only to neighbors with peak density at least the current one; the two
"ascent" sets meet exactly when a rise-then-fall path exists (split any
such path at its highest point, and conversely splice two ascents at a
common node, dropping any overlap to keep the path simple).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .model import ChoiceGraph, FlowDigraph, _state_vector
from .reduction import ReducedGraph


class NodeNotFound(LookupError):
    """A queried node id is not part of the graph."""


def is_quasi_concave_sequence(values) -> bool:
    """True iff the sequence rises (weakly) and then falls (weakly).

    Equivalently, no interior value drops below both of its bracketing
    values.
    """
    vals = [float(v) for v in values]
    if not vals:
        raise ValueError("empty sequence")
    k = 1
    while k < len(vals) and vals[k] >= vals[k - 1]:
        k += 1
    while k < len(vals) and vals[k] <= vals[k - 1]:
        k += 1
    return k == len(vals)


def _ascend(adj, peaks, start: int, allowed) -> set[int]:
    """Nodes reachable from ``start`` by repeatedly stepping to a neighbor
    whose peak is >= the current node's, staying inside ``allowed``."""
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w in allowed and w not in seen and peaks[w] >= peaks[v]:
                seen.add(w)
                stack.append(w)
    return seen


def _adjacency(edges) -> dict[int, list[int]]:
    adj: dict[int, list[int]] = {}
    for i, j in edges:
        adj.setdefault(i, []).append(j)
        adj.setdefault(j, []).append(i)
    return adj


def qc_path_exists(g: ChoiceGraph, peaks, i: int, j: int) -> bool:
    """True iff some simple path from i to j has rise-then-fall peaks."""
    if not (0 <= i < g.n and 0 <= j < g.n):
        raise NodeNotFound(f"node pair ({i}, {j}) outside 0..{g.n - 1}")
    if i == j:
        return True
    peaks = np.asarray(peaks, dtype=np.float64)
    adj = {v: g.neighbors[v] for v in range(g.n)}
    allowed = range(g.n)
    return bool(_ascend(adj, peaks, i, allowed) & _ascend(adj, peaks, j, allowed))


def is_qch(g: ChoiceGraph, peaks) -> bool:
    """True iff ``g`` is connected and every node pair has a rise-then-fall
    path: the whole network is a single hill."""
    if g.n == 0:
        raise ValueError("empty graph")
    if not g.is_connected:
        return False
    peaks = np.asarray(peaks, dtype=np.float64)
    adj = {v: g.neighbors[v] for v in range(g.n)}
    return _all_pairs_joined(adj, peaks, range(g.n))


def _all_pairs_joined(adj, peaks, nodes) -> bool:
    nodes = list(nodes)
    allowed = set(nodes)
    ascents = {v: _ascend(adj, peaks, v, allowed) for v in nodes}
    return all(
        bool(ascents[a] & ascents[b])
        for k, a in enumerate(nodes)
        for b in nodes[k + 1:]
    )


def _connected(adj, nodes) -> bool:
    nodes = list(nodes)
    seen = {nodes[0]}
    stack = [nodes[0]]
    allowed = set(nodes)
    while stack:
        for w in adj[stack.pop()]:
            if w in allowed and w not in seen:
                seen.add(w)
                stack.append(w)
    return seen == allowed


def peel_components(flow: FlowDigraph, peaks, pool=None) -> tuple[tuple[int, ...], ...]:
    """Greedy hill cover of ``pool`` (default: all arc endpoints' nodes,
    i.e. the whole digraph) in the undirected sense.

    Repeatedly seed at the unvisited node of highest peak (ties: smallest
    id) and collect every unvisited node with a rise-then-fall path to the
    seed through unvisited nodes only.  Each emitted node set is a hill:
    seeds are local maxima among the unvisited, so two members' ascents
    both reach the seed's plateau and splice there.
    """
    peaks = np.asarray(peaks, dtype=np.float64)
    pool = list(range(flow.n)) if pool is None else [int(v) for v in pool]
    adj = _adjacency(flow.undirected_edges)
    for v in pool:
        adj.setdefault(v, [])
    unvisited = set(pool)
    comps = []
    while unvisited:
        seed = min(unvisited, key=lambda v: (-peaks[v], v))
        seed_ascent = _ascend(adj, peaks, seed, unvisited)
        comp = [
            v for v in unvisited
            if v == seed or bool(_ascend(adj, peaks, v, unvisited) & seed_ascent)
        ]
        comps.append(tuple(sorted(comp)))
        unvisited.difference_update(comp)
    return tuple(comps)


def induced_arcs(dg: FlowDigraph, nodes) -> tuple[tuple[int, int], ...]:
    inside = set(int(v) for v in nodes)
    return tuple((i, j) for i, j in dg.arcs if i in inside and j in inside)


@dataclass(frozen=True)
class Component:
    """One hill of the partition with its internal arcs.  ``attractive``
    means no arc of the pruned digraph leaves the node set."""

    nodes: tuple[int, ...]
    arcs: tuple[tuple[int, int], ...]
    attractive: bool


@dataclass(frozen=True)
class ComponentPartition:
    components: tuple[Component, ...]

    @cached_property
    def component_of(self) -> dict[int, int]:
        """Node id -> index into ``components``."""
        owner = {}
        for q, comp in enumerate(self.components):
            for v in comp.nodes:
                owner[v] = q
        return owner

    @property
    def attractive_components(self) -> tuple[Component, ...]:
        return tuple(c for c in self.components if c.attractive)


def _shrink(nodes: set[int], out_neighbors) -> set[int]:
    """Iteratively evict members with an out-neighbor outside the set; the
    result is the largest subset no arc leaves (possibly empty)."""
    w = set(nodes)
    while True:
        evict = {i for i in w if any(j not in w for j in out_neighbors[i])}
        if not evict:
            return w
        w -= evict


def attractive_partition(red: ReducedGraph, peaks) -> ComponentPartition:
    """Partition the kept nodes into attractive and leaking hills.

    Hills come from the greedy peel; each is shrunk to the largest subset
    no arc leaves.  A surviving subset that is still one hill is emitted
    as attractive.  Otherwise the survivors are re-peeled and reprocessed,
    as is all evicted material — eviction happens because of arcs into
    *other* pieces, so regrouped leftovers can themselves contain traps.
    Every recursive pool is strictly smaller, so this terminates; fully
    evicted hills are emitted as leaking (their shrinkage being empty is
    exactly the validity condition on non-attractive components).
    """
    peaks = np.asarray(peaks, dtype=np.float64)
    dg = red.digraph
    out = dg.out_neighbors
    attractive: list[tuple[int, ...]] = []
    leaking: list[tuple[int, ...]] = []

    def classify(pool: tuple[int, ...]):
        for piece in peel_components(dg, peaks, pool):
            survivors = _shrink(set(piece), out)
            evicted = set(piece) - survivors
            if not survivors:
                leaking.append(piece)
                continue
            sub = peel_components(dg, peaks, tuple(sorted(survivors)))
            if len(sub) == 1:
                attractive.append(sub[0])
            else:
                for piece2 in sub:
                    classify(piece2)
            if evicted:
                classify(tuple(sorted(evicted)))

    if red.kept_nodes:
        classify(red.kept_nodes)
    comps = [Component(nodes, induced_arcs(dg, nodes), True)
             for nodes in sorted(attractive)]
    comps += [Component(nodes, induced_arcs(dg, nodes), False)
              for nodes in sorted(leaking)]
    return ComponentPartition(tuple(comps))


def partition_violations(
    part: ComponentPartition, red: ReducedGraph, peaks
) -> tuple[str, ...]:
    """Every way ``part`` could fail to be a valid partition of ``red``;
    empty means valid.  Used as the structural test oracle."""
    peaks = np.asarray(peaks, dtype=np.float64)
    dg = red.digraph
    problems = []
    covered: list[int] = []
    for comp in part.components:
        covered.extend(comp.nodes)
    if sorted(covered) != sorted(red.kept_nodes):
        problems.append("node sets do not partition the kept nodes")
    all_arcs: list[tuple[int, int]] = []
    for q, comp in enumerate(part.components):
        all_arcs.extend(comp.arcs)
        if set(comp.arcs) - set(dg.arcs):
            problems.append(f"component {q}: arcs outside the digraph")
        if set(comp.arcs) != set(induced_arcs(dg, comp.nodes)):
            problems.append(f"component {q}: arc set is not the induced one")
        adj = _adjacency(comp.arcs)
        for v in comp.nodes:
            adj.setdefault(v, [])
        if not _connected(adj, comp.nodes):
            problems.append(f"component {q}: not connected")
        elif not _all_pairs_joined(adj, peaks, comp.nodes):
            problems.append(f"component {q}: not a single hill")
        if comp.attractive:
            if any(j not in set(comp.nodes)
                   for i in comp.nodes for j in dg.out_neighbors[i]):
                problems.append(f"component {q}: attractive but an arc leaves it")
        else:
            if _shrink(set(comp.nodes), dg.out_neighbors):
                problems.append(
                    f"component {q}: leaking but shrinkage leaves a trapped subset"
                )
    if len(all_arcs) != len(set(all_arcs)):
        problems.append("component arc sets overlap")
    return tuple(problems)


@dataclass(frozen=True)
class ComponentGraph:
    """Partition components as nodes; an arc (q, r) whenever some digraph
    arc crosses from component q into component r."""

    partition: ComponentPartition
    arcs: tuple[tuple[int, int], ...]
    masses: np.ndarray

    def __post_init__(self):
        masses = np.ascontiguousarray(self.masses, dtype=np.float64)
        masses.setflags(write=False)
        object.__setattr__(self, "masses", masses)


def component_graph(part: ComponentPartition, red: ReducedGraph, x0) -> ComponentGraph:
    xv = _state_vector(x0)
    owner = part.component_of
    cross = sorted(
        {(owner[i], owner[j]) for i, j in red.digraph.arcs if owner[i] != owner[j]}
    )
    masses = np.zeros(len(part.components))
    for q, comp in enumerate(part.components):
        masses[q] = xv[list(comp.nodes)].sum()
    return ComponentGraph(part, tuple(cross), masses)


def partition_dot(part: ComponentPartition, red: ReducedGraph | None = None) -> str:
    """DOT rendering with components grouped and colored by kind (ids
    1-based, matching the file formats).  Passing ``red`` also draws the
    arcs crossing between components, dashed."""
    lines = ["digraph partition {", "  node [style=filled];"]
    for q, comp in enumerate(part.components):
        color = "lightblue" if comp.attractive else "lightsalmon"
        kind = "attractive" if comp.attractive else "leaking"
        lines.append(f"  subgraph cluster_{q} {{")
        lines.append(f'    label="{kind} {q}";')
        for v in comp.nodes:
            lines.append(f'    n{v + 1} [label="{v + 1}" fillcolor={color}];')
        for i, j in comp.arcs:
            lines.append(f"    n{i + 1} -> n{j + 1};")
        lines.append("  }")
    if red is not None:
        owner = part.component_of
        for i, j in red.digraph.arcs:
            if owner[i] != owner[j]:
                lines.append(f"  n{i + 1} -> n{j + 1} [style=dashed];")
    lines.append("}")
    return "\n".join(lines) + "\n"
