"""Water-filling: maximize aggregate payoff of a mass over a node subset.

With strictly decreasing densities the optimum fills nodes greedily from the
top stratum down until a common density level is reached on the supported
nodes; we locate that level by bisection, which stays correct for any payoff
family satisfying the interface (for the quadratic family the inner sum is
piecewise linear in the level, but we keep the family-uniform code path).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import PayoffSpec

__all__ = ["EmptyNodeSet", "WaterfillResult", "level_allocate", "solve_waterfill", "max_welfare"]

BRACKET_TOL = 1e-13  # bisection stops below this bracket width
MAX_BISECT = 200  # iteration guard for non-quadratic families


class EmptyNodeSet(ValueError):
    pass


@dataclass(frozen=True)
class WaterfillResult:
    """Optimal occupancies (full-length vector, zero off the subset)."""

    x: np.ndarray
    value: float
    level: float


def level_allocate(
    payoffs: PayoffSpec,
    nodes: np.ndarray,
    bases: np.ndarray,
    budget: float,
    bracket_tol: float = BRACKET_TOL,
) -> tuple[np.ndarray, float]:
    """Split ``budget`` over ``nodes`` sitting on top of ``bases``.

    Returns (allocation aligned with ``nodes``, common density level).  The
    allocation tops up the nodes whose density at their base exceeds the
    level; nodes already at or below it receive nothing.
    """
    nodes = np.asarray(nodes, dtype=np.int64)
    if nodes.size == 0:
        raise EmptyNodeSet("cannot allocate over an empty node set")
    bases = np.asarray(bases, dtype=np.float64)
    if budget <= 0.0:
        return np.zeros(nodes.size), float(np.max(payoffs.u(bases, nodes)))

    hi = float(np.max(payoffs.u(bases, nodes)))
    lo = float(np.min(payoffs.u(bases + budget, nodes)))
    for _ in range(MAX_BISECT):
        if hi - lo <= bracket_tol:
            break
        mid = 0.5 * (lo + hi)
        filled = np.clip(payoffs.u_inv(mid, nodes) - bases, 0.0, None).sum()
        if filled > budget:
            lo = mid
        else:
            hi = mid
    level = 0.5 * (lo + hi)
    alloc = np.clip(payoffs.u_inv(level, nodes) - bases, 0.0, None)
    return alloc, level


def solve_waterfill(payoffs: PayoffSpec, nodes, rho: float) -> WaterfillResult:
    """Optimal occupancies of a population of mass ``rho`` over ``nodes``."""
    nodes = np.asarray(nodes, dtype=np.int64)
    if nodes.size == 0:
        raise EmptyNodeSet("cannot fill an empty node set")
    if rho < 0.0:
        raise ValueError(f"population mass must be nonnegative, got {rho}")
    x = np.zeros(payoffs.n)
    if rho == 0.0:
        level = float(np.max(payoffs.u(np.zeros(nodes.size), nodes)))
        return WaterfillResult(x=x, value=0.0, level=level)
    alloc, level = level_allocate(payoffs, nodes, np.zeros(nodes.size), float(rho))
    x[nodes] = alloc
    value = float(np.sum(payoffs.p(alloc, nodes) - payoffs.p(np.zeros(nodes.size), nodes)))
    return WaterfillResult(x=x, value=value, level=level)


def max_welfare(payoffs: PayoffSpec, nodes, rho: float) -> float:
    """Best achievable aggregate payoff of mass ``rho`` confined to ``nodes``.

    Concave and nondecreasing in ``rho`` with derivative equal to the fill
    level.
    """
    return solve_waterfill(payoffs, nodes, rho).value
