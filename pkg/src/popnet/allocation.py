"""Budget-spreading over destination sets with concave quadratic rewards.

One solver serves two callers: the simultaneous-reallocation dynamics
(every occupied node spreads its mass over its closed out-neighborhood)
and the reachability-restricted welfare bound (every initially occupied
node spreads its mass over everything it can eventually reach).  Both are
instances of

    maximize   sum_j p_j(w_j),   w_j = total mass sent to j
    subject to each source's sendings lying on its budget simplex.

The received masses are unique (the objective is strictly concave in w);
the per-source split generally is not.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .model import NumericalFailure, QuadraticPayoffs, social_utility

ACTIVE_EPS = 1e-12


class NonConvergence(NumericalFailure):
    """The allocation solver hit its iteration budget before passing the
    optimality check."""


@dataclass(frozen=True)
class AllocationProblem:
    """``sources`` is a tuple of (budget, destinations) pairs; destination ids
    index into ``payoffs``.  A positive budget needs somewhere to go."""

    payoffs: QuadraticPayoffs
    sources: tuple[tuple[float, tuple[int, ...]], ...]

    def __post_init__(self):
        n = self.payoffs.n
        for budget, dests in self.sources:
            if budget < 0:
                raise ValueError(f"negative source budget {budget}")
            if budget > 0 and not dests:
                raise ValueError("positive budget with an empty destination set")
            if len(set(dests)) != len(dests):
                raise ValueError("duplicate destination within a source")
            if any(not 0 <= j < n for j in dests):
                raise ValueError("destination id out of range")


@dataclass(frozen=True)
class AllocationResult:
    """``allocations[s]`` is aligned with ``sources[s]``'s destination tuple;
    ``received`` is the full-length vector of masses landing on each node."""

    allocations: tuple[np.ndarray, ...]
    received: np.ndarray
    value: float
    iters: int


def _flatten(problem: AllocationProblem):
    seg_ptr = np.zeros(len(problem.sources) + 1, dtype=np.int64)
    for s, (_, dests) in enumerate(problem.sources):
        seg_ptr[s + 1] = seg_ptr[s] + len(dests)
    var_dst = np.fromiter(
        (j for _, dests in problem.sources for j in dests),
        dtype=np.int64,
        count=int(seg_ptr[-1]),
    )
    budgets = np.array([b for b, _ in problem.sources], dtype=np.float64)
    return seg_ptr, var_dst, budgets


def solve_allocation(
    problem: AllocationProblem,
    *,
    tol: float = 1e-10,
    max_iters: int = 200_000,
    r0: np.ndarray | None = None,
) -> AllocationResult:
    """Projected gradient ascent with a fixed step of 1 / (max curvature any
    destination aggregates), run until the received masses stall and every
    variable above ``ACTIVE_EPS`` sits within ``tol`` of the best density its
    source can still reach.  ``r0`` (flat, sources concatenated) warm-starts
    the iteration; it is projected to feasibility on the first step.

    Deterministic: no randomness, fixed step, and a tie-stable projection,
    so repeated calls from the same start return bit-identical splits.
    """
    pay = problem.payoffs
    n = pay.n
    seg_ptr, var_dst, budgets = _flatten(problem)

    def allocations_of(flat):
        return tuple(
            flat[seg_ptr[s]:seg_ptr[s + 1]].copy()
            for s in range(len(problem.sources))
        )

    if not var_dst.size or not budgets.sum() > 0:
        return AllocationResult(allocations_of(np.zeros(int(seg_ptr[-1]))),
                                np.zeros(n), 0.0, 0)

    if r0 is not None:
        r = np.ascontiguousarray(r0, dtype=np.float64).copy()
        if r.shape != (int(seg_ptr[-1]),):
            raise ValueError("warm start has the wrong length")
    else:
        r = np.empty(int(seg_ptr[-1]))
        for s, (budget, dests) in enumerate(problem.sources):
            if dests:
                r[seg_ptr[s]:seg_ptr[s + 1]] = budget / len(dests)

    counts = np.bincount(var_dst, minlength=n)
    step = 1.0 / float(np.max(pay.c * counts))
    stall_tol = max(1e-13, tol * 1e-3)
    iters, converged = kernels.pga_solve(
        r, budgets, seg_ptr, var_dst, pay.a, pay.c,
        step, tol, stall_tol, ACTIVE_EPS, int(max_iters),
    )
    if not converged:
        raise NonConvergence(
            f"allocation not optimal after {max_iters} iterations "
            f"({len(problem.sources)} sources, {var_dst.size} variables)"
        )
    received = np.bincount(var_dst, weights=r, minlength=n)
    return AllocationResult(allocations_of(r), received,
                            social_utility(received, pay), int(iters))
