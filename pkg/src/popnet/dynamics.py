"""The three reallocation dynamics and their shared RK4 driver.

All three move population mass along the arcs of a flow digraph toward
higher payoff density, and differ in how much coordination they assume:

- ``ssd``   pairwise shifts: each arc independently carries the payoff a
            shift to the destination's current density would gain.
- ``nbrd``  neighborhood re-leveling: each occupied node spreads its own
            mass over its closed out-neighborhood up to a common density.
- ``nrpm``  simultaneous reallocation: all occupied mass jointly moves
            toward the welfare-optimal placement; velocity is target - state.

Integration is classical fixed-step RK4.  The run stops once the largest
per-node velocity stays below ``eq_tol`` for ``window`` consecutive steps
(checked before stepping, so the recorded end state is the quiet one) or at
``t_max``.  Each completed step also updates conservation/monotonicity
accounting and a correlation audit of the flows actually emitted; the
results land in ``Trajectory.diagnostics``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from .allocation import AllocationProblem, solve_allocation
from .model import (
    ChoiceGraph,
    FlowDigraph,
    NumericalFailure,
    PayoffSpec,
    PopulationState,
    QuadraticPayoffs,
    _state_vector,
    arcs_from_edges,
    check_strong_positive_correlation,
    flows_respect_levels,
    social_utility,
)
from .waterfill import level_allocate

DYNAMICS = ("ssd", "nbrd", "nrpm")


class IntegrationDiverged(NumericalFailure):
    """A state component went meaningfully negative mid-run."""


@dataclass(frozen=True)
class ArcFlows:
    """Nonnegative flow on each arc of a digraph, aligned with its sorted
    arc order."""

    arc_src: np.ndarray
    arc_dst: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class ReallocationTarget:
    """Solution of one simultaneous-reallocation step: the optimal
    post-move masses ``z``, one realizing arc flow pattern (two-cycle
    churn cancelled away), and the flat per-source split for warm-starting
    the next solve."""

    z: np.ndarray
    flows: ArcFlows
    split: np.ndarray
    iters: int


@lru_cache(maxsize=64)
def _closed_neighborhood_csr(dg: FlowDigraph):
    """Slot layout for the re-leveling kernel: for each node, its own slot
    first (arc id -1, base 0), then one slot per out-arc in arc order."""
    src, dst = dg.arc_arrays()
    arc_of = {(int(i), int(j)): k for k, (i, j) in enumerate(zip(src, dst))}
    indptr = np.zeros(dg.n + 1, dtype=np.int64)
    nodes, arcs = [], []
    for i in range(dg.n):
        nodes.append(i)
        arcs.append(-1)
        for j in dg.out_neighbors[i]:
            nodes.append(j)
            arcs.append(arc_of[i, j])
        indptr[i + 1] = len(nodes)
    return indptr, np.array(nodes, dtype=np.int64), np.array(arcs, dtype=np.int64)


def ssd_delta(x, dg: FlowDigraph, payoffs: PayoffSpec) -> ArcFlows:
    """Pairwise-shift flows at state ``x``: arc i->j carries the payoff gain
    of moving i's mass above the matching occupancy down to j's density,
    zero when the destination is no better."""
    xv = _state_vector(x)
    src, dst = dg.arc_arrays()
    if isinstance(payoffs, QuadraticPayoffs):
        values = kernels.ssd_flows(xv, payoffs.a, payoffs.c, src, dst)
        return ArcFlows(src, dst, values)
    xs = xv[src]
    lvl = payoffs.u(xv)[dst]
    y = np.clip(payoffs.u_inv(lvl, src), 0.0, np.maximum(xs, 0.0))
    gain = lvl * (np.maximum(xs, 0.0) - y) - (
        payoffs.p(np.maximum(xs, 0.0), src) - payoffs.p(y, src)
    )
    values = np.maximum(gain, 0.0)
    values[xs <= 0.0] = 0.0
    return ArcFlows(src, dst, values)


def nbrd_delta(x, dg: FlowDigraph, payoffs: PayoffSpec) -> ArcFlows:
    """Re-leveling flows at state ``x``: each occupied node water-fills its
    own mass over (itself at base zero) + (out-neighbors at their current
    occupancy) and exports the neighbor shares."""
    xv = _state_vector(x)
    src, dst = dg.arc_arrays()
    if isinstance(payoffs, QuadraticPayoffs):
        indptr, nb_node, nb_arc = _closed_neighborhood_csr(dg)
        values = kernels.nbrd_flows(
            xv, payoffs.a, payoffs.c, indptr, nb_node, nb_arc, src.size
        )
        return ArcFlows(src, dst, values)
    values = np.zeros(src.size)
    arc_of = {(int(i), int(j)): k for k, (i, j) in enumerate(zip(src, dst))}
    for i in range(dg.n):
        out = dg.out_neighbors[i]
        if xv[i] <= 0.0 or not out:
            continue
        nodes = np.array((i,) + out, dtype=np.int64)
        bases = np.concatenate(([0.0], xv[list(out)]))
        alloc, _ = level_allocate(
            payoffs, nodes, bases, float(xv[i]),
            bracket_tol=kernels.NBRD_BRACKET_TOL,
        )
        for slot, j in enumerate(out, start=1):
            values[arc_of[i, j]] = alloc[slot]
    return ArcFlows(src, dst, values)


def nrpm_target(
    x,
    dg: FlowDigraph,
    payoffs: QuadraticPayoffs,
    *,
    tol: float = 1e-10,
    warm: np.ndarray | None = None,
) -> ReallocationTarget:
    """Welfare-optimal joint placement of the current mass, each node's share
    restricted to its closed out-neighborhood.

    Every node is a source (zero-budget sources keep the variable layout
    fixed across an integration, which is what makes warm-starting valid).
    Opposed arc pairs both carrying flow are netted against each other, the
    cancelled amount staying home; the received masses are unchanged by this.
    """
    xv = _state_vector(x)
    src, dst = dg.arc_arrays()
    sources = tuple(
        (float(max(xv[i], 0.0)), (i,) + dg.out_neighbors[i]) for i in range(dg.n)
    )
    result = solve_allocation(
        AllocationProblem(payoffs, sources), tol=tol, r0=warm
    )
    allocs = list(result.allocations)
    arc_of = {(int(i), int(j)): k for k, (i, j) in enumerate(zip(src, dst))}
    values = np.zeros(src.size)
    for i in range(dg.n):
        for slot, j in enumerate(dg.out_neighbors[i], start=1):
            values[arc_of[i, j]] = allocs[i][slot]
    for k, (i, j) in enumerate(zip(src, dst)):
        if i < j and (int(j), int(i)) in arc_of:
            kr = arc_of[int(j), int(i)]
            churn = min(values[k], values[kr])
            if churn > 0.0:
                values[k] -= churn
                values[kr] -= churn
                allocs[i][0] += churn
                allocs[j][0] += churn
                slot_ij = dg.out_neighbors[i].index(int(j)) + 1
                slot_ji = dg.out_neighbors[j].index(int(i)) + 1
                allocs[i][slot_ij] -= churn
                allocs[j][slot_ji] -= churn
    split = np.concatenate(allocs) if allocs else np.zeros(0)
    return ReallocationTarget(
        z=result.received,
        flows=ArcFlows(src, dst, values),
        split=split,
        iters=result.iters,
    )


@dataclass(frozen=True)
class IntegratorConfig:
    h: float = 1e-2
    eq_tol: float = 1e-8
    window: int = 50
    t_max: float = 1e4
    record_stride: int = 10
    alloc_tol: float = 1e-10

    def __post_init__(self):
        if self.h <= 0 or self.t_max < self.h:
            raise ValueError("need 0 < h <= t_max")
        if self.window < 1 or self.record_stride < 1:
            raise ValueError("window and record_stride must be >= 1")


@dataclass(frozen=True)
class Trajectory:
    """Recorded run of one dynamic: sample times, states (one row per
    sample), social utilities, and the bookkeeping the integrator kept."""

    times: np.ndarray
    states: np.ndarray
    utilities: np.ndarray
    converged: bool
    final: PopulationState
    diagnostics: dict = field(repr=False)


def simulate(
    net,
    payoffs: PayoffSpec,
    state0,
    dynamic: str = "ssd",
    config: IntegratorConfig | None = None,
    *,
    theta: np.ndarray | None = None,
) -> Trajectory:
    """Integrate ``dynamic`` from ``state0`` until quiet or ``t_max``.

    ``net`` may be a ChoiceGraph (both arc orientations are used) or a
    FlowDigraph.  ``theta``, when given, is a per-node ceiling whose largest
    observed excess is reported in the diagnostics (used to audit
    reachable-mass arguments on reduced digraphs).

    Raises IntegrationDiverged if any occupancy drops below -1e-9, which for
    these dynamics signals a step size too large for the payoff curvatures.
    """
    if dynamic not in DYNAMICS:
        raise ValueError(f"unknown dynamic {dynamic!r}; expected one of {DYNAMICS}")
    cfg = config if config is not None else IntegratorConfig()
    dg = arcs_from_edges(net) if isinstance(net, ChoiceGraph) else net
    xv = _state_vector(state0)
    rho = state0.rho if isinstance(state0, PopulationState) else float(xv.sum())
    if xv.size != dg.n:
        raise ValueError("state length does not match the network")
    quad = isinstance(payoffs, QuadraticPayoffs)
    if dynamic == "nrpm" and not quad:
        raise TypeError("simultaneous reallocation is only solved for quadratic payoffs")

    if quad and dynamic in ("ssd", "nbrd"):
        src, dst = dg.arc_arrays()
        indptr, nb_node, nb_arc = _closed_neighborhood_csr(dg)
        out = kernels.rk4_run(
            0 if dynamic == "ssd" else 1,
            np.ascontiguousarray(xv, dtype=np.float64),
            payoffs.a, payoffs.c, src, dst, indptr, nb_node, nb_arc,
            rho, cfg.h, cfg.t_max, cfg.eq_tol, cfg.window, cfg.record_stride,
            theta=None if theta is None
            else np.ascontiguousarray(theta, dtype=np.float64),
        )
        backend = kernels.BACKEND
    else:
        out = _python_rk4(dynamic, xv, dg, payoffs, rho, cfg, theta)
        backend = "python"

    if out["diverged"]:
        raise IntegrationDiverged(
            f"{dynamic}: occupancy reached {out['min_x']:.3e} at t={out['t']:.4f}; "
            f"reduce the step size"
        )
    diagnostics = {
        "dynamic": dynamic,
        "backend": backend,
        "steps": int(out["steps"]),
        "t_final": float(out["t"]),
        "max_mass_drift": float(out["max_mass_drift"]),
        "min_step_dU": float(out["min_step_dU"]),
        "correlation_violations": int(out["spc_violations"]),
        "theta_excess": float(out["theta_excess"]) if theta is not None else None,
    }
    return Trajectory(
        times=np.asarray(out["rec_t"]),
        states=np.asarray(out["rec_x"]),
        utilities=np.asarray(out["rec_u"]),
        converged=bool(out["converged"]),
        final=PopulationState(out["x"], rho),
        diagnostics=diagnostics,
    )


def _python_rk4(dynamic, x0, dg, payoffs, rho, cfg, theta):
    """Pure-Python twin of the kernel driver, for the simultaneous dynamic
    and for non-quadratic payoff families.  Same stepping, stopping, and
    accounting; the correlation audit form depends on the dynamic."""
    src, dst = dg.arc_arrays()
    n = dg.n
    x = np.array(x0, dtype=np.float64)
    warm = None
    violations = 0

    def velocity(state, audit):
        nonlocal warm, violations
        if dynamic == "nrpm":
            target = nrpm_target(state, dg, payoffs, tol=cfg.alloc_tol, warm=warm)
            warm = target.split
            if audit and not flows_respect_levels(target.z, target.flows, payoffs):
                violations += 1
            return target.z - state
        delta = ssd_delta(state, dg, payoffs) if dynamic == "ssd" \
            else nbrd_delta(state, dg, payoffs)
        if audit and not check_strong_positive_correlation(state, delta, payoffs):
            violations += 1
        return kernels.flow_velocity(delta.values, src, dst, n)

    h = cfg.h
    max_steps = int(np.ceil(cfg.t_max / h - 1e-9))
    rec_t = [0.0]
    rec_x = [x.copy()]
    rec_u = [social_utility(x, payoffs)]
    t = 0.0
    steps = 0
    quiet = 0
    converged = False
    max_drift = 0.0
    min_dU = np.inf
    theta_excess = 0.0
    u_prev = rec_u[0]
    while steps < max_steps:
        k1 = velocity(x, True)
        vel_inf = np.max(np.abs(k1)) if n else 0.0
        quiet = quiet + 1 if vel_inf < cfg.eq_tol else 0
        if quiet >= cfg.window:
            converged = True
            break
        k2 = velocity(x + 0.5 * h * k1, False)
        k3 = velocity(x + 0.5 * h * k2, False)
        k4 = velocity(x + h * k3, False)
        x_new = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        mn = x_new.min() if n else 0.0
        if mn < -1e-9:
            return {
                "x": x_new, "t": t + h, "steps": steps + 1,
                "converged": False, "diverged": True, "min_x": float(mn),
            }
        np.clip(x_new, 0.0, None, out=x_new)
        drift = abs(x_new.sum() - rho)
        max_drift = max(max_drift, drift)
        if drift > 1e-12:
            x_new *= rho / x_new.sum()
        x = x_new
        t += h
        steps += 1
        u_now = social_utility(x, payoffs)
        min_dU = min(min_dU, u_now - u_prev)
        u_prev = u_now
        if theta is not None:
            theta_excess = max(theta_excess, float(np.max(x - theta)))
        if steps % cfg.record_stride == 0:
            rec_t.append(t)
            rec_x.append(x.copy())
            rec_u.append(u_now)
    if rec_t[-1] != t:
        rec_t.append(t)
        rec_x.append(x.copy())
        rec_u.append(u_prev)
    return {
        "x": x,
        "t": t,
        "steps": steps,
        "converged": converged,
        "diverged": False,
        "rec_t": np.asarray(rec_t),
        "rec_x": np.asarray(rec_x),
        "rec_u": np.asarray(rec_u),
        "max_mass_drift": max_drift,
        "min_step_dU": float(min_dU) if steps else 0.0,
        "spc_violations": violations,
        "theta_excess": theta_excess,
    }
