"""Pure-NumPy kernels for the quadratic payoff family.

Reference implementations with the same signatures as the compiled module
``popnet._kernels``; ``popnet.kernels`` picks whichever is available.  All
functions take raw arrays so both backends stay trivially comparable.

Quadratic family: p(y) = a*y - c*y*y/2, u(y) = a - c*y.
"""
from __future__ import annotations

import numpy as np

BACKEND = "python"


def ssd_flows(x, a, c, src, dst, out=None):
    """Pairwise-comparison arc flows.

    Flow on (i, j) is the aggregate gain of the origin strata that would be
    better off at the destination's current density:
    integral over s in [0, x_i] of max(u_j(x_j) - u_i(s), 0).
    """
    if out is None:
        out = np.empty(src.size)
    if src.size == 0:
        return out
    lvl = a[dst] - c[dst] * x[dst]
    xs = x[src]
    a_s = a[src]
    c_s = c[src]
    xs_pos = np.maximum(xs, 0.0)
    y = np.minimum(np.maximum((a_s - lvl) / c_s, 0.0), xs_pos)
    # lvl*(xs - y) - (p(xs) - p(y)), clipped below at zero
    gain = lvl * (xs_pos - y) - (
        a_s * xs_pos - 0.5 * c_s * xs_pos * xs_pos - (a_s * y - 0.5 * c_s * y * y)
    )
    np.maximum(gain, 0.0, out=out)
    out[xs <= 0.0] = 0.0
    return out


NBRD_BRACKET_TOL = 1e-14  # tight so spurious allocations stay < 1e-12
NBRD_MAX_BISECT = 200


def nbrd_flows(x, a, c, nb_indptr, nb_node, nb_arc, m, out=None):
    """Per-node reallocation flows.

    Node i redistributes its whole mass over its closed out-neighborhood,
    topping up neighbors from their current occupancy while its own slot
    refills from empty; the common density level is found by bisection.
    ``nb_arc`` maps neighborhood slots to arc rows (-1 for the self slot).
    """
    if out is None:
        out = np.zeros(m)
    else:
        out[:] = 0.0
    n = x.size
    for i in range(n):
        budget = x[i]
        if budget <= 0.0:
            continue
        lo_k, hi_k = nb_indptr[i], nb_indptr[i + 1]
        if hi_k - lo_k <= 1:  # no out-arcs: mass stays put
            continue
        nodes = nb_node[lo_k:hi_k]
        arcs = nb_arc[lo_k:hi_k]
        bases = np.where(arcs >= 0, x[nodes], 0.0)
        an = a[nodes]
        cn = c[nodes]
        hi = np.max(an - cn * bases)
        lo = np.min(an - cn * (bases + budget))
        for _ in range(NBRD_MAX_BISECT):
            if hi - lo <= NBRD_BRACKET_TOL:
                break
            mid = 0.5 * (lo + hi)
            filled = np.clip((an - mid) / cn - bases, 0.0, None).sum()
            if filled > budget:
                lo = mid
            else:
                hi = mid
        level = 0.5 * (lo + hi)
        alloc = np.clip((an - level) / cn - bases, 0.0, None)
        keep = arcs >= 0
        out[arcs[keep]] = alloc[keep]
    return out


def flow_velocity(delta, src, dst, n, out=None):
    """Node velocity induced by arc flows: inflow minus outflow."""
    v = np.bincount(dst, weights=delta, minlength=n) - np.bincount(
        src, weights=delta, minlength=n
    )
    if out is None:
        return v
    out[:] = v
    return out


def project_simplex(v, radius):
    """Euclidean projection onto {r >= 0, sum r = radius} (sort/cumsum form)."""
    if radius <= 0.0:
        return np.zeros_like(v)
    u = np.sort(v)[::-1]
    cssv = np.cumsum(u) - radius
    ind = np.arange(1, v.size + 1)
    cond = u - cssv / ind > 0
    # u[0] - cssv[0] is radius in exact arithmetic, but rounds to zero when
    # radius falls below the float resolution of u[0]; the first prefix is
    # always active.
    cond[0] = True
    k = ind[cond][-1]
    tau = cssv[cond][-1] / k
    return np.maximum(v - tau, 0.0)


def pga_solve(r, budgets, seg_ptr, var_dst, a, c, step, tol, stall_tol, act_eps, max_iters):
    """Fixed-step projected gradient ascent on sum_j p_j(w_j), w = received mass.

    ``r`` (modified in place) holds per-source allocations in contiguous
    segments; ``var_dst[k]`` is the destination node of variable k.  Stops when
    every variable above ``act_eps`` sits within ``tol`` of its segment's best
    destination density and the received masses move less than ``stall_tol``
    per sweep.  Returns (iterations, converged).
    """
    n = a.size
    n_seg = budgets.size
    w = np.bincount(var_dst, weights=r, minlength=n)
    for it in range(1, max_iters + 1):
        uw = a - c * w
        g = uw[var_dst]
        r_new = np.empty_like(r)
        for s in range(n_seg):
            sl = slice(seg_ptr[s], seg_ptr[s + 1])
            r_new[sl] = project_simplex(r[sl] + step * g[sl], budgets[s])
        w_new = np.bincount(var_dst, weights=r_new, minlength=n)
        stalled = np.max(np.abs(w_new - w)) <= stall_tol if n else True
        r[:] = r_new
        w = w_new
        if stalled:
            uw = a - c * w
            ok = True
            for s in range(n_seg):
                sl = slice(seg_ptr[s], seg_ptr[s + 1])
                if seg_ptr[s + 1] == seg_ptr[s]:
                    continue
                lvl = uw[var_dst[sl]]
                best = np.max(lvl)
                if np.any((r[sl] > act_eps) & (lvl < best - tol)):
                    ok = False
                    break
            if ok:
                return it, True
    return max_iters, False


def _quad_utility(x, a, c):
    return float(np.sum(a * x - 0.5 * c * x * x))


def rk4_run(
    kind,
    x,
    a,
    c,
    src,
    dst,
    nb_indptr,
    nb_node,
    nb_arc,
    rho,
    h,
    t_max,
    eq_tol,
    window,
    record_stride,
    theta=None,
    spc_eps=1e-12,
):
    """Fixed-step RK4 driver for the closed-form dynamics (kind 0 = ssd,
    kind 1 = nbrd), with per-step conservation/monotonicity/correlation
    accounting.  Returns a dict mirrored by the compiled backend.
    """
    x = x.copy()
    n = x.size
    m = src.size
    delta = np.empty(m)

    def flows(state, out):
        if kind == 0:
            return ssd_flows(state, a, c, src, dst, out)
        return nbrd_flows(state, a, c, nb_indptr, nb_node, nb_arc, m, out)

    max_steps = int(np.ceil(t_max / h - 1e-9))
    rec_t = [0.0]
    rec_x = [x.copy()]
    rec_u = [_quad_utility(x, a, c)]
    t = 0.0
    steps = 0
    quiet = 0
    converged = False
    max_drift = 0.0
    min_dU = np.inf
    spc_violations = 0
    theta_excess = 0.0
    u_prev = rec_u[0]
    scratch = np.empty(m)
    while steps < max_steps:
        flows(x, delta)
        k1 = flow_velocity(delta, src, dst, n)
        # correlation audit on the flows actually emitted at the current state
        ux = a - c * x
        bad = ux[src] >= ux[dst]
        if m and np.any(delta[bad] > spc_eps):
            spc_violations += 1
        vel_inf = np.max(np.abs(k1)) if n else 0.0
        quiet = quiet + 1 if vel_inf < eq_tol else 0
        if quiet >= window:
            converged = True
            break
        k2 = flow_velocity(flows(x + 0.5 * h * k1, scratch), src, dst, n)
        k3 = flow_velocity(flows(x + 0.5 * h * k2, scratch), src, dst, n)
        k4 = flow_velocity(flows(x + h * k3, scratch), src, dst, n)
        x_new = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        mn = x_new.min() if n else 0.0
        if mn < -1e-9:
            return {
                "x": x_new,
                "t": t + h,
                "steps": steps + 1,
                "converged": False,
                "diverged": True,
                "min_x": float(mn),
            }
        np.clip(x_new, 0.0, None, out=x_new)
        drift = abs(x_new.sum() - rho)
        max_drift = max(max_drift, drift)
        if drift > 1e-12:
            x_new *= rho / x_new.sum()
        x = x_new
        t += h
        steps += 1
        u_now = _quad_utility(x, a, c)
        min_dU = min(min_dU, u_now - u_prev)
        u_prev = u_now
        if theta is not None:
            theta_excess = max(theta_excess, float(np.max(x - theta)))
        if steps % record_stride == 0:
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
        "spc_violations": spc_violations,
        "theta_excess": theta_excess,
    }
