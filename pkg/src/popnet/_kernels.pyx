# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels for the quadratic payoff family.

Mirrors popnet._kernels_py function-for-function; see that module for the
reference semantics.  Kept allocation-free inside the integrator loop.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport ceil

cnp.import_array()

BACKEND = "compiled"

DEF NBRD_BRACKET_TOL = 1e-14
DEF NBRD_MAX_BISECT = 200


cdef inline double _dmax(double p, double q) noexcept nogil:
    return p if p > q else q


cdef inline double _dmin(double p, double q) noexcept nogil:
    return p if p < q else q


cdef void _ssd_flows(const double[::1] x, const double[::1] a, const double[::1] c,
                     const long[::1] src, const long[::1] dst, double[::1] out) noexcept nogil:
    cdef Py_ssize_t k, i, j
    cdef double lvl, xs, xs_pos, y, gain, a_s, c_s
    for k in range(src.shape[0]):
        i = src[k]
        j = dst[k]
        xs = x[i]
        if xs <= 0.0:
            out[k] = 0.0
            continue
        a_s = a[i]
        c_s = c[i]
        lvl = a[j] - c[j] * x[j]
        xs_pos = xs
        y = _dmin(_dmax((a_s - lvl) / c_s, 0.0), xs_pos)
        gain = lvl * (xs_pos - y) - (
            a_s * xs_pos - 0.5 * c_s * xs_pos * xs_pos - (a_s * y - 0.5 * c_s * y * y)
        )
        out[k] = _dmax(gain, 0.0)


cdef void _nbrd_flows(const double[::1] x, const double[::1] a, const double[::1] c,
                      const long[::1] nb_indptr, const long[::1] nb_node, const long[::1] nb_arc,
                      double[::1] out) noexcept nogil:
    cdef Py_ssize_t i, k, lo_k, hi_k, nd
    cdef long arc
    cdef double budget, base, hi, lo, mid, level, filled, d, v
    for k in range(out.shape[0]):
        out[k] = 0.0
    for i in range(x.shape[0]):
        budget = x[i]
        if budget <= 0.0:
            continue
        lo_k = nb_indptr[i]
        hi_k = nb_indptr[i + 1]
        if hi_k - lo_k <= 1:
            continue
        hi = -1e300
        lo = 1e300
        for k in range(lo_k, hi_k):
            nd = nb_node[k]
            base = x[nd] if nb_arc[k] >= 0 else 0.0
            v = a[nd] - c[nd] * base
            hi = _dmax(hi, v)
            lo = _dmin(lo, a[nd] - c[nd] * (base + budget))
        for k in range(NBRD_MAX_BISECT):
            if hi - lo <= NBRD_BRACKET_TOL:
                break
            mid = 0.5 * (lo + hi)
            filled = 0.0
            for nd in range(lo_k, hi_k):
                base = x[nb_node[nd]] if nb_arc[nd] >= 0 else 0.0
                d = (a[nb_node[nd]] - mid) / c[nb_node[nd]] - base
                if d > 0.0:
                    filled += d
            if filled > budget:
                lo = mid
            else:
                hi = mid
        level = 0.5 * (lo + hi)
        for k in range(lo_k, hi_k):
            arc = nb_arc[k]
            if arc < 0:
                continue
            nd = nb_node[k]
            d = (a[nd] - level) / c[nd] - x[nd]
            out[arc] = _dmax(d, 0.0)


cdef void _velocity(const double[::1] delta, const long[::1] src, const long[::1] dst,
                    double[::1] out) noexcept nogil:
    cdef Py_ssize_t k
    for k in range(out.shape[0]):
        out[k] = 0.0
    for k in range(delta.shape[0]):
        out[dst[k]] += delta[k]
        out[src[k]] -= delta[k]


cdef inline double _quad_utility(const double[::1] x, const double[::1] a, const double[::1] c) noexcept nogil:
    cdef Py_ssize_t i
    cdef double s = 0.0
    for i in range(x.shape[0]):
        s += a[i] * x[i] - 0.5 * c[i] * x[i] * x[i]
    return s


def ssd_flows(x, a, c, src, dst, out=None):
    if out is None:
        out = np.empty(src.size)
    if src.size:
        _ssd_flows(x, a, c, src, dst, out)
    return out


def nbrd_flows(x, a, c, nb_indptr, nb_node, nb_arc, m, out=None):
    if out is None:
        out = np.zeros(m)
    cdef double[::1] ov = out
    cdef Py_ssize_t k
    if m:
        _nbrd_flows(x, a, c, nb_indptr, nb_node, nb_arc, out)
    else:
        for k in range(ov.shape[0]):
            ov[k] = 0.0
    return out


def flow_velocity(delta, src, dst, n, out=None):
    if out is None:
        out = np.empty(n)
    _velocity(delta, src, dst, out)
    return out


def project_simplex(v, radius):
    out = np.empty_like(v)
    cdef const double[::1] vv = np.ascontiguousarray(v)
    cdef double[::1] ov = out
    cdef double[::1] buf = np.empty(vv.shape[0])
    _project_simplex(vv, radius, ov, buf)
    return out


cdef void _project_simplex(const double[::1] v, double radius, double[::1] out,
                           double[::1] buf) noexcept nogil:
    """Sort/cumsum projection onto the radius-simplex; buf is scratch."""
    cdef Py_ssize_t m = v.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double key, cssv, tau
    if radius <= 0.0:
        for i in range(m):
            out[i] = 0.0
        return
    for i in range(m):
        buf[i] = v[i]
    # insertion sort, descending (segments are small)
    for i in range(1, m):
        key = buf[i]
        j = i - 1
        while j >= 0 and buf[j] < key:
            buf[j + 1] = buf[j]
            j -= 1
        buf[j + 1] = key
    cssv = 0.0
    tau = 0.0
    k = 0
    for i in range(m):
        cssv += buf[i]
        # at i == 0 the test is radius > 0 in exact arithmetic, but it rounds
        # to false when radius falls below the float resolution of buf[0]
        if i == 0 or buf[i] - (cssv - radius) / (i + 1) > 0.0:
            k = i + 1
            tau = (cssv - radius) / (i + 1)
    for i in range(m):
        out[i] = _dmax(v[i] - tau, 0.0)


def pga_solve(r, budgets, seg_ptr, var_dst, a, c, step, tol, stall_tol, act_eps, max_iters):
    cdef double[::1] rv = r
    cdef const double[::1] bv = budgets
    cdef const long[::1] pv = seg_ptr
    cdef const long[::1] dv = var_dst
    cdef const double[::1] av = a
    cdef const double[::1] cv = c
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t nv = r.shape[0]
    cdef Py_ssize_t n_seg = budgets.shape[0]
    cdef double[::1] w = np.zeros(n)
    cdef double[::1] w_new = np.empty(n)
    cdef double[::1] r_new = np.empty(nv)
    cdef double[::1] grad = np.empty(nv)
    cdef double[::1] buf = np.empty(nv)
    cdef Py_ssize_t it, k, s, lo, hi
    cdef double dstep = step, dtol = tol, dstall = stall_tol, dact = act_eps
    cdef double diff, best, lvl
    cdef bint stalled, ok
    cdef Py_ssize_t imax = max_iters
    for k in range(nv):
        w[dv[k]] += rv[k]
    for it in range(1, imax + 1):
        for k in range(nv):
            grad[k] = rv[k] + dstep * (av[dv[k]] - cv[dv[k]] * w[dv[k]])
        for s in range(n_seg):
            lo = pv[s]
            hi = pv[s + 1]
            if hi > lo:
                _project_simplex(grad[lo:hi], bv[s], r_new[lo:hi], buf[lo:hi])
        for k in range(n):
            w_new[k] = 0.0
        for k in range(nv):
            w_new[dv[k]] += r_new[k]
        stalled = True
        for k in range(n):
            diff = w_new[k] - w[k]
            if diff < 0.0:
                diff = -diff
            if diff > dstall:
                stalled = False
                break
        for k in range(nv):
            rv[k] = r_new[k]
        for k in range(n):
            w[k] = w_new[k]
        if stalled:
            ok = True
            for s in range(n_seg):
                lo = pv[s]
                hi = pv[s + 1]
                if hi <= lo:
                    continue
                best = -1e300
                for k in range(lo, hi):
                    lvl = av[dv[k]] - cv[dv[k]] * w[dv[k]]
                    buf[k] = lvl
                    if lvl > best:
                        best = lvl
                for k in range(lo, hi):
                    if rv[k] > dact and buf[k] < best - dtol:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                return it, True
    return imax, False


def rk4_run(kind, x, a, c, src, dst, nb_indptr, nb_node, nb_arc, rho, h, t_max,
            eq_tol, window, record_stride, theta=None, spc_eps=1e-12):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t m = src.shape[0]
    cdef long kd = kind
    xw = np.array(x, dtype=np.float64)
    cdef double[::1] xv = xw
    cdef const double[::1] av = a
    cdef const double[::1] cv = c
    cdef const long[::1] sv = src
    cdef const long[::1] tv = dst
    cdef const long[::1] ip = nb_indptr
    cdef const long[::1] nn = nb_node
    cdef const long[::1] na = nb_arc
    cdef double[::1] delta = np.empty(m)
    cdef double[::1] scratch = np.empty(m)
    cdef double[::1] k1 = np.empty(n)
    cdef double[::1] k2 = np.empty(n)
    cdef double[::1] k3 = np.empty(n)
    cdef double[::1] k4 = np.empty(n)
    cdef double[::1] stage = np.empty(n)
    cdef const double[::1] th
    cdef bint has_theta = theta is not None
    if has_theta:
        th = theta
    else:
        th = np.empty(0)

    cdef double dh = h, drho = rho, dtol = eq_tol, deps = spc_eps
    cdef Py_ssize_t max_steps = <Py_ssize_t> ceil(t_max / h - 1e-9)
    cdef Py_ssize_t stride = record_stride
    cdef Py_ssize_t win = window
    cdef Py_ssize_t max_rec = max_steps // stride + 3
    rec_t_arr = np.empty(max_rec)
    rec_x_arr = np.empty((max_rec, n))
    rec_u_arr = np.empty(max_rec)
    cdef double[::1] rec_t = rec_t_arr
    cdef double[:, ::1] rec_x = rec_x_arr
    cdef double[::1] rec_u = rec_u_arr

    cdef Py_ssize_t steps = 0, quiet = 0, nrec = 0, i, k
    cdef double t = 0.0, u_prev, u_now, vel_inf, v, mn, total, drift
    cdef double max_drift = 0.0, min_dU = 1e300, theta_excess = 0.0
    cdef long spc_violations = 0
    cdef bint converged = False, diverged = False, step_bad

    u_prev = _quad_utility(xv, av, cv)
    rec_t[0] = 0.0
    for i in range(n):
        rec_x[0, i] = xv[i]
    rec_u[0] = u_prev
    nrec = 1

    with nogil:
        while steps < max_steps:
            if kd == 0:
                _ssd_flows(xv, av, cv, sv, tv, delta)
            else:
                _nbrd_flows(xv, av, cv, ip, nn, na, delta)
            _velocity(delta, sv, tv, k1)
            step_bad = False
            for k in range(m):
                if delta[k] > deps:
                    if av[sv[k]] - cv[sv[k]] * xv[sv[k]] >= av[tv[k]] - cv[tv[k]] * xv[tv[k]]:
                        step_bad = True
            if step_bad:
                spc_violations += 1
            vel_inf = 0.0
            for i in range(n):
                v = k1[i] if k1[i] >= 0.0 else -k1[i]
                if v > vel_inf:
                    vel_inf = v
            if vel_inf < dtol:
                quiet += 1
            else:
                quiet = 0
            if quiet >= win:
                converged = True
                break
            for i in range(n):
                stage[i] = xv[i] + 0.5 * dh * k1[i]
            if kd == 0:
                _ssd_flows(stage, av, cv, sv, tv, scratch)
            else:
                _nbrd_flows(stage, av, cv, ip, nn, na, scratch)
            _velocity(scratch, sv, tv, k2)
            for i in range(n):
                stage[i] = xv[i] + 0.5 * dh * k2[i]
            if kd == 0:
                _ssd_flows(stage, av, cv, sv, tv, scratch)
            else:
                _nbrd_flows(stage, av, cv, ip, nn, na, scratch)
            _velocity(scratch, sv, tv, k3)
            for i in range(n):
                stage[i] = xv[i] + dh * k3[i]
            if kd == 0:
                _ssd_flows(stage, av, cv, sv, tv, scratch)
            else:
                _nbrd_flows(stage, av, cv, ip, nn, na, scratch)
            _velocity(scratch, sv, tv, k4)
            mn = 0.0
            for i in range(n):
                xv[i] = xv[i] + (dh / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                if xv[i] < mn:
                    mn = xv[i]
            if mn < -1e-9:
                diverged = True
                t += dh
                steps += 1
                break
            total = 0.0
            for i in range(n):
                if xv[i] < 0.0:
                    xv[i] = 0.0
                total += xv[i]
            drift = total - drho
            if drift < 0.0:
                drift = -drift
            if drift > max_drift:
                max_drift = drift
            if drift > 1e-12 and total > 0.0:
                for i in range(n):
                    xv[i] *= drho / total
            t += dh
            steps += 1
            u_now = _quad_utility(xv, av, cv)
            if u_now - u_prev < min_dU:
                min_dU = u_now - u_prev
            u_prev = u_now
            if has_theta:
                for i in range(n):
                    if xv[i] - th[i] > theta_excess:
                        theta_excess = xv[i] - th[i]
            if steps % stride == 0:
                rec_t[nrec] = t
                for i in range(n):
                    rec_x[nrec, i] = xv[i]
                rec_u[nrec] = u_now
                nrec += 1

    if diverged:
        return {
            "x": xw,
            "t": t,
            "steps": steps,
            "converged": False,
            "diverged": True,
            "min_x": float(mn),
        }
    if rec_t[nrec - 1] != t:
        rec_t[nrec] = t
        for i in range(n):
            rec_x[nrec, i] = xv[i]
        rec_u[nrec] = u_prev
        nrec += 1
    return {
        "x": xw,
        "t": t,
        "steps": steps,
        "converged": converged,
        "diverged": False,
        "rec_t": rec_t_arr[:nrec].copy(),
        "rec_x": rec_x_arr[:nrec].copy(),
        "rec_u": rec_u_arr[:nrec].copy(),
        "max_mass_drift": max_drift,
        "min_step_dU": float(min_dU) if steps else 0.0,
        "spc_violations": int(spc_violations),
        "theta_excess": theta_excess,
    }
