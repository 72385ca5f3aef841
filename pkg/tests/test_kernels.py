from __future__ import annotations

import os
import subprocess
import sys

import numpy as np
import pytest

from popnet import _kernels_py as kpy
from popnet.dynamics import _closed_neighborhood_csr
from popnet.model import ChoiceGraph, QuadraticPayoffs, arcs_from_edges

from conftest import random_instance

kc = pytest.importorskip("popnet._kernels", reason="compiled kernels not built")


def _arrays(seed):
    g, pay, state = random_instance(seed, 3, 9)
    dg = arcs_from_edges(g)
    src, dst = dg.arc_arrays()
    ip, nn, na = _closed_neighborhood_csr(dg)
    return state.x.copy(), pay, src, dst, ip, nn, na


@pytest.mark.parametrize("seed", range(25))
def test_flow_kernels_agree(seed):
    x, pay, src, dst, ip, nn, na = _arrays(seed)
    np.testing.assert_allclose(
        kc.ssd_flows(x, pay.a, pay.c, src, dst),
        kpy.ssd_flows(x, pay.a, pay.c, src, dst),
        rtol=0, atol=1e-15,
    )
    np.testing.assert_allclose(
        kc.nbrd_flows(x, pay.a, pay.c, ip, nn, na, src.size),
        kpy.nbrd_flows(x, pay.a, pay.c, ip, nn, na, src.size),
        rtol=0, atol=1e-12,
    )


@pytest.mark.parametrize("seed", range(10))
def test_velocity_and_projection_agree(seed):
    rng = np.random.default_rng(seed)
    m, n = 12, 6
    delta = rng.uniform(0, 1, m)
    src = rng.integers(0, n, m).astype(np.int64)
    dst = (src + 1 + rng.integers(0, n - 1, m)).astype(np.int64) % n
    np.testing.assert_allclose(
        kc.flow_velocity(delta, src, dst, n),
        kpy.flow_velocity(delta, src, dst, n),
        rtol=0, atol=1e-15,
    )
    v = rng.normal(0, 1, int(rng.integers(1, 9)))
    for radius in (0.0, 0.3, 1.7):
        a = kc.project_simplex(v, radius)
        b = kpy.project_simplex(v, radius)
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-14)
        assert abs(a.sum() - (radius if radius > 0 else 0.0)) < 1e-12
        assert np.all(a >= 0)


def test_projection_budget_below_float_resolution():
    # a positive radius smaller than one ulp of the entries must still cap
    # the projected sum (the active-prefix test rounds to false everywhere
    # in that regime)
    v = np.array([0.09, 0.08])
    for radius in (1.4e-17, 5e-300):
        for proj in (kc.project_simplex, kpy.project_simplex):
            out = proj(v, radius)
            assert np.all(out >= 0.0)
            assert out.sum() <= radius + 1e-15


@pytest.mark.parametrize("seed", range(10))
def test_pga_agrees(seed):
    rng = np.random.default_rng(100 + seed)
    n = int(rng.integers(2, 6))
    pay = QuadraticPayoffs(rng.uniform(0.5, 2.0, n), rng.uniform(0.5, 2.0, n))
    seg_ptr = [0]
    var_dst = []
    budgets = []
    for i in range(n):
        dests = sorted(set([i] + list(rng.integers(0, n, 2))))
        var_dst.extend(dests)
        seg_ptr.append(len(var_dst))
        budgets.append(float(rng.uniform(0, 0.5)))
    seg_ptr = np.array(seg_ptr, dtype=np.int64)
    var_dst = np.array(var_dst, dtype=np.int64)
    budgets = np.array(budgets)
    counts = np.bincount(var_dst, minlength=n)
    step = 1.0 / float(np.max(pay.c * np.maximum(counts, 1)))

    r1 = np.zeros(var_dst.size)
    r2 = np.zeros(var_dst.size)
    for seg in range(n):
        lo, hi = seg_ptr[seg], seg_ptr[seg + 1]
        if hi > lo:
            r1[lo:hi] = budgets[seg] / (hi - lo)
    r2[:] = r1
    it1, ok1 = kc.pga_solve(r1, budgets, seg_ptr, var_dst, pay.a, pay.c,
                            step, 1e-10, 1e-13, 1e-12, 200_000)
    it2, ok2 = kpy.pga_solve(r2, budgets, seg_ptr, var_dst, pay.a, pay.c,
                             step, 1e-10, 1e-13, 1e-12, 200_000)
    assert ok1 and ok2
    assert it1 == it2
    np.testing.assert_allclose(r1, r2, rtol=0, atol=1e-13)


@pytest.mark.parametrize("kind", [0, 1])
@pytest.mark.parametrize("seed", [0, 3, 7])
def test_rk4_runs_agree(kind, seed):
    x, pay, src, dst, ip, nn, na = _arrays(seed)
    args = (kind, x, pay.a, pay.c, src, dst, ip, nn, na,
            float(x.sum()), 0.02, 50.0, 1e-9, 50, 10)
    out_c = kc.rk4_run(*args)
    out_p = kpy.rk4_run(*args)
    assert out_c["steps"] == out_p["steps"]
    assert out_c["converged"] == out_p["converged"]
    assert out_c["spc_violations"] == out_p["spc_violations"] == 0
    np.testing.assert_allclose(out_c["x"], out_p["x"], rtol=0, atol=1e-12)
    np.testing.assert_allclose(out_c["rec_u"], out_p["rec_u"], rtol=0, atol=1e-12)
    np.testing.assert_allclose(out_c["rec_x"], out_p["rec_x"], rtol=0, atol=1e-12)
    np.testing.assert_allclose(out_c["rec_t"], out_p["rec_t"], rtol=0, atol=1e-12)


def test_env_var_forces_python_backend():
    code = "import popnet.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, POPNET_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], capture_output=True,
                         text=True, env=env, check=True)
    assert out.stdout.strip() == "python"
    env.pop("POPNET_PURE_PYTHON")
    out = subprocess.run([sys.executable, "-c", code], capture_output=True,
                         text=True, env=env, check=True)
    assert out.stdout.strip() == "compiled"


def test_simulate_matches_across_backends():
    # the public entry point gives the same trajectory whichever backend runs
    from popnet.dynamics import IntegratorConfig, simulate

    g, pay, state = random_instance(11, 4, 7)
    cfg = IntegratorConfig(h=0.02, t_max=30.0)
    ref = {dyn: simulate(g, pay, state, dyn, cfg) for dyn in ("ssd", "nbrd")}
    code = (
        "import numpy as np\n"
        "from popnet.dynamics import IntegratorConfig, simulate\n"
        "import sys; sys.path.insert(0, %r)\n"
        "from conftest import random_instance\n"
        "g, pay, state = random_instance(11, 4, 7)\n"
        "cfg = IntegratorConfig(h=0.02, t_max=30.0)\n"
        "for dyn in ('ssd', 'nbrd'):\n"
        "    traj = simulate(g, pay, state, dyn, cfg)\n"
        "    np.save(f'/tmp/pure_{dyn}.npy', traj.states)\n"
    ) % os.path.dirname(__file__)
    env = dict(os.environ, POPNET_PURE_PYTHON="1")
    subprocess.run([sys.executable, "-c", code], check=True, env=env)
    for dyn in ("ssd", "nbrd"):
        pure = np.load(f"/tmp/pure_{dyn}.npy")
        np.testing.assert_allclose(ref[dyn].states, pure, rtol=0, atol=1e-12)
