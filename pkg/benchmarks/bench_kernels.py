"""Time the compiled kernels against the pure-python fallback.

Run from the repository root:  python3 benchmarks/bench_kernels.py

Measures the per-call cost of the flow kernels and a full short
integrator run for both backends (when the extension is importable).
The simultaneous-reallocation dynamic has no compiled path — its inner
solve is already vectorized — so it is reported once under the driver.
"""
from __future__ import annotations

import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))
sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from conftest import random_instance  # noqa: E402
from popnet import _kernels_py  # noqa: E402
from popnet.dynamics import IntegratorConfig, _closed_neighborhood_csr, simulate  # noqa: E402
from popnet.model import arcs_from_edges  # noqa: E402

try:
    from popnet import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def median_time(fn, repeats=200) -> float:
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return float(np.median(samples))


def main() -> None:
    g, pay, state = random_instance(3, 8, 8)
    dg = arcs_from_edges(g)
    src, dst = dg.arc_arrays()
    indptr, nb_node, nb_arc = _closed_neighborhood_csr(dg)
    x = np.ascontiguousarray(state.x)
    print(f"instance: n={g.n}, arcs={src.size}")

    backends = [("python", _kernels_py)]
    if _kernels_c is not None:
        backends.append(("compiled", _kernels_c))
    else:
        print("compiled extension not built; python numbers only")

    flow_calls = (
        ("ssd", lambda mod: mod.ssd_flows(x, pay.a, pay.c, src, dst)),
        ("nbrd", lambda mod: mod.nbrd_flows(
            x, pay.a, pay.c, indptr, nb_node, nb_arc, src.size)),
    )
    print("flow kernels:")
    for kind, call in flow_calls:
        for name, mod in backends:
            dt = median_time(lambda: call(mod))
            print(f"  {kind:4s} {name:8s} {dt * 1e6:8.1f} us/call")

    print("integrator (h=0.02, t_max=50):")
    for kind_id, kind in ((0, "ssd"), (1, "nbrd")):
        for name, mod in backends:
            def run(mod=mod):
                return mod.rk4_run(
                    kind_id, x, pay.a, pay.c, src, dst, indptr, nb_node, nb_arc,
                    state.rho, 0.02, 50.0, 1e-9, 50, 50, theta=None,
                )
            steps = run()["steps"]
            dt = median_time(run, repeats=5)
            print(f"  {kind:4s} {name:8s} {dt * 1e3:8.2f} ms "
                  f"({dt / steps * 1e6:6.2f} us/step)")
    cfg = IntegratorConfig(h=0.02, t_max=50.0, record_stride=50)
    t0 = time.perf_counter()
    traj = simulate(g, pay, state, "nrpm", cfg)
    dt = time.perf_counter() - t0
    print(f"  nrpm driver   {dt * 1e3:8.2f} ms "
          f"({dt / traj.diagnostics['steps'] * 1e6:6.2f} us/step)")


if __name__ == "__main__":
    main()
