"""Backend dispatch for the numerical kernels.

The compiled extension (popnet._kernels, built from _kernels.pyx) is used
when importable; otherwise we fall back to the pure-NumPy twin.  Setting
POPNET_PURE_PYTHON=1 forces the fallback, which the test suite uses to
check both backends agree.
"""
import os

if os.environ.get("POPNET_PURE_PYTHON") == "1":
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

BACKEND = _impl.BACKEND

# bisection bracket used by the neighborhood re-leveling kernel; the compiled
# backend inlines the same value at build time
from ._kernels_py import NBRD_BRACKET_TOL  # noqa: E402

ssd_flows = _impl.ssd_flows
nbrd_flows = _impl.nbrd_flows
flow_velocity = _impl.flow_velocity
project_simplex = _impl.project_simplex
pga_solve = _impl.pga_solve
rk4_run = _impl.rk4_run
