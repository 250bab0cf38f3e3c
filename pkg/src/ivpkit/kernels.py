"""Backend selection for the numerical kernels.

The compiled extension ``ivpkit._kernels`` is used when it imports;
otherwise, or when ``IVPKIT_PURE_PYTHON`` is set to a non-empty value other
than ``0``, the pure-Python twins in ``ivpkit._pykernels`` are used.

Callers go through this module's attributes at call time
(``kernels.posterior_means(...)``), so :func:`use_backend` switches every
consumer at once.
"""
import os

from . import _pykernels

try:
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover - depends on build environment
    _compiled = None

from ._pykernels import INFEASIBLE, ITERATION_LIMIT, NONFINITE, OK  # noqa: F401

KERNEL_NAMES = (
    "posterior_means",
    "cross_posterior_mean",
    "marginal_benefit",
    "lcse_quadratic",
    "hermite_invert",
    "simplex_phase1",
)

BACKEND = None


def available_backends():
    """Backends importable in this environment."""
    return ("compiled", "python") if _compiled is not None else ("python",)


def use_backend(name):
    """Rebind the kernel functions to ``"compiled"`` or ``"python"``."""
    global BACKEND
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built; reinstall with Cython available")
        module = _compiled
    elif name == "python":
        module = _pykernels
    else:
        raise ValueError(f"unknown backend {name!r}")
    g = globals()
    for fn in KERNEL_NAMES:
        g[fn] = getattr(module, fn)
    BACKEND = name


def _default_backend():
    if os.environ.get("IVPKIT_PURE_PYTHON", "") not in ("", "0"):
        return "python"
    return "compiled" if _compiled is not None else "python"


use_backend(_default_backend())
