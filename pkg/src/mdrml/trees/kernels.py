"""Backend selection for the split-search and prediction kernels.

numba is used when importable unless ``MDRML_DISABLE_NUMBA`` is set to a
truthy value, in which case the vectorised numpy path runs instead. Both
backends are importable directly for benchmarking and cross-checks.
"""
import os

from . import _numpy_kernels as numpy_backend

try:
    from . import _numba_kernels as numba_backend
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba_backend = None


def numba_disabled():
    return os.environ.get("MDRML_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")


def get_backend(name=None):
    """Return the kernel module for ``name`` ('numba', 'numpy' or None for default)."""
    if name is None:
        name = "numpy" if numba_disabled() or numba_backend is None else "numba"
    if name == "numba":
        if numba_backend is None:
            raise ImportError("numba backend requested but numba is not installed")
        return numba_backend
    if name == "numpy":
        return numpy_backend
    raise ValueError(f"unknown kernel backend {name!r}")


BACKEND = get_backend()
