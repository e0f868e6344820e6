"""Backend selection for the hot kernels.

Every kernel in :mod:`mobiflow.kernels` exists twice: a loop version compiled
with numba ``@njit`` and a pure-numpy version. The active one is chosen once,
at import time, from the ``MOBIFLOW_BACKEND`` environment variable:

``numba`` (default when numba imports)
    compiled loops, cached on disk after the first call.
``numpy``
    vectorised numpy fallback, no compilation.

Both paths are kept importable so tests and the benchmark can compare them
in one process regardless of the active selection.
"""

import os
import warnings

BACKEND_ENV = "MOBIFLOW_BACKEND"

try:
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False
    _njit = None


def _requested_backend():
    value = os.environ.get(BACKEND_ENV, "").strip().lower()
    if value in ("", "auto"):
        return "numba" if HAVE_NUMBA else "numpy"
    if value not in ("numba", "numpy"):
        raise ValueError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {value!r}")
    if value == "numba" and not HAVE_NUMBA:
        warnings.warn("numba requested but not importable; using the numpy backend")
        return "numpy"
    return value


BACKEND = _requested_backend()


def njit(fn):
    """Compile ``fn`` with numba when available, else return it untouched."""
    if not HAVE_NUMBA:
        return fn
    return _njit(cache=True, nogil=True)(fn)


def select(jit_fn, numpy_fn):
    """Pick the implementation matching the active backend."""
    return jit_fn if BACKEND == "numba" else numpy_fn
