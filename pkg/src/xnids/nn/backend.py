"""Kernel backend selection.

``XNIDS_BACKEND=numpy`` forces the pure-numpy kernels; ``XNIDS_BACKEND=numba``
forces the jitted ones (ImportError if numba is missing). Unset, numba is
used when importable. The choice is re-read on every call so tests can flip
it with a plain environment change.
"""

from __future__ import annotations

import os

BACKEND_ENV = "XNIDS_BACKEND"


def _numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def active_backend() -> str:
    choice = os.environ.get(BACKEND_ENV, "").strip().lower()
    if choice == "numpy":
        return "numpy"
    if choice == "numba":
        if not _numba_available():
            raise ImportError(f"{BACKEND_ENV}=numba but numba is not importable")
        return "numba"
    if choice:
        raise ValueError(f"{BACKEND_ENV} must be 'numpy' or 'numba', got {choice!r}")
    return "numba" if _numba_available() else "numpy"


def kernels():
    """Return the active kernel module (same function surface either way)."""
    if active_backend() == "numba":
        from . import kernels_numba

        return kernels_numba
    from . import kernels_numpy

    return kernels_numpy
