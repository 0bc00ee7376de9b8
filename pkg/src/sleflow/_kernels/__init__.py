"""Kernel dispatch: resolve the active backend once at import time."""

from __future__ import annotations

from .. import backend as _backend

_requested = _backend.requested_backend()

if _requested in ("auto", "numba"):
    try:
        from . import numba_impl as impl
    except ImportError:
        if _requested == "numba":
            raise
        from . import numpy_impl as impl
else:
    from . import numpy_impl as impl

ACTIVE_BACKEND: str = impl.BACKEND_NAME


def get_impl(name: str):
    """Fetch a backend module explicitly (for benchmarks and twin tests)."""
    if name == "numba":
        from . import numba_impl
        return numba_impl
    if name == "numpy":
        from . import numpy_impl
        return numpy_impl
    raise ValueError(f"unknown backend {name!r}")
