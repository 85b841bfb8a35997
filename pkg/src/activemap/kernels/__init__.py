"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is chosen once at import time. Set ``ACTIVEMAP_DISABLE_NUMBA=1``
to force the numpy path; it is also used automatically when numba is missing.
Both modules expose the same functions, so callers can also request one
explicitly through :func:`get_backend`.
"""
import os

from . import _numpy

_DISABLED = os.environ.get("ACTIVEMAP_DISABLE_NUMBA", "").strip().lower() in (
    "1", "true", "yes", "on")

_compiled = None
if not _DISABLED:
    try:
        from . import _numba as _compiled
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _compiled = None

_active = _compiled if _compiled is not None else _numpy

BACKEND = _active.NAME


def available_backends():
    return [m.NAME for m in (_compiled, _numpy) if m is not None]


def get_backend(name=None):
    """Return the kernel module for ``name`` ("numba", "numpy") or the default."""
    if name is None:
        return _active
    if name == "numpy":
        return _numpy
    if name == "numba":
        if _compiled is None:
            raise RuntimeError("numba backend unavailable (disabled or not installed)")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")
