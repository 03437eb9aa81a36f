"""Kernel backend selection.

The compiled Jacobi kernel is preferred when the extension built; the
NumPy fallback is bit-identical, only slower.  Set SISFIT_KERNEL to
``cython`` or ``python`` to force one (``auto`` is the default).
"""

from __future__ import annotations

import os

from . import _jacobi_fallback

try:
    from . import _jacobi as _jacobi_compiled
except ImportError:
    _jacobi_compiled = None


def available_backends() -> list[str]:
    names = []
    if _jacobi_compiled is not None:
        names.append("cython")
    names.append("python")
    return names


def get_kernel(name: str):
    """Return the jacobi_cycle callable for a named backend."""
    if name == "cython":
        if _jacobi_compiled is None:
            raise RuntimeError("compiled kernel requested but not built")
        return _jacobi_compiled.jacobi_cycle
    if name == "python":
        return _jacobi_fallback.jacobi_cycle
    raise ValueError(f"unknown kernel backend {name!r}")


def _select() -> str:
    requested = os.environ.get("SISFIT_KERNEL", "auto").strip().lower()
    if requested in ("", "auto"):
        return "cython" if _jacobi_compiled is not None else "python"
    if requested in ("cython", "python"):
        get_kernel(requested)  # raises if forced but unavailable
        return requested
    raise RuntimeError(f"SISFIT_KERNEL must be auto, cython or python, got {requested!r}")


ACTIVE_BACKEND = _select()
jacobi_cycle = get_kernel(ACTIVE_BACKEND)
