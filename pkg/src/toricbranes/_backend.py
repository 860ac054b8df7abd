"""Select numba-compiled kernels or their pure-numpy twins.

Set ``TORICBRANES_NO_NUMBA=1`` to force the numpy path (useful for debugging
and for the benchmark in ``benchmarks/``).
"""

from __future__ import annotations

import os

_DISABLED = os.environ.get("TORICBRANES_NO_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False
    _njit = None


def njit(fn):
    """Compile with numba when available; otherwise return the function untouched."""
    if HAVE_NUMBA:
        return _njit(cache=True, fastmath=False)(fn)
    return fn


def backend_name() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
