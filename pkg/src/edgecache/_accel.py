"""Numba switch.

Hot kernels are compiled with ``numba.njit`` unless ``EDGECACHE_DISABLE_NUMBA``
is set to a truthy value (or numba cannot be imported), in which case the
pure-numpy implementations in :mod:`edgecache.kernels` are used instead.
"""

from __future__ import annotations

import os

_FLAG = "EDGECACHE_DISABLE_NUMBA"


def _disabled_by_env() -> bool:
    return os.environ.get(_FLAG, "").strip().lower() not in ("", "0", "false", "no")


try:
    if _disabled_by_env():
        raise ImportError("numba disabled via " + _FLAG)
    from numba import njit as _njit

    USE_NUMBA = True
except ImportError:
    _njit = None
    USE_NUMBA = False


def jit(func):
    """Compile ``func`` with numba if available, else return it untouched."""
    if _njit is None:
        return func
    return _njit(cache=True)(func)


def select(jitted, fallback):
    """Pick the compiled kernel when numba is active, the numpy one otherwise."""
    return jitted if USE_NUMBA else fallback


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
