"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it imports; otherwise the
numpy implementation in ``_kernels_py`` is used. Setting
``NILFLOW_PURE_PYTHON=1`` forces the fallback.

Both backends take 0-based, C-contiguous float64 arrays.
"""
import os
from contextlib import contextmanager
from functools import lru_cache

import numpy as np

from . import _kernels_py

_compiled = None
if os.environ.get("NILFLOW_PURE_PYTHON", "") != "1":
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

backend = _compiled if _compiled is not None else _kernels_py
BACKEND = backend.NAME
AVAILABLE = {"python": _kernels_py}
if _compiled is not None:
    AVAILABLE["cython"] = _compiled


def get_backend(name=None):
    """Return the kernel module called ``name`` (default: the active one)."""
    if name is None:
        return backend
    try:
        return AVAILABLE[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} not available; have {sorted(AVAILABLE)}") from None


@contextmanager
def use_backend(name):
    """Temporarily make ``name`` the default backend (not thread-safe)."""
    global backend
    previous = backend
    backend = get_backend(name)
    try:
        yield backend
    finally:
        backend = previous


@lru_cache(maxsize=None)
def unitriangular_index_table(n: int) -> np.ndarray:
    """``T[i, j]`` = flat position of pair (i, j) in (j - i, i) order, else -1."""
    from .algebra import IndexMap

    table = np.full((n + 1, n + 1), -1, dtype=np.intp)
    for k, (i, j) in enumerate(IndexMap.unitriangular(n).pairs):
        table[i, j] = k
    table.flags.writeable = False
    return table


def _c(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def ricci_tensor(C, g, H, kern=None):
    kern = kern or backend
    N = g.shape[0]
    return kern.ricci_tensor(_c(C), _c(g), _c(H), np.empty((N, N)))


def adjoint_constants(C, g, H, kern=None):
    kern = kern or backend
    N = g.shape[0]
    return kern.adjoint_constants(_c(C), _c(g), _c(H), np.empty((N, N, N)))


def heisenberg_ricci_diag(n, g, kern=None):
    kern = kern or backend
    return kern.heisenberg_ricci_diag(int(n), _c(g), np.empty(2 * n + 1))


def unitriangular_ricci_diag(n, g, kern=None):
    kern = kern or backend
    idx = unitriangular_index_table(n)
    return kern.unitriangular_ricci_diag(idx, _c(g), np.empty(n * (n - 1) // 2))
