"""Hot loop for applying sequences of symplectic shears.

Two interchangeable backends implement :func:`apply_ops`:

* ``"cython"`` -- compiled loop in ``_shears.pyx``, used when the extension
  was built and the state dimension is small (per-op numpy overhead dominates
  there);
* ``"numpy"`` -- pure Python loop over BLAS calls in ``_shears_py.py``.

Set ``MAGSYM_PURE=1`` to disable the compiled backend at import time.
"""

import os

import numpy as np

from . import _shears_py
from .ops import DRIFT, FULL, LOWER, MATRIX_OPS_COST, UPPER

try:
    if os.environ.get("MAGSYM_PURE") == "1":
        raise ImportError("compiled kernel disabled by MAGSYM_PURE")
    from . import _shears as _compiled
except ImportError:
    _compiled = None

HAVE_COMPILED = _compiled is not None
DEFAULT_BACKEND = "cython" if HAVE_COMPILED else "numpy"

# above this dimension BLAS beats the naive compiled loops
COMPILED_MAX_DIM = 12

__all__ = [
    "DRIFT",
    "FULL",
    "LOWER",
    "UPPER",
    "MATRIX_OPS_COST",
    "HAVE_COMPILED",
    "DEFAULT_BACKEND",
    "apply_ops",
    "select_backend",
]


def select_backend(dim, backend=None):
    if backend is None:
        if HAVE_COMPILED and dim <= COMPILED_MAX_DIM:
            return "cython"
        return "numpy"
    if backend == "cython" and not HAVE_COMPILED:
        raise RuntimeError("compiled kernel is not available in this build")
    if backend not in ("cython", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    return backend


def apply_ops(Y, kinds, scalars, index, payloads, backend=None):
    """Apply an op sequence to ``Y`` (shape ``(2r, k)``) in place and return it.

    ``payloads`` has shape ``(n_payloads, r, r)``; ``index[i]`` points at the
    payload of op ``i`` (ignored for ``DRIFT``).
    """
    r = Y.shape[0] // 2
    kinds = np.ascontiguousarray(kinds, dtype=np.int8)
    scalars = np.ascontiguousarray(scalars, dtype=np.float64)
    index = np.ascontiguousarray(index, dtype=np.intp)
    if payloads is None or len(payloads) == 0:
        payloads = np.zeros((1, r, r))
    payloads = np.ascontiguousarray(payloads, dtype=np.float64)
    if not (len(kinds) == len(scalars) == len(index)):
        raise ValueError("kinds, scalars and index must have equal length")
    if payloads.shape[1:] != (r, r):
        raise ValueError(f"payload shape {payloads.shape[1:]} does not match r={r}")
    if len(kinds):
        if kinds.min() < LOWER or kinds.max() > FULL:
            raise ValueError("unknown op kind")
        uses = kinds != DRIFT
        last = index[uses] + np.where(kinds[uses] == FULL, 3, 0)
        if uses.any() and (index[uses].min() < 0 or last.max() >= len(payloads)):
            raise ValueError("payload index out of range")
    if backend is None and not Y.flags.c_contiguous:
        backend = "numpy"
    if select_backend(r, backend) == "cython":
        if not Y.flags.c_contiguous:
            raise ValueError("compiled backend needs a C-contiguous state")
        _compiled.apply_ops(Y, kinds, scalars, index, payloads)
        return Y
    return _shears_py.apply_ops(Y, kinds, scalars, index, payloads)
