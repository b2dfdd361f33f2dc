"""String identifiers for every stepper, as used by the command line and the benchmarks.

Identifiers:

* ``ups4-<q>``, ``ups6-<q>`` with ``q`` in 6, 8, 10, 12 or ``exact``:
  Magnus-decomposition methods.
* ``psi11``: the 11-stage sixth-order splitting method; ``leapfrog``: its
  second-order relative.
* ``rk4``: classical Runge-Kutta.
* ``rkgl2`` / ``rkgl3`` (aliases ``rkgl4`` / ``rkgl6`` by order), with an
  optional ``-<iterations>`` suffix: fixed-iteration Gauss-Legendre.
"""

from __future__ import annotations

import re

from .baselines import GaussLegendreMethod, ImplicitRKConfig, RK4Method
from .decomposition import DecompositionScheme
from .splitting import SplittingMethod, leapfrog_tableau, tableau_psi11

__all__ = ["METHOD_IDS", "UnknownMethodError", "make_method", "method_id"]

METHOD_IDS = (
    "ups4-6", "ups4-8", "ups4-10", "ups4-12", "ups4-exact",
    "ups6-6", "ups6-8", "ups6-10", "ups6-12", "ups6-exact",
    "psi11", "leapfrog", "rk4", "rkgl2", "rkgl3",
)

_UPS = re.compile(r"^ups([46])-(6|8|10|12|exact)$")
_RKGL = re.compile(r"^rkgl([2346])(?:-(\d+))?$")


class UnknownMethodError(ValueError):
    pass


def method_id(p: int, q) -> str:
    """Identifier of the decomposition method of order ``p`` with series order ``q``."""
    return f"ups{int(p)}-{q}"


def make_method(ident: str, *, backend: str | None = None, fuse: bool = True):
    """Build the stepper named by ``ident``."""
    ident = ident.strip().lower()
    m = _UPS.match(ident)
    if m:
        q = m.group(2)
        return DecompositionScheme(int(m.group(1)), q if q == "exact" else int(q), fuse=fuse, backend=backend)
    if ident == "psi11":
        return SplittingMethod(tableau_psi11(), fuse=fuse, backend=backend, label="psi11")
    if ident == "leapfrog":
        return SplittingMethod(leapfrog_tableau(), fuse=fuse, backend=backend, label="leapfrog")
    if ident == "rk4":
        return RK4Method()
    m = _RKGL.match(ident)
    if m:
        s = {"2": 2, "3": 3, "4": 2, "6": 3}[m.group(1)]
        iters = int(m.group(2)) if m.group(2) else None
        try:
            return GaussLegendreMethod(ImplicitRKConfig(s, iters))
        except ValueError as exc:
            raise UnknownMethodError(str(exc)) from None
    raise UnknownMethodError(f"unknown method {ident!r}; known: {', '.join(METHOD_IDS)}")
