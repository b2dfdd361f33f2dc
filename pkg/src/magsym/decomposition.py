"""Magnus-decomposition steppers for the fundamental matrix.

A step is a product of symmetric shears

    Y4: L(h C2 + R1) U(Q1) L(h C1 + R1)
    Y6: L(h C2 + R2) U(Q2) L(R1 + R2) U(Q1) L(h C1 + R1)

(rightmost factor applied first) where ``L(X) = [[I, 0], [X, I]]``,
``U(X) = [[I, X], [0, I]]`` and ``Q_i, R_i`` are truncated ``sinh/sqrt`` and
``sqrt*tanh`` series in ``D_i``. The two-exponential scheme takes half-steps
in its exponentials, so its series use ``h/2``. The ``exact`` variants keep
the block exponentials and evaluate them through an eigendecomposition.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._kernels import FULL, LOWER, UPPER
from .linalg import CostLedger, PowerCache, _charge, matrix_poly_eval, sym_eigendecomposition, symmetrize
from .magnus import Combos, NodeSamples, sample_steps
from .shears import OpSpec, run_steps

__all__ = [
    "DecompositionScheme",
    "QRPair",
    "SeriesValidityWarning",
    "coeffs4",
    "coeffs6",
    "exact_block_exponential",
    "qr_series",
    "step_upsilon",
]

SQRT15 = math.sqrt(15.0)

# Q(C) = sinh(h sqrt C)/sqrt C = sum_j Q_COEF[j] C^j h^(2j+1)
Q_COEF = (1.0, 1 / 6, 1 / 120, 1 / 5040, 1 / 362880, 1 / 39916800, 1 / 6227020800)
# R(C) = sqrt C tanh(h sqrt C / 2) = sum_{j>=1} R_COEF[j-1] C^j h^(2j-1)
R_COEF = (1 / 2, -1 / 24, 1 / 240, -17 / 40320, 31 / 725760, -691 / 159667200)

SERIES_ORDERS = (6, 8, 10, 12)


class SeriesValidityWarning(UserWarning):
    """Step too large for the factorized exponential (``h rho(sqrt C) >= pi``)."""


class QRPair(NamedTuple):
    Q: np.ndarray
    R: np.ndarray


def _gershgorin(D) -> float:
    return float(np.max(np.sum(np.abs(D), axis=-1), initial=0.0))


def qr_series(D, h: float, q: int, ledger: CostLedger | None = None, *, check: bool = True) -> QRPair:
    """Truncated ``Q^[q+2]`` and ``R^[q]`` for the block exponential ``exp(h [[0, I], [D, 0]])``.

    Both series run up to ``D^(q/2)`` and share the powers, so the pair costs
    ``q/2 - 1`` products per matrix. ``D`` may be a stack ``(n, r, r)``.
    """
    if q not in SERIES_ORDERS:
        raise ValueError(f"series order q must be one of {SERIES_ORDERS}, got {q}")
    D = np.asarray(D, dtype=float)
    if check:
        _check_validity(D, h)
    kmax = q // 2
    powers = PowerCache(D, ledger)
    qc = [Q_COEF[j] * h ** (2 * j + 1) for j in range(kmax + 1)]
    rc = [0.0] + [R_COEF[j - 1] * h ** (2 * j - 1) for j in range(1, kmax + 1)]
    Q = matrix_poly_eval(D, qc, powers)
    R = matrix_poly_eval(D, rc, powers)
    return QRPair(Q, R)


def _check_validity(D, h):
    # spectral radius of sqrt(-D) bounded through Gershgorin disks of D
    rho = _gershgorin(D)
    if abs(h) * math.sqrt(rho) >= math.pi:
        warnings.warn(
            f"|h| sqrt(rho(D)) <= {abs(h) * math.sqrt(rho):.3g} may exceed pi; "
            "the factorized exponential series is not reliable at this step size",
            SeriesValidityWarning,
            stacklevel=3,
        )


def _block_functions(w, h):
    """cosh(h sqrt w), sinh(h sqrt w)/sqrt w and w * the latter, continued to w <= 0."""
    s = np.sqrt(np.abs(w))
    x = h * s
    pos = w > 0
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        c = np.where(pos, np.cosh(x), np.cos(x))
        small = np.abs(x) < 1e-6
        sinhc = np.where(small, 1.0 + x * x / 6.0, np.sinh(x) / np.where(small, 1.0, x))
        sinc = np.sinc(x / np.pi)
    f2 = h * np.where(pos, sinhc, sinc)
    return c, f2, w * f2


def exact_block_exponential(C, h: float, ledger: CostLedger | None = None) -> np.ndarray:
    """``exp(h [[0, I], [C, 0]])`` for symmetric ``C`` via ``C = V diag(w) V^T``.

    Returns ``(2r, 2r)``, or ``(n, 4, r, r)`` blocks ``[E11, E12, E21, E22]``
    for a stack of ``C``. Each of the three distinct blocks costs one product.
    """
    C = np.asarray(C, dtype=float)
    batched = C.ndim == 3
    Cs = C if batched else C[None]
    w, V = sym_eigendecomposition(Cs)
    c, f2, f3 = _block_functions(w, h)
    Vt = np.swapaxes(V, -1, -2)
    blocks = [symmetrize(np.matmul(V * f[:, None, :], Vt)) for f in (c, f2, f3)]
    _charge(ledger, mm=3 * len(Cs))
    out = np.stack([blocks[0], blocks[1], blocks[2], blocks[0]], axis=1)
    if batched:
        return out
    r = C.shape[0]
    E = np.empty((2 * r, 2 * r))
    E[:r, :r], E[:r, r:], E[r:, :r], E[r:, r:] = out[0]
    return E


def coeffs4(cb: Combos, samples: NodeSamples, h: float):
    """``(C1, C2, D1)`` of the one-exponential fourth-order scheme; no products.

    ``C1`` is the kick applied first in the step.
    """
    C1 = -(SQRT15 / 36.0) * cb.K + (5.0 / 36.0) * cb.L
    C2 = (SQRT15 / 36.0) * cb.K + (5.0 / 36.0) * cb.L
    D1 = -samples.M2
    return C1, C2, D1


def coeffs6(cb: Combos, samples: NodeSamples, h: float):
    """``(C1, C2, D1, D2)`` of the two-exponential sixth-order scheme (forces ``F``)."""
    F = cb.F
    kC = SQRT15 / 180.0
    kD = 4.0 / (3.0 * SQRT15)
    C1 = -kC * cb.K + cb.L / 18.0 + F / 12960.0
    C2 = kC * cb.K + cb.L / 18.0 + F / 12960.0
    D1 = -samples.M2 - kD * cb.K + cb.L / 6.0
    D2 = -samples.M2 + kD * cb.K + cb.L / 6.0
    return C1, C2, D1, D2


@dataclass(frozen=True)
class DecompositionScheme:
    """One of the Magnus-decomposition methods.

    Attributes:
        order: 4 (one exponential) or 6 (two exponentials).
        q: truncation order of the exponential series (6, 8, 10, 12) or
            ``"exact"`` for eigendecomposition-based block exponentials.
        fuse: merge the closing kick of a step with the opening kick of the
            next one.
        backend: kernel backend override (``None`` picks automatically).
    """

    order: int = 4
    q: int | str = 6
    fuse: bool = True
    backend: str | None = None

    supports_vector = False

    def __post_init__(self):
        if self.order not in (4, 6):
            raise ValueError(f"order must be 4 or 6, got {self.order}")
        if self.q != "exact" and self.q not in SERIES_ORDERS:
            raise ValueError(f"q must be one of {SERIES_ORDERS} or 'exact', got {self.q!r}")

    @property
    def exact(self) -> bool:
        return self.q == "exact"

    @property
    def label(self) -> str:
        return f"ups{self.order}-{self.q}"

    @property
    def table_cost(self) -> float:
        """Per-step cost in matrix products as tabulated for this method family."""
        if self.exact:
            return 17 + 1 / 3 if self.order == 4 else 32 + 2 / 3
        return 1 + self.q / 2 if self.order == 4 else 7 + self.q

    def _specs(self, samples: NodeSamples, ledger) -> list[OpSpec]:
        h = samples.h
        cb = Combos(samples, ledger)

        def lower(X):
            return OpSpec(LOWER, symmetrize(X)[:, None])

        def upper(X):
            return OpSpec(UPPER, symmetrize(X)[:, None])

        if self.order == 4:
            C1, C2, D1 = coeffs4(cb, samples, h)
            if self.exact:
                E = exact_block_exponential(D1, h, ledger)
                return [lower(h * C1), OpSpec(FULL, E), lower(h * C2)]
            Q1, R1 = qr_series(D1, h, self.q, ledger)
            return [lower(h * C1 + R1), upper(Q1), lower(h * C2 + R1)]

        C1, C2, D1, D2 = coeffs6(cb, samples, h)
        if self.exact:
            E1 = exact_block_exponential(D1, h / 2, ledger)
            E2 = exact_block_exponential(D2, h / 2, ledger)
            return [lower(h * C1), OpSpec(FULL, E1), OpSpec(FULL, E2), lower(h * C2)]
        Q1, R1 = qr_series(D1, h / 2, self.q, ledger)
        Q2, R2 = qr_series(D2, h / 2, self.q, ledger)
        return [lower(h * C1 + R1), upper(Q1), lower(R1 + R2), upper(Q2), lower(h * C2 + R2)]

    def build(self, problem, ledger=None):
        def builder(t_start, h, n):
            return self._specs(sample_steps(problem, t_start, h, n), ledger)

        return builder

    def propagate(self, problem, Y, t0: float, h: float, steps: int, ledger: CostLedger | None = None):
        """Advance ``Y`` (``(2r, k)``) by ``steps`` steps of size ``h`` from ``t0``."""
        Y = np.array(Y, dtype=float, order="C")
        if Y.ndim != 2 or Y.shape[0] != 2 * problem.dim:
            raise ValueError(f"state shape {Y.shape} does not match problem dimension {problem.dim}")
        per_step = 10 if self.exact else 5
        return run_steps(Y, self.build(problem, ledger), t0, h, steps, fuse=self.fuse,
                         ledger=ledger, backend=self.backend, payloads_per_step=per_step)

    def step(self, problem, Y, t_n: float, h: float, ledger: CostLedger | None = None):
        return self.propagate(problem, Y, t_n, h, 1, ledger)


def step_upsilon(scheme: DecompositionScheme, phi, problem, t_n: float, h: float,
                 ledger: CostLedger | None = None) -> np.ndarray:
    """One step of ``scheme`` applied to the fundamental matrix ``phi``."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (2 * problem.dim, 2 * problem.dim):
        raise ValueError(f"fundamental matrix shape {phi.shape} does not match r={problem.dim}")
    return scheme.step(problem, phi, t_n, h, ledger)
