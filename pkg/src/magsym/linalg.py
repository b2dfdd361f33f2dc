"""Dense linear algebra helpers shared by all integrators.

Symmetric coefficient matrices are plain ``float64`` arrays of shape
``(r, r)`` (or stacks ``(n, r, r)``); fundamental matrices are ``(2r, 2r)``
arrays with blocks ``[[Phi11, Phi12], [Phi21, Phi22]]``. Every r x r
matrix-matrix product taken on behalf of an integrator is charged to a
:class:`CostLedger`.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CostLedger",
    "EigenDecompositionError",
    "PhasePoint",
    "PowerCache",
    "as_symmetric",
    "identity_fundamental",
    "l1_norm",
    "lower_shear",
    "matrix_poly_eval",
    "sym_eigendecomposition",
    "symmetrize",
    "symplectic_form",
    "symplecticity_defect",
    "upper_shear",
]


@dataclass
class CostLedger:
    """Counts r x r matrix-matrix products (``mm``) and matrix-vector products (``mv``).

    Increments are guarded by a lock so one ledger may be shared between
    threads; per-task ledgers can be combined with :meth:`merge`.
    """

    mm: int = 0
    mv: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def charge_mm(self, n: int = 1) -> None:
        with self._lock:
            self.mm += int(n)

    def charge_mv(self, n: int = 1) -> None:
        with self._lock:
            self.mv += int(n)

    def merge(self, other: "CostLedger") -> None:
        with self._lock:
            self.mm += other.mm
            self.mv += other.mv

    def reset(self) -> None:
        with self._lock:
            self.mm = 0
            self.mv = 0

    def snapshot(self) -> tuple[int, int]:
        with self._lock:
            return self.mm, self.mv


def _charge(ledger: CostLedger | None, mm: int = 0, mv: int = 0) -> None:
    if ledger is None:
        return
    if mm:
        ledger.charge_mm(mm)
    if mv:
        ledger.charge_mv(mv)


@dataclass(frozen=True)
class PhasePoint:
    """Position/velocity pair ``z = (q, p)`` of the first-order system."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.q, dtype=float))
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        if q.shape != p.shape or q.ndim != 1:
            raise ValueError(f"q and p must be vectors of equal length, got {q.shape} and {p.shape}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def dim(self) -> int:
        return self.q.shape[0]

    def stacked(self) -> np.ndarray:
        """Return the state as a ``(2r, 1)`` column."""
        return np.concatenate([self.q, self.p])[:, None]

    @classmethod
    def from_stacked(cls, y: np.ndarray) -> "PhasePoint":
        y = np.asarray(y).reshape(-1)
        r = y.shape[0] // 2
        return cls(y[:r].copy(), y[r:].copy())


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Return ``(a + a^T) / 2`` over the last two axes; the result is exactly symmetric."""
    a = np.asarray(a, dtype=float)
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def as_symmetric(a, *, atol: float | None = None) -> np.ndarray:
    """Validate a square matrix and return its exactly symmetric part.

    When ``atol`` is given, a matrix whose asymmetry exceeds it is rejected
    instead of silently symmetrized.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.shape[-1] != a.shape[-2] or a.shape[-1] < 1:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if atol is not None:
        asym = np.max(np.abs(a - np.swapaxes(a, -1, -2)), initial=0.0)
        if asym > atol:
            raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    return symmetrize(a)


def l1_norm(a) -> float:
    """Entrywise L1 norm (sum of absolute values), no normalization by size."""
    return float(np.sum(np.abs(a)))


def symplectic_form(r: int) -> np.ndarray:
    J = np.zeros((2 * r, 2 * r))
    J[:r, r:] = np.eye(r)
    J[r:, :r] = -np.eye(r)
    return J


def identity_fundamental(r: int) -> np.ndarray:
    return np.eye(2 * r)


def symplecticity_defect(phi) -> float:
    """``||Phi^T J Phi - J||_1`` for a ``(2r, 2r)`` matrix."""
    phi = np.asarray(phi, dtype=float)
    n = phi.shape[0]
    if phi.shape != (n, n) or n % 2:
        raise ValueError(f"expected a (2r, 2r) matrix, got {phi.shape}")
    J = symplectic_form(n // 2)
    return l1_norm(phi.T @ J @ phi - J)


def lower_shear(R) -> np.ndarray:
    """Dense ``[[I, 0], [R, I]]``."""
    R = np.atleast_2d(np.asarray(R, dtype=float))
    r = R.shape[0]
    S = np.eye(2 * r)
    S[r:, :r] = R
    return S


def upper_shear(Q) -> np.ndarray:
    """Dense ``[[I, Q], [0, I]]``."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    r = Q.shape[0]
    S = np.eye(2 * r)
    S[:r, r:] = Q
    return S


class EigenDecompositionError(np.linalg.LinAlgError):
    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


def sym_eigendecomposition(C) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors of symmetric ``C``.

    Works on single matrices and on stacks ``(n, r, r)``. Backed by LAPACK
    ``syevd`` through :func:`numpy.linalg.eigh`.
    """
    C = as_symmetric(C)
    try:
        w, V = np.linalg.eigh(C)
    except np.linalg.LinAlgError as exc:
        # LAPACK reports the number of off-diagonal elements that failed to
        # converge; surface it as the iteration diagnostic
        raise EigenDecompositionError(
            f"symmetric eigensolver did not converge: {exc}", iterations=getattr(exc, "args", None)
        ) from exc
    return w, V


class PowerCache:
    """Powers ``C^1, C^2, ...`` of a (stack of) symmetric matrices, computed on demand.

    Each new power costs one product per matrix in the stack, charged to
    ``ledger``. Powers are re-symmetrized so they stay exactly symmetric.
    """

    def __init__(self, C, ledger: CostLedger | None = None):
        C = np.asarray(C, dtype=float)
        self._powers = [None, symmetrize(C)]
        self.ledger = ledger
        self.batch = int(np.prod(C.shape[:-2], dtype=int))
        self.products = 0

    @property
    def base(self) -> np.ndarray:
        return self._powers[1]

    def __getitem__(self, k: int) -> np.ndarray:
        if k < 1:
            raise IndexError("PowerCache holds powers k >= 1; the identity is implicit")
        while len(self._powers) <= k:
            nxt = symmetrize(np.matmul(self._powers[-1], self._powers[1]))
            self._powers.append(nxt)
            self.products += 1
            _charge(self.ledger, mm=self.batch)
        return self._powers[k]


def matrix_poly_eval(C, coefficients, powers: PowerCache | None = None, ledger: CostLedger | None = None):
    """Evaluate ``sum_k coefficients[k] C^k`` (``C^0 = I``).

    Pass a shared :class:`PowerCache` to reuse powers between several
    polynomials in the same matrix; only powers not yet cached are charged.
    """
    coefficients = list(coefficients)
    if not coefficients:
        raise ValueError("coefficients must be nonempty")
    if powers is None:
        powers = PowerCache(C, ledger)
    base = powers.base
    r = base.shape[-1]
    out = np.zeros_like(base)
    idx = np.arange(r)
    out[..., idx, idx] += coefficients[0]
    for k, c in enumerate(coefficients[1:], start=1):
        if c != 0.0:
            out = out + c * powers[k]
    return out
