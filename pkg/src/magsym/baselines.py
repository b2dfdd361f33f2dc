"""Runge-Kutta baselines on the first-order form ``z' = A(t) z``.

``A(t) z = (p, -M(t) q)``, so one application of ``A`` costs one product
per block column: 2 matrix-matrix products on a fundamental matrix, 1
matrix-vector product on a state vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import CostLedger, PhasePoint

__all__ = [
    "GaussLegendreMethod",
    "ImplicitRKConfig",
    "ImplicitSolveDivergence",
    "RK4Method",
    "gauss_legendre_irk_step",
    "gauss_legendre_tableau",
    "rk4_step",
]

_S3 = math.sqrt(3.0)
_S15 = math.sqrt(15.0)

_GL_TABLEAUS = {
    2: (
        np.array([[1 / 4, 1 / 4 - _S3 / 6], [1 / 4 + _S3 / 6, 1 / 4]]),
        np.array([1 / 2, 1 / 2]),
        np.array([1 / 2 - _S3 / 6, 1 / 2 + _S3 / 6]),
    ),
    3: (
        np.array(
            [
                [5 / 36, 2 / 9 - _S15 / 15, 5 / 36 - _S15 / 30],
                [5 / 36 + _S15 / 24, 2 / 9, 5 / 36 - _S15 / 24],
                [5 / 36 + _S15 / 30, 2 / 9 + _S15 / 15, 5 / 36],
            ]
        ),
        np.array([5 / 18, 4 / 9, 5 / 18]),
        np.array([1 / 2 - _S15 / 10, 1 / 2, 1 / 2 + _S15 / 10]),
    ),
}


def gauss_legendre_tableau(s: int):
    """Butcher tableau ``(A, b, c)`` of the ``s``-stage Gauss-Legendre method."""
    try:
        A, b, c = _GL_TABLEAUS[s]
    except KeyError:
        raise ValueError(f"only s = 2 or 3 stages are available, got {s}") from None
    return A.copy(), b.copy(), c.copy()


class ImplicitSolveDivergence(RuntimeError):
    pass


def _apply_A(problem, t, Y, ledger):
    r = problem.dim
    out = np.empty_like(Y)
    out[:r] = Y[r:]
    out[r:] = -problem.apply(t, Y[:r])
    if ledger is not None:
        cols = Y.shape[1]
        if cols == 2 * r:
            ledger.charge_mm(2)
        else:
            ledger.charge_mv(cols)
    return out


def _columns(state):
    if isinstance(state, PhasePoint):
        return state.stacked(), True
    Y = np.array(state, dtype=float)
    if Y.ndim == 1:
        return Y[:, None], True
    return Y, False


@dataclass(frozen=True)
class RK4Method:
    """Classical four-stage Runge-Kutta with stage times ``t, t + h/2, t + h/2, t + h``."""

    label: str = "rk4"
    supports_vector = True

    def step(self, problem, Y, t, h, ledger=None):
        k1 = _apply_A(problem, t, Y, ledger)
        k2 = _apply_A(problem, t + h / 2, Y + (h / 2) * k1, ledger)
        k3 = _apply_A(problem, t + h / 2, Y + (h / 2) * k2, ledger)
        k4 = _apply_A(problem, t + h, Y + h * k3, ledger)
        return Y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)

    def propagate(self, problem, Y, t0, h, steps, ledger: CostLedger | None = None):
        Y = np.array(Y, dtype=float)
        for n in range(steps):
            Y = self.step(problem, Y, t0 + n * h, h, ledger)
        return Y


@dataclass(frozen=True)
class ImplicitRKConfig:
    """Stage count and number of fixed-point sweeps per step."""

    stages: int = 3
    iterations: int | None = None

    def __post_init__(self):
        if self.stages not in _GL_TABLEAUS:
            raise ValueError(f"stages must be 2 or 3, got {self.stages}")
        if self.iterations is None:
            object.__setattr__(self, "iterations", 4 if self.stages == 2 else 6)
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")


@dataclass(frozen=True)
class GaussLegendreMethod:
    """Implicit Gauss-Legendre Runge-Kutta solved by a fixed number of fixed-point sweeps.

    The stage slopes start at zero, so the first sweep yields the explicit
    Euler predictor ``K_i = A(t_i) y``; each further sweep is a Jacobi update
    ``K_i <- A(t_i) (y + h sum_j a_ij K_j)``. With ``rho`` sweeps the local
    error is ``O(h^(min(2s, rho) + 1))`` and the step is symplectic only up to
    the remaining iteration error.
    """

    config: ImplicitRKConfig = ImplicitRKConfig()
    divergence_factor: float = 1e6

    supports_vector = True

    @property
    def label(self) -> str:
        return f"rkgl{self.config.stages}-{self.config.iterations}"

    def step(self, problem, Y, t, h, ledger=None):
        A, b, c = _GL_TABLEAUS[self.config.stages]
        s = self.config.stages
        ts = t + c * h
        K = np.zeros((s,) + Y.shape)
        scale = max(np.max(np.abs(Y)), 1e-300)
        for _ in range(self.config.iterations):
            stage_y = Y[None] + h * np.tensordot(A, K, axes=(1, 0))
            if np.max(np.abs(stage_y)) > self.divergence_factor * scale or not np.all(np.isfinite(stage_y)):
                self._diverged(t, h)
            K = np.stack([_apply_A(problem, ts[i], stage_y[i], ledger) for i in range(s)])
        return Y + h * np.tensordot(b, K, axes=(0, 0))

    @staticmethod
    def _diverged(t, h):
        raise ImplicitSolveDivergence(
            f"fixed-point stage iteration diverged at t={t:.6g}; try a smaller step than h={h:.6g}"
        )

    def propagate(self, problem, Y, t0, h, steps, ledger: CostLedger | None = None):
        Y = np.array(Y, dtype=float)
        for n in range(steps):
            Y = self.step(problem, Y, t0 + n * h, h, ledger)
        return Y


def rk4_step(state, problem, t_n: float, h: float, ledger: CostLedger | None = None):
    """One classical RK4 step on a fundamental matrix, a ``2r`` vector or a :class:`PhasePoint`."""
    Y, vec = _columns(state)
    out = RK4Method().step(problem, Y, t_n, h, ledger)
    if isinstance(state, PhasePoint):
        return PhasePoint.from_stacked(out)
    return out[:, 0] if vec else out


def gauss_legendre_irk_step(config: ImplicitRKConfig, state, problem, t_n: float, h: float,
                            ledger: CostLedger | None = None):
    """One fixed-iteration Gauss-Legendre step; costs ``s * rho`` operator applications."""
    Y, vec = _columns(state)
    out = GaussLegendreMethod(config).step(problem, Y, t_n, h, ledger)
    if isinstance(state, PhasePoint):
        return PhasePoint.from_stacked(out)
    return out[:, 0] if vec else out
