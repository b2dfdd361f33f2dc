"""Benchmark problems ``x'' + M(t) x = 0``.

Every problem is a :class:`LinearProblem`: it can evaluate ``M(t)`` densely,
apply it to vectors, and apply a weighted sum ``sum_j w_j M(t_j)`` to a
vector in one pass (the kick of a splitting method).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .linalg import as_symmetric, symmetrize

__all__ = [
    "CallableProblem",
    "DiscretizedWave",
    "HillPascalProblem",
    "LinearProblem",
    "MathieuProblem",
    "WaveProblem",
    "hill_eval",
    "mathieu_eval",
    "pascal_matrix",
    "wave_analytic_g0",
    "wave_discretize",
    "wave_initial_state",
]


class LinearProblem:
    """Base class for a time-dependent symmetric coefficient ``M(t)``.

    Subclasses provide :meth:`dense` (and set ``has_dense``) and/or
    :meth:`apply`. ``has_combined`` tells steppers whether
    :meth:`apply_combined` costs a single matrix-vector product.
    """

    dim: int
    has_dense: bool = True
    has_combined: bool = True
    period: float | None = None

    def dense(self, t: float) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} has no dense evaluator")

    def dense_many(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float).reshape(-1)
        return np.stack([self.dense(float(t)) for t in ts]) if len(ts) else np.zeros((0, self.dim, self.dim))

    def apply(self, t: float, v: np.ndarray) -> np.ndarray:
        return self.dense(t) @ v

    def apply_combined(self, ts, weights, v: np.ndarray) -> np.ndarray:
        """Return ``(sum_j weights[j] M(ts[j])) v``."""
        if self.has_dense:
            Mc = sum(w * self.dense(t) for t, w in zip(ts, weights) if w != 0.0)
            return Mc @ v
        return sum(w * self.apply(t, v) for t, w in zip(ts, weights) if w != 0.0)

    def spectral_radius(self) -> float | None:
        """Cheap upper estimate of ``max |eig M(t)|`` over time, or None."""
        return None

    @property
    def cache_key(self):
        return None


@dataclass(eq=False)
class CallableProblem(LinearProblem):
    """Wrap user callables ``t -> M(t)`` and/or ``(t, v) -> M(t) v``."""

    dim: int
    dense_fn: Callable[[float], np.ndarray] | None = None
    apply_fn: Callable[[float, np.ndarray], np.ndarray] | None = None
    rho: float | None = None
    combined: bool | None = None

    def __post_init__(self):
        if self.dense_fn is None and self.apply_fn is None:
            raise ValueError("need a dense evaluator or an operator evaluator")
        self.has_dense = self.dense_fn is not None
        self.has_combined = self.has_dense if self.combined is None else self.combined

    def dense(self, t):
        if self.dense_fn is None:
            raise NotImplementedError("problem has only an operator evaluator")
        return as_symmetric(np.atleast_2d(self.dense_fn(t)).reshape(self.dim, self.dim))

    def apply(self, t, v):
        if self.apply_fn is not None:
            return np.asarray(self.apply_fn(t, v), dtype=float)
        return self.dense(t) @ v

    def spectral_radius(self):
        return self.rho


def mathieu_eval(omega: float, eps: float, t) -> np.ndarray:
    """``[omega^2 + eps cos 2t]`` as a 1x1 matrix (or stack for array ``t``)."""
    t = np.asarray(t, dtype=float)
    return (omega * omega + eps * np.cos(2.0 * t))[..., None, None]


@dataclass(frozen=True)
class MathieuProblem(LinearProblem):
    """Scalar Mathieu equation ``x'' + (omega^2 + eps cos 2t) x = 0``; period pi."""

    omega: float
    eps: float
    dim: int = field(default=1, init=False)
    period: float = field(default=math.pi, init=False)

    def dense(self, t):
        return mathieu_eval(self.omega, self.eps, float(t))

    def dense_many(self, ts):
        return mathieu_eval(self.omega, self.eps, np.asarray(ts, dtype=float).reshape(-1))

    def spectral_radius(self):
        return abs(self.omega**2) + abs(self.eps)

    @property
    def cache_key(self):
        return ("mathieu", float(self.omega), float(self.eps))


def pascal_matrix(r: int) -> np.ndarray:
    """Symmetric Pascal matrix: unit first row/column, ``D[i,j] = D[i-1,j] + D[i,j-1]``."""
    if r < 1:
        raise ValueError("r must be >= 1")
    D = np.ones((r, r))
    for i in range(1, r):
        for j in range(1, r):
            D[i, j] = D[i - 1, j] + D[i, j - 1]
    return D


def hill_eval(A: np.ndarray, eps: float, t) -> np.ndarray:
    """``A + eps cos(2t) I + (eps/10) cos(4t) I`` (stacked over array ``t``)."""
    t = np.asarray(t, dtype=float)
    r = A.shape[0]
    s = eps * np.cos(2.0 * t) + 0.1 * eps * np.cos(4.0 * t)
    return A + s[..., None, None] * np.eye(r)


@dataclass(frozen=True)
class HillPascalProblem(LinearProblem):
    """Matrix Hill equation with ``A = r^2 I + Pascal(r)``, ``B1 = eps I``, ``B2 = eps/10 I``."""

    r: int
    eps: float
    period: float = field(default=math.pi, init=False)

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("r must be >= 1")

    @property
    def dim(self):
        return self.r

    @property
    def A(self) -> np.ndarray:
        return self.r**2 * np.eye(self.r) + pascal_matrix(self.r)

    def dense(self, t):
        return hill_eval(self.A, self.eps, float(t))

    def dense_many(self, ts):
        return hill_eval(self.A, self.eps, np.asarray(ts, dtype=float).reshape(-1))

    def spectral_radius(self):
        gersh = np.max(np.sum(np.abs(self.A), axis=1))
        return float(gersh + 1.1 * abs(self.eps))

    @property
    def cache_key(self):
        return ("hill", int(self.r), float(self.eps))


@dataclass(frozen=True)
class WaveProblem:
    """Trapped wave equation ``u_tt = u_xx - (x^2 + eps cos(delta t) x^2) u`` on a periodic box.

    ``disc`` is ``"spectral"`` (Fourier) or ``"fd2"`` (second-order central
    differences with periodic wrap).
    """

    n_grid: int = 128
    x0: float = -10.0
    xN: float = 10.0
    delta: float = 1.0
    eps: float = 0.5
    sigma: float = 1.0
    disc: str = "spectral"

    def __post_init__(self):
        if self.n_grid < 4:
            raise ValueError("n_grid must be >= 4")
        if self.xN <= self.x0:
            raise ValueError("need xN > x0")
        if self.disc not in ("spectral", "fd2"):
            raise ValueError(f"unknown discretization {self.disc!r}")
        if self.disc == "spectral" and self.n_grid & (self.n_grid - 1):
            raise ValueError("spectral discretization needs n_grid to be a power of two")

    @property
    def dx(self) -> float:
        return (self.xN - self.x0) / self.n_grid

    @property
    def grid(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.n_grid)

    def g(self, t):
        """Time factor of the perturbation: ``g(x, t) = g(t) * x^2``."""
        return self.eps * np.cos(self.delta * np.asarray(t, dtype=float))


class DiscretizedWave(LinearProblem):
    """Semidiscretized wave operator ``M(t) = -D2 + diag(x^2 + g(x, t))``."""

    has_dense = True
    has_combined = True

    def __init__(self, config: WaveProblem):
        self.config = config
        self.dim = config.n_grid
        self.x = config.grid
        self._x2 = self.x**2
        n = config.n_grid
        if config.disc == "spectral":
            L = config.xN - config.x0
            # rfft frequencies include the Nyquist mode m = -N/2 (only k^2 enters)
            k = 2.0 * np.pi * np.fft.rfftfreq(n, d=L / n)
            self._symbol = -(k**2)
        else:
            self._symbol = None
        self._D2_dense = None

    def second_derivative(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if self._symbol is not None:
            vh = np.fft.rfft(v, axis=0)
            sym = self._symbol if v.ndim == 1 else self._symbol[:, None]
            return np.fft.irfft(sym * vh, n=self.dim, axis=0)
        dx2 = self.config.dx ** 2
        return (np.roll(v, 1, axis=0) - 2.0 * v + np.roll(v, -1, axis=0)) / dx2

    @property
    def D2(self) -> np.ndarray:
        if self._D2_dense is None:
            self._D2_dense = symmetrize(self.second_derivative(np.eye(self.dim)))
        return self._D2_dense

    def potential(self, t) -> np.ndarray:
        return self._x2 * (1.0 + self.config.g(t))

    def dense(self, t):
        return -self.D2 + np.diag(self.potential(float(t)))

    def dense_many(self, ts):
        ts = np.asarray(ts, dtype=float).reshape(-1)
        out = np.repeat(-self.D2[None], len(ts), axis=0)
        idx = np.arange(self.dim)
        out[:, idx, idx] += self._x2[None, :] * (1.0 + self.config.g(ts))[:, None]
        return out

    def _diag_times(self, d, v):
        return d * v if v.ndim == 1 else d[:, None] * v

    def apply(self, t, v):
        v = np.asarray(v, dtype=float)
        return -self.second_derivative(v) + self._diag_times(self.potential(t), v)

    def apply_combined(self, ts, weights, v):
        # one transform: the D2 part only needs the summed weight
        v = np.asarray(v, dtype=float)
        wsum = float(np.sum(weights))
        diag = sum(w * self.potential(t) for t, w in zip(ts, weights))
        return -wsum * self.second_derivative(v) + self._diag_times(diag, v)

    def spectral_radius(self):
        cfg = self.config
        if cfg.disc == "spectral":
            kmax = math.pi * cfg.n_grid / (cfg.xN - cfg.x0)
            lap = kmax**2
        else:
            lap = 4.0 / cfg.dx**2
        return float(lap + np.max(self._x2) * (1.0 + abs(cfg.eps)))

    @property
    def cache_key(self):
        return ("wave",) + tuple(sorted(vars(self.config).items()))


def wave_discretize(problem: WaveProblem) -> DiscretizedWave:
    return DiscretizedWave(problem)


def wave_analytic_g0(problem: WaveProblem, t: float) -> np.ndarray:
    """Exact solution ``sigma cos(t) exp(-x^2/2)`` on the grid (valid for eps = 0)."""
    x = problem.grid
    return problem.sigma * math.cos(t) * np.exp(-0.5 * x**2)


def wave_initial_state(problem: WaveProblem):
    from .linalg import PhasePoint

    v = problem.sigma * np.exp(-0.5 * problem.grid**2)
    return PhasePoint(v, np.zeros_like(v))
