"""Gauss-Legendre sampling, Table-style matrix combinations and a sixth-order Magnus oracle.

The oracle builds the truncated Magnus exponent from the interpolation
matrices ``alpha_1, alpha_2, alpha_3`` with explicit nested commutators and
exponentiates it densely. It shares no code with the decomposition or
splitting steppers, so it can be used to check them.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .linalg import CostLedger, _charge, l1_norm, symmetrize

__all__ = [
    "BlockOp",
    "Combos",
    "NodeSamples",
    "ReferenceConvergenceError",
    "alphas",
    "combos",
    "gl_nodes",
    "omega6",
    "omega6_oracle",
    "reference_solution",
    "sample_nodes",
    "sample_steps",
]

SQRT15 = math.sqrt(15.0)
ORACLE_MAX_DIM = 64


def gl_nodes() -> tuple[float, float, float]:
    """Nodes of the three-point Gauss-Legendre rule on [0, 1]."""
    return (5.0 - SQRT15) / 10.0, 0.5, (5.0 + SQRT15) / 10.0


GL_NODES = np.array(gl_nodes())
GL_WEIGHTS = np.array([5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0])


@dataclass(frozen=True)
class NodeSamples:
    """``M`` sampled at ``t_n + c_i h``.

    ``M1, M2, M3`` are ``(r, r)`` for a single step, or ``(n, r, r)`` when
    ``t_n`` is an array of step start times.
    """

    t_n: float | np.ndarray
    h: float
    M1: np.ndarray
    M2: np.ndarray
    M3: np.ndarray

    @property
    def dim(self) -> int:
        return self.M2.shape[-1]

    @property
    def batched(self) -> bool:
        return self.M2.ndim == 3


def sample_nodes(problem, t_n: float, h: float) -> NodeSamples:
    """Evaluate the problem's dense ``M`` at the three nodes of one step.

    Evaluations of ``M`` are free in the cost model and are not charged.
    """
    if h == 0:
        raise ValueError("step size must be nonzero")
    c1, c2, c3 = gl_nodes()
    Ms = problem.dense_many([t_n + c1 * h, t_n + c2 * h, t_n + c3 * h])
    Ms = symmetrize(Ms)
    return NodeSamples(t_n, h, Ms[0], Ms[1], Ms[2])


def sample_steps(problem, t0: float, h: float, steps: int) -> NodeSamples:
    """Node samples for ``steps`` consecutive steps starting at ``t0`` (batched)."""
    if h == 0:
        raise ValueError("step size must be nonzero")
    starts = t0 + h * np.arange(steps)
    times = (starts[:, None] + h * GL_NODES[None, :]).reshape(-1)
    Ms = symmetrize(problem.dense_many(times)).reshape(steps, 3, problem.dim, problem.dim)
    return NodeSamples(starts, h, Ms[:, 0], Ms[:, 1], Ms[:, 2])


class Combos:
    """``K = M1 - M3``, ``L = -M1 + 2 M2 - M3`` and the lazily built ``F = h^2 K^2``."""

    def __init__(self, samples: NodeSamples, ledger: CostLedger | None = None):
        self.samples = samples
        self.h = samples.h
        self.K = samples.M1 - samples.M3
        self.L = -samples.M1 + 2.0 * samples.M2 - samples.M3
        self.ledger = ledger
        self._F = None

    @property
    def F(self) -> np.ndarray:
        if self._F is None:
            self._F = symmetrize(self.h * self.h * np.matmul(self.K, self.K))
            n = self.K.shape[0] if self.K.ndim == 3 else 1
            _charge(self.ledger, mm=n)
        return self._F


def combos(samples: NodeSamples, ledger: CostLedger | None = None) -> Combos:
    return Combos(samples, ledger)


class BlockOp:
    """A 2r x 2r matrix stored as four optional r x r blocks (``None`` means zero)."""

    __slots__ = ("ul", "ur", "ll", "lr", "r")

    def __init__(self, r, ul=None, ur=None, ll=None, lr=None):
        self.r = r
        self.ul, self.ur, self.ll, self.lr = ul, ur, ll, lr

    def _blocks(self):
        return self.ul, self.ur, self.ll, self.lr

    @staticmethod
    def _add(a, b):
        if a is None:
            return b
        if b is None:
            return a
        return a + b

    @staticmethod
    def _mul(a, b):
        if a is None or b is None:
            return None
        return a @ b

    def __add__(self, other):
        return BlockOp(self.r, *(self._add(a, b) for a, b in zip(self._blocks(), other._blocks())))

    def __neg__(self):
        return BlockOp(self.r, *(None if a is None else -a for a in self._blocks()))

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, s):
        return BlockOp(self.r, *(None if a is None else s * a for a in self._blocks()))

    __rmul__ = __mul__

    def __matmul__(self, o):
        a, b, c, d = self._blocks()
        e, f, g, h = o._blocks()
        ad, mu = self._add, self._mul
        return BlockOp(
            self.r,
            ad(mu(a, e), mu(b, g)),
            ad(mu(a, f), mu(b, h)),
            ad(mu(c, e), mu(d, g)),
            ad(mu(c, f), mu(d, h)),
        )

    def commutator(self, other):
        return self @ other - other @ self

    def to_dense(self) -> np.ndarray:
        r = self.r
        out = np.zeros((2 * r, 2 * r))
        for blk, (i, j) in zip(self._blocks(), ((0, 0), (0, 1), (1, 0), (1, 1))):
            if blk is not None:
                out[i * r:(i + 1) * r, j * r:(j + 1) * r] = blk
        return out


def alphas(samples: NodeSamples) -> tuple[BlockOp, BlockOp, BlockOp]:
    """Interpolation matrices ``alpha_1 = h A_2``, ``alpha_2``, ``alpha_3`` with ``A = [[0, I], [-M, 0]]``."""
    h, r = samples.h, samples.dim
    M1, M2, M3 = samples.M1, samples.M2, samples.M3
    a1 = BlockOp(r, ur=h * np.eye(r), ll=-h * M2)
    a2 = BlockOp(r, ll=-(SQRT15 * h / 3.0) * (M3 - M1))
    a3 = BlockOp(r, ll=-(10.0 * h / 3.0) * (M3 - 2.0 * M2 + M1))
    return a1, a2, a3


def omega6(samples: NodeSamples) -> BlockOp:
    """Sixth-order Magnus exponent assembled from nested commutators of the alphas."""
    a1, a2, a3 = alphas(samples)

    def nest(*ops):
        # [a, [b, [..., [y, z]]]]
        acc = ops[-2].commutator(ops[-1])
        for op in reversed(ops[:-2]):
            acc = op.commutator(acc)
        return acc

    return (
        a1
        + (1.0 / 12.0) * a3
        - (1.0 / 12.0) * nest(a1, a2)
        + (1.0 / 240.0) * nest(a2, a3)
        + (1.0 / 360.0) * nest(a1, a1, a3)
        - (1.0 / 240.0) * nest(a2, a1, a2)
        + (1.0 / 720.0) * nest(a1, a1, a1, a2)
    )


def omega6_oracle(samples: NodeSamples) -> np.ndarray:
    """``exp(Omega^[6])`` for one step, as a dense ``(2r, 2r)`` matrix."""
    if samples.batched:
        raise ValueError("omega6_oracle takes samples for a single step")
    if samples.dim > ORACLE_MAX_DIM:
        raise ValueError(f"oracle refuses r={samples.dim} > {ORACLE_MAX_DIM} (dense 2r x 2r exponential)")
    return scipy.linalg.expm(omega6(samples).to_dense())


class ReferenceConvergenceError(RuntimeError):
    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


_reference_cache: dict = {}
_reference_lock = threading.Lock()


def reference_solution(problem, t0: float, t1: float, tolerance: float = 1e-12, state=None,
                       max_halvings: int = 20, start_steps: int | None = None):
    """Fine-step reference propagator over ``[t0, t1]``.

    Integrates with the most accurate available method, doubling the step
    count until two successive answers differ by less than ``tolerance`` per
    entry in L1. Returns the fundamental matrix, or the propagated
    :class:`~magsym.linalg.PhasePoint` when ``state`` is given. Results for
    problems with a ``cache_key`` are memoized.

    The fundamental matrix is propagated with the two-exponential
    sixth-order decomposition method using exact block exponentials; states
    (and problems too large for dense exponentials) use the 11-stage
    splitting method.
    """
    from .linalg import PhasePoint
    from .methods import make_method

    if not t1 > t0:
        raise ValueError("reference_solution needs t1 > t0")
    key = None
    if problem.cache_key is not None:
        skey = None if state is None else (state.q.tobytes(), state.p.tobytes())
        key = (problem.cache_key, float(t0), float(t1), float(tolerance), skey)
        with _reference_lock:
            if key in _reference_cache:
                cached = _reference_cache[key]
                return PhasePoint.from_stacked(cached) if state is not None else cached.copy()

    r = problem.dim
    if state is None and problem.has_dense and r <= ORACLE_MAX_DIM:
        method = make_method("ups6-exact")
    else:
        method = make_method("psi11")
    if state is None:
        y0 = np.eye(2 * r)
    else:
        y0 = state.stacked()

    span = t1 - t0
    if start_steps is None:
        rho = problem.spectral_radius()
        start_steps = 16
        if rho is not None and rho > 0:
            start_steps = max(start_steps, int(math.ceil(span * math.sqrt(rho) / 1.5)))
    n = start_steps
    threshold = tolerance * y0.size
    prev = method.propagate(problem, y0.copy(), t0, span / n, n)
    history = []
    for _ in range(max_halvings):
        n *= 2
        cur = method.propagate(problem, y0.copy(), t0, span / n, n)
        diff = l1_norm(cur - prev)
        history.append((n, diff))
        if np.isfinite(diff) and diff < threshold:
            break
        prev = cur
    else:
        raise ReferenceConvergenceError(
            f"reference did not converge to {tolerance:g} per entry after {max_halvings} halvings",
            history,
        )
    if key is not None:
        with _reference_lock:
            _reference_cache[key] = cur.copy()
    return PhasePoint.from_stacked(cur) if state is not None else cur


def clear_reference_cache() -> None:
    with _reference_lock:
        _reference_cache.clear()
