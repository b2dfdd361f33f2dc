"""Magnus-splitting methods: alternating drifts and kicks.

One step of an ``m``-stage method is

    U(h a_{m+1}) L(h C_m) U(h a_m) ... L(h C_1) U(h a_1)

with scalar drifts ``U(s) = [[I, s I], [0, I]]`` and kicks
``L(h C_i)``, ``C_i = -(b_i1 M_1 + b_i2 M_2 + b_i3 M_3)``, where ``M_j`` is
``M`` at the Gauss-Legendre nodes of the step. Only products of ``C_i`` with
the position block are needed, so the methods work with a matrix-free
operator as well as with dense matrices.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._kernels import DRIFT, LOWER
from .linalg import CostLedger, PhasePoint, symmetrize
from .magnus import GL_NODES, GL_WEIGHTS, sample_nodes, sample_steps
from .shears import OpSpec, assemble, run_program, run_steps

__all__ = [
    "SplittingMethod",
    "SplittingTableau",
    "StabilityWarning",
    "TableauError",
    "generic_composition",
    "leapfrog_tableau",
    "step_psi_matrix",
    "step_psi_vector",
    "tableau_psi11",
]

# drift coefficients a_1..a_6; a_{13-i} = a_i
PSI11_A = (
    0.04648745479086313,
    -0.06069167116564293,
    0.21846652646340681,
    0.16805357948309270,
    0.31439236417035348,
    -0.18670825374207319,
)
# kick weights b_{i,j}, rows 1..6; rows 7..11 follow from b_{6+i,j} = b_{6-i,4-j}
PSI11_B = (
    (0.152309756970167, 0.078927889445323, -0.046907162912825),
    (0.006406269275594, -0.091413523927685, 0.043950351354379),
    (0.086778862327312, 0.051027214890409, -0.004050397550970),
    (0.066634120201024, 0.148499347182669, -0.011368920251338),
    (-0.020231991304321, 0.030206484536889, -0.021734660147529),
    (0.025991549816284, 0.009949620189233, 0.025991549816284),
)

# largest h * sqrt(rho(M)) accepted without a warning in vector mode
STABILITY_THRESHOLD = 2.5
# above this dimension vector-mode kicks go through the problem's operator
DENSE_KICK_MAX_DIM = 32


class TableauError(ValueError):
    pass


class StabilityWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class SplittingTableau:
    """Drift coefficients ``a`` (``m + 1``) and kick weights ``b`` (``m x 3``).

    Construction checks consistency: ``sum(a) == 1`` and the columns of ``b``
    sum to the Gauss-Legendre weights. With ``symmetric=True`` the time
    symmetry conditions ``a_{m+2-i} = a_i`` and ``b_{m+1-i,j} = b_{i,4-j}``
    must hold exactly.
    """

    a: np.ndarray
    b: np.ndarray
    name: str = "custom"
    symmetric: bool = True
    nodes: tuple = field(default=tuple(GL_NODES))

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).reshape(-1)
        b = np.asarray(self.b, dtype=float).reshape(-1, 3)
        if len(a) != len(b) + 1:
            raise TableauError(f"need m + 1 drifts for m kicks, got {len(a)} and {len(b)}")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if abs(a.sum() - 1.0) > 1e-13:
            raise TableauError(f"drift coefficients sum to {a.sum()!r}, not 1")
        if len(b) and np.max(np.abs(b.sum(axis=0) - GL_WEIGHTS)) > 1e-12:
            raise TableauError(f"kick weight columns sum to {b.sum(axis=0)}, not {GL_WEIGHTS}")
        if self.symmetric:
            if not np.array_equal(a, a[::-1]):
                raise TableauError("drift coefficients are not palindromic")
            if not np.array_equal(b, b[::-1, ::-1]):
                raise TableauError("kick weights violate b[m+1-i, j] == b[i, 4-j]")

    @property
    def stages(self) -> int:
        return len(self.b)


def tableau_psi11() -> SplittingTableau:
    """The 11-stage sixth-order time-symmetric method."""
    half_a = np.array(PSI11_A)
    a = np.concatenate([half_a, half_a[::-1]])
    top = np.array(PSI11_B)
    b = np.vstack([top, top[4::-1, ::-1]])
    return SplittingTableau(a, b, name="psi11")


def leapfrog_tableau() -> SplittingTableau:
    """Strang/Stormer-Verlet with the kick averaged by the Gauss-Legendre rule (order 2)."""
    return SplittingTableau([0.5, 0.5], [GL_WEIGHTS], name="leapfrog")


def _as_columns(state):
    if isinstance(state, PhasePoint):
        return state.stacked(), True
    Y = np.array(state, dtype=float, order="C")
    if Y.ndim == 1:
        return Y[:, None].copy(), True
    return Y, False


def _restore(Y, was_vector):
    return PhasePoint.from_stacked(Y) if was_vector else Y


def generic_composition(a, kicks, state, h: float, ledger: CostLedger | None = None, backend=None):
    """Apply ``U(h a_{m+1}) L(h C_m) ... L(h C_1) U(h a_1)`` to a state.

    ``kicks`` holds the ``m`` symmetric matrices ``C_i``; ``state`` is a
    :class:`PhasePoint`, a ``2r`` vector or a ``(2r, k)`` matrix, and the same
    kind is returned.
    """
    a = np.asarray(a, dtype=float).reshape(-1)
    kicks = [np.atleast_2d(np.asarray(C, dtype=float)) for C in kicks]
    if len(a) != len(kicks) + 1:
        raise ValueError(f"need {len(kicks) + 1} drift coefficients for {len(kicks)} kicks, got {len(a)}")
    Y, was_vector = _as_columns(state)
    r = Y.shape[0] // 2
    specs = [OpSpec(DRIFT, scalar=np.array([h * a[0]]))]
    for ai, C in zip(a[1:], kicks):
        if C.shape != (r, r):
            raise ValueError(f"kick matrix shape {C.shape} does not match r={r}")
        specs.append(OpSpec(LOWER, payload=symmetrize(h * C)[None, None]))
        specs.append(OpSpec(DRIFT, scalar=np.array([h * ai])))
    prog, _ = assemble(specs, r, fuse=False)
    run_program(Y, prog, ledger, backend)
    return _restore(Y, was_vector)


def _kick_matrices(tableau, samples):
    Ms = np.stack([samples.M1, samples.M2, samples.M3], axis=-3)
    return -np.einsum("ij,...jrs->...irs", tableau.b, Ms)


def _warn_stability(problem, h):
    rho = problem.spectral_radius()
    if rho is not None and abs(h) * math.sqrt(max(rho, 0.0)) > STABILITY_THRESHOLD:
        warnings.warn(
            f"h sqrt(rho(M)) = {abs(h) * math.sqrt(rho):.3g} exceeds {STABILITY_THRESHOLD}; "
            "explicit splitting may be unstable",
            StabilityWarning,
            stacklevel=3,
        )


@dataclass(frozen=True, eq=False)
class SplittingMethod:
    """Stepper for a :class:`SplittingTableau`.

    Dense problems of small dimension go through the shear kernel; otherwise
    each kick is one call to the problem's combined operator.
    """

    tableau: SplittingTableau = field(default_factory=tableau_psi11)
    fuse: bool = True
    backend: str | None = None
    label: str = "psi11"

    supports_vector = True

    def _use_operator(self, problem, cols):
        if not problem.has_dense:
            return True
        return cols < 2 * problem.dim and problem.dim > DENSE_KICK_MAX_DIM

    def build(self, problem, ledger=None):
        tab = self.tableau

        def builder(t_start, h, n):
            kicks = symmetrize(h * _kick_matrices(tab, sample_steps(problem, t_start, h, n)))
            specs = [OpSpec(DRIFT, scalar=np.full(n, h * tab.a[0]))]
            for i in range(tab.stages):
                specs.append(OpSpec(LOWER, payload=kicks[:, i:i + 1]))
                specs.append(OpSpec(DRIFT, scalar=np.full(n, h * tab.a[i + 1])))
            return specs

        return builder

    def propagate(self, problem, Y, t0: float, h: float, steps: int, ledger: CostLedger | None = None):
        Y = np.array(Y, dtype=float, order="C")
        if Y.ndim != 2 or Y.shape[0] != 2 * problem.dim:
            raise ValueError(f"state shape {Y.shape} does not match problem dimension {problem.dim}")
        if Y.shape[1] < 2 * problem.dim:
            _warn_stability(problem, h)
        if self._use_operator(problem, Y.shape[1]):
            return self._propagate_operator(problem, Y, t0, h, steps, ledger)
        return run_steps(Y, self.build(problem, ledger), t0, h, steps, fuse=self.fuse,
                         ledger=ledger, backend=self.backend, payloads_per_step=self.tableau.stages)

    def _propagate_operator(self, problem, Y, t0, h, steps, ledger):
        tab = self.tableau
        r = problem.dim
        q, p = Y[:r], Y[r:]
        cols = Y.shape[1]
        apps = 1 if problem.has_combined else 3
        for n in range(steps):
            t_n = t0 + n * h
            ts = t_n + h * np.asarray(tab.nodes)
            for i in range(tab.stages):
                q += (h * tab.a[i]) * p
                p -= h * problem.apply_combined(ts, tab.b[i], q)
                if ledger is not None:
                    if cols == 2 * r:
                        ledger.charge_mm(2 * apps)
                    else:
                        ledger.charge_mv(cols * apps)
            q += (h * tab.a[-1]) * p
        return Y

    def step(self, problem, Y, t_n, h, ledger=None):
        return self.propagate(problem, Y, t_n, h, 1, ledger)


def step_psi_vector(tableau: SplittingTableau, state: PhasePoint, problem, t_n: float, h: float,
                    ledger: CostLedger | None = None, backend=None) -> PhasePoint:
    """One splitting step on a phase-space point; one matrix-vector product per kick."""
    if state.dim != problem.dim:
        raise ValueError(f"state dimension {state.dim} does not match problem dimension {problem.dim}")
    _warn_stability(problem, h)
    if problem.has_dense and problem.dim <= DENSE_KICK_MAX_DIM:
        samples = sample_nodes(problem, t_n, h)
        return generic_composition(tableau.a, list(_kick_matrices(tableau, samples)), state, h, ledger, backend)
    method = SplittingMethod(tableau, backend=backend)
    Y = method._propagate_operator(problem, state.stacked(), t_n, h, 1, ledger)
    return PhasePoint.from_stacked(Y)


def step_psi_matrix(tableau: SplittingTableau, phi, problem, t_n: float, h: float,
                    ledger: CostLedger | None = None, backend=None) -> np.ndarray:
    """One splitting step on the fundamental matrix; two products per kick."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (2 * problem.dim, 2 * problem.dim):
        raise ValueError(f"fundamental matrix shape {phi.shape} does not match r={problem.dim}")
    samples = sample_nodes(problem, t_n, h)
    return generic_composition(tableau.a, list(_kick_matrices(tableau, samples)), phi, h, ledger, backend)
