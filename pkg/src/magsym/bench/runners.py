"""Error-versus-cost runs over (method, step size) grids."""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..baselines import ImplicitSolveDivergence
from ..linalg import CostLedger, PhasePoint, l1_norm, symplecticity_defect
from ..magnus import reference_solution
from ..methods import make_method
from ..problems import MathieuProblem, wave_analytic_g0
from .csvio import ResultRow
from .spec import ExperimentSpec, SpecError

__all__ = ["error_vs_omega", "run_cell", "run_fundamental", "run_vector", "DEFAULT_OMEGA_GRID"]

DEFAULT_OMEGA_GRID = tuple(0.5 * k for k in range(21))

# failures that are recorded in the row instead of aborting the sweep
_CELL_ERRORS = (ImplicitSolveDivergence, FloatingPointError, np.linalg.LinAlgError, OverflowError)


def run_cell(problem, ident: str, y0: np.ndarray, t0: float, h: float, steps: int, reference: np.ndarray,
             *, timing: bool = False, matrix_mode: bool = True) -> ResultRow:
    """Propagate ``y0`` with one method and compare against ``reference``."""
    method = make_method(ident)
    ledger = CostLedger()
    start = time.perf_counter()
    failure = None
    try:
        with np.errstate(over="raise", invalid="raise"):
            Y = method.propagate(problem, y0.copy(), t0, h, steps, ledger)
        if not np.all(np.isfinite(Y)):
            raise FloatingPointError("non-finite values in the solution")
    except _CELL_ERRORS as exc:
        failure = f"{type(exc).__name__}: {exc}"
        Y = None
    wall = (time.perf_counter() - start) * 1e3 if timing else 0.0
    mm, mv = ledger.snapshot()
    if Y is None:
        return ResultRow(ident, h, steps, mm, mv, math.nan, math.nan, wall, failure)
    err = l1_norm(Y - reference)
    defect = symplecticity_defect(Y) if matrix_mode else math.nan
    return ResultRow(ident, h, steps, mm, mv, err, defect, wall)


def _map(fn, cells, workers):
    if workers <= 1 or len(cells) <= 1:
        return [fn(c) for c in cells]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, cells))


def run_fundamental(spec: ExperimentSpec, *, timing: bool = False, workers: int = 1) -> list[ResultRow]:
    """Propagate the fundamental matrix from the identity for every (method, h) cell.

    Rows come back in spec order: methods in the given order, and for each
    method the step sizes in the given order.
    """
    if spec.mode != "matrix":
        raise SpecError("run_fundamental needs mode=matrix")
    problem = spec.build_problem()
    ref = reference_solution(problem, spec.t0, spec.t1)
    y0 = np.eye(2 * problem.dim)
    cells = [(m, h, n) for m in spec.methods for h, n in zip(spec.hs, spec.steps)]
    return _map(lambda c: run_cell(problem, c[0], y0, spec.t0, c[1], c[2], ref, timing=timing), cells, workers)


def vector_reference(spec: ExperimentSpec, problem, state: PhasePoint) -> np.ndarray:
    if spec.problem == "wave" and spec.eps == 0.0 and spec.t0 == 0.0:
        cfg = spec.wave_config()
        q = wave_analytic_g0(cfg, spec.t1)
        p = -cfg.sigma * math.sin(spec.t1) * np.exp(-0.5 * cfg.grid**2)
        return np.concatenate([q, p])[:, None]
    return reference_solution(problem, spec.t0, spec.t1, state=state).stacked()


def run_vector(spec: ExperimentSpec, *, timing: bool = False, workers: int = 1) -> list[ResultRow]:
    """Propagate the problem's initial state for every (method, h) cell; costs are matrix-vector products."""
    if spec.mode != "vector":
        raise SpecError("run_vector needs mode=vector")
    problem = spec.build_problem()
    state = spec.initial_state()
    ref = vector_reference(spec, problem, state)
    y0 = state.stacked()
    cells = [(m, h, n) for m in spec.methods for h, n in zip(spec.hs, spec.steps)]
    return _map(
        lambda c: run_cell(problem, c[0], y0, spec.t0, c[1], c[2], ref, timing=timing, matrix_mode=False),
        cells,
        workers,
    )


def error_vs_omega(methods, eps: float = 1.0, h: float = math.pi / 20, omegas=DEFAULT_OMEGA_GRID, *,
                   timing: bool = False, workers: int = 1) -> list[tuple[float, ResultRow]]:
    """Mathieu monodromy error over ``[0, pi]`` for every (method, omega) at a fixed step."""
    omegas = tuple(float(w) for w in omegas)
    if any(w < 0 or w > 10 for w in omegas):
        raise SpecError("omega grid must lie in [0, 10]")
    steps = round(math.pi / h)
    if steps < 1 or abs(steps * h - math.pi) > 1e-9 * math.pi:
        raise SpecError(f"step size {h!r} does not divide pi")
    h = math.pi / steps
    out = []
    for w in omegas:
        problem = MathieuProblem(w, eps)
        ref = reference_solution(problem, 0.0, math.pi)
        rows = _map(lambda m: run_cell(problem, m, np.eye(2), 0.0, h, steps, ref, timing=timing), list(methods), workers)
        out.extend((w, row) for row in rows)
    return out
