"""Monodromy stability, observed convergence order and series-order ranking."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..linalg import l1_norm
from ..magnus import reference_solution
from ..methods import make_method, method_id
from ..problems import MathieuProblem
from .csvio import ResultRow
from .runners import run_cell
from .spec import SpecError

__all__ = [
    "BEST_Q_EPS",
    "BEST_Q_OMEGAS",
    "BestQEntry",
    "OrderEstimate",
    "ROUNDOFF_FLOOR",
    "StabilityReport",
    "best_q_table",
    "check_geometric",
    "convergence_order",
    "fit_order",
    "format_best_q",
    "reciprocal_pairing",
    "stability_analysis",
]

STABLE_TOL = 1e-8
PAIRING_TOL = 1e-6
ROUNDOFF_FLOOR = 1e-12

BEST_Q_OMEGAS = tuple(5.0**j for j in range(-3, 4))
BEST_Q_EPS = (1.0, 0.1)

BEST_Q_CRITERION = (
    "mean log10 error over a shared log-spaced range of total cost C, "
    "interpolated on each q's error-cost curve (lower is better)"
)


@dataclass(frozen=True)
class StabilityReport:
    eigenvalues: np.ndarray
    stable: bool
    paired: bool
    max_modulus: float
    monodromy: np.ndarray = field(repr=False)


def reciprocal_pairing(eigenvalues, tol: float = PAIRING_TOL) -> bool:
    """True when every eigenvalue ``lam`` has a partner ``mu`` with ``|lam mu - 1| <= tol``."""
    lam = np.asarray(eigenvalues)
    return bool(np.all(np.min(np.abs(lam[:, None] * lam[None, :] - 1.0), axis=1) <= tol))


def stability_analysis(problem, method, h: float) -> StabilityReport:
    """Eigenvalues of the numerical monodromy matrix over one period."""
    period = getattr(problem, "period", None)
    if period is None:
        raise SpecError("stability analysis needs a periodic problem")
    steps = round(period / h)
    if steps < 1 or abs(steps * h - period) > 1e-9 * period:
        raise SpecError(f"step size {h!r} does not divide the period {period!r}")
    if isinstance(method, str):
        method = make_method(method)
    phi = method.propagate(problem, np.eye(2 * problem.dim), 0.0, period / steps, steps)
    lam = np.linalg.eigvals(phi)
    # deterministic order: by angle, then modulus
    lam = lam[np.lexsort((np.abs(lam), np.round(np.angle(lam), 12)))]
    mx = float(np.max(np.abs(lam)))
    return StabilityReport(lam, mx <= 1.0 + STABLE_TOL, reciprocal_pairing(lam), mx, phi)


@dataclass(frozen=True)
class OrderEstimate:
    slope: float
    hs: tuple[float, ...]
    errors: tuple[float, ...]
    used: tuple[bool, ...]

    @property
    def defined(self) -> bool:
        return not math.isnan(self.slope)


def check_geometric(hs):
    hs = np.asarray(hs, dtype=float)
    if len(hs) < 4:
        raise SpecError("need at least 4 step sizes")
    ratios = hs[1:] / hs[:-1]
    if np.any(hs <= 0) or np.max(np.abs(ratios / ratios[0] - 1.0)) > 1e-8 or abs(ratios[0] - 1.0) < 1e-12:
        raise SpecError("step sizes must form a geometric sequence")


def fit_order(hs, errors, floor: float = ROUNDOFF_FLOOR) -> OrderEstimate:
    """Least-squares slope of ``log(error)`` against ``log(h)`` over points above ``floor``."""
    hs = np.asarray(hs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    used = np.isfinite(errors) & (errors >= floor)
    slope = math.nan
    if used.sum() >= 2:
        slope = float(np.polyfit(np.log(hs[used]), np.log(errors[used]), 1)[0])
    return OrderEstimate(slope, tuple(hs), tuple(errors), tuple(bool(u) for u in used))


def convergence_order(problem, method, hs, t0: float = 0.0, t1: float = math.pi, reference=None) -> OrderEstimate:
    """Observed order of ``method`` on the fundamental matrix over ``[t0, t1]``."""
    check_geometric(hs)
    if isinstance(method, str):
        method = make_method(method)
    if reference is None:
        reference = reference_solution(problem, t0, t1)
    errors = []
    span = t1 - t0
    for h in hs:
        n = round(span / h)
        if n < 1 or abs(n * h - span) > 1e-9 * span:
            raise SpecError(f"step size {h!r} does not divide the interval length {span!r}")
        Y = method.propagate(problem, np.eye(2 * problem.dim), t0, span / n, n)
        errors.append(l1_norm(Y - reference))
    return fit_order(hs, errors)


@dataclass(frozen=True)
class BestQEntry:
    p: int
    eps: float
    omega: float
    ranking: tuple[int, ...]
    scores: tuple[float, ...]

    @property
    def top_two(self) -> tuple[int, int]:
        return self.ranking[0], self.ranking[1]


def _score(curves: dict[int, tuple[np.ndarray, np.ndarray]], samples: int = 16) -> dict[int, float]:
    lo = max(float(np.min(c)) for c, _ in curves.values())
    hi = min(float(np.max(c)) for c, _ in curves.values())
    if hi <= lo:
        # no overlapping budget: compare at the cheapest common point
        hi = lo
    grid = np.log(np.geomspace(lo, hi, samples)) if hi > lo else np.array([math.log(lo)])
    scores = {}
    for q, (cost, err) in curves.items():
        order = np.argsort(cost)
        lc = np.log(cost[order])
        le = np.log10(np.maximum(err[order], 1e-16))
        scores[q] = float(np.mean(np.interp(grid, lc, le)))
    return scores


def default_best_q_steps(omega: float, eps: float, levels: int = 5) -> tuple[int, ...]:
    """Step counts on ``[0, pi]`` for the ranking runs; the coarsest resolves the oscillation."""
    base = max(8, 2 * math.ceil(math.sqrt(omega * omega + abs(eps))))
    return tuple(base * 2**k for k in range(levels))


def best_q_table(eps_set=BEST_Q_EPS, omega_set=BEST_Q_OMEGAS, q_set=(6, 8, 10, 12), p_set=(4, 6),
                 steps_for=default_best_q_steps):
    """Rank the series orders ``q`` of each decomposition family on the Mathieu monodromy.

    Returns ``(entries, runs)``: one :class:`BestQEntry` per (p, eps, omega)
    and the raw rows as ``((p, eps, omega), ResultRow)`` pairs.
    """
    q_set = tuple(int(q) for q in q_set)
    if len(q_set) < 2 or any(q not in (6, 8, 10, 12) for q in q_set):
        raise SpecError("q set must contain at least two of 6, 8, 10, 12")
    if any(int(p) not in (4, 6) for p in p_set):
        raise SpecError("p set must be a subset of {4, 6}")
    entries: list[BestQEntry] = []
    runs: list[tuple[tuple, ResultRow]] = []
    for eps in eps_set:
        for omega in omega_set:
            problem = MathieuProblem(float(omega), float(eps))
            ref = reference_solution(problem, 0.0, math.pi)
            steps = steps_for(omega, eps)
            for p in p_set:
                curves = {}
                for q in q_set:
                    ident = method_id(p, q)
                    rows = [run_cell(problem, ident, np.eye(2), 0.0, math.pi / n, n, ref) for n in steps]
                    runs.extend(((int(p), float(eps), float(omega)), row) for row in rows)
                    ok = [r for r in rows if r.failure is None]
                    if len(ok) < 2:
                        continue
                    curves[q] = (np.array([r.cost_C for r in ok], float), np.array([r.error_L1 for r in ok]))
                if len(curves) < 2:
                    continue
                scores = _score(curves)
                ranking = tuple(sorted(scores, key=lambda q: (scores[q], q)))
                entries.append(BestQEntry(int(p), float(eps), float(omega), ranking, tuple(scores[q] for q in ranking)))
    return entries, runs


def _omega_label(w: float) -> str:
    if w >= 1:
        return f"{w:g}"
    return f"1/{round(1 / w):d}"


def format_best_q(entries) -> str:
    """Plain-text table laid out like the published ranking: one block per eps, one row per family."""
    lines = []
    for eps in sorted({e.eps for e in entries}, reverse=True):
        sub = [e for e in entries if e.eps == eps]
        omegas = sorted({e.omega for e in sub})
        lines.append(f"eps = {eps:g}")
        lines.append("omega".ljust(12) + "".join(_omega_label(w).rjust(9) for w in omegas))
        for p in sorted({e.p for e in sub}):
            cells = []
            for w in omegas:
                e = next((x for x in sub if x.p == p and x.omega == w), None)
                cells.append(("%d, %d" % e.top_two if e else "-").rjust(9))
            lines.append(f"q of ups{p}".ljust(12) + "".join(cells))
        lines.append("")
    return "\n".join(lines)
