"""Experiment description shared by the runners and the command line."""

from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from ..linalg import PhasePoint
from ..methods import make_method
from ..problems import HillPascalProblem, MathieuProblem, WaveProblem, wave_discretize, wave_initial_state

__all__ = ["ExperimentSpec", "SpecError", "parse_real", "parse_real_list"]

PROBLEMS = ("mathieu", "hill", "wave")
MODES = ("matrix", "vector")

_REAL = re.compile(r"^\s*(?:([-+]?[0-9.eE+-]+)\s*\*?\s*)?(pi)?\s*(?:/\s*([0-9.eE+-]+))?\s*$")


class SpecError(ValueError):
    """Inconsistent or malformed experiment description."""


def parse_real(text) -> float:
    """Parse a real number, allowing multiples and fractions of ``pi`` such as ``pi/20`` or ``2pi/5``."""
    if isinstance(text, (int, float)):
        return float(text)
    s = str(text).strip().lower()
    try:
        return float(s)
    except ValueError:
        pass
    m = _REAL.match(s)
    if not m or not (m.group(1) or m.group(2)):
        raise SpecError(f"cannot parse {text!r} as a real number")
    try:
        value = float(m.group(1)) if m.group(1) else 1.0
        if m.group(2):
            value *= math.pi
        if m.group(3):
            value /= float(m.group(3))
    except (ValueError, ZeroDivisionError) as exc:
        raise SpecError(f"cannot parse {text!r} as a real number") from exc
    return value


def parse_real_list(text) -> tuple[float, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(parse_real(t) for t in text)
    return tuple(parse_real(t) for t in str(text).split(",") if t.strip())


def _default_t1(problem: str, delta: float) -> float:
    return 20.0 * math.pi / delta if problem == "wave" else math.pi


@dataclass(frozen=True)
class ExperimentSpec:
    """One error-versus-cost sweep.

    Exactly one of ``hs`` and ``steps`` is given; the other is derived so
    that ``steps * h == t1 - t0``.
    """

    problem: str = "mathieu"
    methods: tuple[str, ...] = ("ups4-6",)
    hs: tuple[float, ...] | None = None
    steps: tuple[int, ...] | None = None
    t0: float = 0.0
    t1: float | None = None
    mode: str = "matrix"
    omega: float = 1.0
    eps: float = 1.0
    delta: float = 1.0
    r: int = 5
    n_grid: int = 128
    disc: str = "spectral"
    out: str | None = None
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise SpecError(f"problem must be one of {PROBLEMS}, got {self.problem!r}")
        if self.mode not in MODES:
            raise SpecError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.methods:
            raise SpecError("at least one method is required")
        if self.t1 is None:
            object.__setattr__(self, "t1", _default_t1(self.problem, self.delta))
        span = self.t1 - self.t0
        if not span > 0:
            raise SpecError(f"need t1 > t0, got [{self.t0}, {self.t1}]")
        if (self.hs is None) == (self.steps is None):
            raise SpecError("give exactly one of step sizes or step counts")
        if self.hs is not None:
            steps = []
            for h in self.hs:
                if not h > 0:
                    raise SpecError(f"step size must be positive, got {h}")
                n = round(span / h)
                if n < 1 or abs(n * h - span) > 1e-9 * span:
                    raise SpecError(f"step size {h!r} does not divide the interval length {span!r}")
                steps.append(int(n))
            object.__setattr__(self, "steps", tuple(steps))
        else:
            if any(int(n) != n or n < 1 for n in self.steps):
                raise SpecError(f"step counts must be integers >= 1, got {self.steps}")
            object.__setattr__(self, "steps", tuple(int(n) for n in self.steps))
        object.__setattr__(self, "hs", tuple(span / n for n in self.steps))
        object.__setattr__(self, "methods", tuple(self.methods))
        for ident in self.methods:
            try:
                method = make_method(ident)
            except ValueError as exc:
                raise SpecError(str(exc)) from None
            if self.mode == "vector" and not method.supports_vector:
                raise SpecError(f"method {ident!r} has no vector mode")
        try:
            self.build_problem()
        except ValueError as exc:
            raise SpecError(str(exc)) from None

    def build_problem(self):
        if self.problem == "mathieu":
            return MathieuProblem(self.omega, self.eps)
        if self.problem == "hill":
            return HillPascalProblem(self.r, self.eps)
        return wave_discretize(self.wave_config())

    def wave_config(self) -> WaveProblem:
        return WaveProblem(n_grid=self.n_grid, delta=self.delta, eps=self.eps, disc=self.disc)

    def initial_state(self) -> PhasePoint:
        """Vector-mode start: the Gaussian profile at rest for the wave, ``q = 1, p = 0`` otherwise."""
        if self.problem == "wave":
            return wave_initial_state(self.wave_config())
        dim = 1 if self.problem == "mathieu" else self.r
        return PhasePoint(np.ones(dim), np.zeros(dim))

    def relevant_items(self) -> list[tuple[str, object]]:
        """Fields that determine the results, in a fixed order."""
        keys = ["problem", "mode", "methods", "t0", "t1", "steps", "hs"]
        keys += {"mathieu": ["omega", "eps"], "hill": ["r", "eps"], "wave": ["n_grid", "disc", "delta", "eps"]}[self.problem]
        d = asdict(self)
        items = [(k, d[k]) for k in keys]
        items += sorted(self.extra.items())
        return items

    def comment_lines(self) -> list[str]:
        def fmt(v):
            if isinstance(v, (tuple, list)):
                return ",".join(fmt(x) for x in v)
            if isinstance(v, float):
                return repr(v)
            return str(v)

        return [f"# {k}={fmt(v)}" for k, v in self.relevant_items()]

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))
