"""Command-line entry point: ``magsym <subcommand> [flags]``.

Exit status is 0 on success, 2 for an invalid experiment description and 3
when any cell failed numerically (the CSV is still written).
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .bench import analysis
from .bench.csvio import format_real, write_csv
from .bench.runners import DEFAULT_OMEGA_GRID, error_vs_omega, run_cell, run_fundamental, run_vector
from .bench.spec import ExperimentSpec, SpecError, parse_real, parse_real_list
from .magnus import ReferenceConvergenceError, reference_solution
from .methods import make_method, method_id
from .problems import HillPascalProblem, MathieuProblem

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_SPEC, EXIT_NUMERIC = 0, 2, 3

MATRIX_METHODS = ("ups4-6", "ups4-8", "ups6-8", "ups6-12", "psi11", "rk4", "rkgl2", "rkgl3")
VECTOR_METHODS = ("psi11", "rk4", "rkgl2", "rkgl3")
DEFAULT_STEPS = {"mathieu": "10,20,40,80,160", "hill": "20,40,80,160,320", "wave": "1000,2000,4000,8000"}

# config keys that are spelled differently from their flags
_CONFIG_ALIASES = {"methods": "method", "hs": "h", "n_grid": "n-grid", "omega_grid": "omega-grid"}


def _common(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("experiment")
    g.add_argument("--method", help="comma-separated method ids (e.g. ups4-6,psi11,rkgl3)")
    g.add_argument("--p", help="order of the decomposition method (4 or 6)")
    g.add_argument("--q", help="series order: 6, 8, 10, 12 or exact")
    g.add_argument("--h", help="comma-separated step sizes; 'pi/20' style values are accepted")
    g.add_argument("--steps", help="comma-separated step counts")
    g.add_argument("--t0", help="start time (default 0)")
    g.add_argument("--t1", help="final time")
    g.add_argument("--omega", help="Mathieu frequency")
    g.add_argument("--eps", help="perturbation amplitude")
    g.add_argument("--delta", help="wave forcing frequency")
    g.add_argument("--r", help="Hill system dimension")
    g.add_argument("--n-grid", dest="n_grid", help="wave grid intervals")
    g.add_argument("--mode", choices=("matrix", "vector"))
    g.add_argument("--disc", choices=("spectral", "fd2"))
    g.add_argument("--problem", choices=("mathieu", "hill"), help="problem for stability and order-check")
    g.add_argument("--out", help="output CSV path (default: standard output)")
    g.add_argument("--config", help="key=value file; its entries override command-line flags")
    g.add_argument("--timing", action="store_true", help="record wall time (otherwise wall_ms is 0)")
    g.add_argument("--workers", help="run independent cells on this many threads")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="magsym", description="Benchmarks for symplectic Magnus-based integrators")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "mathieu": "error-vs-cost sweep on the Mathieu equation",
        "hill": "error-vs-cost sweep on the matrix Hill equation",
        "wave": "error-vs-cost sweep on the semidiscretized wave equation",
        "omega-sweep": "Mathieu error against omega at a fixed step",
        "best-q": "rank the series orders of the decomposition methods",
        "stability": "monodromy eigenvalues and stability flag",
        "order-check": "observed convergence order",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        _common(p)
        if name == "omega-sweep":
            p.add_argument("--omega-grid", dest="omega_grid", help="comma-separated omegas (default 0,0.5,...,10)")
    return parser


def _config_argv(path: str) -> list[str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SpecError(f"cannot read config {path!r}: {exc}") from None
    argv = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise SpecError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = _CONFIG_ALIASES.get(key, key).replace("_", "-")
        if key in ("config", "timing"):
            raise SpecError(f"{path}:{lineno}: key {key!r} is not allowed in a config file")
        argv += [f"--{key}", value]
    return argv


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        extra = _config_argv(args.config)
        args = parser.parse_args(list(argv) + extra)
    return args


def _real(args, name, default):
    v = getattr(args, name, None)
    return default if v is None else parse_real(v)


def _int(args, name, default):
    v = getattr(args, name, None)
    if v is None:
        return default
    try:
        return int(v)
    except ValueError:
        raise SpecError(f"--{name.replace('_', '-')} must be an integer, got {v!r}") from None


def _methods(args, mode):
    if args.method:
        return tuple(m.strip() for m in args.method.split(",") if m.strip())
    if args.p is not None or args.q is not None:
        p = _int(args, "p", 4)
        if p not in (4, 6):
            raise SpecError(f"--p must be 4 or 6, got {p}")
        q = args.q if args.q is not None else ("6" if p == 4 else "8")
        return (method_id(p, q),)
    return VECTOR_METHODS if mode == "vector" else MATRIX_METHODS


def _steps_or_hs(args, default_steps):
    if args.h is not None and args.steps is not None:
        raise SpecError("give --h or --steps, not both")
    if args.h is not None:
        return {"hs": parse_real_list(args.h)}
    text = args.steps if args.steps is not None else default_steps
    try:
        return {"steps": tuple(int(s) for s in text.split(",") if s.strip())}
    except ValueError:
        raise SpecError(f"--steps must be comma-separated integers, got {text!r}") from None


def spec_from_args(args) -> ExperimentSpec:
    problem = args.command
    mode = args.mode or ("vector" if problem == "wave" else "matrix")
    r = _int(args, "r", 5)
    # Hill runs default to eps = r
    default_eps = {"mathieu": 1.0, "hill": float(r), "wave": 0.5}[problem]
    t1 = None if args.t1 is None else parse_real(args.t1)
    return ExperimentSpec(
        problem=problem,
        methods=_methods(args, mode),
        t0=_real(args, "t0", 0.0),
        t1=t1,
        mode=mode,
        omega=_real(args, "omega", 1.0),
        eps=_real(args, "eps", default_eps),
        delta=_real(args, "delta", 1.0),
        r=r,
        n_grid=_int(args, "n_grid", 128),
        disc=args.disc or "spectral",
        out=args.out,
        **_steps_or_hs(args, DEFAULT_STEPS[problem]),
    )


def _emit(args, rows, comments, prefix_names=(), prefixes=None, out=None):
    dest = out if out is not None else (args.out or sys.stdout)
    write_csv(dest, rows, comments, prefix_names, prefixes)


def _status(rows) -> int:
    return EXIT_NUMERIC if any(r.failure for r in rows) else EXIT_OK


def cmd_sweep(args) -> int:
    spec = spec_from_args(args)
    workers = _int(args, "workers", 1)
    runner = run_vector if spec.mode == "vector" else run_fundamental
    rows = runner(spec, timing=args.timing, workers=workers)
    _emit(args, rows, spec.comment_lines())
    return _status(rows)


def cmd_omega_sweep(args) -> int:
    eps = _real(args, "eps", 1.0)
    if args.steps is not None:
        h = math.pi / _int(args, "steps", 20)
    else:
        h = _real(args, "h", math.pi / 20)
    grid = parse_real_list(args.omega_grid) if args.omega_grid else DEFAULT_OMEGA_GRID
    methods = _methods(args, "matrix")
    for m in methods:
        make_method(m)
    pairs = error_vs_omega(methods, eps, h, grid, timing=args.timing, workers=_int(args, "workers", 1))
    comments = [
        "# command=omega-sweep",
        "# problem=mathieu",
        f"# eps={eps!r}",
        f"# h={h!r}",
        "# t0=0.0",
        f"# t1={math.pi!r}",
        "# omegas=" + ",".join(repr(float(w)) for w in grid),
        "# methods=" + ",".join(methods),
    ]
    rows = [r for _, r in pairs]
    _emit(args, rows, comments, ("omega",), [(w,) for w, _ in pairs])
    return _status(rows)


def cmd_best_q(args) -> int:
    eps_set = parse_real_list(args.eps) if args.eps else analysis.BEST_Q_EPS
    omega_set = parse_real_list(args.omega) if args.omega else analysis.BEST_Q_OMEGAS
    q_set = tuple(int(q) for q in args.q.split(",")) if args.q else (6, 8, 10, 12)
    p_set = tuple(int(p) for p in args.p.split(",")) if args.p else (4, 6)
    entries, runs = analysis.best_q_table(eps_set, omega_set, q_set, p_set)
    comments = [
        "# command=best-q",
        "# problem=mathieu",
        "# t0=0.0",
        f"# t1={math.pi!r}",
        "# eps_set=" + ",".join(repr(float(e)) for e in eps_set),
        "# omega_set=" + ",".join(repr(float(w)) for w in omega_set),
        "# q_set=" + ",".join(map(str, q_set)),
        "# p_set=" + ",".join(map(str, p_set)),
        f"# criterion={analysis.BEST_Q_CRITERION}",
    ]
    rows = [r for _, r in runs]
    _emit(args, rows, comments, ("p", "eps", "omega"), [key for key, _ in runs])

    ranking = _ranking_csv(entries, comments)
    if args.out:
        out = Path(args.out)
        out.with_name(out.stem + ".ranking.csv").write_text(ranking)
        print(analysis.format_best_q(entries))
    else:
        sys.stderr.write(analysis.format_best_q(entries) + "\n")
    return _status(rows)


def _ranking_csv(entries, comments) -> str:
    lines = list(comments) + ["p,eps,omega,first,second,score_first,score_second,ranking"]
    for e in entries:
        lines.append(",".join([
            str(e.p), format_real(e.eps), format_real(e.omega), str(e.ranking[0]), str(e.ranking[1]),
            format_real(e.scores[0]), format_real(e.scores[1]), " ".join(map(str, e.ranking)),
        ]))
    return "\n".join(lines) + "\n"


def _periodic_problem(args):
    kind = args.problem or "mathieu"
    if kind == "mathieu":
        return kind, MathieuProblem(_real(args, "omega", 1.0), _real(args, "eps", 1.0))
    r = _int(args, "r", 5)
    return kind, HillPascalProblem(r, _real(args, "eps", 0.1 * r))


def cmd_stability(args) -> int:
    kind, problem = _periodic_problem(args)
    ident = _methods(args, "matrix")[0] if (args.method or args.p) else "psi11"
    h = _real(args, "h", math.pi / 200)
    report = analysis.stability_analysis(problem, ident, h)
    lam = report.eigenvalues
    lines = [
        "# command=stability",
        f"# problem={kind}",
        f"# method={ident}",
        f"# h={h!r}",
        f"# stable={report.stable}",
        f"# reciprocal_pairing={report.paired}",
        f"# max_modulus={format_real(report.max_modulus)}",
        "re,im,abs",
    ]
    lines += [f"{format_real(z.real)},{format_real(z.imag)},{format_real(abs(z))}" for z in lam]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_order_check(args) -> int:
    kind, problem = _periodic_problem(args)
    methods = _methods(args, "matrix") if (args.method or args.p) else ("ups4-6",)
    t0 = _real(args, "t0", 0.0)
    t1 = _real(args, "t1", math.pi)
    if args.h is not None and args.steps is not None:
        raise SpecError("give --h or --steps, not both")
    if args.h is not None:
        hs = parse_real_list(args.h)
    else:
        steps = [int(s) for s in (args.steps or "10,20,40,80,160").split(",")]
        hs = tuple((t1 - t0) / n for n in steps)
    ref = reference_solution(problem, t0, t1)
    rows, comments = [], ["# command=order-check", f"# problem={kind}", f"# t0={t0!r}", f"# t1={t1!r}"]
    analysis.check_geometric(hs)
    y0 = np.eye(2 * problem.dim)
    for ident in methods:
        make_method(ident)
        cells = []
        for h in hs:
            n = round((t1 - t0) / h)
            if n < 1 or abs(n * h - (t1 - t0)) > 1e-9 * (t1 - t0):
                raise SpecError(f"step size {h!r} does not divide the interval length")
            cells.append(run_cell(problem, ident, y0, t0, (t1 - t0) / n, n, ref, timing=args.timing))
        est = analysis.fit_order(hs, [c.error_L1 for c in cells])
        slope = "undefined" if not est.defined else format_real(est.slope)
        comments.append(f"# slope[{ident}]={slope}")
        print(f"{ident}: slope {slope}", file=sys.stderr)
        rows.extend(cells)
    _emit(args, rows, comments)
    return _status(rows)


COMMANDS = {
    "mathieu": cmd_sweep,
    "hill": cmd_sweep,
    "wave": cmd_sweep,
    "omega-sweep": cmd_omega_sweep,
    "best-q": cmd_best_q,
    "stability": cmd_stability,
    "order-check": cmd_order_check,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except ValueError as exc:
        print(f"magsym: error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except (ReferenceConvergenceError, ArithmeticError) as exc:
        print(f"magsym: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
