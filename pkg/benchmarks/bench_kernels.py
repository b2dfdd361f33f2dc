"""Compare the compiled and the numpy shear kernels.

Runs the 11-stage splitting method and the sixth-order decomposition method
(``q = 8``) on ``x'' + (1 + cos(2t)/2) S x = 0`` with a fixed random symmetric
``S`` (spectrum in [1, 4]) for several dimensions and reports the
median wall time per step of each backend, plus the agreement of the two
results. Usage::

    python3 benchmarks/bench_kernels.py [--steps 2000] [--repeat 5]
"""

from __future__ import annotations

import argparse
import math
import statistics
import time

import numpy as np

from magsym import HAVE_COMPILED, make_method
from magsym.linalg import l1_norm
from magsym.problems import CallableProblem


def _time(fn, repeat):
    samples = []
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        samples.append(time.perf_counter() - start)
    return statistics.median(samples), out


def make_problem(r: int, seed: int = 0) -> CallableProblem:
    rng = np.random.default_rng(seed)
    V, _ = np.linalg.qr(rng.standard_normal((r, r)))
    S = (V * np.linspace(1.0, 4.0, r)) @ V.T
    S = 0.5 * (S + S.T)
    return CallableProblem(r, dense_fn=lambda t: (1.0 + 0.5 * math.cos(2.0 * t)) * S, rho=6.0)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=2000)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--dims", default="1,2,4,8,12,16,24,32,64")
    args = parser.parse_args(argv)
    if not HAVE_COMPILED:
        raise SystemExit("compiled kernel not built; install the package with Cython available")

    print(f"{'method':<10}{'r':>4}{'cython us/step':>16}{'numpy us/step':>16}{'speedup':>9}{'max diff':>11}")
    for ident in ("psi11", "ups6-8"):
        for r in (int(d) for d in args.dims.split(",")):
            problem = make_problem(r)
            h = math.pi / args.steps
            results = {}
            for backend in ("cython", "numpy"):
                method = make_method(ident, backend=backend)
                t, Y = _time(lambda: method.propagate(problem, np.eye(2 * r), 0.0, h, args.steps), args.repeat)
                results[backend] = (t, Y)
            tc, Yc = results["cython"]
            tn, Yn = results["numpy"]
            diff = l1_norm(Yc - Yn)
            print(f"{ident:<10}{r:>4}{1e6 * tc / args.steps:>16.2f}{1e6 * tn / args.steps:>16.2f}"
                  f"{tn / tc:>9.2f}{diff:>11.1e}")


if __name__ == "__main__":
    main()
