"""Exit criteria of the package, one test per criterion (criterion 4 has two parts).

Each test prints a ``criterion N: PASS|FAIL ...`` line; the session summary
repeats those lines (see ``conftest.py``). Tolerances and runtime bounds are
the agreed exit thresholds and must not be relaxed.
"""

import math
import subprocess
import sys
import time
from contextlib import contextmanager

import numpy as np
import pytest

from magsym import (
    CostLedger,
    HillPascalProblem,
    MathieuProblem,
    WaveProblem,
    l1_norm,
    make_method,
    omega6_oracle,
    reference_solution,
    sample_nodes,
    symplecticity_defect,
    tableau_psi11,
    wave_analytic_g0,
    wave_discretize,
    wave_initial_state,
)
from magsym.bench import convergence_order, data_section, stability_analysis
from magsym.decomposition import DecompositionScheme, coeffs4, coeffs6
from magsym.magnus import GL_WEIGHTS, combos

pytestmark = pytest.mark.acceptance


@contextmanager
def criterion(record, number, title, budget_s):
    """Time the body, record one PASS/FAIL line and enforce the runtime bound."""
    checks = []
    start = time.perf_counter()
    yield checks
    elapsed = time.perf_counter() - start
    checks.append((f"runtime {elapsed:.2f} s < {budget_s} s", elapsed < budget_s))
    ok = all(passed for _, passed in checks)
    failed = [text for text, passed in checks if not passed]
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {title}"
    detail = "; ".join(text for text, _ in checks)
    record(line, detail)
    assert ok, f"{line}; failing checks: {failed}"


@pytest.fixture
def record(request, capsys):
    def _record(line, detail):
        request.node.user_properties.append(("acceptance", f"{line} [{detail}]"))
        with capsys.disabled():
            print(f"\n{line}\n    {detail}")

    return _record


def test_criterion_01_coefficient_integrity(record):
    with criterion(record, 1, "tableau consistency and autonomous collapse", 1.0) as checks:
        tab = tableau_psi11()
        a, b = tab.a, tab.b
        checks.append((f"|sum a - 1| = {abs(a.sum() - 1):.1e} <= 1e-13", abs(a.sum() - 1) <= 1e-13))
        col = float(np.max(np.abs(b.sum(axis=0) - GL_WEIGHTS)))
        checks.append((f"column sums off by {col:.1e} <= 1e-12", col <= 1e-12))
        checks.append(("a palindromic", bool(np.array_equal(a, a[::-1]))))
        checks.append(("b mirror symmetric", bool(np.array_equal(b, b[::-1, ::-1]))))

        P = HillPascalProblem(2, 0.0)
        s = sample_nodes(P, 0.4, 0.1)
        cb = combos(s)
        zero = (l1_norm(cb.K), l1_norm(cb.L), l1_norm(cb.F))
        c1, c2, d1 = coeffs4(cb, s, 0.1)
        e1, e2, f1, f2 = coeffs6(cb, s, 0.1)
        Mref = s.M2
        worst = max(l1_norm(c1), l1_norm(c2), l1_norm(e1), l1_norm(e2),
                    l1_norm(d1 + Mref), l1_norm(f1 + Mref), l1_norm(f2 + Mref))
        checks.append((f"K, L, F = {zero}", zero == (0.0, 0.0, 0.0)))
        checks.append((f"C_i = 0 and D_i = -M up to {worst:.1e}", worst == 0.0))


def test_criterion_02_convergence_orders(record):
    P = MathieuProblem(1.0, 1.0)
    hs = [math.pi / 10 * 2.0**-k for k in range(5)]
    expected = {"ups4-6": 4, "ups4-8": 4, "ups6-8": 6, "ups6-12": 6, "psi11": 6, "rkgl3-6": 6}
    with criterion(record, 2, "observed orders on Mathieu omega=1, eps=1", 10.0) as checks:
        ref = reference_solution(P, 0.0, math.pi)
        for ident, p in expected.items():
            est = convergence_order(P, ident, hs, reference=ref)
            tol = 0.3 if p == 4 else 0.4
            checks.append((f"{ident} slope {est.slope:.3f} in {p}+-{tol}", abs(est.slope - p) <= tol))


def test_criterion_03_oracle_equivalence(record):
    P = MathieuProblem(1.0, 1.0)
    scheme = DecompositionScheme(6, 12)
    with criterion(record, 3, "sixth-order decomposition against the dense Magnus exponential", 1.0) as checks:
        diffs = []
        for h in (math.pi / 40, math.pi / 80):
            step = scheme.step(P, np.eye(2), 0.0, h)
            diffs.append(l1_norm(step - omega6_oracle(sample_nodes(P, 0.0, h))))
        ratio = diffs[0] / diffs[1]
        checks.append((f"differences {diffs[0]:.2e}, {diffs[1]:.2e}; ratio {ratio:.1f} in [90, 170]",
                       90.0 <= ratio <= 170.0))


HILL = HillPascalProblem(5, 5.0)


def _hill_defect(ident):
    Y = make_method(ident).propagate(HILL, np.eye(10), 0.0, math.pi / 100, 1000)
    return symplecticity_defect(Y)


def test_criterion_04a_symplecticity_geometric_methods(record):
    with criterion(record, "4a", "symplecticity of decomposition and splitting on Hill r=5", 5.0) as checks:
        for ident in ("ups4-6", "ups6-8", "psi11"):
            d = _hill_defect(ident)
            checks.append((f"{ident} defect {d:.2e} <= 1e-10", d <= 1e-10))


def test_criterion_04b_symplecticity_gauss_legendre_fixed_point(record):
    # Expected to fail: six Jacobi sweeps leave an O(h^7) residual per step
    # that is not symplectic; on this stiff configuration it accumulates well
    # above the threshold. Kept red on purpose.
    with criterion(record, "4b", "symplecticity of fixed-iteration Gauss-Legendre on Hill r=5", 5.0) as checks:
        d = _hill_defect("rkgl3-6")
        checks.append((f"rkgl3-6 defect {d:.2e} <= 1e-6", d <= 1e-6))


def test_criterion_05_time_symmetry(record):
    P = MathieuProblem(5.0, 1.0)
    h = math.pi / 20
    with criterion(record, 5, "one step forward and back returns to the identity", 1.0) as checks:
        for ident in ("ups4-6", "ups4-8", "ups6-8", "ups6-12", "ups4-exact", "ups6-exact", "psi11"):
            m = make_method(ident)
            Y = m.step(P, np.eye(2), 0.0, h)
            Y = m.step(P, Y, h, -h)
            err = l1_norm(Y - np.eye(2))
            checks.append((f"{ident} {err:.1e} <= 1e-11", err <= 1e-11))


def test_criterion_06_autonomous_exactness(record):
    P = MathieuProblem(1.0, 0.0)
    with criterion(record, 6, "exact variants reproduce the rotation by pi", 1.0) as checks:
        for ident in ("ups4-exact", "ups6-exact"):
            Y = make_method(ident).propagate(P, np.eye(2), 0.0, math.pi / 20, 20)
            err = l1_norm(Y + np.eye(2))
            checks.append((f"{ident} |Phi + I| = {err:.1e} <= 1e-11", err <= 1e-11))


def _per_step(ident, mode, steps=5):
    P = HillPascalProblem(3, 1.0)
    Y0 = np.eye(6) if mode == "matrix" else np.ones((6, 1))
    led = CostLedger()
    make_method(ident).propagate(P, Y0, 0.0, 0.01, steps, led)
    one = CostLedger()
    make_method(ident).propagate(P, Y0, 0.0, 0.01, 1, one)
    # per-step slope; removes the one-off tail of fused runs
    return (led.mm - one.mm) / (steps - 1), (led.mv - one.mv) / (steps - 1)


def test_criterion_07_cost_ledger(record):
    with criterion(record, 7, "per-step cost counts", 1.0) as checks:
        fixed = {"rk4": (8, 4), "psi11": (22, 11)}
        for s, rho in ((2, 4), (3, 6), (3, 3)):
            fixed[f"rkgl{s}-{rho}"] = (2 * s * rho, s * rho)
        for ident, (c, v) in fixed.items():
            got = (_per_step(ident, "matrix")[0], _per_step(ident, "vector")[1])
            checks.append((f"{ident} {got[0]:g} C / {got[1]:g} V == {c} / {v}", got == (c, v)))
        for ident, table in (("ups4-6", 4), ("ups6-8", 15)):
            c = _per_step(ident, "matrix")[0]
            checks.append((f"{ident} ledger {c:g} C vs table {table} C (difference {c - table:+g} <= +4)",
                           0 <= c - table <= 4))


def test_criterion_08_wave_analytic(record):
    cfg = WaveProblem(n_grid=128, x0=-10.0, xN=10.0, eps=0.0, disc="spectral")
    P = wave_discretize(cfg)
    with criterion(record, 8, "trapped wave equation against the analytic mode", 5.0) as checks:
        y0 = wave_initial_state(cfg).stacked().reshape(-1, 1)
        led = CostLedger()
        Y = make_method("psi11").propagate(P, y0, 0.0, math.pi / 100, 200, led)
        err = l1_norm(Y[:128, 0] - wave_analytic_g0(cfg, 2 * math.pi))
        checks.append((f"grid L1 error {err:.2e} <= 1e-8", err <= 1e-8))
        checks.append((f"V = {led.mv} == 2200", led.mv == 11 * 200))


def test_criterion_09_spectral_structure(record):
    with criterion(record, 9, "monodromy spectrum on Mathieu omega=5, eps=1", 1.0) as checks:
        rep = stability_analysis(MathieuProblem(5.0, 1.0), "psi11", math.pi / 200)
        lam = rep.eigenvalues
        pair = float(np.max(np.min(np.abs(lam[:, None] * lam[None, :] - 1), axis=1)))
        unit = float(np.max(np.abs(np.abs(lam) - 1)))
        checks.append((f"pairing residual {pair:.1e} <= 1e-6", pair <= 1e-6))
        checks.append((f"max ||lambda| - 1| = {unit:.1e} <= 1e-8", unit <= 1e-8))


def _cli(args, tmp_path, name):
    out = tmp_path / name
    proc = subprocess.run([sys.executable, "-m", "magsym", *args, "--out", str(out)], capture_output=True, text=True)
    return proc.returncode, out


def test_criterion_10_end_to_end_artifacts(record, tmp_path):
    sweep = ["omega-sweep", "--eps", "1", "--h", "pi/20", "--omega-grid", ",".join(str(0.5 * i) for i in range(21))]
    with criterion(record, 10, "omega-sweep and best-q artifacts are well formed and deterministic", 60.0) as checks:
        texts = {}
        for cmd, args in (("omega-sweep", sweep), ("best-q", ["best-q"])):
            runs = []
            for k in range(2):
                code, out = _cli(args, tmp_path, f"{cmd}-{k}.csv")
                checks.append((f"{cmd} run {k} exit {code} == 0", code == 0))
                runs.append(out.read_text() if out.exists() else "")
            same = data_section(runs[0]) == data_section(runs[1]) and runs[0] != ""
            checks.append((f"{cmd} data sections byte-identical", same))
            texts[cmd] = runs[0]
        r0 = (tmp_path / "best-q-0.ranking.csv").read_text()
        r1 = (tmp_path / "best-q-1.ranking.csv").read_text()
        checks.append(("best-q ranking byte-identical", r0 == r1))

        lines = data_section(texts["omega-sweep"]).splitlines()
        header = lines[0].split(",")
        rows = [dict(zip(header, line.split(","))) for line in lines[1:]]
        omegas = sorted({float(r["omega"]) for r in rows})
        checks.append((f"omega-sweep covers {len(omegas)} omegas from 0 to 10",
                       omegas == [0.5 * i for i in range(21)]))
        finite = all(math.isfinite(float(r["error_L1"])) for r in rows)
        checks.append(("omega-sweep errors finite", finite))
        bq = data_section(texts["best-q"]).splitlines()
        checks.append((f"best-q has {len(bq) - 1} rows with {len(bq[0].split(','))} columns",
                       len(bq) > 1 and len({len(x.split(",")) for x in bq}) == 1))
        ranked = [x for x in r0.splitlines() if x and not x.startswith("#")][1:]
        checks.append((f"best-q ranks {len(ranked)} (p, eps, omega) cells == 28", len(ranked) == 28))
