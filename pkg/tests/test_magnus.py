import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from conftest import harmonic_propagator
from magsym.linalg import CostLedger, PhasePoint, l1_norm
from magsym.magnus import (
    GL_NODES,
    GL_WEIGHTS,
    BlockOp,
    Combos,
    ReferenceConvergenceError,
    alphas,
    clear_reference_cache,
    gl_nodes,
    omega6,
    omega6_oracle,
    reference_solution,
    sample_nodes,
    sample_steps,
)
from magsym.problems import HillPascalProblem, MathieuProblem


def test_gauss_legendre_nodes():
    c1, c2, c3 = gl_nodes()
    assert c1 == pytest.approx(0.5 - math.sqrt(15) / 10, abs=1e-15)
    assert c2 == 0.5
    assert c3 == pytest.approx(0.5 + math.sqrt(15) / 10, abs=1e-15)
    assert GL_WEIGHTS.sum() == pytest.approx(1.0, abs=1e-16)


@pytest.mark.parametrize("degree", range(6))
def test_gauss_legendre_rule_is_exact_to_degree_five(degree):
    assert np.dot(GL_WEIGHTS, GL_NODES**degree) == pytest.approx(1.0 / (degree + 1), abs=1e-15)


def test_sample_nodes_times():
    P = MathieuProblem(0.0, 1.0)
    s = sample_nodes(P, 0.2, 0.4)
    for M, c in zip((s.M1, s.M2, s.M3), gl_nodes()):
        assert M[0, 0] == pytest.approx(math.cos(2 * (0.2 + 0.4 * c)))


def test_sample_nodes_rejects_zero_step():
    with pytest.raises(ValueError):
        sample_nodes(MathieuProblem(1.0, 1.0), 0.0, 0.0)


def test_sample_steps_matches_single_steps():
    P = HillPascalProblem(3, 1.0)
    batch = sample_steps(P, 0.1, 0.05, 4)
    for n in range(4):
        single = sample_nodes(P, 0.1 + 0.05 * n, 0.05)
        np.testing.assert_allclose(batch.M1[n], single.M1)
        np.testing.assert_allclose(batch.M3[n], single.M3)


def test_combos_vanish_for_autonomous_problem():
    s = sample_nodes(MathieuProblem(2.0, 0.0), 0.0, 0.1)
    led = CostLedger()
    cb = Combos(s, led)
    assert np.all(cb.K == 0) and np.all(cb.L == 0)
    assert led.mm == 0
    assert np.all(cb.F == 0)
    cb.F
    assert led.mm == 1


def test_combos_of_linear_coefficient():
    # M(t) = a t: K = M1 - M3 = -a h sqrt(15)/5, L = 0
    from magsym.problems import CallableProblem

    P = CallableProblem(1, dense_fn=lambda t: np.array([[3.0 * t]]))
    cb = Combos(sample_nodes(P, 1.0, 0.2))
    assert cb.K[0, 0] == pytest.approx(-3.0 * 0.2 * math.sqrt(15) / 5)
    assert cb.L[0, 0] == pytest.approx(0.0, abs=1e-14)


def test_block_op_matches_dense_algebra():
    rng = np.random.default_rng(0)
    r = 2
    blocks = [rng.standard_normal((r, r)) for _ in range(4)]
    A = BlockOp(r, blocks[0], None, blocks[1], blocks[2])
    B = BlockOp(r, None, blocks[3], blocks[0], None)
    Ad, Bd = A.to_dense(), B.to_dense()
    np.testing.assert_allclose((A @ B).to_dense(), Ad @ Bd)
    np.testing.assert_allclose(A.commutator(B).to_dense(), Ad @ Bd - Bd @ Ad)
    np.testing.assert_allclose((2.0 * A - B).to_dense(), 2 * Ad - Bd)


@given(st.floats(0.1, 5.0), st.floats(0.01, 0.5))
def test_omega6_is_exact_for_autonomous_problem(omega, h):
    s = sample_nodes(MathieuProblem(omega, 0.0), 0.0, h)
    np.testing.assert_allclose(omega6(s).to_dense(), h * np.array([[0, 1], [-omega**2, 0]]), atol=1e-14)
    np.testing.assert_allclose(omega6_oracle(s), harmonic_propagator(omega, h), atol=1e-13)


def test_alphas_structure():
    s = sample_nodes(MathieuProblem(1.0, 1.0), 0.0, 0.1)
    a1, a2, a3 = alphas(s)
    assert a2.ul is None and a2.ur is None and a2.lr is None
    assert a3.ll[0, 0] == pytest.approx(-(10 * 0.1 / 3) * (s.M3 - 2 * s.M2 + s.M1)[0, 0])


def test_omega6_oracle_converges_to_true_propagator():
    P = MathieuProblem(1.0, 1.0)
    errs = []
    for h in (0.2, 0.1):
        # a fine reference for one step
        n = 4096
        Y = np.eye(2)
        for k in range(n):
            t = k * h / n
            A = np.array([[0, 1], [-(1 + math.cos(2 * (t + h / (2 * n)))), 0]])
            Y = scipy.linalg.expm(h / n * A) @ Y
        errs.append(l1_norm(omega6_oracle(sample_nodes(P, 0.0, h)) - Y))
    # local error of a sixth-order method is O(h^7); the midpoint reference adds O(h^3/n^2)
    assert errs[0] / errs[1] > 60


def test_oracle_refuses_large_or_batched_input():
    with pytest.raises(ValueError):
        omega6_oracle(sample_steps(MathieuProblem(1.0, 1.0), 0.0, 0.1, 2))
    with pytest.raises(ValueError):
        omega6_oracle(sample_nodes(HillPascalProblem(65, 0.0), 0.0, 1e-3))


def test_reference_solution_matches_harmonic_closed_form():
    clear_reference_cache()
    ref = reference_solution(MathieuProblem(1.5, 0.0), 0.0, 2.0)
    np.testing.assert_allclose(ref, harmonic_propagator(1.5, 2.0), atol=1e-12)


def test_reference_solution_state_mode():
    P = MathieuProblem(1.5, 0.0)
    z = reference_solution(P, 0.0, 1.0, state=PhasePoint([1.0], [0.0]))
    assert isinstance(z, PhasePoint)
    expect = harmonic_propagator(1.5, 1.0) @ np.array([1.0, 0.0])
    np.testing.assert_allclose([z.q[0], z.p[0]], expect, atol=1e-12)


def test_reference_solution_is_cached():
    clear_reference_cache()
    P = MathieuProblem(1.0, 1.0)
    a = reference_solution(P, 0.0, 1.0)
    a[0, 0] = 99.0
    b = reference_solution(P, 0.0, 1.0)
    assert b[0, 0] != 99.0


def test_reference_solution_reports_non_convergence():
    with pytest.raises(ReferenceConvergenceError) as info:
        reference_solution(MathieuProblem(1.0, 1.0), 0.0, math.pi, tolerance=1e-30, max_halvings=2)
    assert len(info.value.history) == 2


def test_reference_solution_rejects_empty_interval():
    with pytest.raises(ValueError):
        reference_solution(MathieuProblem(1.0, 1.0), 1.0, 1.0)
