import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from magsym.problems import (
    CallableProblem,
    HillPascalProblem,
    MathieuProblem,
    WaveProblem,
    hill_eval,
    mathieu_eval,
    pascal_matrix,
    wave_analytic_g0,
    wave_discretize,
    wave_initial_state,
)


def test_pascal_matrix_small():
    expect = np.array([[1, 1, 1, 1], [1, 2, 3, 4], [1, 3, 6, 10], [1, 4, 10, 20]], dtype=float)
    np.testing.assert_array_equal(pascal_matrix(4), expect)


@pytest.mark.parametrize("r", [1, 2, 5, 7])
def test_pascal_entries_are_binomials(r):
    D = pascal_matrix(r)
    for i in range(r):
        for j in range(r):
            assert D[i, j] == math.comb(i + j, i)


def test_pascal_rejects_empty():
    with pytest.raises(ValueError):
        pascal_matrix(0)


@given(st.floats(-10, 10), st.floats(-5, 5), st.floats(-20, 20))
def test_mathieu_eval(omega, eps, t):
    assert mathieu_eval(omega, eps, t)[0, 0] == pytest.approx(omega**2 + eps * math.cos(2 * t))


def test_mathieu_problem_fields():
    P = MathieuProblem(2.0, 0.5)
    assert P.dim == 1
    assert P.period == math.pi
    assert P.spectral_radius() == 4.5
    assert P.dense_many([0.0, 1.0]).shape == (2, 1, 1)


@pytest.mark.parametrize("r", [3, 5])
def test_hill_matrix_is_symmetric_positive_definite(r):
    P = HillPascalProblem(r, float(r))
    A = P.A
    np.testing.assert_array_equal(A, A.T)
    assert np.linalg.eigvalsh(A).min() > 0
    np.testing.assert_allclose(P.dense(0.0), A + 1.1 * r * np.eye(r))
    np.testing.assert_allclose(P.dense(math.pi / 4), A + (-0.1 * r) * np.eye(r), atol=1e-12)


def test_hill_eval_stack_matches_single():
    A = pascal_matrix(3) + 9 * np.eye(3)
    ts = np.array([0.1, 0.7])
    stack = hill_eval(A, 2.0, ts)
    for t, M in zip(ts, stack):
        np.testing.assert_allclose(M, hill_eval(A, 2.0, t))


def test_hill_spectral_radius_bounds_all_times():
    P = HillPascalProblem(5, 5.0)
    rho = P.spectral_radius()
    for t in np.linspace(0, math.pi, 17):
        assert np.max(np.abs(np.linalg.eigvalsh(P.dense(t)))) <= rho


def test_wave_grid_and_spacing():
    W = WaveProblem(n_grid=8, x0=-1.0, xN=1.0)
    assert W.dx == 0.25
    np.testing.assert_allclose(W.grid, -1.0 + 0.25 * np.arange(8))


@pytest.mark.parametrize("bad", [dict(n_grid=2), dict(x0=1.0, xN=0.0), dict(disc="fd4"), dict(n_grid=100)])
def test_wave_config_validation(bad):
    with pytest.raises(ValueError):
        WaveProblem(**bad)


@pytest.mark.parametrize("m", [1, 3, 10])
def test_spectral_second_derivative_of_fourier_mode(m):
    W = WaveProblem(n_grid=64, eps=0.0)
    D = wave_discretize(W)
    k = 2 * math.pi * m / (W.xN - W.x0)
    v = np.cos(k * W.grid)
    np.testing.assert_allclose(D.second_derivative(v), -k * k * v, atol=1e-9 * k * k)


def test_fd2_second_derivative_symbol():
    W = WaveProblem(n_grid=64, eps=0.0, disc="fd2")
    D = wave_discretize(W)
    k = 2 * math.pi * 3 / (W.xN - W.x0)
    v = np.cos(k * W.grid)
    symbol = (2 * math.cos(k * W.dx) - 2) / W.dx**2
    np.testing.assert_allclose(D.second_derivative(v), symbol * v, atol=1e-10)


@pytest.mark.parametrize("disc", ["spectral", "fd2"])
def test_wave_operator_is_symmetric_and_consistent(disc):
    D = wave_discretize(WaveProblem(n_grid=32, disc=disc))
    M = D.dense(0.3)
    np.testing.assert_allclose(M, M.T, atol=1e-12)
    v = np.random.default_rng(1).standard_normal(32)
    np.testing.assert_allclose(D.apply(0.3, v), M @ v, atol=1e-9)
    ts, w = [0.1, 0.2, 0.3], [0.2, -0.5, 0.9]
    expect = sum(wi * D.dense(t) for t, wi in zip(ts, w)) @ v
    np.testing.assert_allclose(D.apply_combined(ts, w, v), expect, atol=1e-9)
    stack = D.dense_many([0.1, 0.3])
    np.testing.assert_allclose(stack[1], M)


def test_wave_ground_state_is_eigenvector():
    # -u'' + x^2 u = u for u = exp(-x^2/2)
    W = WaveProblem(n_grid=128, eps=0.0)
    D = wave_discretize(W)
    v = wave_initial_state(W).q
    assert np.max(np.abs(D.apply(0.0, v) - v)) < 1e-10


def test_wave_spectral_radius_bounds_operator():
    D = wave_discretize(WaveProblem(n_grid=32))
    for t in (0.0, 1.0, math.pi):
        assert np.max(np.abs(np.linalg.eigvalsh(D.dense(t)))) <= D.spectral_radius() * (1 + 1e-12)


def test_wave_analytic_solution_at_zero_and_quarter_period():
    W = WaveProblem(eps=0.0)
    np.testing.assert_allclose(wave_analytic_g0(W, 0.0), np.exp(-W.grid**2 / 2))
    np.testing.assert_allclose(wave_analytic_g0(W, math.pi / 2), 0.0, atol=1e-16)


def test_wave_perturbation_factor():
    W = WaveProblem(delta=2.0, eps=0.5)
    assert W.g(math.pi / 2) == pytest.approx(-0.5)


def test_callable_problem_requires_an_evaluator():
    with pytest.raises(ValueError):
        CallableProblem(2)


def test_callable_problem_operator_only():
    P = CallableProblem(2, apply_fn=lambda t, v: 2.0 * v, rho=2.0)
    assert not P.has_dense and not P.has_combined
    np.testing.assert_allclose(P.apply_combined([0.0, 1.0], [0.25, 0.5], np.ones(2)), 1.5 * np.ones(2))
    with pytest.raises(NotImplementedError):
        P.dense(0.0)


def test_cache_keys_distinguish_parameters():
    assert MathieuProblem(1.0, 1.0).cache_key != MathieuProblem(1.0, 0.5).cache_key
    assert HillPascalProblem(5, 5.0).cache_key != HillPascalProblem(5, 0.5).cache_key
    a = wave_discretize(WaveProblem(eps=0.5)).cache_key
    b = wave_discretize(WaveProblem(eps=0.0)).cache_key
    assert a != b
