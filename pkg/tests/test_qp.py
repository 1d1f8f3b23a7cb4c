import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import enumerate_dual, random_psd
from svmdsp.core import (ConvergenceError, EpsHuberParams, IllConditionedError,
                         InvalidInputError, residual_to_multiplier)
from svmdsp import qp
from svmdsp.qp import (DualProblem, GramMatrix, dual_objective, kkt_violation,
                       real_representation, solve, solve_complex, solve_gram, solve_real)


def problem(K, y, eps=0.0, delta=1.0, C=1.0):
    return DualProblem(GramMatrix(K), y, EpsHuberParams(eps, delta, C))


def test_scalar_closed_form():
    sol = solve_real(problem([[1.0]], [1.0], 0.0, 0.1, 100.0))
    assert sol.multipliers[0] == pytest.approx(1 / 1.1, abs=1e-9)


def test_dead_zone_gives_zero():
    rng = np.random.default_rng(0)
    K = random_psd(rng, 5)
    y = rng.uniform(-0.9, 0.9, 5)
    sol = solve_real(problem(K, y, eps=1.0))
    np.testing.assert_array_equal(sol.multipliers, 0.0)
    assert sol.n_support == 0


def test_identity_gram_box_example():
    # delta must be positive; a negligible value stands in for zero
    sol = solve_real(problem(np.eye(3), [2.0, -2.0, 0.5], eps=1.0, delta=1e-12, C=0.3))
    np.testing.assert_allclose(sol.multipliers, [0.3, -0.3, 0.0], atol=1e-10)


def test_matches_oracle_on_random_problems():
    rng = np.random.default_rng(42)
    for _ in range(40):
        n = int(rng.integers(1, 7))
        K = random_psd(rng, n, int(rng.integers(1, n + 1)))
        y = rng.normal(0, 2, n)
        eps, delta, C = rng.uniform(0, 1), 10 ** rng.uniform(-3, 1), 10 ** rng.uniform(-1, 1)
        sol = solve_real(problem(K, y, eps, delta, C))
        _, best = enumerate_dual(K, y, eps, delta, C)
        assert sol.dual_objective == pytest.approx(best, abs=1e-6)


def test_ls_limit():
    rng = np.random.default_rng(3)
    K = random_psd(rng, 8)
    y = rng.normal(size=8)
    sol = solve_real(problem(K, y, 0.0, 0.5, 1e6))
    np.testing.assert_allclose((K + 0.5 * np.eye(8)) @ sol.multipliers, y, rtol=1e-5, atol=1e-7)


def test_saturation_and_multiplier_map():
    rng = np.random.default_rng(5)
    K = random_psd(rng, 12)
    y = rng.normal(0, 3, 12)
    loss = EpsHuberParams(0.3, 0.2, 0.5)
    sol = solve_real(DualProblem(GramMatrix(K), y, loss))
    e = y - K @ sol.multipliers
    big = np.abs(e) > loss.corner
    assert np.allclose(np.abs(sol.multipliers[big]), loss.cost_cap, atol=1e-8)
    np.testing.assert_allclose(sol.multipliers, residual_to_multiplier(e, loss), atol=1e-6)


def test_support_non_increasing_in_eps():
    rng = np.random.default_rng(7)
    K = random_psd(rng, 20)
    y = rng.normal(0, 1, 20)
    counts = [solve_real(problem(K, y, e, 0.1, 1.0)).n_support for e in np.linspace(0, 2, 9)]
    assert all(a >= b for a, b in zip(counts, counts[1:]))


def test_deterministic():
    rng = np.random.default_rng(9)
    K = random_psd(rng, 30, 5)
    y = rng.normal(size=30)
    a = solve_real(problem(K, y, 0.1, 1e-3, 10.0)).multipliers
    b = solve_real(problem(K, y, 0.1, 1e-3, 10.0)).multipliers
    assert a.tobytes() == b.tobytes()


def test_ill_conditioned_low_rank_converges():
    rng = np.random.default_rng(1)
    V = rng.normal(size=(200, 3))
    K = V @ V.T
    y = V @ np.array([1.0, -2.0, 0.5]) + rng.normal(0, 0.01, 200)
    dp = problem(K, y, 0.0, 1e-6, 1e6)
    sol = solve_real(dp)
    assert kkt_violation(dp, sol) <= 1e-8 * (np.max(np.abs(y)) + 1) * 10


def test_non_psd_rejected():
    with pytest.raises(IllConditionedError):
        solve_real(problem([[1.0, 3.0], [3.0, 1.0]], [1.0, 1.0], delta=0.1))


def test_convergence_error_carries_best(monkeypatch):
    # disable the active-set phase so only the capped coordinate sweeps run
    monkeypatch.setattr(qp, "_refine_active_set", lambda *a: np.inf)
    rng = np.random.default_rng(2)
    K = random_psd(rng, 40, 5)
    y = rng.normal(size=40)
    with pytest.raises(ConvergenceError) as info:
        solve_real(problem(K, y, 0.0, 1e-4, 100.0), max_sweeps=1)
    assert info.value.best is not None


def test_kkt_examples():
    dp = problem(np.eye(2), [3.0, 0.0], 0.0, 1.0, 100.0)
    assert kkt_violation(dp, np.zeros(2)) > 0
    sol = solve_real(dp, tol=1e-8)
    assert kkt_violation(dp, sol) <= 1e-8
    bumped = np.array(sol.multipliers) + np.array([0.1, 0.0])
    assert kkt_violation(dp, bumped) == pytest.approx(0.1 * 2.0)
    with pytest.raises(InvalidInputError):
        kkt_violation(dp, np.zeros(3))


def test_problem_validation():
    with pytest.raises(InvalidInputError):
        problem(np.eye(2), [1.0, 2.0, 3.0])
    with pytest.raises(InvalidInputError):
        GramMatrix(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(InvalidInputError):
        GramMatrix(np.eye(2), "unknown")


def test_complex_real_targets_match_real_solver():
    rng = np.random.default_rng(11)
    K = random_psd(rng, 6)
    y = rng.normal(size=6)
    r = solve_real(problem(K, y, 0.1, 0.1, 1.0)).multipliers
    z = solve_complex(problem(K, y.astype(complex), 0.1, 0.1, 1.0)).multipliers
    np.testing.assert_allclose(z.real, r, atol=1e-9)
    np.testing.assert_allclose(z.imag, 0.0, atol=1e-12)


def test_complex_rotation_by_j():
    rng = np.random.default_rng(12)
    K = random_psd(rng, 5)
    y = rng.normal(size=5) + 1j * rng.normal(size=5)
    a = solve(problem(K, y, 0.0, 0.2, 0.8)).multipliers
    b = solve(problem(K, 1j * y, 0.0, 0.2, 0.8)).multipliers
    np.testing.assert_allclose(b, 1j * a, atol=1e-9)


def test_complex_ls_limit():
    rng = np.random.default_rng(13)
    A = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    K = A @ A.conj().T
    y = rng.normal(size=2) + 1j * rng.normal(size=2)
    sol = solve_complex(problem(K, y, 0.0, 0.1, 1e6))
    np.testing.assert_allclose(sol.multipliers, np.linalg.solve(K + 0.1 * np.eye(2), y),
                               rtol=1e-7)


def test_complex_box_bounds():
    rng = np.random.default_rng(14)
    A = rng.normal(size=(8, 3)) + 1j * rng.normal(size=(8, 3))
    K = A @ A.conj().T
    y = 5 * (rng.normal(size=8) + 1j * rng.normal(size=8))
    sol = solve_complex(problem(K, y, 0.1, 0.01, 0.3))
    assert np.all(np.abs(sol.multipliers.real) <= 0.3 + 1e-15)
    assert np.all(np.abs(sol.multipliers.imag) <= 0.3 + 1e-15)


def test_real_representation_acts_like_complex_matrix():
    rng = np.random.default_rng(15)
    M = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    v = rng.normal(size=3) + 1j * rng.normal(size=3)
    out = real_representation(M) @ np.concatenate([v.real, v.imag])
    np.testing.assert_allclose(out[:3] + 1j * out[3:], M @ v)


def test_solve_gram_wrapper_and_objective():
    sol = solve_gram(np.eye(2), [1.0, -1.0], EpsHuberParams(0.0, 1.0, 10.0))
    np.testing.assert_allclose(sol.multipliers, [0.5, -0.5])
    dp = problem(np.eye(2), [1.0, -1.0], 0.0, 1.0, 10.0)
    assert dual_objective(dp, sol.multipliers) == pytest.approx(sol.dual_objective)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(0, 10_000))
def test_oracle_property(n, seed):
    rng = np.random.default_rng(seed)
    K = random_psd(rng, n)
    y = rng.normal(0, 2, n)
    eps, delta, C = rng.uniform(0, 1), 10 ** rng.uniform(-2, 1), 10 ** rng.uniform(-1, 1)
    sol = solve_real(problem(K, y, eps, delta, C))
    assert sol.dual_objective == pytest.approx(enumerate_dual(K, y, eps, delta, C)[1], abs=1e-6)
