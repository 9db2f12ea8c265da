import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from decsvm.refsolver import (
    PenaltySpec, SolveOptions, empirical_loss_grad, gram_lambda_max, lambda_max,
    objective, smooth_lipschitz, soft_threshold, solve_csvm, solve_path,
)
from decsvm.smoothing import SmoothedHingeLoss

from oracles import brute_force_min, small_problem


def test_soft_threshold_examples():
    np.testing.assert_array_equal(soft_threshold([2.5], 1), [1.5])
    np.testing.assert_array_equal(soft_threshold([0.5, -0.5], 1), [0, 0])
    np.testing.assert_array_equal(soft_threshold([-2, 3, 0], 0), [-2, 3, 0])
    np.testing.assert_array_equal(soft_threshold([1.0, -3.0], np.array([2.0, 1.0])), [0, -2])


@settings(max_examples=100, deadline=None)
@given(v=st.floats(-10, 10), t=st.floats(0, 5))
def test_soft_threshold_is_prox(v, t):
    grid = np.linspace(-12, 12, 240001)
    obj = 0.5 * (grid - v) ** 2 + t * np.abs(grid)
    assert soft_threshold([v], t)[0] == pytest.approx(grid[np.argmin(obj)], abs=2e-4)


def test_penalty_spec():
    with pytest.raises(ValueError):
        PenaltySpec(-1.0)
    with pytest.raises(ValueError):
        PenaltySpec(1.0, -0.1)
    pen = PenaltySpec.free_intercept(0.5, 0.0, 3)
    assert pen.value(np.array([10.0, 1.0, -1.0])) == pytest.approx(1.0)
    assert PenaltySpec(0.5, 2.0).value(np.array([1.0, -1.0])) == pytest.approx(0.5 * 2 * 2 + 1.0)
    with pytest.raises(ValueError):
        SolveOptions(SmoothedHingeLoss("gaussian", 1), PenaltySpec(0), tol=0)


def test_loss_grad_at_zero():
    X, y, loss = small_problem(0)
    val, g = empirical_loss_grad(X, y, np.zeros(3), loss)
    assert val == pytest.approx(float(loss.value(0.0)))
    np.testing.assert_allclose(g, float(loss.grad(0.0)) * (y[:, None] * X).mean(0))


def test_loss_grad_finite_difference_single_row():
    loss = SmoothedHingeLoss("gaussian", 0.3)
    X, y = np.array([[1.0, 0.4, -1.2]]), np.array([-1.0])
    beta = np.array([0.2, -0.5, 0.3])
    _, g = empirical_loss_grad(X, y, beta, loss)
    eps = 1e-6
    fd = [(empirical_loss_grad(X, y, beta + eps * e, loss)[0]
           - empirical_loss_grad(X, y, beta - eps * e, loss)[0]) / (2 * eps) for e in np.eye(3)]
    np.testing.assert_allclose(g, fd, atol=1e-6)


def test_loss_grad_far_margin():
    X, y, loss = small_problem(1)
    beta = np.array([0.0, 1e4, 1e4])
    X = X.copy()
    X[:, 1:] = np.abs(X[:, 1:]) * y[:, None]
    val, g = empirical_loss_grad(X, y, beta, loss)
    assert val == pytest.approx(0.0, abs=1e-12) and np.allclose(g, 0)
    with pytest.raises(ValueError):
        empirical_loss_grad(X, y[:-1], beta, loss)


def test_gram_lambda_max():
    X, _, _ = small_problem(2, n=50, p=5)
    assert gram_lambda_max(X) == pytest.approx(np.linalg.eigvalsh(X.T @ X / 50).max(), rel=1e-6)
    # orthogonal columns scaled by 2: X'X/n = diag(4 * norms^2 / n)
    Q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((40, 4)))
    assert gram_lambda_max(2 * Q) == pytest.approx(4 / 40, rel=1e-6)


def test_lambda_max_zeroes_solution():
    X, y, loss = small_problem(3, n=60, p=4)
    top = lambda_max(X, y, loss)
    beta = solve_csvm(X, y, SolveOptions(loss, PenaltySpec(top * 1.0001)))
    assert not beta.any()
    beta = solve_csvm(X, y, SolveOptions(loss, PenaltySpec(top * 0.5)))
    assert beta.any()


@pytest.mark.parametrize("lam", [0.05, 0.2])
def test_matches_brute_force(lam):
    X, y, loss = small_problem(4, n=20, p=2)
    beta = solve_csvm(X, y, SolveOptions(loss, PenaltySpec(lam), tol=1e-10))
    ref_val, ref_b = brute_force_min(X, y, loss, lam)
    val = objective(X, y, beta, loss, PenaltySpec(lam))
    assert val <= ref_val + 1e-9  # the solver is at least as good as the grid
    assert abs(val - ref_val) <= 1e-3
    np.testing.assert_allclose(beta, ref_b, atol=0.05)


def test_duplicated_rows_same_solution():
    X, y, loss = small_problem(5, n=40, p=3)
    opts = SolveOptions(loss, PenaltySpec(0.02), tol=1e-10)
    a = solve_csvm(X, y, opts)
    b = solve_csvm(np.vstack([X, X]), np.concatenate([y, y]), opts)
    np.testing.assert_allclose(a, b, atol=1e-7)


@pytest.mark.parametrize("accelerated", [True, False])
def test_objective_monotone_and_certificate(accelerated):
    X, y, loss = small_problem(6, n=80, p=6)
    lam, lam0 = 0.03, 0.01
    pen = PenaltySpec(lam, lam0)
    beta, info = solve_csvm(X, y, SolveOptions(loss, pen, tol=1e-10, max_iter=100_000,
                                               accelerated=accelerated), return_info=True)
    assert info["converged"]
    hist = np.array(info["objective"])
    assert np.all(np.diff(hist) <= 1e-10)
    _, g = empirical_loss_grad(X, y, beta, loss)
    g = g + lam0 * beta
    zero = beta == 0
    slack = 1e-6
    assert np.all(np.abs(g[zero]) <= lam + slack)
    assert np.all(np.abs(g[~zero] + lam * np.sign(beta[~zero])) <= slack)


def test_solve_path_warm_start_matches_cold():
    X, y, loss = small_problem(7, n=60, p=5)
    lams = np.geomspace(lambda_max(X, y, loss), 1e-3, 6)
    path = solve_path(X, y, loss, lams, tol=1e-10)
    for lam, b in zip(lams, path):
        cold = solve_csvm(X, y, SolveOptions(loss, PenaltySpec(lam), tol=1e-10))
        np.testing.assert_allclose(b, cold, atol=1e-6)


def test_smooth_lipschitz():
    X, _, loss = small_problem(8, n=30, p=3)
    expected = 1.001 * loss.lipschitz_constant * np.linalg.eigvalsh(X.T @ X / 30).max()
    assert smooth_lipschitz(X, loss) == pytest.approx(expected, rel=1e-5)


def test_nonfinite_input_raises():
    X, y, loss = small_problem(9)
    X = X.copy()
    X[0, 1] = np.nan
    with pytest.raises(FloatingPointError):
        solve_csvm(X, y, SolveOptions(loss, PenaltySpec(0.1), step=1.0))
