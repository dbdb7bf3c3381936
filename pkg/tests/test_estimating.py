import numpy as np
import pytest

from copula_hmm import CopulaHmm
from copula_hmm.eifm import FitConfig, fit
from copula_hmm.estimating import (
    estimating_function_psi,
    g_system,
    gauss_seidel_spectral_radius,
    general_posteriors,
    non_gem_copula_terms,
    numerical_jacobian,
    psi_jacobian,
    spectral_radius_power,
)
from copula_hmm.fb import forward_backward
from copula_hmm.model import from_vector, simulate, to_vector

from conftest import frank_k2_model


@pytest.fixture(scope="module")
def converged():
    m = frank_k2_model()
    traj = simulate(m, 60, np.random.default_rng(0))
    _, trace, _ = fit(traj, m, FitConfig(max_iterations=5000, tolerance=1e-15, param_tolerance=1e-11))
    est = from_vector(m, trace.parameters[-1])
    return est, traj, forward_backward(est, traj)


def test_general_posteriors_match_forward_backward():
    m = frank_k2_model()
    traj = simulate(m, 40, np.random.default_rng(1))
    u, v = general_posteriors(m, traj)
    post = forward_backward(m, traj)
    assert np.allclose(u, post.u_hat, atol=1e-13)
    assert np.allclose(v, post.v_hat, atol=1e-13)


def test_psi_vanishes_at_eifm_fixed_point(converged):
    est, traj, _ = converged
    assert np.max(np.abs(estimating_function_psi(est, traj))) < 1e-6


def test_psi_is_additive_over_trajectories():
    m = frank_k2_model()
    rng = np.random.default_rng(2)
    a, b = simulate(m, 30, rng), simulate(m, 25, rng)
    both = estimating_function_psi(m, [a, b])
    assert np.allclose(both, estimating_function_psi(m, a) + estimating_function_psi(m, b))


def test_numerical_jacobian_of_known_map():
    fn = lambda x: np.array([x[0] ** 2 * x[1], np.sin(x[1])])  # noqa: E731
    x = np.array([1.3, 0.4])
    J = numerical_jacobian(fn, x)
    assert np.allclose(J, [[2 * 1.3 * 0.4, 1.3 ** 2], [0, np.cos(0.4)]], atol=1e-8)
    # one-sided branch near a limit
    J2 = numerical_jacobian(fn, x, lower=np.array([1.3, -np.inf]), upper=np.array([np.inf, np.inf]))
    assert np.allclose(J2, J, atol=1e-7)


def test_psi_jacobian_shape():
    m = frank_k2_model()
    traj = simulate(m, 80, np.random.default_rng(3))
    J = psi_jacobian(m, traj)
    p = to_vector(m).size
    assert J.shape == (p, p)
    assert np.all(np.isfinite(J))


def test_psi_jacobian_single_state_closed_form():
    # with K = 1 every posterior is 1, so the mean/sd block is the Gaussian score derivative
    m = frank_k2_model()
    one = CopulaHmm([1.0], [[1.0]], [m.states[0]])
    traj = simulate(one, 200, np.random.default_rng(4))
    J = psi_jacobian(one, traj)
    y = traj.observations[:, 0]
    mu, sd = one.states[0].margins[0].params
    T = traj.T
    assert J[2, 2] == pytest.approx(-T / sd**2, rel=1e-7)
    assert J[2, 3] == pytest.approx(-2 * np.sum(y - mu) / sd**3, rel=1e-6)
    assert J[3, 3] == pytest.approx(T / sd**2 - 3 * np.sum((y - mu) ** 2) / sd**4, rel=1e-6)


def test_g_system_zero_at_fixed_point(converged):
    est, traj, post = converged
    xi = np.concatenate([post.u_hat.ravel(), post.v_hat.ravel(), to_vector(est)])
    assert np.max(np.abs(g_system(xi, est, traj))) < 1e-6


def test_spectral_diagnostic(converged):
    est, traj, post = converged
    diag = gauss_seidel_spectral_radius(est, post, traj)
    assert diag.unit_diagonal_ok and not diag.singular
    assert 0 <= diag.radius < 1
    assert diag.radius == pytest.approx(diag.radius_power_iteration, rel=1e-6)


def test_power_iteration_on_known_matrix():
    M = np.array([[0.5, 1.0], [0.0, -0.8]])
    assert spectral_radius_power(M) == pytest.approx(0.8, rel=1e-8)


def test_non_gem_copula_term_decreases():
    before, after = non_gem_copula_terms(2.0, 2.0, 0.5)
    assert after < before
    # the term is log(1 + theta (1 - 2 F1)(1 - 2 F2)) with F = 1 - e^{-lambda y}
    f_before = 1 - np.exp(-2.0)
    f_after = 1 - np.exp(-1.0)
    assert before == pytest.approx(np.log1p(0.5 * (1 - 2 * f_before) ** 2), rel=1e-12)
    assert after == pytest.approx(np.log1p(0.5 * (1 - 2 * f_after) ** 2), rel=1e-12)
