import numpy as np
import pytest
from scipy import optimize

from copula_hmm import CopulaHmm, CopulaSpec, Family, MarginalSpec, StateSpec, Trajectory
from copula_hmm.copulas import copula_sample
from copula_hmm.eifm import (
    CopulaFitError,
    FitConfig,
    StateCollapseError,
    fit,
    fit_multistart,
    ifm_step,
    initialize,
    optimize_copula_theta,
    update_chain,
    weighted_copula_loglik,
)
from copula_hmm.fb import forward_backward, log_likelihood
from copula_hmm.model import simulate, to_vector
from copula_hmm.scenarios import scenario_model

from conftest import frank_k2_model


@pytest.mark.parametrize("family,theta,box", [
    (Family.FRANK, 6.0, (-30, 30)), (Family.FRANK, -3.0, (-30, 30)), (Family.CLAYTON, 2.0, (0.01, 20)),
    (Family.GUMBEL, 1.8, (1.0001, 20)), (Family.JOE, 2.0, (1.0001, 20)), (Family.GAUSS, -0.5, (-0.999, 0.999)),
    (Family.FGM, 0.6, (-1, 1)),
])
def test_copula_optimizer_matches_bounded_scalar_search(family, theta, box):
    rng = np.random.default_rng(0)
    u = copula_sample(CopulaSpec(family, theta), 800, rng)
    w = rng.uniform(0.2, 1.0, 800)
    got = optimize_copula_theta(family, u, w)
    ref = optimize.minimize_scalar(lambda t: -weighted_copula_loglik(family, t, u, w), bounds=box,
                                   method="bounded", options={"xatol": 1e-10})
    assert got == pytest.approx(ref.x, abs=1e-5)
    assert weighted_copula_loglik(family, got, u, w) >= -ref.fun - 1e-9


def test_copula_optimizer_returns_bound_when_score_never_changes_sign():
    u = np.array([[0.1, 0.1], [0.9, 0.9]])
    assert optimize_copula_theta(Family.FGM, u, np.ones(2)) == 1.0
    assert optimize_copula_theta(Family.FRANK, u, np.ones(2), bounds=(-50.0, 50.0)) == 50.0


def test_copula_optimizer_rejects_bad_weights():
    with pytest.raises(CopulaFitError):
        optimize_copula_theta(Family.FRANK, np.full((3, 2), 0.5), np.zeros(3))


def test_frank_theta_stays_away_from_zero():
    rng = np.random.default_rng(1)
    u = rng.uniform(size=(50, 2))
    th = optimize_copula_theta(Family.FRANK, u, np.ones(50))
    assert abs(th) >= 1e-4


def test_update_chain_closed_form():
    m = frank_k2_model()
    traj = simulate(m, 200, np.random.default_rng(2))
    post = forward_backward(m, traj)
    pi, gamma = update_chain(m, [post])
    assert np.allclose(pi, post.u_hat[:, 0])
    counts = post.v_hat.sum(axis=2)
    assert np.allclose(gamma, counts / counts.sum(axis=1, keepdims=True))


def test_ifm_step_margins_are_weighted_moments():
    m = frank_k2_model()
    traj = simulate(m, 300, np.random.default_rng(3))
    post = forward_backward(m, traj)
    new = ifm_step(m, post, traj)
    w = post.u_hat[0] / post.u_hat[0].sum()
    mu = w @ traj.observations[:, 1]
    sd = np.sqrt(w @ (traj.observations[:, 1] - mu) ** 2)
    assert new.states[0].margins[1].params == pytest.approx((mu, sd), rel=1e-12)


def test_fit_improves_likelihood_and_returns_best_iterate():
    m = frank_k2_model()
    traj = simulate(m, 400, np.random.default_rng(4))
    start = CopulaHmm([0.5, 0.5], [[0.6, 0.4], [0.4, 0.6]], [
        StateSpec([MarginalSpec.gaussian(0.5, 1.0), MarginalSpec.gaussian(0.0, 1.0)], CopulaSpec(Family.FRANK, 1.0)),
        StateSpec([MarginalSpec.gaussian(2.0, 1.0), MarginalSpec.gaussian(0.0, 1.0)], CopulaSpec(Family.FRANK, -1.0)),
    ])
    est, trace, post = fit(traj, start, FitConfig(tolerance=1e-8))
    assert trace.converged
    lls = np.array(trace.log_likelihoods)
    assert log_likelihood(est, traj) == pytest.approx(lls.max(), rel=1e-12)
    assert lls.max() >= lls[0]
    assert len(trace.parameters) == len(lls) == len(trace.max_changes)
    assert post.log_likelihood == pytest.approx(lls.max(), rel=1e-12)


def test_fit_recovers_truth_on_long_sequence():
    m = frank_k2_model()
    traj = simulate(m, 20000, np.random.default_rng(5))
    est, trace, _ = fit(traj, m, FitConfig(tolerance=1e-9))
    # pi rests on the single first observation, so it is not consistent in T
    diff = np.abs(to_vector(est) - to_vector(m))[2:]
    assert trace.converged
    assert np.max(diff[:-2]) < 0.05
    assert np.max(diff[-2:]) < 0.5


def test_fit_accepts_several_trajectories():
    m = frank_k2_model()
    rng = np.random.default_rng(6)
    trajs = [simulate(m, 150, rng) for _ in range(3)]
    est, trace, posts = fit(trajs, m, FitConfig(tolerance=1e-7))
    assert len(posts) == 3
    assert np.isfinite(trace.log_likelihoods[trace.best_index])


def test_state_collapse_detected():
    s1 = StateSpec([MarginalSpec.gaussian(0.0, 1.0)], CopulaSpec(Family.INDEPENDENCE))
    s2 = StateSpec([MarginalSpec.gaussian(500.0, 0.1)], CopulaSpec(Family.INDEPENDENCE))
    m = CopulaHmm([1.0, 0.0], [[1.0, 0.0], [0.5, 0.5]], [s1, s2])
    traj = Trajectory(np.random.default_rng(7).normal(size=(50, 1)))
    with pytest.raises(StateCollapseError) as err:
        fit(traj, m)
    assert err.value.state == 2


def test_initialize_produces_valid_model():
    m = scenario_model(1)
    traj = simulate(m, 300, np.random.default_rng(8))
    init = initialize(traj, 3, Family.FRANK, np.random.default_rng(9), n_starts=2)
    assert init.K == 3
    assert all(s.copula.family is Family.FRANK for s in init.states)
    means = sorted(s.margins[0].params[0] for s in init.states)
    assert np.allclose(means, [1, 2, 3], atol=0.3)


def test_initialize_rejects_too_short_series():
    traj = Trajectory(np.zeros((5, 2)) + np.arange(5)[:, None])
    with pytest.raises(ValueError):
        initialize(traj, 3, Family.FRANK, np.random.default_rng(0))


def test_fit_multistart_is_seed_reproducible():
    m = frank_k2_model()
    traj = simulate(m, 200, np.random.default_rng(10))
    a = fit_multistart(traj, 2, Family.FRANK, np.random.default_rng(11), n_starts=2)
    b = fit_multistart(traj, 2, Family.FRANK, np.random.default_rng(11), n_starts=2)
    assert np.array_equal(to_vector(a[0]), to_vector(b[0]))


def test_config_validation():
    with pytest.raises(ValueError):
        FitConfig(max_iterations=0)
    with pytest.raises(ValueError):
        FitConfig(tolerance=0.0)
    assert FitConfig(copula_search_bounds={"Frank": (-5, 5)}).bounds(Family.FRANK) == (-5, 5)
