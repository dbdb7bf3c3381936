import numpy as np
import pytest

from copula_hmm.copulas import CopulaSpec, Family, copula_sample
from copula_hmm.gof import cvm_statistic, fit_pseudo_likelihood, pseudo_observations, select_family


def test_pseudo_observations_average_ranks():
    x = np.array([[3.0, 1.0], [1.0, 1.0], [2.0, 5.0]])
    p = pseudo_observations(x)
    assert np.allclose(p[:, 0], [3, 1, 2] / np.float64(4))
    assert np.allclose(p[:, 1], [1.5, 1.5, 3] / np.float64(4))


def test_cvm_statistic_against_direct_double_loop():
    rng = np.random.default_rng(0)
    u = pseudo_observations(copula_sample(CopulaSpec(Family.CLAYTON, 2.0), 120, rng))
    stat, theta = cvm_statistic(u, Family.CLAYTON, theta=2.0)
    from copula_hmm.copulas import copula_cdf
    emp = np.array([np.mean((u[:, 0] <= a) & (u[:, 1] <= b)) for a, b in u])
    direct = np.sum((emp - copula_cdf(CopulaSpec(Family.CLAYTON, 2.0), u)) ** 2)
    assert stat == pytest.approx(direct, rel=1e-12)
    assert theta == 2.0


def test_pseudo_likelihood_recovers_theta():
    rng = np.random.default_rng(1)
    x = copula_sample(CopulaSpec(Family.GUMBEL, 2.0), 3000, rng)
    th = fit_pseudo_likelihood(Family.GUMBEL, pseudo_observations(x))
    assert th == pytest.approx(2.0, abs=0.15)


@pytest.mark.parametrize("truth", [CopulaSpec(Family.CLAYTON, 3.0), CopulaSpec(Family.GUMBEL, 2.5),
                                   CopulaSpec(Family.FRANK, -8.0)],
                         ids=["clayton", "gumbel", "frank-negative"])
def test_select_family_picks_generator(truth):
    x = copula_sample(truth, 3000, np.random.default_rng(2))
    sel = select_family(x, ["Frank", "Clayton", "Gumbel", "Gauss"] if truth.theta > 0 else ["Frank", "Gauss", "FGM"])
    assert sel.family is truth.family


def test_select_family_reports_unfittable_candidates():
    x = copula_sample(CopulaSpec(Family.FRANK, -10.0), 500, np.random.default_rng(3))
    sel = select_family(x, ["Frank", "Clayton"])
    assert sel.family is Family.FRANK
    assert Family.CLAYTON in sel.statistics
    with pytest.raises(ValueError):
        select_family(x, [])
