import numpy as np
import pytest
from scipy import integrate, optimize, stats

from copula_hmm.margins import (
    DegenerateDataError,
    MarginalSpec,
    marginal_cdf,
    marginal_logpdf,
    marginal_pdf,
    marginal_quantile,
    marginal_score,
    weighted_mle,
)

SPECS = [MarginalSpec.gaussian(1.5, 0.7), MarginalSpec.exponential(2.5)]


def test_against_scipy():
    y = np.linspace(0.01, 4, 50)
    g, e = SPECS
    assert np.allclose(marginal_logpdf(g, y), stats.norm(1.5, 0.7).logpdf(y), rtol=1e-13)
    assert np.allclose(marginal_cdf(g, y), stats.norm(1.5, 0.7).cdf(y), rtol=1e-13)
    assert np.allclose(marginal_logpdf(e, y), stats.expon(scale=1 / 2.5).logpdf(y), rtol=1e-13)
    assert np.allclose(marginal_cdf(e, y), stats.expon(scale=1 / 2.5).cdf(y), rtol=1e-13)


@pytest.mark.parametrize("spec", SPECS, ids=["gauss", "exp"])
def test_pdf_integrates_and_quantile_inverts_cdf(spec):
    f = lambda y: float(marginal_pdf(spec, y))  # noqa: E731
    total = integrate.quad(f, -np.inf, 0.0)[0] + integrate.quad(f, 0.0, np.inf)[0]
    assert total == pytest.approx(1.0, abs=1e-8)
    p = np.linspace(0.01, 0.99, 21)
    assert np.allclose(marginal_cdf(spec, marginal_quantile(spec, p)), p, atol=1e-13)


def test_exponential_support():
    e = SPECS[1]
    assert marginal_logpdf(e, -1.0) == -np.inf
    assert marginal_cdf(e, -1.0) == 0.0


@pytest.mark.parametrize("spec", SPECS, ids=["gauss", "exp"])
def test_score_is_gradient(spec):
    y = np.array([0.2, 1.0, 2.7])
    params = np.array(spec.params)
    for i in range(spec.n_params):
        h = 1e-6
        up, dn = params.copy(), params.copy()
        up[i] += h
        dn[i] -= h
        fd = (marginal_logpdf(MarginalSpec(spec.family, tuple(up)), y)
              - marginal_logpdf(MarginalSpec(spec.family, tuple(dn)), y)) / (2 * h)
        assert np.allclose(marginal_score(spec, y)[:, i], fd, rtol=1e-7)


def test_weighted_mle_matches_numeric_optimum():
    rng = np.random.default_rng(0)
    y = rng.normal(2.0, 1.3, 300)
    w = rng.uniform(size=300)
    est = weighted_mle("Gaussian", w, y)

    def nll(p):
        return -np.dot(w, stats.norm(p[0], np.exp(p[1])).logpdf(y))

    res = optimize.minimize(nll, [0.0, 0.0], method="BFGS", options={"gtol": 1e-10})
    assert est.params[0] == pytest.approx(res.x[0], abs=1e-6)
    assert est.params[1] == pytest.approx(np.exp(res.x[1]), abs=1e-6)


def test_weighted_mle_degenerate():
    with pytest.raises(DegenerateDataError):
        weighted_mle("Gaussian", np.zeros(5), np.arange(5.0))
    with pytest.raises(DegenerateDataError):
        weighted_mle("Gaussian", np.ones(5), np.full(5, 3.0))
    with pytest.raises(DegenerateDataError):
        weighted_mle("Exponential", np.ones(3), np.array([1.0, -1.0, 2.0]))
    with pytest.raises(ValueError):
        weighted_mle("Gaussian", -np.ones(3), np.arange(3.0))


def test_invalid_parameters():
    with pytest.raises(ValueError):
        MarginalSpec.gaussian(0.0, 0.0)
    with pytest.raises(ValueError):
        MarginalSpec.exponential(-1.0)
    with pytest.raises(ValueError):
        MarginalSpec("Gaussian", (1.0,))
