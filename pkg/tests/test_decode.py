import math

import numpy as np
import pytest

from copula_hmm.decode import (
    closed_form_mixture_loss,
    conditional_misclassification,
    decode_posterior,
    independence_baseline_loss,
    local_decode,
    mixture_misclassification,
    monte_carlo_loss,
    one_minus_two_c_half,
    symmetric_mixture_model,
    zero_one_loss,
)
from copula_hmm.model import simulate

from conftest import frank_k2_model


def test_decode_ties_go_to_lower_state():
    u = np.array([[0.5, 0.2], [0.5, 0.8]])
    assert decode_posterior(u).tolist() == [1, 2]


def test_zero_one_loss_label_matching():
    truth = np.array([1, 1, 2, 2, 3, 3])
    pred = np.array([2, 2, 3, 3, 1, 1])
    rep = zero_one_loss(pred, truth)
    assert rep.zero_one == 0.0
    assert rep.permutation_used == (3, 1, 2)
    assert np.all(rep.per_state_accuracy == 1.0)
    raw = zero_one_loss(pred, truth, match_labels=False)
    assert raw.zero_one == 1.0


def test_zero_one_loss_against_brute_force():
    rng = np.random.default_rng(0)
    import itertools
    for _ in range(20):
        K = rng.integers(2, 5)
        truth = rng.integers(1, K + 1, 40)
        pred = rng.integers(1, K + 1, 40)
        best = min(np.mean(np.array((0,) + p)[pred] != truth) for p in itertools.permutations(range(1, K + 1)))
        assert zero_one_loss(pred, truth, K=K).zero_one == pytest.approx(best)


def test_zero_one_loss_absent_state_is_nan():
    rep = zero_one_loss([1, 1, 2], [1, 1, 1], K=3)
    assert np.isnan(rep.per_state_accuracy[1]) and np.isnan(rep.per_state_accuracy[2])
    with pytest.raises(ValueError):
        zero_one_loss([1, 2], [1])


def test_closed_form_values():
    assert closed_form_mixture_loss("FGM", 1.0) == 0.375
    assert closed_form_mixture_loss("Gauss", 1e-300) == pytest.approx(0.5)
    th = 7.0
    assert closed_form_mixture_loss("Frank", th) == pytest.approx(0.5 - (2 / th) * math.log(math.cosh(th / 4)), abs=1e-14)
    assert closed_form_mixture_loss("Frank", 1e6) == pytest.approx(0.0, abs=1e-5)
    with pytest.raises(ValueError):
        closed_form_mixture_loss("Clayton", 1.0)


def test_local_decode_on_separated_states_is_accurate():
    m = frank_k2_model()
    traj = simulate(m, 500, np.random.default_rng(1))
    rep = zero_one_loss(local_decode(m, traj), traj.labels)
    assert rep.zero_one < 0.1


def test_monte_carlo_loss_is_seed_reproducible_and_matches_closed_form():
    m = symmetric_mixture_model("Frank", 10.0)
    a = monte_carlo_loss(m, 100, 100, 42)
    b = monte_carlo_loss(m, 100, 100, 42)
    assert a == b
    assert abs(a[0] - closed_form_mixture_loss("Frank", 10.0)) < 4 * a[1]


def test_independence_baseline_is_chance_for_the_symmetric_mixture():
    m = symmetric_mixture_model("Gauss", 0.8)
    (lt, st), (li, si) = independence_baseline_loss(m, None, 100, 100, 3)
    assert abs(li - 0.5) < 4 * si + 0.01
    assert lt < li


def test_mixture_misclassification_matches_closed_form():
    m = symmetric_mixture_model("FGM", 1.0)
    mean, se = mixture_misclassification(m, 1, 40000, np.random.default_rng(4))
    assert abs(mean - 0.375) < 4 * se


def test_conditional_misclassification_bounded():
    m = frank_k2_model()
    mean, se = conditional_misclassification(m, 1, 200, 10, 5)
    assert 0 <= mean < 0.2 and se >= 0


def test_one_minus_two_c_half_frank():
    assert one_minus_two_c_half("Frank", 5.0) == pytest.approx(closed_form_mixture_loss("Frank", 5.0), abs=1e-12)
