"""Local decoding, zero-one loss with label matching, and loss oracles."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .copulas import CopulaSpec, Family, copula_cdf
from .fb import forward_backward
from .margins import MarginalSpec
from .model import CopulaHmm, StateSpec, Trajectory, log_densities, simulate, simulate_observations
from ._parallel import replicate_seeds

MAX_PERMUTATION_K = 8
CLOSED_FORM_FAMILIES = (Family.FRANK, Family.GAUSS, Family.FGM)


@dataclass(frozen=True)
class LossReport:
    zero_one: float
    per_state_accuracy: np.ndarray
    permutation_used: tuple  # permutation_used[i] = true label assigned to predicted label i+1


def decode_posterior(u_hat: np.ndarray) -> np.ndarray:
    """Column-wise argmax (1-indexed). ``np.argmax`` returns the first maximum, so ties go to the lower index."""
    return np.argmax(u_hat, axis=0).astype(np.int64) + 1


def local_decode(model: CopulaHmm, traj: Trajectory) -> np.ndarray:
    return decode_posterior(forward_backward(model, traj).u_hat)


def _accuracy(pred: np.ndarray, truth: np.ndarray, K: int) -> np.ndarray:
    acc = np.full(K, np.nan)
    for k in range(1, K + 1):
        mask = truth == k
        if mask.any():
            acc[k - 1] = float(np.mean(pred[mask] == k))
    return acc


def zero_one_loss(predicted, truth, match_labels: bool = True, K: int | None = None) -> LossReport:
    """Zero-one loss, optionally minimised over all relabelings of ``predicted``.

    Per-state accuracy is indexed by the true state; states absent from
    ``truth`` report NaN.
    """
    pred = np.asarray(predicted, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if pred.shape != truth.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {truth.shape}")
    if K is None:
        K = int(max(pred.max(initial=1), truth.max(initial=1)))
    identity = tuple(range(1, K + 1))
    if not match_labels:
        return LossReport(float(np.mean(pred != truth)), _accuracy(pred, truth, K), identity)
    if K > MAX_PERMUTATION_K:
        raise ValueError(f"label matching is limited to K <= {MAX_PERMUTATION_K}")
    # confusion[i, j] = #{t : pred = i+1, truth = j+1}
    confusion = np.zeros((K, K), dtype=np.int64)
    np.add.at(confusion, (pred - 1, truth - 1), 1)
    best_perm, best_hits = identity, -1
    for perm in itertools.permutations(range(K)):
        hits = int(confusion[np.arange(K), perm].sum())
        if hits > best_hits:
            best_perm, best_hits = tuple(p + 1 for p in perm), hits
    mapping = np.array((0,) + best_perm)
    relabeled = mapping[pred]
    return LossReport(1.0 - best_hits / pred.size, _accuracy(relabeled, truth, K), best_perm)


# ---------------------------------------------------------------------------
# Symmetric two-state mixture with closed-form loss
# ---------------------------------------------------------------------------

def closed_form_mixture_loss(family, theta: float) -> float:
    """Expected loss of the equal-weight mixture of ``C_theta`` and ``C_-theta``.

    Frank: 1/2 - (2/theta) log cosh(theta/4); Gauss: arccos(rho)/pi;
    FGM: 1/2 - theta/8. All three equal ``1 - 2 C_theta(1/2, 1/2)``.
    """
    fam = Family.parse(family)
    theta = float(theta)
    if fam not in CLOSED_FORM_FAMILIES:
        raise ValueError(f"no closed-form mixture loss for {fam.value}")
    if not theta >= 0:
        raise ValueError("closed-form mixture loss needs theta >= 0")
    if theta == 0.0:
        return 0.5  # both components are the independence copula
    if fam is Family.FRANK:
        if math.isinf(theta):
            return 0.0
        # -(2/theta) log((1 + e^{-theta/2}) / 2), equal to the log-cosh form
        return -(2.0 / theta) * (math.log1p(math.exp(-theta / 2.0)) - math.log(2.0))
    if fam is Family.GAUSS:
        if theta >= 1.0:
            return 0.0
        return math.acos(theta) / math.pi
    if theta > 1.0:
        raise ValueError("FGM theta must lie in (0, 1]")
    return 0.5 - theta / 8.0


def symmetric_mixture_model(family, theta: float, margin: MarginalSpec | None = None) -> CopulaHmm:
    """Two equally likely states with copulas ``C_theta`` and ``C_-theta`` and shared margins.

    Every transition row is (1/2, 1/2), so the chain is an iid mixture.
    """
    fam = Family.parse(family)
    m = margin or MarginalSpec.gaussian(0.0, 1.0)
    states = [StateSpec([m, m], CopulaSpec(fam, theta)), StateSpec([m, m], CopulaSpec(fam, -theta))]
    return CopulaHmm([0.5, 0.5], np.full((2, 2), 0.5), states)


def _replicate_loss(model: CopulaHmm, decode_models, T: int, seed) -> list[float]:
    rng = np.random.default_rng(seed)
    traj = simulate(model, T, rng)
    return [float(np.mean(local_decode(m, traj) != traj.labels)) for m in decode_models]


def _mc_summary(values: np.ndarray) -> tuple[float, float]:
    n = values.shape[0]
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else float("nan")
    return float(values.mean()), se


def _seeds(rng_or_seed, replicates: int):
    return replicate_seeds(rng_or_seed, replicates)


def monte_carlo_loss(model: CopulaHmm, T: int, replicates: int, rng) -> tuple[float, float]:
    """Mean raw (unmatched) zero-one loss of local decoding under the true model, with its SE."""
    seeds = _seeds(rng, replicates)
    vals = np.array([_replicate_loss(model, [model], T, s)[0] for s in seeds])
    return _mc_summary(vals)


def independence_baseline_loss(model_true: CopulaHmm, model_independent: CopulaHmm | None,
                               T: int, replicates: int, rng):
    """Decode the same simulated data under both models.

    Returns ``((mean, se) true model, (mean, se) independence model)``.
    """
    model_independent = model_independent or model_true.replace_copulas()
    seeds = _seeds(rng, replicates)
    vals = np.array([_replicate_loss(model_true, [model_true, model_independent], T, s) for s in seeds])
    return _mc_summary(vals[:, 0]), _mc_summary(vals[:, 1])


# ---------------------------------------------------------------------------
# Per-state misclassification probabilities
# ---------------------------------------------------------------------------

def mixture_misclassification(model: CopulaHmm, k: int, n: int, rng: np.random.Generator,
                              weights=None) -> tuple[float, float]:
    """Monte Carlo estimate of ``P(w_k h_k(Y) < max_j w_j h_j(Y))`` for ``Y ~ H_k``.

    ``k`` is 1-indexed; ``weights`` default to equal weights.
    """
    K = model.K
    w = np.full(K, 1.0 / K) if weights is None else np.asarray(weights, dtype=float)
    path = np.full(n, k - 1, dtype=np.int64)
    y = simulate_observations(model, path, rng)
    with np.errstate(divide="ignore"):
        score = log_densities(model, y) + np.log(w)
    others = np.delete(score, k - 1, axis=1).max(axis=1)
    miss = (score[:, k - 1] < others).astype(float)
    return _mc_summary(miss)


def conditional_misclassification(model: CopulaHmm, k: int, T: int, replicates: int,
                                  rng) -> tuple[float, float]:
    """``P(decoded X_t != k | X_t = k)`` for local decoding, pooled over t and replicates.

    Replicate-level rates are averaged so the SE reflects replicate variation.
    """
    rates = []
    for s in _seeds(rng, replicates):
        traj = simulate(model, T, np.random.default_rng(s))
        mask = traj.labels == k
        if mask.any():
            rates.append(float(np.mean(local_decode(model, traj)[mask] != k)))
    return _mc_summary(np.array(rates))


def one_minus_two_c_half(family, theta: float) -> float:
    """``1 - 2 C_theta(1/2, 1/2)`` evaluated through the copula CDF."""
    return 1.0 - 2.0 * copula_cdf(CopulaSpec(Family.parse(family), theta), [0.5, 0.5])
