"""Forward-backward recursions (log space) and a brute-force enumeration oracle."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ._kernels import forward_backward_kernel, forward_loglik_kernel
from .model import CopulaHmm, Trajectory, log_densities

BRUTE_FORCE_LIMIT = 10**6


class NonFiniteDensityError(FloatingPointError):
    """A state log-density was NaN/+inf, or every state had zero density at some t."""

    def __init__(self, t: int, k: int | None, message: str):
        super().__init__(message)
        self.t = t
        self.k = k


@dataclass(frozen=True, eq=False)
class PosteriorSummaries:
    """``u_hat[k, t] = P(X_t = k | y)``; ``v_hat[j, k, t] = P(X_t = j, X_{t+1} = k | y)``."""

    u_hat: np.ndarray
    v_hat: np.ndarray
    log_likelihood: float

    @property
    def K(self) -> int:
        return self.u_hat.shape[0]

    @property
    def T(self) -> int:
        return self.u_hat.shape[1]


def _checked_log_b(model: CopulaHmm, traj: Trajectory) -> np.ndarray:
    log_b = log_densities(model, traj.observations)
    bad = np.isnan(log_b) | (log_b == np.inf)
    if np.any(bad):
        t, k = map(int, np.argwhere(bad)[0])
        raise NonFiniteDensityError(t + 1, k + 1, f"non-finite log-density at t={t + 1}, state {k + 1}")
    return log_b


def _raise_zero_likelihood(log_b: np.ndarray):
    dead = np.all(log_b == -np.inf, axis=1)
    t = int(np.argmax(dead)) + 1 if dead.any() else None
    raise NonFiniteDensityError(t or 0, None,
                                f"observed-data likelihood is zero (first impossible t={t})")


def _log_params(model: CopulaHmm):
    with np.errstate(divide="ignore"):
        return np.log(model.pi), np.log(model.gamma)


def forward_backward(model: CopulaHmm, traj: Trajectory, log_b: np.ndarray | None = None) -> PosteriorSummaries:
    if log_b is None:
        log_b = _checked_log_b(model, traj)
    log_pi, log_gamma = _log_params(model)
    u, v, ll = forward_backward_kernel(log_b, log_pi, log_gamma)
    if u is None:
        _raise_zero_likelihood(log_b)
    return PosteriorSummaries(u.T.copy(), np.transpose(v, (1, 2, 0)).copy(), ll)


def log_likelihood(model: CopulaHmm, traj: Trajectory) -> float:
    log_b = _checked_log_b(model, traj)
    log_pi, log_gamma = _log_params(model)
    return forward_loglik_kernel(log_b, log_pi, log_gamma)


def brute_force_posterior(model: CopulaHmm, traj: Trajectory) -> PosteriorSummaries:
    """Exact posteriors by summing over all ``K**T`` state sequences."""
    K, T = model.K, traj.T
    if K**T > BRUTE_FORCE_LIMIT:
        raise ValueError(f"K**T = {K**T} exceeds the enumeration limit {BRUTE_FORCE_LIMIT}")
    log_b = _checked_log_b(model, traj)
    log_pi, log_gamma = _log_params(model)
    paths = np.array(list(itertools.product(range(K), repeat=T)), dtype=np.int64)
    with np.errstate(invalid="ignore"):
        lw = log_pi[paths[:, 0]] + log_b[np.arange(T), paths].sum(axis=1)
        if T > 1:
            lw = lw + log_gamma[paths[:, :-1], paths[:, 1:]].sum(axis=1)
    ll = float(logsumexp(lw))
    if not np.isfinite(ll):
        _raise_zero_likelihood(log_b)
    w = np.exp(lw - ll)
    u = np.zeros((K, T))
    for t in range(T):
        np.add.at(u[:, t], paths[:, t], w)
    v = np.zeros((K, K, max(T - 1, 0)))
    for t in range(T - 1):
        np.add.at(v[:, :, t], (paths[:, t], paths[:, t + 1]), w)
    return PosteriorSummaries(u, v, ll)
