"""Standard errors for EIFM estimates: Monte Carlo sandwich and parametric bootstrap."""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ._parallel import ordered_map, replicate_seeds
from .decode import decode_posterior, zero_one_loss
from .eifm import FitConfig, StateCollapseError, CopulaFitError, fit
from .estimating import estimating_function_psi, psi_jacobian
from .fb import NonFiniteDensityError
from .model import CopulaHmm, parameter_names, simulate, to_vector

MAX_DROP_FRACTION = 0.2


class Method(str, enum.Enum):
    GODAMBE_MC = "GodambeMC"
    PARAMETRIC_BOOTSTRAP = "ParametricBootstrap"


class SingularInformationError(np.linalg.LinAlgError):
    def __init__(self, condition: float):
        super().__init__(f"sensitivity matrix H is singular (condition number {condition:.3g})")
        self.condition = condition


class BootstrapFailure(RuntimeError):
    pass


@dataclass
class UncertaintyReport:
    estimate: np.ndarray
    covariance: np.ndarray
    std_errors: np.ndarray
    intervals: np.ndarray  # (p, 2)
    method: Method
    replicates: int
    level: float
    names: list
    truncated: np.ndarray  # True where an interval was clipped to [0, 1]
    dropped: int = 0
    extras: dict = field(default_factory=dict)


def _probability_mask(model: CopulaHmm) -> np.ndarray:
    mask = np.zeros(to_vector(model).size, dtype=bool)
    mask[: model.K + model.K**2] = True
    return mask


def _truncate(intervals: np.ndarray, mask: np.ndarray):
    clipped = intervals.copy()
    clipped[mask] = np.clip(clipped[mask], 0.0, 1.0)
    truncated = np.any(clipped != intervals, axis=1)
    return clipped, truncated


def _psi_replicate(model: CopulaHmm, T: int, with_jacobian: bool, seed: int):
    traj = simulate(model, T, np.random.default_rng(seed))
    psi = estimating_function_psi(model, traj)
    jac = psi_jacobian(model, traj) if with_jacobian else None
    return seed, psi, jac


def psi_monte_carlo(model: CopulaHmm, T: int, n: int, rng, with_jacobian: bool = False,
                    threads: int | None = None, seeds=None):
    """Evaluate ``psi(eta*)`` (and optionally its Jacobian) on ``n`` simulated trajectories.

    Results are sorted by seed so the reduction order does not depend on the
    order replicates were scheduled in.
    """
    seeds = list(seeds) if seeds is not None else replicate_seeds(rng, n)
    out = ordered_map(functools.partial(_psi_replicate, model, T, with_jacobian), seeds, threads)
    out.sort(key=lambda r: r[0])
    psis = np.array([r[1] for r in out])
    jacs = np.array([r[2] for r in out]) if with_jacobian else None
    return psis, jacs


def godambe_monte_carlo(model_star: CopulaHmm, T: int, n: int, rng, level: float = 0.95,
                        threads: int | None = None, seeds=None) -> UncertaintyReport:
    """Sandwich covariance ``H^-1 G H^-T`` from simulated ``psi`` values and Jacobians.

    ``psi`` is the sum over t, so ``G`` and ``H`` both scale with T and the
    sandwich is already the covariance of the estimator.
    """
    eta = to_vector(model_star)
    p = eta.size
    if n < p + 1:
        raise ValueError(f"need n >= p + 1 = {p + 1} replicates, got {n}")
    psis, jacs = psi_monte_carlo(model_star, T, n, rng, True, threads, seeds)
    G = np.cov(psis, rowvar=False, ddof=1)
    H = -jacs.mean(axis=0)
    cond = float(np.linalg.cond(H))
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularInformationError(cond)
    Hinv = np.linalg.inv(H)
    cov = Hinv @ G @ Hinv.T
    cov = 0.5 * (cov + cov.T)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    z = stats.norm.ppf(0.5 + level / 2)
    raw = np.column_stack([eta - z * se, eta + z * se])
    intervals, truncated = _truncate(raw, _probability_mask(model_star))
    psi_mean = psis.mean(axis=0)
    psi_se = psis.std(axis=0, ddof=1) / np.sqrt(n)
    return UncertaintyReport(eta, cov, se, intervals, Method.GODAMBE_MC, n, level,
                             parameter_names(model_star), truncated,
                             extras={"G": G, "H": H, "condition": cond,
                                     "psi_mean": psi_mean, "psi_se": psi_se})


def _bootstrap_replicate(model: CopulaHmm, T: int, config: FitConfig, seed: int):
    traj = simulate(model, T, np.random.default_rng(seed))
    try:
        est, trace, post = fit(traj, model, config)
    except (StateCollapseError, CopulaFitError, NonFiniteDensityError, ValueError):
        return seed, None
    if not trace.converged:
        return seed, None
    report = zero_one_loss(decode_posterior(post.u_hat), traj.labels, match_labels=True, K=model.K)
    # permutation_used[i] is the true state of fitted state i; reorder so index = true state
    inverse = np.argsort(np.asarray(report.permutation_used) - 1)
    aligned = est.permuted(inverse)
    return seed, to_vector(aligned)


def parametric_bootstrap(model_star: CopulaHmm, T: int, n: int, fit_config: FitConfig | None,
                         rng, level: float = 0.95, threads: int | None = None,
                         seeds=None) -> UncertaintyReport:
    """Simulate-and-refit bootstrap; refits start at ``eta*`` and are label-aligned.

    Non-converged or failed refits are dropped; more than 20% dropped is an error.
    """
    if n < 2:
        raise ValueError("parametric bootstrap needs n >= 2")
    config = fit_config or FitConfig()
    seeds = list(seeds) if seeds is not None else replicate_seeds(rng, n)
    out = ordered_map(functools.partial(_bootstrap_replicate, model_star, T, config), seeds, threads)
    out.sort(key=lambda r: r[0])
    kept = [r[1] for r in out if r[1] is not None]
    dropped = len(out) - len(kept)
    if dropped > MAX_DROP_FRACTION * len(out) or len(kept) < 2:
        raise BootstrapFailure(f"{dropped} of {len(out)} bootstrap refits failed")
    etas = np.array(kept)
    eta = to_vector(model_star)
    cov = np.cov(etas, rowvar=False, ddof=1)
    cov = 0.5 * (cov + cov.T)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    alpha = 1.0 - level
    raw = np.column_stack([np.quantile(etas, alpha / 2, axis=0), np.quantile(etas, 1 - alpha / 2, axis=0)])
    intervals, truncated = _truncate(raw, _probability_mask(model_star))
    contains = (intervals[:, 0] <= eta) & (eta <= intervals[:, 1])
    return UncertaintyReport(eta, cov, se, intervals, Method.PARAMETRIC_BOOTSTRAP, len(kept), level,
                             parameter_names(model_star), truncated, dropped,
                             extras={"replicate_estimates": etas, "contains_estimate": contains})
