"""EIFM estimation: E-step by forward-backward, then an IFM M-step.

The M-step updates, in order, the chain parameters (closed form), each
state's margins (weighted MLE), and each state's copula parameter with the
new margins plugged in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize, stats

from .copulas import (
    CopulaSpec,
    Family,
    copula_log_density,
    copula_score,
    tau_range,
    tau_to_theta,
)
from .fb import PosteriorSummaries, forward_backward
from .margins import MarginFamily, MarginalSpec, weighted_mle
from .model import CopulaHmm, StateSpec, Trajectory, state_pseudo_cdf, to_vector

COLLAPSE_WEIGHT = 1e-6
FRANK_ZERO_EPS = 1e-4

DEFAULT_BOUNDS = {
    Family.FRANK: (-700.0, 700.0),
    Family.CLAYTON: (1e-4, 200.0),
    Family.GUMBEL: (1.0 + 1e-6, 100.0),
    Family.JOE: (1.0 + 1e-6, 100.0),
    Family.GAUSS: (-0.9999, 0.9999),
    Family.FGM: (-1.0, 1.0),
}


class StateCollapseError(RuntimeError):
    def __init__(self, state: int, weight: float):
        super().__init__(f"state {state} collapsed (posterior weight {weight:.3g})")
        self.state = state
        self.weight = weight


class CopulaFitError(RuntimeError):
    pass


@dataclass(frozen=True)
class FitConfig:
    max_iterations: int = 500
    tolerance: float = 1e-6
    param_tolerance: float | None = None
    copula_search_bounds: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")

    def bounds(self, family: Family) -> tuple[float, float]:
        b = self.copula_search_bounds.get(family, self.copula_search_bounds.get(family.value))
        return tuple(b) if b is not None else DEFAULT_BOUNDS[family]


@dataclass
class FitTrace:
    parameters: list = field(default_factory=list)
    log_likelihoods: list = field(default_factory=list)
    max_changes: list = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    best_index: int = 0


# ---------------------------------------------------------------------------
# copula parameter update
# ---------------------------------------------------------------------------

def _transform(family: Family):
    """``(to_z, to_theta, dtheta_dz)`` for the unconstrained search variable."""
    if family is Family.FRANK:
        return (lambda t: t), (lambda z: z), (lambda z: 1.0)
    if family is Family.CLAYTON:
        return math.log, math.exp, math.exp
    if family in (Family.GUMBEL, Family.JOE):
        return (lambda t: math.log(t - 1.0)), (lambda z: 1.0 + math.exp(z)), math.exp
    # Gauss, FGM
    return math.atanh, math.tanh, (lambda z: 1.0 - math.tanh(z) ** 2)


def _default_start(family: Family) -> float:
    return {Family.FRANK: 1.0, Family.CLAYTON: 1.0, Family.GUMBEL: 1.5, Family.JOE: 1.5,
            Family.GAUSS: 0.2, Family.FGM: 0.2}[family]


def weighted_copula_loglik(family, theta: float, u: np.ndarray, w: np.ndarray) -> float:
    return float(np.dot(w, copula_log_density(CopulaSpec(family, theta), u)))


def weighted_copula_score(family, theta: float, u: np.ndarray, w: np.ndarray) -> float:
    return float(np.dot(w, copula_score(CopulaSpec(family, theta), u)))


def optimize_copula_theta(family, u_matrix, weights, init: float | None = None,
                          bounds: tuple[float, float] | None = None) -> float:
    """Maximise ``sum_t w_t log c(u_t | theta)`` over ``theta``.

    The search runs on a transformed parameter ``z``. Starting at ``init`` it
    walks uphill along the score with doubling steps until the score changes
    sign, then polishes the root of the score with Brent's method. If the
    walk reaches a bound first, that bound is returned.
    """
    fam = Family.parse(family)
    if fam is Family.INDEPENDENCE:
        return 0.0
    u = np.asarray(u_matrix, dtype=float)
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or not w.sum() > 0:
        raise CopulaFitError("copula weights must be nonnegative with positive sum")
    lo, hi = bounds or DEFAULT_BOUNDS[fam]
    to_z, to_theta, jac = _transform(fam)
    # keep the transformed bounds finite (atanh(+-1) is infinite)
    lo_s = lo if fam not in (Family.GAUSS, Family.FGM) else max(lo, -1 + 1e-10)
    hi_s = hi if fam not in (Family.GAUSS, Family.FGM) else min(hi, 1 - 1e-10)
    z_lo, z_hi = to_z(lo_s), to_z(hi_s)
    theta0 = _default_start(fam) if init is None else float(init)
    if fam is Family.FRANK and abs(theta0) < FRANK_ZERO_EPS:
        theta0 = FRANK_ZERO_EPS
    z0 = min(max(to_z(min(max(theta0, lo_s), hi_s)), z_lo), z_hi)

    def grad(z):
        th = to_theta(z)
        return weighted_copula_score(fam, th, u, w) * jac(z)

    g0 = grad(z0)
    if not math.isfinite(g0):
        raise CopulaFitError(f"non-finite {fam.value} score at theta={to_theta(z0)}")
    if g0 == 0.0:
        theta = to_theta(z0)
    else:
        direction = 1.0 if g0 > 0 else -1.0
        bound = z_hi if direction > 0 else z_lo
        step = 0.5 if fam is not Family.FRANK else max(1.0, 0.5 * abs(z0))
        a, ga = z0, g0
        theta = None
        for _ in range(200):
            b = a + direction * step
            if (b - bound) * direction >= 0:
                b = bound
            gb = grad(b)
            if not math.isfinite(gb):
                raise CopulaFitError(f"non-finite {fam.value} score during bracket expansion")
            if gb == 0.0 or np.sign(gb) != np.sign(ga):
                z = b if gb == 0.0 else optimize.brentq(grad, min(a, b), max(a, b),
                                                         xtol=1e-13, rtol=1e-15, maxiter=200)
                theta = to_theta(z)
                break
            if b == bound:
                theta = lo if direction < 0 else hi
                break
            a, ga = b, gb
            step *= 2.0
        if theta is None:
            raise CopulaFitError(f"{fam.value} bracket expansion did not terminate")
    if fam is Family.FRANK and abs(theta) < FRANK_ZERO_EPS:
        theta = math.copysign(FRANK_ZERO_EPS, theta if theta != 0 else 1.0)
    return float(min(max(theta, lo), hi))


# ---------------------------------------------------------------------------
# one IFM sweep
# ---------------------------------------------------------------------------

def _as_pairs(trajs, posts):
    if isinstance(trajs, Trajectory):
        trajs, posts = [trajs], [posts]
    trajs, posts = list(trajs), list(posts)
    if len(trajs) != len(posts) or not trajs:
        raise ValueError("need one PosteriorSummaries per trajectory")
    for tr, po in zip(trajs, posts):
        if po.u_hat.shape[1] != tr.T:
            raise ValueError("posterior length does not match trajectory length")
    return trajs, posts


def update_chain(model: CopulaHmm, posts: Sequence[PosteriorSummaries]) -> tuple[np.ndarray, np.ndarray]:
    """Transition update. Rows with no expected transitions keep their previous values."""
    pi = np.mean([p.u_hat[:, 0] for p in posts], axis=0)
    pi = pi / pi.sum()
    counts = sum(p.v_hat.sum(axis=2) for p in posts)
    gamma = np.array(model.gamma, dtype=float)
    rows = counts.sum(axis=1)
    for j in range(model.K):
        if rows[j] > 0:
            gamma[j] = counts[j] / rows[j]
    return pi, gamma


def update_margins(model: CopulaHmm, obs: np.ndarray, weights: np.ndarray) -> list[list[MarginalSpec]]:
    """Margin update on stacked observations ``obs`` (N x d) with weights (K x N)."""
    out = []
    for k, state in enumerate(model.states):
        out.append([weighted_mle(m.family, weights[k], obs[:, h]) for h, m in enumerate(state.margins)])
    return out


def ifm_step(model: CopulaHmm, posts, trajs, config: FitConfig | None = None) -> CopulaHmm:
    """One IFM pass given E-step output; accepts one or several trajectories."""
    config = config or FitConfig()
    trajs, posts = _as_pairs(trajs, posts)
    obs = np.vstack([t.observations for t in trajs])
    weights = np.hstack([p.u_hat for p in posts])
    totals = weights.sum(axis=1)
    for k in range(model.K):
        if totals[k] < COLLAPSE_WEIGHT:
            raise StateCollapseError(k + 1, float(totals[k]))
    pi, gamma = update_chain(model, posts)
    margins = update_margins(model, obs, weights)
    states = []
    for k, (state, ms) in enumerate(zip(model.states, margins)):
        cop = state.copula
        if cop.has_parameter:
            u = state_pseudo_cdf(StateSpec(ms, cop), obs)
            theta = optimize_copula_theta(cop.family, u, weights[k], init=cop.theta,
                                          bounds=config.bounds(cop.family))
            cop = cop.with_theta(theta)
        states.append(StateSpec(ms, cop))
    return CopulaHmm(pi, gamma, states)


# ---------------------------------------------------------------------------
# Iteration
# ---------------------------------------------------------------------------

def _e_step(model, trajs):
    posts = [forward_backward(model, t) for t in trajs]
    return posts, float(sum(p.log_likelihood for p in posts))


def fit(trajs, init: CopulaHmm, config: FitConfig | None = None):
    """Alternate E- and IFM-steps; return ``(best_model, trace, posteriors)``.

    Stops when the relative log-likelihood change ``|dl| / max(1, |l|)``
    drops below ``config.tolerance`` (and, if set, the largest absolute
    parameter change drops below ``config.param_tolerance``). The returned
    model is the iterate with the highest log-likelihood seen, since EIFM is
    not guaranteed to increase the likelihood at every step. ``posteriors`` is
    a single ``PosteriorSummaries`` for one trajectory, else a list.
    """
    config = config or FitConfig()
    single = isinstance(trajs, Trajectory)
    trajs = [trajs] if single else list(trajs)
    trace = FitTrace()
    model = init
    posts, ll = _e_step(model, trajs)
    eta = to_vector(model)
    trace.parameters.append(eta)
    trace.log_likelihoods.append(ll)
    trace.max_changes.append(float("nan"))
    best = (ll, model, posts, 0)
    for it in range(1, config.max_iterations + 1):
        model = ifm_step(model, posts, trajs, config)
        posts, ll_new = _e_step(model, trajs)
        eta_new = to_vector(model)
        change = float(np.max(np.abs(eta_new - eta)))
        trace.parameters.append(eta_new)
        trace.log_likelihoods.append(ll_new)
        trace.max_changes.append(change)
        trace.iterations = it
        if ll_new > best[0]:
            best = (ll_new, model, posts, it)
        rel = abs(ll_new - ll) / max(1.0, abs(ll))
        ll, eta = ll_new, eta_new
        if rel < config.tolerance and (config.param_tolerance is None or change < config.param_tolerance):
            trace.converged = True
            break
    trace.best_index = best[3]
    best_posts = best[2][0] if single else best[2]
    return best[1], trace, best_posts


def _kendall_tau(x, y) -> float:
    res = stats.kendalltau(x, y)
    return 0.0 if not np.isfinite(res.statistic) else float(res.statistic)


def _theta_from_tau(family: Family, tau: float) -> float:
    """Invert an empirical tau after clipping it into the family's attainable range."""
    if family is Family.INDEPENDENCE:
        return 0.0
    if family is Family.FRANK and tau == 0.0:
        tau = 0.1
    lo, hi, closed = tau_range(family)
    if family in (Family.GUMBEL, Family.JOE):
        lo, closed = 0.0, True
    margin = 0.0 if closed else 1e-3
    tau = min(max(tau, lo + margin), hi - (1e-3 if family is not Family.FGM else 0.0))
    return tau_to_theta(family, tau).theta


def initialize(traj: Trajectory, K: int, families, rng: np.random.Generator,
               margin_family=MarginFamily.GAUSSIAN, n_starts: int = 5,
               config: FitConfig | None = None) -> CopulaHmm:
    """Two-stage start: an independence-copula Gaussian HMM, then per-state Kendall tau.

    Stage 1 runs EIFM with independence copulas from ``n_starts`` random
    mean vectors ``mean_h + sd_h * (-1)**h * |Z|`` and keeps the best run.
    Stage 2 decodes with that model and sets each copula parameter by
    inverting the empirical Kendall tau of the points assigned to the state.
    """
    from .decode import local_decode

    if isinstance(families, (str, Family)):
        families = [families] * K
    families = [Family.parse(f) for f in families]
    mfam = MarginFamily.parse(margin_family)
    y = traj.observations
    d = traj.d
    if traj.T < K * (d + 2):
        raise ValueError(f"T={traj.T} is too short to initialise K={K}, d={d}")
    cfg = config or FitConfig(max_iterations=200, tolerance=1e-6)
    mean, sd = y.mean(axis=0), y.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    indep = CopulaSpec(Family.INDEPENDENCE)
    best = None
    for _ in range(max(1, n_starts)):
        z = np.abs(rng.standard_normal((K, d)))
        signs = np.array([(-1.0) ** (h + 1) for h in range(d)])
        if mfam is MarginFamily.GAUSSIAN:
            states = [StateSpec([MarginalSpec.gaussian(mean[h] + sd[h] * signs[h] * z[k, h], sd[h])
                                 for h in range(d)], indep) for k in range(K)]
        else:
            states = [StateSpec([MarginalSpec.exponential(1.0 / max(mean[h], 1e-8) * (0.5 + z[k, h]))
                                 for h in range(d)], indep) for k in range(K)]
        start = CopulaHmm(np.full(K, 1.0 / K), np.full((K, K), 1.0 / K), states)
        try:
            stage1, trace, _ = fit(traj, start, cfg)
        except (StateCollapseError, ValueError, FloatingPointError):
            continue
        ll = trace.log_likelihoods[trace.best_index]
        if best is None or ll > best[0]:
            best = (ll, stage1)
    if best is None:
        raise StateCollapseError(0, 0.0)
    stage1 = best[1]
    labels = local_decode(stage1, traj)
    states = []
    for k in range(K):
        fam = families[k]
        idx = np.flatnonzero(labels == k + 1)
        if fam is Family.INDEPENDENCE:
            cop = indep
        elif idx.size < 2 or d != 2:
            cop = tau_to_theta(fam, 0.1) if fam is not Family.FGM else CopulaSpec(fam, 0.45)
        else:
            cop = CopulaSpec(fam, _theta_from_tau(fam, _kendall_tau(y[idx, 0], y[idx, 1])))
        states.append(StateSpec(stage1.states[k].margins, cop))
    return CopulaHmm(stage1.pi, stage1.gamma, states)


def fit_multistart(traj: Trajectory, K: int, families, rng: np.random.Generator,
                   n_starts: int = 5, config: FitConfig | None = None,
                   margin_family=MarginFamily.GAUSSIAN):
    """Run ``initialize`` + ``fit`` from ``n_starts`` random stage-1 starts; keep the best fit.

    Returns ``(model, trace, posteriors, init)`` for the run with the highest
    log-likelihood. Runs that collapse a state are skipped.
    """
    best = None
    for _ in range(max(1, n_starts)):
        try:
            init = initialize(traj, K, families, rng, margin_family, n_starts=1)
            model, trace, post = fit(traj, init, config)
        except (StateCollapseError, CopulaFitError, FloatingPointError):
            continue
        ll = trace.log_likelihoods[trace.best_index]
        if best is None or ll > best[0]:
            best = (ll, model, trace, post, init)
    if best is None:
        raise StateCollapseError(0, 0.0)
    return best[1:]
