"""Estimating equations and the Gauss-Seidel view of EIFM.

EIFM solves ``psi(eta; y) = 0``, where ``psi`` stacks the chain,
marginal-score and copula-score equations with the latent indicators
replaced by their posterior expectations. Treating the posteriors as extra
unknowns gives the larger system ``g(xi) = 0``, ``xi = (u, v, eta)``, for
which one EIFM iteration is a nonlinear Gauss-Seidel sweep.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ._kernels import forward_backward_logs
from .copulas import CopulaSpec, Family, copula_log_density, copula_score
from .eifm import update_margins
from .margins import MarginalSpec, marginal_score
from .model import (
    CopulaHmm,
    StateSpec,
    Trajectory,
    from_vector,
    log_densities,
    state_pseudo_cdf,
    to_vector,
)

FD_REL_STEP = 1e-5


def general_posteriors(model: CopulaHmm, traj: Trajectory):
    """Posterior formulas evaluated for possibly non-stochastic ``pi``/``gamma``.

    ``u[j, t] = a_jt b_jt / sum_l a_lt b_lt`` and
    ``v[j, k, t] = a_{j,t} g_jk h_k(y_{t+1}) b_{k,t+1} / sum_l a_{l,t+1} b_{l,t+1}``.
    These coincide with forward-backward output when the chain is stochastic,
    and stay defined under the finite-difference perturbations used below.
    """
    log_b = log_densities(model, traj.observations)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_pi, log_gamma = np.log(model.pi), np.log(model.gamma)
        la, lb = forward_backward_logs(log_b, log_pi, log_gamma)
        lab = la + lb
        norm = np.logaddexp.reduce(lab, axis=1)
        u = np.exp(lab - norm[:, None]).T
        if traj.T > 1:
            lv = (la[:-1, :, None] + log_gamma[None] + (log_b[1:] + lb[1:])[:, None, :]
                  - norm[1:, None, None])
            v = np.transpose(np.exp(lv), (1, 2, 0))
        else:
            v = np.empty((model.K, model.K, 0))
    return u, v


def _as_list(trajs):
    return [trajs] if isinstance(trajs, Trajectory) else list(trajs)


def _eta_equations(model: CopulaHmm, trajs, us, vs, normalized_gamma: bool) -> np.ndarray:
    """Equations for eta given posterior arrays (one ``u``/``v`` per trajectory)."""
    K = model.K
    pi_eq = sum(model.pi - u[:, 0] for u in us)
    counts = sum(v.sum(axis=2) for v in vs)
    rows = counts.sum(axis=1, keepdims=True)
    if normalized_gamma:
        with np.errstate(invalid="ignore", divide="ignore"):
            gamma_eq = np.where(rows > 0, model.gamma - counts / rows, 0.0)
    else:
        gamma_eq = model.gamma * rows - counts
    obs = np.vstack([t.observations for t in trajs])
    w = np.hstack(us)
    margin_eq, copula_eq = [], []
    for k, state in enumerate(model.states):
        for h, m in enumerate(state.margins):
            margin_eq.append(w[k] @ marginal_score(m, obs[:, h]))
        if state.copula.has_parameter:
            u_cdf = state_pseudo_cdf(state, obs)
            copula_eq.append(float(w[k] @ copula_score(state.copula, u_cdf)))
    parts = [pi_eq, gamma_eq.ravel()] + margin_eq + [np.array(copula_eq)]
    assert len(pi_eq) == K
    return np.concatenate(parts)


def estimating_function_psi(model: CopulaHmm, trajs) -> np.ndarray:
    """``psi(eta; y)`` in the order of ``model.to_vector``; sums over trajectories.

    Chain block: ``pi_j - u_j1`` and ``gamma_jk sum_l sum_t v_jlt - sum_t v_jkt``.
    Margin and copula blocks: posterior-weighted scores.
    """
    trajs = _as_list(trajs)
    posts = [general_posteriors(model, t) for t in trajs]
    return _eta_equations(model, trajs, [p[0] for p in posts], [p[1] for p in posts],
                          normalized_gamma=False)


# ---------------------------------------------------------------------------
# finite-difference Jacobians
# ---------------------------------------------------------------------------

def eta_bounds(model: CopulaHmm) -> tuple[np.ndarray, np.ndarray]:
    """Lower/upper limits of each eta coordinate for one-sided differencing."""
    lo, hi = [], []
    K = model.K
    lo += [0.0] * (K + K * K)
    hi += [np.inf] * (K + K * K)
    for s in model.states:
        for m in s.margins:
            if m.n_params == 2:
                lo += [-np.inf, 0.0]
                hi += [np.inf, np.inf]
            else:
                lo.append(0.0)
                hi.append(np.inf)
    limits = {Family.FRANK: (-745.0, 745.0), Family.CLAYTON: (0.0, np.inf),
              Family.GUMBEL: (1.0, np.inf), Family.JOE: (1.0, np.inf),
              Family.GAUSS: (-1.0, 1.0), Family.FGM: (-1.0, 1.0)}
    for s in model.states:
        if s.copula.has_parameter:
            a, b = limits[s.copula.family]
            lo.append(a)
            hi.append(b)
    return np.array(lo), np.array(hi)


def numerical_jacobian(fn, x: np.ndarray, lower=None, upper=None, rel_step: float = FD_REL_STEP) -> np.ndarray:
    """Central differences with ``h = rel_step * max(1, |x_i|)``; one-sided near a limit.

    Open limits (Clayton/Gumbel/Gauss) need the step to keep strict
    inequality, so a coordinate within ``h`` of a limit is stepped inward only.
    """
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(fn(x), dtype=float)
    J = np.empty((f0.size, x.size))
    lower = np.full(x.size, -np.inf) if lower is None else lower
    upper = np.full(x.size, np.inf) if upper is None else upper
    for i in range(x.size):
        h = rel_step * max(1.0, abs(x[i]))
        up_ok = x[i] + h < upper[i]
        down_ok = x[i] - h > lower[i]
        xp, xm = x.copy(), x.copy()
        if up_ok and down_ok:
            xp[i] += h
            xm[i] -= h
            J[:, i] = (np.asarray(fn(xp)) - np.asarray(fn(xm))) / (2 * h)
        elif up_ok:
            # second-order forward difference
            xp[i] += h
            xm[i] += 2 * h
            J[:, i] = (-3 * f0 + 4 * np.asarray(fn(xp)) - np.asarray(fn(xm))) / (2 * h)
        else:
            xp[i] -= h
            xm[i] -= 2 * h
            J[:, i] = (3 * f0 - 4 * np.asarray(fn(xp)) + np.asarray(fn(xm))) / (2 * h)
    return J


def psi_jacobian(model: CopulaHmm, trajs) -> np.ndarray:
    """``d psi / d eta`` at ``model`` by finite differences."""
    trajs = _as_list(trajs)
    eta = to_vector(model)
    lo, hi = eta_bounds(model)

    def fn(e):
        return estimating_function_psi(from_vector(model, e, validate=False), trajs)

    return numerical_jacobian(fn, eta, lo, hi)


# ---------------------------------------------------------------------------
# Gauss-Seidel spectral diagnostic
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussSeidelDiagnostic:
    radius: float
    radius_power_iteration: float
    unit_diagonal_ok: bool
    unit_diagonal_max_deviation: float
    n_unit: int
    singular: bool
    size: int


def g_system(xi: np.ndarray, template: CopulaHmm, traj: Trajectory, cache: dict | None = None) -> np.ndarray:
    """The stacked system ``g(xi)`` with ``xi = (u[j, t], v[j, k, t], eta)``.

    The transition equations use the normalised form
    ``gamma_jk - sum_t v_jkt / sum_l sum_t v_jlt`` (same roots, unit diagonal).
    """
    K, T = template.K, traj.T
    nu, nv = K * T, K * K * (T - 1)
    u = xi[:nu].reshape(K, T)
    v = xi[nu:nu + nv].reshape(K, K, T - 1)
    eta = xi[nu + nv:]
    model = from_vector(template, eta, validate=False)
    # the posterior formulas depend on eta only; columns perturbing u or v reuse them
    key = eta.tobytes()
    if cache is not None and key in cache:
        u_m, v_m = cache[key]
    else:
        u_m, v_m = general_posteriors(model, traj)
        if cache is not None:
            cache.clear()
            cache[key] = (u_m, v_m)
    eq = _eta_equations(model, [traj], [u], [v], normalized_gamma=True)
    return np.concatenate([(u - u_m).ravel(), (v - v_m).ravel(), eq])


def spectral_radius_power(M: np.ndarray, iterations: int = 5000, tol: float = 1e-12,
                          seed: int = 0) -> float:
    """Spectral radius by power iteration (norm-ratio estimate)."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(M.shape[0])
    x /= np.linalg.norm(x)
    est = 0.0
    # average the growth over two steps so a +-lambda pair does not oscillate
    for _ in range(iterations):
        y = M @ (M @ x)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        new = float(np.sqrt(ny))
        x = y / ny
        if abs(new - est) <= tol * max(1.0, new):
            return new
        est = new
    return est


def gauss_seidel_spectral_radius(model: CopulaHmm, post, traj: Trajectory) -> GaussSeidelDiagnostic:
    """Spectral radius of ``(D - L)^{-1} U`` for the Jacobian of ``g`` at ``xi*``."""
    K, T = model.K, traj.T
    eta = to_vector(model)
    xi = np.concatenate([post.u_hat.ravel(), post.v_hat.ravel(), eta])
    n_post = K * T + K * K * (T - 1)
    lo_eta, hi_eta = eta_bounds(model)
    lower = np.concatenate([np.full(n_post, -np.inf), lo_eta])
    upper = np.concatenate([np.full(n_post, np.inf), hi_eta])
    cache: dict = {}
    J = numerical_jacobian(lambda x: g_system(x, model, traj, cache), xi, lower, upper)
    n5 = n_post + K + K * K
    diag = np.diag(J)
    dev = float(np.max(np.abs(diag[:n5] - 1.0)))
    singular = bool(np.any(np.abs(diag) < 1e-12))
    if singular:
        return GaussSeidelDiagnostic(float("nan"), float("nan"), dev < 1e-6, dev, n5, True, xi.size)
    DL = np.tril(J)
    U = -np.triu(J, 1)
    M = linalg.solve_triangular(DL, U, lower=True)
    radius = float(np.max(np.abs(np.linalg.eigvals(M))))
    return GaussSeidelDiagnostic(radius, spectral_radius_power(M), dev < 1e-6, dev, n5, False, xi.size)


# ---------------------------------------------------------------------------
# Non-monotonicity witness
# ---------------------------------------------------------------------------

def non_gem_copula_terms(y1: float = 2.0, y2: float = 2.0, theta: float = 0.5) -> tuple[float, float]:
    """Copula term of the Q-function before and after one margin update.

    Single observation, FGM(theta) copula, Exponential(1) margins. The margin
    update sets each rate to ``1 / y_h``. Returns ``(before, after)`` values of
    ``log c(F(y_1), F(y_2) | theta)``.
    """
    margins = [MarginalSpec.exponential(1.0), MarginalSpec.exponential(1.0)]
    state = StateSpec(margins, CopulaSpec(Family.FGM, theta))
    model = CopulaHmm([1.0], [[1.0]], [state])
    y = np.array([[y1, y2]])
    before = float(copula_log_density(state.copula, state_pseudo_cdf(state, y))[0])
    new_margins = update_margins(model, y, np.ones((1, 1)))[0]
    new_state = StateSpec(new_margins, state.copula)
    after = float(copula_log_density(state.copula, state_pseudo_cdf(new_state, y))[0])
    return before, after
