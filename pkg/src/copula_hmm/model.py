"""The copula HMM container, joint state densities and simulation.

States are 1-indexed in every public interface (labels, decoded paths, file
formats). Arrays indexed by state are 0-based internally.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .copulas import U_EPS, CopulaSpec, Family, copula_log_density, copula_sample
from .margins import (
    MarginalSpec,
    marginal_cdf,
    marginal_logpdf,
    marginal_quantile,
)

STOCHASTIC_TOL = 1e-10


class ModelError(ValueError):
    pass


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class StateSpec:
    margins: tuple
    copula: CopulaSpec

    def __post_init__(self):
        object.__setattr__(self, "margins", tuple(self.margins))
        d = len(self.margins)
        if d < 1:
            raise ModelError("a state needs at least one margin")
        if d != 2 and self.copula.family is not Family.INDEPENDENCE:
            raise ModelError(f"{self.copula.family.value} copula requires d=2, state has d={d}")


@dataclass(frozen=True, eq=False)
class CopulaHmm:
    pi: np.ndarray
    gamma: np.ndarray
    states: tuple
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "pi", _frozen(self.pi))
        object.__setattr__(self, "gamma", _frozen(self.gamma))
        object.__setattr__(self, "states", tuple(self.states))
        K = len(self.states)
        if self.pi.shape != (K,) or self.gamma.shape != (K, K):
            raise ModelError(f"pi/gamma shapes {self.pi.shape}/{self.gamma.shape} do not match K={K}")
        dims = {len(s.margins) for s in self.states}
        if len(dims) != 1:
            raise ModelError("all states must share the observation dimension d")
        if self.validate:
            if np.any(self.pi < 0) or abs(self.pi.sum() - 1) > STOCHASTIC_TOL:
                raise ModelError("pi must be a probability vector")
            if np.any(self.gamma < 0) or np.any(np.abs(self.gamma.sum(axis=1) - 1) > STOCHASTIC_TOL):
                raise ModelError("gamma must be row-stochastic")

    @property
    def K(self) -> int:
        return len(self.states)

    @property
    def d(self) -> int:
        return len(self.states[0].margins)

    def replace_copulas(self, copula: CopulaSpec | None = None) -> "CopulaHmm":
        """Same model with every copula swapped (Independence by default)."""
        cop = copula or CopulaSpec(Family.INDEPENDENCE)
        return CopulaHmm(self.pi, self.gamma, [StateSpec(s.margins, cop) for s in self.states], self.validate)

    def permuted(self, perm) -> "CopulaHmm":
        """Relabel: new state ``i`` is old state ``perm[i]`` (0-based)."""
        perm = np.asarray(perm)
        return CopulaHmm(self.pi[perm], self.gamma[np.ix_(perm, perm)],
                         [self.states[p] for p in perm], self.validate)

    def __eq__(self, other):
        if not isinstance(other, CopulaHmm):
            return NotImplemented
        return (np.array_equal(self.pi, other.pi) and np.array_equal(self.gamma, other.gamma)
                and self.states == other.states)


@dataclass(frozen=True, eq=False)
class Trajectory:
    observations: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        obs = np.array(self.observations, dtype=float)
        if obs.ndim == 1:
            obs = obs[:, None]
        if obs.ndim != 2 or obs.shape[0] < 1:
            raise ModelError("observations must be a non-empty T x d matrix")
        if not np.all(np.isfinite(obs)):
            raise ModelError("observations contain non-finite values")
        obs.setflags(write=False)
        object.__setattr__(self, "observations", obs)
        if self.labels is not None:
            lab = np.array(self.labels)
            if lab.shape != (obs.shape[0],):
                raise ModelError("labels must have length T")
            if not np.all(lab == np.round(lab)) or np.any(lab < 1):
                raise ModelError("labels must be positive integers (1-indexed states)")
            lab = lab.astype(np.int64)
            lab.setflags(write=False)
            object.__setattr__(self, "labels", lab)

    @property
    def T(self) -> int:
        return self.observations.shape[0]

    @property
    def d(self) -> int:
        return self.observations.shape[1]


def state_pseudo_cdf(state: StateSpec, obs: np.ndarray) -> np.ndarray:
    """Marginal CDF values ``F_{k,h}(y_h)`` for every row, shape ``(T, d)``."""
    return np.column_stack([marginal_cdf(m, obs[:, h]) for h, m in enumerate(state.margins)])


def state_log_densities(state: StateSpec, obs: np.ndarray) -> np.ndarray:
    obs = np.atleast_2d(np.asarray(obs, dtype=float))
    out = np.zeros(obs.shape[0])
    for h, m in enumerate(state.margins):
        out += marginal_logpdf(m, obs[:, h])
    if state.copula.family is not Family.INDEPENDENCE:
        out += copula_log_density(state.copula, state_pseudo_cdf(state, obs))
    return out


def log_densities(model: CopulaHmm, observations) -> np.ndarray:
    """``log h_k(y_t)`` as a ``(T, K)`` matrix."""
    obs = np.atleast_2d(np.asarray(observations, dtype=float))
    if obs.shape[1] != model.d:
        raise ModelError(f"observations have d={obs.shape[1]}, model expects d={model.d}")
    return np.column_stack([state_log_densities(s, obs) for s in model.states])


def state_log_density(model: CopulaHmm, k: int, y) -> float:
    """Joint log-density of a single observation under (1-indexed) state ``k``."""
    if not 1 <= k <= model.K:
        raise ModelError(f"state index {k} outside 1..{model.K}")
    return float(state_log_densities(model.states[k - 1], np.asarray(y, dtype=float)[None, :])[0])


def simulate_path(model: CopulaHmm, T: int, rng: np.random.Generator) -> np.ndarray:
    """Hidden state path, 0-based."""
    if T < 1:
        raise ValueError("T must be positive")
    K = model.K
    cum = np.cumsum(model.gamma, axis=1)
    draws = rng.random(T)
    path = np.empty(T, dtype=np.int64)
    path[0] = min(np.searchsorted(np.cumsum(model.pi), draws[0], side="right"), K - 1)
    for t in range(1, T):
        path[t] = min(np.searchsorted(cum[path[t - 1]], draws[t], side="right"), K - 1)
    return path


def simulate_observations(model: CopulaHmm, path: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    T, d = path.shape[0], model.d
    obs = np.empty((T, d))
    for k, state in enumerate(model.states):
        idx = np.flatnonzero(path == k)
        if idx.size == 0:
            continue
        if state.copula.family is Family.INDEPENDENCE:
            u = rng.random((idx.size, d))
        else:
            u = copula_sample(state.copula, idx.size, rng)
        u = np.clip(u, U_EPS, 1 - U_EPS)
        for h, m in enumerate(state.margins):
            obs[idx, h] = marginal_quantile(m, u[:, h])
    return obs


def simulate(model: CopulaHmm, T: int, rng: np.random.Generator) -> Trajectory:
    """Draw the whole state path first, then the observations given the path."""
    path = simulate_path(model, T, rng)
    return Trajectory(simulate_observations(model, path, rng), path + 1)


# ---------------------------------------------------------------------------
# flat parameter vector
# ---------------------------------------------------------------------------

def parameter_names(model: CopulaHmm) -> list[str]:
    K = model.K
    names = [f"pi[{j + 1}]" for j in range(K)]
    names += [f"gamma[{j + 1},{k + 1}]" for j in range(K) for k in range(K)]
    for k, s in enumerate(model.states):
        for h, m in enumerate(s.margins):
            labels = ("mean", "sd") if m.n_params == 2 else ("rate",)
            names += [f"{lab}[{k + 1},{h + 1}]" for lab in labels]
    for k, s in enumerate(model.states):
        if s.copula.has_parameter:
            names.append(f"theta[{k + 1}]")
    return names


def to_vector(model: CopulaHmm) -> np.ndarray:
    """``eta = (pi, vec_row(gamma), margin params by state then dim, thetas)``.

    Independence states contribute no copula entry.
    """
    parts = [model.pi, model.gamma.ravel()]
    for s in model.states:
        for m in s.margins:
            parts.append(np.asarray(m.params))
    parts.append(np.array([s.copula.theta for s in model.states if s.copula.has_parameter]))
    return np.concatenate(parts)


def from_vector(template: CopulaHmm, eta, validate: bool = True) -> CopulaHmm:
    eta = np.asarray(eta, dtype=float)
    K = template.K
    expected = K + K * K + sum(m.n_params for s in template.states for m in s.margins) \
        + sum(s.copula.has_parameter for s in template.states)
    if eta.shape != (expected,):
        raise ModelError(f"parameter vector has shape {eta.shape}, expected ({expected},)")
    pos = 0
    pi = eta[pos:pos + K]
    pos += K
    gamma = eta[pos:pos + K * K].reshape(K, K)
    pos += K * K
    margins = []
    for s in template.states:
        ms = []
        for m in s.margins:
            ms.append(MarginalSpec(m.family, tuple(eta[pos:pos + m.n_params])))
            pos += m.n_params
        margins.append(ms)
    states = []
    for s, ms in zip(template.states, margins):
        cop = s.copula
        if cop.has_parameter:
            cop = CopulaSpec(cop.family, eta[pos])
            pos += 1
        states.append(StateSpec(ms, cop))
    return CopulaHmm(pi, gamma, states, validate=validate)
