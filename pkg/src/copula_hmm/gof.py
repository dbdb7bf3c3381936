"""Copula family selection by the Cramér-von Mises distance to the empirical copula."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from ._kernels import empirical_copula_at_points
from .copulas import CopulaSpec, Family, copula_cdf
from .eifm import CopulaFitError, _theta_from_tau, optimize_copula_theta


def pseudo_observations(data) -> np.ndarray:
    """Column-wise average ranks divided by ``n + 1``."""
    x = np.asarray(data, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if n < 2:
        raise ValueError("pseudo-observations need at least two rows")
    return stats.rankdata(x, axis=0, method="average") / (n + 1.0)


def fit_pseudo_likelihood(family, pobs: np.ndarray) -> float:
    """Maximum pseudo-likelihood ``theta``, started from the Kendall-tau inversion."""
    fam = Family.parse(family)
    tau = float(stats.kendalltau(pobs[:, 0], pobs[:, 1]).statistic)
    start = _theta_from_tau(fam, tau if np.isfinite(tau) else 0.0)
    return optimize_copula_theta(fam, pobs, np.ones(pobs.shape[0]), init=start)


def cvm_statistic(pobs, family, theta: float | None = None) -> tuple[float, float]:
    """``S_n = sum_i (C_n(u_i) - C_theta(u_i))^2``; returns ``(S_n, theta)``.

    ``theta`` is fitted by pseudo-likelihood when not given.
    """
    u = np.asarray(pobs, dtype=float)
    if u.ndim != 2 or u.shape[1] != 2:
        raise ValueError("cvm_statistic is bivariate: pobs must be n x 2")
    fam = Family.parse(family)
    if theta is None:
        theta = 0.0 if fam is Family.INDEPENDENCE else fit_pseudo_likelihood(fam, u)
    c_emp = empirical_copula_at_points(u)
    c_fit = copula_cdf(CopulaSpec(fam, theta), u)
    return float(np.sum((c_emp - c_fit) ** 2)), float(theta)


@dataclass(frozen=True)
class FamilySelection:
    family: Family
    theta: float
    statistics: dict  # family -> (statistic, theta), or an error message


def select_family(data, candidates) -> FamilySelection:
    """Rank candidate families by the statistic on the pseudo-observations of ``data``."""
    candidates = [Family.parse(c) for c in candidates]
    if not candidates:
        raise ValueError("no candidate families given")
    pobs = pseudo_observations(data)
    table = {}
    for fam in candidates:
        try:
            table[fam] = cvm_statistic(pobs, fam)
        except (CopulaFitError, ValueError, FloatingPointError) as exc:
            table[fam] = str(exc)
    ok = {f: v for f, v in table.items() if not isinstance(v, str)}
    if not ok:
        raise CopulaFitError("no candidate family could be fitted")
    best = min(ok, key=lambda f: ok[f][0])
    return FamilySelection(best, ok[best][1], table)
