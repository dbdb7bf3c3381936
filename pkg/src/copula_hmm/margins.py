"""Univariate state-dependent margins with closed-form weighted MLE."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class MarginFamily(str, enum.Enum):
    GAUSSIAN = "Gaussian"
    EXPONENTIAL = "Exponential"

    @classmethod
    def parse(cls, name: "str | MarginFamily") -> "MarginFamily":
        if isinstance(name, MarginFamily):
            return name
        key = str(name).strip().lower()
        if key in ("gaussian", "normal", "gauss"):
            return cls.GAUSSIAN
        if key in ("exponential", "exp"):
            return cls.EXPONENTIAL
        raise ValueError(f"unknown marginal family {name!r}")


class DegenerateDataError(ValueError):
    """Weighted data cannot identify the marginal parameters."""


N_PARAMS = {MarginFamily.GAUSSIAN: 2, MarginFamily.EXPONENTIAL: 1}


@dataclass(frozen=True)
class MarginalSpec:
    """Gaussian ``params=(mean, sd)`` or Exponential ``params=(rate,)``."""

    family: MarginFamily
    params: tuple

    def __post_init__(self):
        fam = MarginFamily.parse(self.family)
        params = tuple(float(p) for p in np.atleast_1d(self.params))
        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "params", params)
        if len(params) != N_PARAMS[fam]:
            raise ValueError(f"{fam.value} margin needs {N_PARAMS[fam]} parameter(s), got {len(params)}")
        if not all(math.isfinite(p) for p in params):
            raise ValueError("marginal parameters must be finite")
        if fam is MarginFamily.GAUSSIAN and params[1] <= 0:
            raise ValueError("Gaussian sd must be positive")
        if fam is MarginFamily.EXPONENTIAL and params[0] <= 0:
            raise ValueError("Exponential rate must be positive")

    @classmethod
    def gaussian(cls, mean: float, sd: float) -> "MarginalSpec":
        return cls(MarginFamily.GAUSSIAN, (mean, sd))

    @classmethod
    def exponential(cls, rate: float) -> "MarginalSpec":
        return cls(MarginFamily.EXPONENTIAL, (rate,))

    @property
    def n_params(self) -> int:
        return N_PARAMS[self.family]


def marginal_logpdf(spec: MarginalSpec, y):
    y = np.asarray(y, dtype=float)
    if spec.family is MarginFamily.GAUSSIAN:
        mu, sd = spec.params
        z = (y - mu) / sd
        return -0.5 * z * z - math.log(sd) - _LOG_SQRT_2PI
    (rate,) = spec.params
    with np.errstate(divide="ignore"):
        return np.where(y >= 0, math.log(rate) - rate * y, -np.inf)


def marginal_pdf(spec: MarginalSpec, y):
    return np.exp(marginal_logpdf(spec, y))


def marginal_cdf(spec: MarginalSpec, y):
    y = np.asarray(y, dtype=float)
    if spec.family is MarginFamily.GAUSSIAN:
        mu, sd = spec.params
        return special.ndtr((y - mu) / sd)
    (rate,) = spec.params
    return np.where(y > 0, -np.expm1(-rate * np.maximum(y, 0.0)), 0.0)


def marginal_quantile(spec: MarginalSpec, p):
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0) | (p >= 1)):
        raise ValueError("quantile requires p in (0, 1)")
    if spec.family is MarginFamily.GAUSSIAN:
        mu, sd = spec.params
        return mu + sd * special.ndtri(p)
    (rate,) = spec.params
    return -np.log1p(-p) / rate


def marginal_score(spec: MarginalSpec, y) -> np.ndarray:
    """Gradient of ``log f(y)`` in the natural parameters, shape ``(n, n_params)``."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if spec.family is MarginFamily.GAUSSIAN:
        mu, sd = spec.params
        z = (y - mu) / sd
        return np.column_stack([z / sd, (z * z - 1.0) / sd])
    (rate,) = spec.params
    return (1.0 / rate - y)[:, None]


def weighted_mle(family, weights, data) -> MarginalSpec:
    """Maximise ``sum_t w_t log f(y_t; lambda)`` in closed form."""
    fam = MarginFamily.parse(family)
    w = np.asarray(weights, dtype=float)
    y = np.asarray(data, dtype=float)
    if w.shape != y.shape or w.ndim != 1:
        raise ValueError("weights and data must be 1-D arrays of equal length")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ValueError("weights must be finite and nonnegative")
    total = w.sum()
    if not total > 0:
        raise DegenerateDataError("weights sum to zero")
    wn = w / total
    mean = float(np.dot(wn, y))
    if fam is MarginFamily.GAUSSIAN:
        var = float(np.dot(wn, (y - mean) ** 2))
        if not var > 0 or math.sqrt(var) <= 1e-12 * max(1.0, abs(mean)):
            raise DegenerateDataError("weighted variance is zero")
        return MarginalSpec.gaussian(mean, math.sqrt(var))
    if np.any(y[w > 0] < 0):
        raise DegenerateDataError("Exponential margin received negative data")
    if not mean > 0:
        raise DegenerateDataError("weighted mean of exponential data is zero")
    return MarginalSpec.exponential(1.0 / mean)
