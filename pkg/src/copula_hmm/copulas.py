"""Bivariate one-parameter copula families.

Every density/score routine works on arrays of shape ``(n, 2)`` (or a single
pair) and clamps its input to ``[U_EPS, 1 - U_EPS]`` first, so values coming
from marginal CDFs evaluated far in the tails never hit ``log(0)``.

Negative Frank, Gauss and FGM parameters are evaluated through the radial
relation ``c_{-theta}(u, v) = c_theta(u, 1 - v)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

U_EPS = 1e-12
FRANK_THETA_LIMIT = 745.0
_FRANK_SMALL = 1e-6


class Family(str, enum.Enum):
    INDEPENDENCE = "Independence"
    FRANK = "Frank"
    CLAYTON = "Clayton"
    GUMBEL = "Gumbel"
    JOE = "Joe"
    GAUSS = "Gauss"
    FGM = "FGM"

    @classmethod
    def parse(cls, name: "str | Family") -> "Family":
        if isinstance(name, Family):
            return name
        key = str(name).strip().lower()
        for fam in cls:
            if fam.value.lower() == key or fam.name.lower() == key:
                return fam
        if key in ("gaussian", "normal"):
            return cls.GAUSS
        raise ValueError(f"unknown copula family {name!r}")


class CopulaParameterError(ValueError):
    """Raised for a parameter outside the family's admissible range."""


@dataclass(frozen=True)
class CopulaSpec:
    family: Family
    theta: float = 0.0

    def __post_init__(self):
        fam = Family.parse(self.family)
        object.__setattr__(self, "family", fam)
        theta = float(self.theta)
        if fam is Family.INDEPENDENCE:
            theta = 0.0
        object.__setattr__(self, "theta", theta)
        check_theta(fam, theta)

    @property
    def has_parameter(self) -> bool:
        return self.family is not Family.INDEPENDENCE

    def with_theta(self, theta: float) -> "CopulaSpec":
        return CopulaSpec(self.family, theta)


def check_theta(family: Family, theta: float) -> None:
    ok = math.isfinite(theta)
    if family is Family.FRANK:
        ok = ok and abs(theta) <= FRANK_THETA_LIMIT
    elif family is Family.CLAYTON:
        ok = ok and theta > 0
    elif family in (Family.GUMBEL, Family.JOE):
        ok = ok and theta >= 1
    elif family is Family.GAUSS:
        ok = ok and -1 < theta < 1
    elif family is Family.FGM:
        ok = ok and -1 <= theta <= 1
    if not ok:
        raise CopulaParameterError(f"theta={theta!r} outside the admissible range of {family.value}")


def _as_pairs(u) -> tuple[np.ndarray, bool]:
    arr = np.asarray(u, dtype=float)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError("u must have shape (d,) or (n, d)")
    return arr, single


def _bivariate(spec: CopulaSpec, arr: np.ndarray) -> None:
    if arr.shape[1] != 2 and spec.family is not Family.INDEPENDENCE:
        raise ValueError(f"{spec.family.value} density is implemented for d=2 only, got d={arr.shape[1]}")


def _clamp(arr: np.ndarray) -> np.ndarray:
    if np.any(np.isnan(arr)):
        raise ValueError("copula argument contains NaN")
    return np.clip(arr, U_EPS, 1.0 - U_EPS)


def _log1mexp(x):
    """log(1 - exp(-x)) for x > 0."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(x > math.log(2.0), np.log1p(-np.exp(-x)), np.log(-np.expm1(-x)))


# ---------------------------------------------------------------------------
# CDF
# ---------------------------------------------------------------------------

def copula_cdf(spec: CopulaSpec, u) -> np.ndarray | float:
    """Copula CDF ``C(u | theta)``.

    Archimedean families accept any dimension; Gauss and FGM are bivariate.
    """
    arr, single = _as_pairs(u)
    if np.any((arr < 0) | (arr > 1)) or np.any(np.isnan(arr)):
        raise ValueError("copula_cdf arguments must lie in [0, 1]")
    fam, th = spec.family, spec.theta
    d = arr.shape[1]
    if fam in (Family.GAUSS, Family.FGM) and d != 2:
        raise ValueError(f"{fam.value} copula is bivariate only")
    if fam is Family.INDEPENDENCE or (fam is Family.FRANK and th == 0.0):
        out = np.prod(arr, axis=1)
    elif d == 2:
        out = _CDF2[fam](arr[:, 0], arr[:, 1], th)
    else:
        out = _archimedean_cdf_nd(fam, arr, th)
    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if single else out


def _frank_cdf_pos(u, v, th):
    # -log(D / (1 - e^-th)) / th, with D = e^-th*u (1 - e^-th*v) + e^-th*v (1 - e^-th*(1-v))
    with np.errstate(divide="ignore", invalid="ignore"):
        log_d = np.logaddexp(-th * u + _log1mexp(th * v), -th * v + _log1mexp(th * (1.0 - v)))
        out = -(log_d - _log1mexp(th)) / th
    out = np.where((u == 0) | (v == 0), 0.0, out)
    out = np.where(u == 1, v, out)
    return np.where(v == 1, u, out)


def _frank_cdf(u, v, th):
    if th > 0:
        return _frank_cdf_pos(u, v, th)
    return u - _frank_cdf_pos(u, 1.0 - v, -th)


def _clayton_log_s(lu, lv, th):
    """log(u^-th + v^-th - 1) from log u, log v."""
    a, b = -th * lu, -th * lv
    m = np.maximum(a, b)
    return m + np.log(np.exp(a - m) + np.exp(b - m) - np.exp(-m))


def _clayton_cdf(u, v, th):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = np.exp(-_clayton_log_s(np.log(u), np.log(v), th) / th)
    out = np.where((u == 0) | (v == 0), 0.0, out)
    out = np.where(u == 1, v, out)
    return np.where(v == 1, u, out)


def _gumbel_cdf(u, v, th):
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        x, y = -np.log(u), -np.log(v)
        out = np.exp(-np.power(np.power(x, th) + np.power(y, th), 1.0 / th))
    out = np.where((u == 0) | (v == 0), 0.0, out)
    out = np.where(u == 1, v, out)
    return np.where(v == 1, u, out)


def _joe_cdf(u, v, th):
    a, b = np.power(1.0 - u, th), np.power(1.0 - v, th)
    return 1.0 - np.power(a + b - a * b, 1.0 / th)


def _bvn_cdf(h, k, rho):
    """Standard bivariate normal CDF through Owen's T function."""
    h = np.asarray(h, dtype=float)
    k = np.asarray(k, dtype=float)
    h, k = np.broadcast_arrays(h, k)
    s = math.sqrt((1.0 - rho) * (1.0 + rho))
    out = np.empty(h.shape)
    both0 = (h == 0) & (k == 0)
    out[both0] = 0.25 + math.asin(rho) / (2 * math.pi)

    def t_term(a_, b_):
        # T(a, (b - rho a) / (a s)); a = 0 gives T(0, +-inf) = +-1/4
        res = np.empty(a_.shape)
        zero = a_ == 0
        res[zero] = 0.25 * np.sign(b_[zero])
        nz = ~zero
        res[nz] = special.owens_t(a_[nz], (b_[nz] - rho * a_[nz]) / (a_[nz] * s))
        return res

    rest = ~both0
    hr, kr = h[rest], k[rest]
    beta = np.where((hr * kr < 0) | ((hr * kr == 0) & (hr + kr < 0)), 0.5, 0.0)
    out[rest] = 0.5 * (special.ndtr(hr) + special.ndtr(kr)) - t_term(hr, kr) - t_term(kr, hr) - beta
    return out


def _gauss_cdf(u, v, rho):
    inner = (u > 0) & (u < 1) & (v > 0) & (v < 1)
    out = np.where(u == 1, v, np.where(v == 1, u, 0.0))
    if np.any(inner):
        out = out.astype(float)
        out[inner] = _bvn_cdf(special.ndtri(u[inner]), special.ndtri(v[inner]), rho)
    return out


def _fgm_cdf(u, v, th):
    return u * v * (1.0 + th * (1.0 - u) * (1.0 - v))


_CDF2 = {
    Family.FRANK: _frank_cdf,
    Family.CLAYTON: _clayton_cdf,
    Family.GUMBEL: _gumbel_cdf,
    Family.JOE: _joe_cdf,
    Family.GAUSS: _gauss_cdf,
    Family.FGM: _fgm_cdf,
}


def _archimedean_cdf_nd(fam: Family, arr: np.ndarray, th: float) -> np.ndarray:
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if fam is Family.FRANK:
            if th < 0:
                raise CopulaParameterError("Frank copula with d > 2 requires theta > 0")
            terms = np.expm1(-th * arr) / np.expm1(-th)
            out = -np.log1p(np.expm1(-th) * np.prod(terms, axis=1)) / th
        elif fam is Family.CLAYTON:
            out = np.power(np.sum(np.power(arr, -th) - 1.0, axis=1) + 1.0, -1.0 / th)
        elif fam is Family.GUMBEL:
            out = np.exp(-np.power(np.sum(np.power(-np.log(arr), th), axis=1), 1.0 / th))
        elif fam is Family.JOE:
            out = 1.0 - np.power(1.0 - np.prod(1.0 - np.power(1.0 - arr, th), axis=1), 1.0 / th)
        else:
            raise ValueError(f"{fam.value} copula is bivariate only")
    return np.where(np.any(arr == 0, axis=1), 0.0, out)


# ---------------------------------------------------------------------------
# Log-density and score
# ---------------------------------------------------------------------------

def _frank_pos_terms(u, v, th):
    """Pieces of the Frank log-density for theta > 0."""
    log_d = np.logaddexp(-th * u + _log1mexp(th * v), -th * v + _log1mexp(th * (1.0 - v)))
    logc = math.log(th) + float(_log1mexp(th)) - th * (u + v) - 2.0 * log_d
    return logc, log_d


def _frank_logpdf(u, v, th):
    if abs(th) < _FRANK_SMALL:
        return np.log1p(0.5 * th * (1 - 2 * u) * (1 - 2 * v))
    if th < 0:
        v, th = 1.0 - v, -th
    return _frank_pos_terms(u, v, th)[0]


def _frank_score(u, v, th):
    if abs(th) < _FRANK_SMALL:
        return 0.5 * (1 - 2 * u) * (1 - 2 * v)
    sign = 1.0
    if th < 0:
        v, th, sign = 1.0 - v, -th, -1.0
    # D(th) = e^{-th u} + e^{-th v} - e^{-th (u+v)} - e^{-th}; scale by e^{th min(u,v)}
    m = np.minimum(u, v)
    eu, ev = np.exp(-th * (u - m)), np.exp(-th * (v - m))
    euv, e1 = np.exp(-th * (u + v - m)), np.exp(-th * (1.0 - m))
    d_scaled = eu + ev - euv - e1
    dd_scaled = -u * eu - v * ev + (u + v) * euv + e1
    g = 1.0 / th + math.exp(-th) / -math.expm1(-th) - (u + v) - 2.0 * dd_scaled / d_scaled
    return sign * g


def _clayton_logpdf(u, v, th):
    lu, lv = np.log(u), np.log(v)
    return math.log1p(th) - (1 + th) * (lu + lv) - (2 + 1 / th) * _clayton_log_s(lu, lv, th)


def _clayton_score(u, v, th):
    lu, lv = np.log(u), np.log(v)
    a, b = -th * lu, -th * lv
    m = np.maximum(a, b)
    ea, eb = np.exp(a - m), np.exp(b - m)
    bracket = ea + eb - np.exp(-m)
    log_s = m + np.log(bracket)
    ds_over_s = (-ea * lu - eb * lv) / bracket
    return 1 / (1 + th) - lu - lv + log_s / th**2 - (2 + 1 / th) * ds_over_s


def _gumbel_parts(u, v, th):
    lx, ly = np.log(-np.log(u)), np.log(-np.log(v))
    log_w = np.logaddexp(th * lx, th * ly)
    big_a = np.exp(log_w / th)
    return lx, ly, log_w, big_a


def _gumbel_logpdf(u, v, th):
    lx, ly, log_w, big_a = _gumbel_parts(u, v, th)
    return (-big_a - np.log(u) - np.log(v) + (th - 1) * (lx + ly)
            + (1 / th - 2) * log_w + np.log(big_a + th - 1))


def _gumbel_score(u, v, th):
    lx, ly, log_w, big_a = _gumbel_parts(u, v, th)
    dw_over_w = np.exp(th * lx - log_w) * lx + np.exp(th * ly - log_w) * ly
    d_a = big_a * (-log_w / th**2 + dw_over_w / th)
    return (-d_a + lx + ly - log_w / th**2 + (1 / th - 2) * dw_over_w
            + (d_a + 1) / (big_a + th - 1))


def _joe_parts(u, v, th):
    lu_, lv_ = np.log1p(-u), np.log1p(-v)
    la, lb = th * lu_, th * lv_
    a, b = np.exp(la), np.exp(lb)
    log_s = np.logaddexp(la, lb + np.log1p(-a))
    return lu_, lv_, la, lb, a, b, log_s


def _joe_logpdf(u, v, th):
    lu_, lv_, _, _, _, _, log_s = _joe_parts(u, v, th)
    return (1 / th - 2) * log_s + (th - 1) * (lu_ + lv_) + np.log(th - 1 + np.exp(log_s))


def _joe_score(u, v, th):
    lu_, lv_, la, lb, a, b, log_s = _joe_parts(u, v, th)
    s = np.exp(log_s)
    ds_over_s = np.exp(la - log_s) * lu_ * (1 - b) + np.exp(lb - log_s) * lv_ * (1 - a)
    ds = ds_over_s * s
    return -log_s / th**2 + (1 / th - 2) * ds_over_s + lu_ + lv_ + (1 + ds) / (th - 1 + s)


def _gauss_logpdf(u, v, rho):
    x, y = special.ndtri(u), special.ndtri(v)
    om = (1 - rho) * (1 + rho)
    return -0.5 * math.log(om) - (rho**2 * (x**2 + y**2) - 2 * rho * x * y) / (2 * om)


def _gauss_score(u, v, rho):
    x, y = special.ndtri(u), special.ndtri(v)
    om = (1 - rho) * (1 + rho)
    s, p = x**2 + y**2, x * y
    return rho / om - (rho * s - p * (1 + rho**2)) / om**2


def _fgm_logpdf(u, v, th):
    return np.log1p(th * (1 - 2 * u) * (1 - 2 * v))


def _fgm_score(u, v, th):
    k = (1 - 2 * u) * (1 - 2 * v)
    return k / (1 + th * k)


_LOGPDF = {
    Family.FRANK: _frank_logpdf,
    Family.CLAYTON: _clayton_logpdf,
    Family.GUMBEL: _gumbel_logpdf,
    Family.JOE: _joe_logpdf,
    Family.GAUSS: _gauss_logpdf,
    Family.FGM: _fgm_logpdf,
}

_SCORE = {
    Family.FRANK: _frank_score,
    Family.CLAYTON: _clayton_score,
    Family.GUMBEL: _gumbel_score,
    Family.JOE: _joe_score,
    Family.GAUSS: _gauss_score,
    Family.FGM: _fgm_score,
}


def copula_log_density(spec: CopulaSpec, u) -> np.ndarray | float:
    """``log c(u | theta)`` for bivariate ``u`` (clamped to the open square)."""
    arr, single = _as_pairs(u)
    _bivariate(spec, arr)
    if spec.family is Family.INDEPENDENCE:
        out = np.zeros(arr.shape[0])
    else:
        arr = _clamp(arr)
        with np.errstate(divide="ignore", over="ignore", under="ignore"):
            out = _LOGPDF[spec.family](arr[:, 0], arr[:, 1], spec.theta)
    return float(out[0]) if single else out


def copula_score(spec: CopulaSpec, u) -> np.ndarray | float:
    """Analytic ``d/dtheta log c(u | theta)``."""
    arr, single = _as_pairs(u)
    _bivariate(spec, arr)
    if spec.family is Family.INDEPENDENCE:
        out = np.zeros(arr.shape[0])
    else:
        arr = _clamp(arr)
        with np.errstate(over="ignore", under="ignore"):
            out = _SCORE[spec.family](arr[:, 0], arr[:, 1], spec.theta)
    return float(out[0]) if single else out


# ---------------------------------------------------------------------------
# Kendall's tau
# ---------------------------------------------------------------------------

def _debye1(x: float) -> float:
    if x == 0:
        return 1.0
    val, _ = integrate.quad(lambda t: t * math.exp(-t) / -math.expm1(-t) if t != 0 else 1.0, 0.0, abs(x),
                            epsabs=1e-14, epsrel=1e-13, limit=200)
    d = val / abs(x)
    return d if x > 0 else d + abs(x) / 2.0


def _frank_tau(th: float) -> float:
    if abs(th) < 1e-5:
        return th / 9.0
    return 1.0 - 4.0 / th + 4.0 * _debye1(th) / th


def _joe_tau(th: float) -> float:
    if th == 1.0:
        return 0.0

    def integrand(t):
        s = (1.0 - t) ** th
        if s >= 1.0:
            return 0.0
        return math.log1p(-s) * (1.0 - s) / (th * (1.0 - t) ** (th - 1.0))

    val, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=200)
    return 1.0 + 4.0 * val


def theta_to_tau(spec: CopulaSpec) -> float:
    fam, th = spec.family, spec.theta
    if fam is Family.INDEPENDENCE:
        return 0.0
    if fam is Family.FRANK:
        return _frank_tau(th)
    if fam is Family.CLAYTON:
        return th / (th + 2.0)
    if fam is Family.GUMBEL:
        return 1.0 - 1.0 / th
    if fam is Family.JOE:
        return _joe_tau(th)
    if fam is Family.GAUSS:
        return 2.0 / math.pi * math.asin(th)
    return 2.0 * th / 9.0


def tau_range(family) -> tuple[float, float, bool]:
    """``(low, high, closed)`` attainable Kendall tau interval of a family."""
    fam = Family.parse(family)
    if fam is Family.INDEPENDENCE:
        return 0.0, 0.0, True
    if fam is Family.FGM:
        return -2.0 / 9.0, 2.0 / 9.0, True
    if fam is Family.CLAYTON:
        return 0.0, 1.0, False
    if fam in (Family.GUMBEL, Family.JOE):
        return 0.0, 1.0, False  # tau = 0 attained at theta = 1
    if fam is Family.FRANK:
        return _frank_tau(-FRANK_THETA_LIMIT), _frank_tau(FRANK_THETA_LIMIT), True
    return -1.0, 1.0, False


def tau_to_theta(family, tau: float) -> CopulaSpec:
    """Invert Kendall's tau for ``family``; raises for unattainable tau."""
    fam = Family.parse(family)
    tau = float(tau)
    lo, hi, closed = tau_range(fam)
    attainable = (lo <= tau <= hi) if closed else (lo < tau < hi)
    if fam in (Family.GUMBEL, Family.JOE) and tau == 0.0:
        attainable = True
    if not attainable:
        raise CopulaParameterError(f"tau={tau} is not attainable by the {fam.value} family")
    if fam is Family.INDEPENDENCE:
        return CopulaSpec(fam)
    if fam is Family.CLAYTON:
        return CopulaSpec(fam, 2.0 * tau / (1.0 - tau))
    if fam is Family.GUMBEL:
        return CopulaSpec(fam, 1.0 / (1.0 - tau))
    if fam is Family.GAUSS:
        return CopulaSpec(fam, math.sin(math.pi * tau / 2.0))
    if fam is Family.FGM:
        return CopulaSpec(fam, min(1.0, max(-1.0, 4.5 * tau)))
    if fam is Family.JOE:
        if tau == 0.0:
            return CopulaSpec(fam, 1.0)
        hi_th = 2.0
        while _joe_tau(hi_th) < tau:
            hi_th *= 2.0
        th = optimize.brentq(lambda x: _joe_tau(x) - tau, 1.0, hi_th, xtol=1e-14, rtol=1e-15)
        return CopulaSpec(fam, th)
    # Frank: bisection on [-745, 745]
    if tau == 0.0:
        return CopulaSpec(fam, 0.0)
    a, b = (0.0, FRANK_THETA_LIMIT) if tau > 0 else (-FRANK_THETA_LIMIT, 0.0)
    th = optimize.brentq(lambda x: _frank_tau(x) - tau, a, b, xtol=1e-13, rtol=1e-15, maxiter=500)
    return CopulaSpec(fam, th)


# ---------------------------------------------------------------------------
# Sampling by conditional inversion
# ---------------------------------------------------------------------------

def _frank_h(u, v, th):
    if th < 0:
        return 1.0 - _frank_h(u, 1.0 - v, -th)
    log_d = np.logaddexp(-th * u + _log1mexp(th * v), -th * v + _log1mexp(th * (1.0 - v)))
    return np.clip(np.exp(-th * u + _log1mexp(th * v) - log_d), 0.0, 1.0)


def h_function(spec: CopulaSpec, u, v) -> np.ndarray:
    """Conditional CDF ``P(V <= v | U = u) = dC(u, v)/du``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    fam, th = spec.family, spec.theta
    with np.errstate(divide="ignore", over="ignore", invalid="ignore", under="ignore"):
        if fam is Family.INDEPENDENCE or (fam is Family.FRANK and th == 0):
            return v.copy()
        if fam is Family.FRANK:
            return _frank_h(u, v, th)
        if fam is Family.CLAYTON:
            return np.power(u, -th - 1) * np.power(np.power(u, -th) + np.power(v, -th) - 1, -1 / th - 1)
        if fam is Family.GUMBEL:
            x, y = -np.log(u), -np.log(v)
            w = np.power(x, th) + np.power(y, th)
            c = np.exp(-np.power(w, 1 / th))
            return c * np.power(w, 1 / th - 1) * np.power(x, th - 1) / u
        if fam is Family.JOE:
            a, b = np.power(1 - u, th), np.power(1 - v, th)
            s = a + b - a * b
            return np.power(s, 1 / th - 1) * np.power(1 - u, th - 1) * (1 - b)
        if fam is Family.GAUSS:
            x, y = special.ndtri(u), special.ndtri(v)
            return special.ndtr((y - th * x) / math.sqrt(1 - th * th))
        return v * (1 + th * (1 - 2 * u) * (1 - v))


def h_inverse(spec: CopulaSpec, u, w) -> np.ndarray:
    """Solve ``h(v | u) = w`` for ``v``."""
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    fam, th = spec.family, spec.theta
    if fam is Family.INDEPENDENCE or (fam is Family.FRANK and th == 0):
        return w.copy()
    if fam is Family.FRANK:
        # e^{-th v} = ((1-w) e^{-th u} + w e^{-th}) / (w + (1-w) e^{-th u}), in log space
        with np.errstate(divide="ignore"):
            lw, l1w = np.log(w), np.log1p(-w)
            num = np.logaddexp(l1w - th * u, lw - th)
            den = np.logaddexp(lw, l1w - th * u)
        return np.clip(-(num - den) / th, 0.0, 1.0)
    if fam is Family.CLAYTON:
        with np.errstate(over="ignore"):
            inner = np.power(u, -th) * (np.power(w, -th / (1 + th)) - 1) + 1
            return np.power(inner, -1 / th)
    if fam is Family.GAUSS:
        return special.ndtr(th * special.ndtri(u) + math.sqrt(1 - th * th) * special.ndtri(w))
    if fam is Family.FGM:
        a = th * (1 - 2 * u)
        safe = np.abs(a) > 1e-12
        a_s = np.where(safe, a, 1.0)
        disc = np.sqrt(np.maximum((1 + a_s) ** 2 - 4 * a_s * w, 0.0))
        return np.where(safe, (1 + a_s - disc) / (2 * a_s), w)
    # Gumbel/Joe: vectorised bisection, h is increasing in v
    lo, hi = np.zeros_like(w), np.ones_like(w)
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        below = h_function(spec, u, mid) < w
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def copula_sample(spec: CopulaSpec, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` pairs from the copula by conditional inversion."""
    u = rng.random(count)
    w = rng.random(count)
    v = h_inverse(spec, u, w)
    return np.column_stack([u, v])
