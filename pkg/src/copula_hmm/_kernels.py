"""Hot loops: log-space forward-backward and empirical-copula counting.

Each kernel has a numba implementation and a pure-numpy twin. The numba path
is used when numba imports cleanly and ``CHMM_DISABLE_NUMBA`` is unset (or
``0``); set ``CHMM_DISABLE_NUMBA=1`` to force the numpy path.
"""

from __future__ import annotations

import os

import numpy as np
from scipy.special import logsumexp

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    _HAVE_NUMBA = False


def numba_enabled() -> bool:
    flag = os.environ.get("CHMM_DISABLE_NUMBA", "").strip().lower()
    return _HAVE_NUMBA and flag in ("", "0", "false", "no")


# ---------------------------------------------------------------------------
# forward-backward
# ---------------------------------------------------------------------------

def _fb_numpy(log_b, log_pi, log_gamma):
    T, K = log_b.shape
    la = np.empty((T, K))
    lb = np.zeros((T, K))
    la[0] = log_pi + log_b[0]
    for t in range(1, T):
        la[t] = logsumexp(la[t - 1][:, None] + log_gamma, axis=0) + log_b[t]
    for t in range(T - 2, -1, -1):
        lb[t] = logsumexp(log_gamma + (log_b[t + 1] + lb[t + 1])[None, :], axis=1)
    return la, lb, float(logsumexp(la[T - 1]))


def _posteriors_numpy(la, lb, log_b, log_gamma, ll):
    T, K = log_b.shape
    u = np.exp(la + lb - ll)
    if T > 1:
        lv = (la[:-1, :, None] + log_gamma[None, :, :]
              + (log_b[1:] + lb[1:])[:, None, :] - ll)
        v = np.exp(lv)
    else:
        v = np.empty((0, K, K))
    return u, v


if _HAVE_NUMBA:

    @numba.njit(cache=True)
    def _lse(x):
        m = -np.inf
        for i in range(x.shape[0]):
            if x[i] > m:
                m = x[i]
        if m == -np.inf:
            return -np.inf
        s = 0.0
        for i in range(x.shape[0]):
            s += np.exp(x[i] - m)
        return m + np.log(s)

    @numba.njit(cache=True)
    def _fb_numba(log_b, log_pi, log_gamma):
        T, K = log_b.shape
        la = np.empty((T, K))
        lb = np.zeros((T, K))
        buf = np.empty(K)
        for k in range(K):
            la[0, k] = log_pi[k] + log_b[0, k]
        for t in range(1, T):
            for k in range(K):
                for j in range(K):
                    buf[j] = la[t - 1, j] + log_gamma[j, k]
                la[t, k] = _lse(buf) + log_b[t, k]
        for t in range(T - 2, -1, -1):
            for j in range(K):
                for k in range(K):
                    buf[k] = log_gamma[j, k] + log_b[t + 1, k] + lb[t + 1, k]
                lb[t, j] = _lse(buf)
        ll = _lse(la[T - 1])
        return la, lb, ll

    @numba.njit(cache=True)
    def _posteriors_numba(la, lb, log_b, log_gamma, ll):
        T, K = log_b.shape
        u = np.empty((T, K))
        for t in range(T):
            for k in range(K):
                u[t, k] = np.exp(la[t, k] + lb[t, k] - ll)
        n = T - 1 if T > 1 else 0
        v = np.empty((n, K, K))
        for t in range(n):
            for j in range(K):
                for k in range(K):
                    v[t, j, k] = np.exp(la[t, j] + log_gamma[j, k] + log_b[t + 1, k] + lb[t + 1, k] - ll)
        return u, v


def forward_backward_kernel(log_b, log_pi, log_gamma, use_numba: bool | None = None):
    """Return ``(u[T,K], v[T-1,K,K], loglik)`` from log emission densities."""
    log_b = np.ascontiguousarray(log_b, dtype=float)
    log_pi = np.ascontiguousarray(log_pi, dtype=float)
    log_gamma = np.ascontiguousarray(log_gamma, dtype=float)
    if use_numba is None:
        use_numba = numba_enabled()
    if use_numba and _HAVE_NUMBA:
        la, lb, ll = _fb_numba(log_b, log_pi, log_gamma)
        if not np.isfinite(ll):
            return None, None, float(ll)
        u, v = _posteriors_numba(la, lb, log_b, log_gamma, ll)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            la, lb, ll = _fb_numpy(log_b, log_pi, log_gamma)
            if not np.isfinite(ll):
                return None, None, float(ll)
            u, v = _posteriors_numpy(la, lb, log_b, log_gamma, ll)
    return u, v, float(ll)


def forward_backward_logs(log_b, log_pi, log_gamma, use_numba: bool | None = None):
    """Unnormalised log forward/backward arrays ``(log_alpha, log_beta)``, each ``(T, K)``."""
    log_b = np.ascontiguousarray(log_b, dtype=float)
    log_pi = np.ascontiguousarray(log_pi, dtype=float)
    log_gamma = np.ascontiguousarray(log_gamma, dtype=float)
    if use_numba is None:
        use_numba = numba_enabled()
    if use_numba and _HAVE_NUMBA:
        la, lb, _ = _fb_numba(log_b, log_pi, log_gamma)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            la, lb, _ = _fb_numpy(log_b, log_pi, log_gamma)
    return la, lb


def forward_loglik_kernel(log_b, log_pi, log_gamma, use_numba: bool | None = None) -> float:
    log_b = np.ascontiguousarray(log_b, dtype=float)
    if use_numba is None:
        use_numba = numba_enabled()
    if use_numba and _HAVE_NUMBA:
        return float(_fb_numba(log_b, np.ascontiguousarray(log_pi, dtype=float),
                               np.ascontiguousarray(log_gamma, dtype=float))[2])
    with np.errstate(divide="ignore"):
        return _fb_numpy(log_b, np.asarray(log_pi, float), np.asarray(log_gamma, float))[2]


# ---------------------------------------------------------------------------
# empirical copula at the sample points
# ---------------------------------------------------------------------------

def _ecop_numpy(u1, u2, chunk=2048):
    n = u1.shape[0]
    out = np.empty(n)
    for s in range(0, n, chunk):
        a = u1[s:s + chunk, None]
        b = u2[s:s + chunk, None]
        out[s:s + chunk] = np.count_nonzero((u1[None, :] <= a) & (u2[None, :] <= b), axis=1)
    return out / n


if _HAVE_NUMBA:

    @numba.njit(cache=True)
    def _ecop_numba(order, ins, query, u1):
        # Fenwick tree over u2 ranks; points enter in u1 order, ties in u1 enter together.
        n = order.shape[0]
        tree = np.zeros(n + 1, dtype=np.int64)
        out = np.empty(n)
        i = 0
        while i < n:
            j = i
            while j + 1 < n and u1[order[j + 1]] == u1[order[i]]:
                j += 1
            for m in range(i, j + 1):
                pos = ins[order[m]]
                while pos <= n:
                    tree[pos] += 1
                    pos += pos & (-pos)
            for m in range(i, j + 1):
                idx = order[m]
                pos = query[idx]
                c = 0
                while pos > 0:
                    c += tree[pos]
                    pos -= pos & (-pos)
                out[idx] = c / n
            i = j + 1
        return out


def empirical_copula_at_points(u, use_numba: bool | None = None) -> np.ndarray:
    """``C_n(u_i) = (1/n) #{j : u_j <= u_i componentwise}`` for each row of ``u``."""
    u = np.asarray(u, dtype=float)
    u1 = np.ascontiguousarray(u[:, 0])
    u2 = np.ascontiguousarray(u[:, 1])
    if use_numba is None:
        use_numba = numba_enabled()
    if not (use_numba and _HAVE_NUMBA):
        return _ecop_numpy(u1, u2)
    sorted2 = np.sort(u2)
    ins = (np.searchsorted(sorted2, u2, side="left") + 1).astype(np.int64)
    query = np.searchsorted(sorted2, u2, side="right").astype(np.int64)
    order = np.argsort(u1, kind="stable").astype(np.int64)
    return _ecop_numba(order, ins, query, u1)
