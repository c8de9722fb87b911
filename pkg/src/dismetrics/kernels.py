"""Hot loops: Gaussian bin masses and Gaussian-mixture log densities.

Each kernel has a numba implementation and a numpy implementation with the
same signature; :func:`bin_masses` and :func:`mixture_logpdf` dispatch on
``DISMETRICS_DISABLE_NUMBA``. Both paths are importable directly so the
benchmark and the tests can compare them.
"""
import math

import numpy as np
from scipy import special as _sp

from ._accel import HAVE_NUMBA, njit, prange
from .special import erf_approx, erf_poly_scalar

RECTANGLE = 0
ERF = 1
ERF_POLY = 2

METHOD_CODES = {"rectangle": RECTANGLE, "erf": ERF, "erf-poly": ERF_POLY}

_LOG_2PI = math.log(2.0 * math.pi)
_SQRT2 = math.sqrt(2.0)
_NUMPY_CHUNK = 1 << 22


def grid_edges(lo, hi, n_bins):
    return lo + (hi - lo) * (np.arange(n_bins + 1) / n_bins)


def clipped_bin_index(values, lo, hi, n_bins):
    idx = np.floor((np.asarray(values, dtype=float) - lo) * (n_bins / (hi - lo)))
    return np.clip(idx, 0, n_bins - 1).astype(np.int64)


# ---------------------------------------------------------------- bin masses


@njit(parallel=True)
def _bin_masses_numba(mu, sigma, lo, hi, n_bins, method):
    n = mu.shape[0]
    out = np.zeros((n, n_bins))
    span = hi - lo
    for r in prange(n):
        m = mu[r]
        s = sigma[r]
        row = out[r]
        if method == 0:
            mx = -np.inf
            for k in range(n_bins):
                c = lo + span * ((k + 0.5) / n_bins)
                u = (c - m) / s
                row[k] = -0.5 * u * u
                if row[k] > mx:
                    mx = row[k]
            for k in range(n_bins):
                row[k] = math.exp(row[k] - mx)
        else:
            scale = s * 1.4142135623730951
            t0 = (lo - m) / scale
            for k in range(n_bins):
                t1 = (lo + span * ((k + 1.0) / n_bins) - m) / scale
                if method == 1:
                    if t0 >= 0.0:
                        g = 0.5 * (math.erfc(t0) - math.erfc(t1))
                    elif t1 <= 0.0:
                        g = 0.5 * (math.erfc(-t1) - math.erfc(-t0))
                    else:
                        g = 1.0 - 0.5 * math.erfc(t1) - 0.5 * math.erfc(-t0)
                else:
                    g = 0.5 * (erf_poly_scalar(t1) - erf_poly_scalar(t0))
                row[k] = g if g > 0.0 else 0.0
                t0 = t1
        total = 0.0
        for k in range(n_bins):
            total += row[k]
        if total > 0.0:
            for k in range(n_bins):
                row[k] /= total
        else:
            j = int(math.floor((m - lo) * (n_bins / span)))
            j = min(max(j, 0), n_bins - 1)
            row[j] = 1.0
    return out


def _bin_masses_numpy(mu, sigma, lo, hi, n_bins, method):
    mu = mu[:, None]
    sigma = sigma[:, None]
    if method == RECTANGLE:
        centers = lo + (hi - lo) * ((np.arange(n_bins) + 0.5) / n_bins)
        logd = -0.5 * ((centers[None, :] - mu) / sigma) ** 2
        out = np.exp(logd - logd.max(axis=1, keepdims=True))
    else:
        t = (grid_edges(lo, hi, n_bins)[None, :] - mu) / (sigma * _SQRT2)
        t0, t1 = t[:, :-1], t[:, 1:]
        if method == ERF:
            upper = 0.5 * _sp.erfc(t)
            lower = 0.5 * _sp.erfc(-t)
            straddle = 1.0 - upper[:, 1:] - lower[:, :-1]
            out = np.where(
                t0 >= 0.0,
                upper[:, :-1] - upper[:, 1:],
                np.where(t1 <= 0.0, lower[:, 1:] - lower[:, :-1], straddle),
            )
        else:
            e = erf_approx(t)
            out = 0.5 * (e[:, 1:] - e[:, :-1])
        out = np.maximum(out, 0.0)
    total = out.sum(axis=1, keepdims=True)
    empty = total[:, 0] <= 0.0
    if empty.any():
        j = clipped_bin_index(mu[empty, 0], lo, hi, n_bins)
        out[empty] = 0.0
        out[np.flatnonzero(empty), j] = 1.0
        total[empty] = 1.0
    return out / total


def bin_masses(mu, sigma, lo, hi, n_bins, method="erf"):
    """Per-posterior bin probabilities, shape ``(len(mu), n_bins)``.

    Rows are renormalized over the grid. A posterior whose mass underflows to
    zero everywhere on the grid is assigned to the (clipped) bin holding its mean.
    """
    code = METHOD_CODES[method] if isinstance(method, str) else int(method)
    mu = np.ascontiguousarray(mu, dtype=np.float64).reshape(-1)
    sigma = np.ascontiguousarray(sigma, dtype=np.float64).reshape(-1)
    if HAVE_NUMBA:
        return _bin_masses_numba(mu, sigma, float(lo), float(hi), int(n_bins), code)
    return _bin_masses_numpy(mu, sigma, float(lo), float(hi), int(n_bins), code)


# ------------------------------------------------------- mixture log density


@njit(parallel=True)
def _mixture_logpdf_numba(z, means, stds):
    n_draws, dim = z.shape
    n = means.shape[0]
    inv = 1.0 / stds
    lognorm = np.empty(n)
    for j in range(n):
        acc = -0.5 * dim * 1.8378770664093453
        for i in range(dim):
            acc -= math.log(stds[j, i])
        lognorm[j] = acc
    log_n = math.log(n)
    out = np.empty(n_draws)
    for m in prange(n_draws):
        mx = -np.inf
        s = 0.0
        for j in range(n):
            t = lognorm[j]
            for i in range(dim):
                u = (z[m, i] - means[j, i]) * inv[j, i]
                t -= 0.5 * u * u
            if t == -np.inf:
                continue
            if t > mx:
                s = s * math.exp(mx - t) + 1.0
                mx = t
            else:
                s += math.exp(t - mx)
        out[m] = mx + math.log(s) - log_n
    return out


def _mixture_logpdf_numpy(z, means, stds):
    n_draws, dim = z.shape
    n = means.shape[0]
    inv = 1.0 / stds
    lognorm = -0.5 * dim * _LOG_2PI - np.log(stds).sum(axis=1)
    out = np.empty(n_draws)
    step = max(1, _NUMPY_CHUNK // max(1, n * dim))
    for start in range(0, n_draws, step):
        zc = z[start:start + step]
        u = (zc[:, None, :] - means[None, :, :]) * inv[None, :, :]
        t = lognorm[None, :] - 0.5 * np.einsum("mnd,mnd->mn", u, u)
        mx = t.max(axis=1, keepdims=True)
        out[start:start + step] = mx[:, 0] + np.log(np.exp(t - mx).sum(axis=1))
    return out - math.log(n)


def mixture_logpdf(z, means, stds):
    """log (1/N) sum_n prod_i N(z_i; means[n, i], stds[n, i]) for each row of ``z``.

    The inner sum is accumulated with a running max shift, so components far
    in the tails never underflow the total.
    """
    z = np.ascontiguousarray(z, dtype=np.float64)
    means = np.ascontiguousarray(means, dtype=np.float64)
    stds = np.ascontiguousarray(stds, dtype=np.float64)
    if z.ndim == 1:
        z = z[:, None]
    if HAVE_NUMBA:
        return _mixture_logpdf_numba(z, means, stds)
    return _mixture_logpdf_numpy(z, means, stds)
