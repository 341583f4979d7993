"""Compiled inner loops for the Poisson count model.

Mirrors the vectorized reference implementations in poisson.py and
smoothing.py; the filter loop consumes pre-drawn noise so the reference
path produces identical output given the same draws.
"""

import math

import numpy as np
from numba import njit

from ._lgss_numba import _resample

_LOG_2PI = np.log(2.0 * np.pi)


@njit(cache=True)
def bpf_loop(phi, sigma, beta, y, x0, us, zs, particles, ancestors, log_weights, log_aux):
    """Bootstrap filter loop for Poisson observations on a log-AR(1) state.

    The caller passes log_aux aliased to log_weights (bootstrap auxiliary
    weights equal the importance weights), so only log_weights is written.
    """
    T = y.size
    n = x0.size
    log_n = np.log(n)
    log_beta = np.log(beta)

    particles[0] = x0
    for i in range(n):
        ancestors[0, i] = i

    loglik = 0.0
    for t in range(1, T + 1):
        idx, contrib = _resample(log_aux[t - 1], us[t - 1], log_n)
        if np.isnan(contrib):
            return np.nan, t
        loglik += contrib
        yt = y[t - 1]
        lgam = math.lgamma(yt + 1.0)
        for i in range(n):
            a = idx[i]
            x = phi * particles[t - 1, a] + sigma * zs[t - 1, i]
            particles[t, i] = x
            ancestors[t, i] = a
            lw = yt * (log_beta + x) - beta * np.exp(x) - lgam
            log_weights[t, i] = lw
    row = log_weights[T]
    m = np.max(row)
    if not np.isfinite(m):
        return np.nan, T
    s = 0.0
    for i in range(n):
        s += np.exp(row[i] - m)
    loglik += m + np.log(s) - log_n
    return loglik, 0


@njit(cache=True)
def grad_terms(phi, sigma, beta, particles, ancestors, y, wbar, idx_curr):
    """Weighted sum of traced step scores; returns the three components."""
    T1 = particles.shape[0]
    n = particles.shape[1]
    s2 = sigma * sigma
    s3 = s2 * sigma
    g0 = 0.0
    g1 = 0.0
    g2 = 0.0
    for t in range(1, T1):
        row_w = wbar[t - 1]
        yt = y[t - 1]
        for i in range(n):
            ic = idx_curr[t, i]
            xc = particles[t, ic]
            ip = ancestors[t, ic]
            xp = particles[t - 1, ip]
            r = xc - phi * xp
            w = row_w[i]
            g0 += w * (r * xp / s2)
            g1 += w * (-1.0 / sigma + r * r / s3)
            g2 += w * (yt / beta - np.exp(xc))
    return g0, g1, g2


@njit(cache=True)
def info_terms(phi, sigma, beta, particles, ancestors, y, wbar, idx_curr):
    """Gradient, curvature and score-outer-product sums in one fused pass."""
    T1 = particles.shape[0]
    n = particles.shape[1]
    s2 = sigma * sigma
    s3 = s2 * sigma
    s4 = s2 * s2
    b2 = beta * beta

    alpha = np.zeros((T1, n, 3))
    for t in range(1, T1):
        yt = y[t - 1]
        for i in range(n):
            a = ancestors[t, i]
            xp = particles[t - 1, a]
            xc = particles[t, i]
            r = xc - phi * xp
            alpha[t, i, 0] = alpha[t - 1, a, 0] + r * xp / s2
            alpha[t, i, 1] = alpha[t - 1, a, 1] + (-1.0 / sigma + r * r / s3)
            alpha[t, i, 2] = alpha[t - 1, a, 2] + (yt / beta - np.exp(xc))

    grad = np.zeros(3)
    curv = np.zeros((3, 3))
    quad = np.zeros((3, 3))
    for t in range(1, T1):
        row_w = wbar[t - 1]
        yt = y[t - 1]
        for i in range(n):
            ic = idx_curr[t, i]
            xc = particles[t, ic]
            ip = ancestors[t, ic]
            xp = particles[t - 1, ip]
            r = xc - phi * xp
            w = row_w[i]
            s0 = r * xp / s2
            s1 = -1.0 / sigma + r * r / s3
            sb = yt / beta - np.exp(xc)
            a0 = alpha[t - 1, ip, 0]
            a1 = alpha[t - 1, ip, 1]
            a2 = alpha[t - 1, ip, 2]
            grad[0] += w * s0
            grad[1] += w * s1
            grad[2] += w * sb
            curv[0, 0] += w * (-(xp * xp) / s2)
            curv[0, 1] += w * (-2.0 * r * xp / s3)
            curv[1, 1] += w * (1.0 / s2 - 3.0 * r * r / s4)
            curv[2, 2] += w * (-yt / b2)
            quad[0, 0] += w * (s0 * s0 + 2.0 * s0 * a0)
            quad[0, 1] += w * (s0 * s1 + s0 * a1 + a0 * s1)
            quad[0, 2] += w * (s0 * sb + s0 * a2 + a0 * sb)
            quad[1, 1] += w * (s1 * s1 + 2.0 * s1 * a1)
            quad[1, 2] += w * (s1 * sb + s1 * a2 + a1 * sb)
            quad[2, 2] += w * (sb * sb + 2.0 * sb * a2)
    curv[1, 0] = curv[0, 1]
    curv[2, 0] = curv[0, 2]
    curv[2, 1] = curv[1, 2]
    quad[1, 0] = quad[0, 1]
    quad[2, 0] = quad[0, 2]
    quad[2, 1] = quad[1, 2]
    return grad, curv, quad
