"""Compiled inner loops for the linear Gaussian model.

Mirrors the vectorized reference implementations in lgss.py and
smoothing.py; the filter loops consume pre-drawn noise so the reference
path produces identical output given the same draws.
"""

import numpy as np
from numba import njit

_LOG_2PI = np.log(2.0 * np.pi)


@njit(cache=True)
def _resample(log_aux_row, u, log_n):
    """Normalize one auxiliary-weight row and resample systematically.

    Returns (ancestor indices, log mean weight); the first entry is None
    semantics via an empty array when the row is degenerate (flagged by a
    NaN log mean weight).
    """
    m = np.max(log_aux_row)
    if not np.isfinite(m):
        return np.empty(0, dtype=np.int64), np.nan
    w = np.exp(log_aux_row - m)
    s = np.sum(w)
    lse = m + np.log(s)
    w = w / s
    n = w.size
    cum = np.cumsum(n * w)
    cum[n - 1] = float(n)
    positions = u + np.arange(n)
    idx = np.searchsorted(cum, positions, side="right")
    return idx, lse - log_n


@njit(cache=True)
def fapf_loop(phi, sv, se, y, x0, us, zs, particles, ancestors, log_weights, log_aux):
    """Fully adapted filter loop; importance weights stay identically one."""
    T = y.size
    n = x0.size
    log_n = np.log(n)
    var_pred = sv * sv + se * se
    c_pred = -0.5 * _LOG_2PI - 0.5 * np.log(var_pred)
    var_opt = 1.0 / (1.0 / (sv * sv) + 1.0 / (se * se))
    sd_opt = np.sqrt(var_opt)
    inv_sv2 = 1.0 / (sv * sv)
    inv_se2 = 1.0 / (se * se)

    particles[0] = x0
    for i in range(n):
        ancestors[0, i] = i
        r = y[0] - phi * x0[i]
        log_aux[0, i] = c_pred - 0.5 * r * r / var_pred

    loglik = 0.0
    for t in range(1, T + 1):
        idx, contrib = _resample(log_aux[t - 1], us[t - 1], log_n)
        if np.isnan(contrib):
            return np.nan, t
        loglik += contrib
        yt = y[t - 1]
        for i in range(n):
            a = idx[i]
            xp = particles[t - 1, a]
            mean = var_opt * (phi * xp * inv_sv2 + yt * inv_se2)
            particles[t, i] = mean + sd_opt * zs[t - 1, i]
            ancestors[t, i] = a
        if t < T:
            yn = y[t]
            for i in range(n):
                r = yn - phi * particles[t, i]
                log_aux[t, i] = c_pred - 0.5 * r * r / var_pred
    # final importance weights are all one: their log mean is zero
    return loglik, 0


@njit(cache=True)
def bpf_loop(phi, sv, se, y, x0, us, zs, particles, ancestors, log_weights, log_aux):
    """Bootstrap filter loop.

    The caller passes log_aux aliased to log_weights (bootstrap auxiliary
    weights equal the importance weights), so only log_weights is written.
    """
    T = y.size
    n = x0.size
    log_n = np.log(n)
    c_obs = -0.5 * _LOG_2PI - np.log(se)

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
        m = -np.inf
        for i in range(n):
            a = idx[i]
            x = phi * particles[t - 1, a] + sv * zs[t - 1, i]
            particles[t, i] = x
            ancestors[t, i] = a
            r = (yt - x) / se
            lw = c_obs - 0.5 * r * r
            log_weights[t, i] = lw
            if lw > m:
                m = lw
    # final term: log mean importance weight at T
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
def grad_terms(phi, sv, scale, particles, ancestors, y, wbar, idx_curr):
    """Weighted sum of traced step scores; returns the two components."""
    T1 = particles.shape[0]
    n = particles.shape[1]
    sv2 = sv * sv
    sv3 = sv2 * sv
    g0 = 0.0
    g1 = 0.0
    for t in range(1, T1):
        row_w = wbar[t - 1]
        for i in range(n):
            ic = idx_curr[t, i]
            xc = particles[t, ic]
            ip = ancestors[t, ic]
            xp = particles[t - 1, ip]
            r = xc - phi * xp
            w = row_w[i]
            g0 += w * (r * xp / sv2)
            g1 += w * scale * (-1.0 / sv + r * r / sv3)
    return g0, g1


@njit(cache=True)
def info_terms(phi, sv, scale, particles, ancestors, y, wbar, idx_curr):
    """Gradient, curvature and score-outer-product sums in one fused pass.

    Runs the per-lineage score recursion, then accumulates the traced
    weighted sums of the step score, the step Hessian and the
    score/lineage-score outer products.  Returns the unique entries of the
    three symmetric accumulators.
    """
    T1 = particles.shape[0]
    n = particles.shape[1]
    sv2 = sv * sv
    sv3 = sv2 * sv
    sv4 = sv2 * sv2
    scale2 = scale * scale

    alpha = np.zeros((T1, n, 2))
    for t in range(1, T1):
        for i in range(n):
            a = ancestors[t, i]
            xp = particles[t - 1, a]
            r = particles[t, i] - phi * xp
            alpha[t, i, 0] = alpha[t - 1, a, 0] + r * xp / sv2
            alpha[t, i, 1] = alpha[t - 1, a, 1] + scale * (-1.0 / sv + r * r / sv3)

    g0 = 0.0
    g1 = 0.0
    c00 = 0.0
    c01 = 0.0
    c11 = 0.0
    q00 = 0.0
    q01 = 0.0
    q11 = 0.0
    for t in range(1, T1):
        row_w = wbar[t - 1]
        for i in range(n):
            ic = idx_curr[t, i]
            xc = particles[t, ic]
            ip = ancestors[t, ic]
            xp = particles[t - 1, ip]
            r = xc - phi * xp
            w = row_w[i]
            s0 = r * xp / sv2
            s1 = scale * (-1.0 / sv + r * r / sv3)
            a0 = alpha[t - 1, ip, 0]
            a1 = alpha[t - 1, ip, 1]
            g0 += w * s0
            g1 += w * s1
            c00 += w * (-(xp * xp) / sv2)
            c01 += w * scale * (-2.0 * r * xp / sv3)
            c11 += w * scale2 * (1.0 / sv2 - 3.0 * r * r / sv4)
            q00 += w * (s0 * s0 + 2.0 * s0 * a0)
            q01 += w * (s0 * s1 + s0 * a1 + a0 * s1)
            q11 += w * (s1 * s1 + 2.0 * s1 * a1)
    return g0, g1, c00, c01, c11, q00, q01, q11
