"""Exact reference computations for the linear Gaussian model.

Kalman log-likelihood, RTS-smoothed moments, the exact score over
(phi, sigma_v), a brute-force dense-covariance likelihood for short
records, an exhaustive grid posterior, and generic central finite
differences used throughout the test suites.  All recursions condition on
the known initial zero state (x_0 = 0 with zero variance).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models.lgss import LgssParams

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class KalmanState:
    """Per-step filter moments for t = 1..T plus the log-likelihood."""

    pred_mean: np.ndarray
    pred_var: np.ndarray
    filt_mean: np.ndarray
    filt_var: np.ndarray
    log_likelihood: float


def kalman_filter(params: LgssParams, observations) -> KalmanState:
    """Run the exact scalar Kalman recursion given x_0 = 0 known."""
    y = np.asarray(observations, dtype=float)
    T = y.size
    phi, q, r = params.phi, params.sigma_v**2, params.sigma_e**2
    pred_mean = np.empty(T)
    pred_var = np.empty(T)
    filt_mean = np.empty(T)
    filt_var = np.empty(T)
    m, p = 0.0, 0.0
    loglik = 0.0
    for t in range(T):
        mp = phi * m
        pp = phi * phi * p + q
        s = pp + r
        resid = y[t] - mp
        loglik += -0.5 * (_LOG_2PI + np.log(s) + resid * resid / s)
        gain = pp / s
        m = mp + gain * resid
        p = (1.0 - gain) * pp
        pred_mean[t], pred_var[t] = mp, pp
        filt_mean[t], filt_var[t] = m, p
    return KalmanState(pred_mean, pred_var, filt_mean, filt_var, float(loglik))


def kalman_loglik(params: LgssParams, observations) -> float:
    """Exact Gaussian log-likelihood of the observation record."""
    return kalman_filter(params, observations).log_likelihood


def rts_moments(params: LgssParams, observations):
    """Smoothed means, variances and lag-one covariances, indexed t = 0..T.

    Returns (mean, var, lag_cov) where lag_cov[t] = Cov(x_t, x_{t-1} | y)
    for t >= 1 (entry 0 is zero).  The t = 0 entries encode the known zero
    initial state.
    """
    state = kalman_filter(params, observations)
    y = np.asarray(observations, dtype=float)
    T = y.size
    phi = params.phi
    # Index 0 holds x_0 (known exactly).
    filt_mean = np.concatenate([[0.0], state.filt_mean])
    filt_var = np.concatenate([[0.0], state.filt_var])
    pred_var = np.concatenate([[np.nan], state.pred_var])
    pred_mean = np.concatenate([[np.nan], state.pred_mean])
    mean = filt_mean.copy()
    var = filt_var.copy()
    gain = np.zeros(T + 1)  # gain[t] used to smooth x_t from x_{t+1}
    for t in range(T - 1, -1, -1):
        j = phi * filt_var[t] / pred_var[t + 1]
        mean[t] = filt_mean[t] + j * (mean[t + 1] - pred_mean[t + 1])
        var[t] = filt_var[t] + j * j * (var[t + 1] - pred_var[t + 1])
        gain[t] = j
    lag_cov = np.zeros(T + 1)
    for t in range(1, T + 1):
        lag_cov[t] = gain[t - 1] * var[t]
    return mean, var, lag_cov


def rts_exact_gradient(params: LgssParams, observations) -> np.ndarray:
    """Exact score of the log-likelihood with respect to (phi, sigma_v).

    Smoothed second moments plugged into the complete-data score, i.e. the
    smoothed expectation of the per-step transition score.
    """
    mean, var, lag_cov = rts_moments(params, observations)
    T = len(mean) - 1
    phi, sv = params.phi, params.sigma_v
    e_xx_lag = mean[1:] * mean[:-1] + lag_cov[1:]          # E[x_t x_{t-1} | y]
    e_x2_prev = mean[:-1] ** 2 + var[:-1]                  # E[x_{t-1}^2 | y]
    e_x2_curr = mean[1:] ** 2 + var[1:]                    # E[x_t^2 | y]
    e_resid2 = e_x2_curr - 2.0 * phi * e_xx_lag + phi**2 * e_x2_prev
    g_phi = np.sum(e_xx_lag - phi * e_x2_prev) / sv**2
    g_sv = np.sum(-1.0 / sv + e_resid2 / sv**3)
    assert e_resid2.size == T
    return np.array([g_phi, g_sv])


def dense_joint_loglik(params: LgssParams, observations) -> float:
    """Log-density of y_{1:T} from the dense joint Gaussian (T small)."""
    y = np.asarray(observations, dtype=float)
    T = y.size
    phi, q, r = params.phi, params.sigma_v**2, params.sigma_e**2
    # Cov(x_t, x_s) = q * sum_{k=1..min(s,t)} phi^(t-k) phi^(s-k), x_0 = 0.
    cov = np.empty((T, T))
    for t in range(1, T + 1):
        for s in range(1, t + 1):
            c = q * sum(phi ** (t - k) * phi ** (s - k) for k in range(1, s + 1))
            cov[t - 1, s - 1] = c
            cov[s - 1, t - 1] = c
    cov += r * np.eye(T)
    sign, logdet = np.linalg.slogdet(cov)
    if sign <= 0:
        raise np.linalg.LinAlgError("joint covariance not positive definite")
    alpha = np.linalg.solve(cov, y)
    return float(-0.5 * (T * _LOG_2PI + logdet + y @ alpha))


def grid_posterior(loglik_fn, log_prior_fn, axes) -> np.ndarray:
    """Normalized posterior cell weights on a rectangular grid of centers.

    ``axes`` is a sequence of 1-D coordinate arrays; the returned array has
    shape ``tuple(len(a) for a in axes)`` and sums to one.
    """
    axes = [np.asarray(a, dtype=float) for a in axes]
    shape = tuple(a.size for a in axes)
    log_w = np.empty(shape)
    for idx in np.ndindex(shape):
        theta = np.array([axes[j][idx[j]] for j in range(len(axes))])
        lp = log_prior_fn(theta)
        log_w[idx] = lp + (loglik_fn(theta) if np.isfinite(lp) else 0.0)
    m = np.max(log_w)
    if not np.isfinite(m):
        raise ValueError("posterior vanished on every grid cell")
    w = np.exp(log_w - m)
    return w / w.sum()


def _fd_steps(theta: np.ndarray, h) -> np.ndarray:
    if h is None:
        return 1e-5 * (1.0 + np.abs(theta))
    return np.broadcast_to(np.asarray(h, dtype=float), theta.shape).copy()


def finite_diff(f, theta, h=None) -> np.ndarray:
    """Central differences of f at theta.

    Scalar-valued f yields the gradient (d,); vector-valued f yields the
    Jacobian with the parameter axis last.  Default step is
    1e-5 * (1 + |theta_j|) per coordinate.
    """
    theta = np.asarray(theta, dtype=float)
    steps = _fd_steps(theta, h)
    cols = []
    for j in range(theta.size):
        up, dn = theta.copy(), theta.copy()
        up[j] += steps[j]
        dn[j] -= steps[j]
        f_up, f_dn = np.asarray(f(up), dtype=float), np.asarray(f(dn), dtype=float)
        if not (np.all(np.isfinite(f_up)) and np.all(np.isfinite(f_dn))):
            raise ValueError(f"non-finite evaluation at offset +-{steps[j]} in coordinate {j}")
        cols.append((f_up - f_dn) / (2.0 * steps[j]))
    return np.stack(cols, axis=-1)


def finite_diff_hessian(f, theta, h=None) -> np.ndarray:
    """Nested central differences of a scalar f, symmetrically averaged."""
    theta = np.asarray(theta, dtype=float)
    steps = _fd_steps(theta, h)
    d = theta.size
    hess = np.empty((d, d))

    def shifted(offsets):
        point = theta.copy()
        for j, sign in offsets:
            point[j] += sign * steps[j]
        value = float(f(point))
        if not np.isfinite(value):
            raise ValueError(f"non-finite evaluation at offsets {offsets}")
        return value

    f0 = shifted(())
    for i in range(d):
        hess[i, i] = (shifted(((i, +1), (i, +1))) - 2.0 * f0 + shifted(((i, -1), (i, -1)))) / (
            4.0 * steps[i] ** 2
        )
        for j in range(i + 1, d):
            cross = (
                shifted(((i, +1), (j, +1)))
                - shifted(((i, +1), (j, -1)))
                - shifted(((i, -1), (j, +1)))
                + shifted(((i, -1), (j, -1)))
            ) / (4.0 * steps[i] * steps[j])
            hess[i, j] = cross
            hess[j, i] = cross
    return 0.5 * (hess + hess.T)
