"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np


def check_observations(y) -> np.ndarray:
    """Coerce an observation record to a finite 1-D float array."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise ValueError(f"observations must be one-dimensional, got shape {y.shape}")
    if y.size == 0:
        raise ValueError("observations must contain at least one value")
    if not np.all(np.isfinite(y)):
        raise ValueError("observations contain non-finite values")
    return y


def check_theta(theta, dim: int) -> np.ndarray:
    """Coerce a parameter vector to shape (dim,) and check finiteness."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape != (dim,):
        raise ValueError(f"expected parameter vector of length {dim}, got shape {theta.shape}")
    if not np.all(np.isfinite(theta)):
        raise ValueError("parameter vector contains non-finite values")
    return theta


def check_spd(matrix, name: str = "matrix") -> np.ndarray:
    """Validate that a matrix is symmetric positive definite."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    if not np.allclose(m, m.T, rtol=1e-10, atol=1e-12):
        raise ValueError(f"{name} must be symmetric")
    if np.linalg.eigvalsh(0.5 * (m + m.T))[0] <= 0:
        raise ValueError(f"{name} must be positive definite")
    return m


def cholesky_with_jitter(cov: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, escalating a diagonal jitter on failure.

    Jitter levels are 1e-8, 1e-6 and 1e-4 of the mean diagonal; if all fail
    the LinAlgError propagates.  Round-off guard only; regularized inputs
    should factor on the first attempt.
    """
    cov = 0.5 * (cov + cov.T)
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    scale = max(float(np.mean(np.diag(cov))), np.finfo(float).tiny)
    eye = np.eye(cov.shape[0])
    for level in (1e-8, 1e-6, 1e-4):
        try:
            return np.linalg.cholesky(cov + level * scale * eye)
        except np.linalg.LinAlgError:
            continue
    raise np.linalg.LinAlgError("covariance not positive definite even after jitter escalation")
