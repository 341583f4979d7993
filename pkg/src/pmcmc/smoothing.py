"""Fixed-lag smoothing over the filter genealogy.

Estimates the gradient and negative Hessian of the log-posterior from the
particle system of a single filter pass.  The two-step smoothing marginal
at time t is approximated by the weighted ancestors of the particles alive
at the anchor time min(t + lag, T); the Hessian additionally uses running
per-lineage score sums propagated by the filter recursion.  All estimators
are pure functions of (theta, filter output, lag).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .filtering import FilterCollapseError, FilterConfig, FilterOutput, run_filter
from .models.base import StateSpaceModel, step_hessian, step_score
from .validation import check_theta


@dataclass(frozen=True)
class PosteriorInfo:
    """Likelihood, gradient and negative-Hessian estimates from one filter run.

    ``neg_hessian`` is the post-regularization matrix (or the raw one when
    regularization was deferred to the chain); ``raw_neg_hessian`` and
    ``was_pd`` record the estimate before any adjustment.  Fields beyond
    the log-likelihood are None when not requested or when the filter
    collapsed (log_likelihood == -inf).
    """

    log_likelihood: float
    gradient: Optional[np.ndarray]
    neg_hessian: Optional[np.ndarray]
    raw_neg_hessian: Optional[np.ndarray]
    was_pd: Optional[bool]


def trace_ancestor(output: FilterOutput, particle: int, from_t: int, to_t: int) -> tuple[float, float]:
    """States at (to_t, to_t - 1) of the genealogical path of one particle.

    Walks the ancestor indices backward from (from_t, particle).  With
    from_t == to_t the first element is the particle itself.
    """
    if not (1 <= to_t <= from_t <= output.n_steps):
        raise ValueError("need 1 <= to_t <= from_t <= n_steps")
    if not (0 <= particle < output.n_particles):
        raise ValueError("particle index out of range")
    idx = int(particle)
    for s in range(from_t, to_t, -1):
        idx = int(output.ancestors[s, idx])
    prev = int(output.ancestors[to_t, idx])
    return float(output.particles[to_t, idx]), float(output.particles[to_t - 1, prev])


def lagged_ancestry(ancestors: np.ndarray, lag: int) -> np.ndarray:
    """Ancestor indices under the fixed-lag anchoring, all steps at once.

    Returns idx with shape (T+1, N) where idx[t, i] is the index at time t
    of the time-t ancestor of particle i alive at time min(t + lag, T).
    Row 0 is an identity placeholder; rows 1..T are meaningful.  The
    incremental buffer makes the total cost O(T * lag * N) element reads
    in O(T) vector operations.
    """
    if lag < 1:
        raise ValueError("lag must be a positive integer")
    a = ancestors
    T = a.shape[0] - 1
    n = a.shape[1]
    idx = np.empty((T + 1, n), dtype=np.int64)
    identity = np.arange(n, dtype=np.int64)
    idx[0] = identity

    depth = min(lag, T - 1) + 1 if T > 1 else 1
    # window[j] = index at time (anchor - j) of the ancestor of (anchor, i)
    window = np.empty((depth, n), dtype=np.int64)
    anchor = min(1 + lag, T)
    window[0] = identity
    for j in range(1, depth):
        window[j] = a[anchor - j + 1][window[j - 1]]
    idx[1] = window[anchor - 1]
    scratch = np.empty_like(window)
    for t in range(2, T + 1):
        new_anchor = min(t + lag, T)
        if new_anchor > anchor:
            scratch[0] = identity
            np.take(window[:-1], a[new_anchor], axis=1, out=scratch[1:])
            window, scratch = scratch, window
            anchor = new_anchor
        idx[t] = window[anchor - t]
    return idx


def lineage_scores(model: StateSpaceModel, theta, output: FilterOutput) -> np.ndarray:
    """Running sums of step scores along each particle's ancestral path.

    Shape (T+1, N, dim_theta); row 0 is zero and row t adds the score of
    the step into time t to the parent's running sum.  This is the filter
    recursion for the auxiliary score quantity used by the Hessian
    estimator (the tail of a lineage inherits its ancestor's sum, so early
    path degeneracy affects only a few terms).
    """
    theta = check_theta(theta, model.dim_theta)
    T, n = output.n_steps, output.n_particles
    x_prev = output.particles[np.arange(T)[:, None], output.ancestors[1:]]
    scores = step_score(model, theta, x_prev, output.particles[1:], output.observations[:, None])
    alpha = np.zeros((T + 1, n, model.dim_theta))
    for t in range(1, T + 1):
        alpha[t] = alpha[t - 1][output.ancestors[t]] + scores[t - 1]
    return alpha


def _normalized_weight_rows(log_weights: np.ndarray) -> np.ndarray:
    if not log_weights.any():  # fully adapted: uniform rows
        return np.full(log_weights.shape, 1.0 / log_weights.shape[1])
    m = log_weights.max(axis=1, keepdims=True)
    if not np.all(np.isfinite(m)):
        bad = int(np.flatnonzero(~np.isfinite(m[:, 0]))[0])
        raise ValueError(f"degenerate weights at time {bad}: nothing to normalize")
    w = np.exp(log_weights - m)
    return w / w.sum(axis=1, keepdims=True)


def _anchored_weights(output: FilterOutput, lag: int) -> np.ndarray:
    """Normalized weights at the anchor time min(t + lag, T), per step t."""
    T = output.n_steps
    weights = _normalized_weight_rows(output.log_weights)
    anchors = np.minimum(np.arange(1, T + 1) + lag, T)
    return weights[anchors]


@dataclass(frozen=True)
class _TracedFrame:
    """Anchored ancestors and weights shared by the two estimators."""

    wbar: np.ndarray      # (T, N) normalized anchor-time weights per step
    x_curr: np.ndarray    # (T, N) traced states at time t
    x_prev: np.ndarray    # (T, N) traced states at time t-1
    idx_prev: np.ndarray  # (T, N) particle indices at time t-1
    y_col: np.ndarray     # (T, 1)


def _traced_frame(output: FilterOutput, lag: int) -> _TracedFrame:
    T = output.n_steps
    idx_curr = lagged_ancestry(output.ancestors, lag)
    rows = np.arange(1, T + 1)[:, None]
    ic = idx_curr[1:]
    x_curr = output.particles[rows, ic]
    idx_prev = output.ancestors[rows, ic]
    x_prev = output.particles[np.arange(T)[:, None], idx_prev]
    return _TracedFrame(
        _anchored_weights(output, lag), x_curr, x_prev, idx_prev, output.observations[:, None]
    )


def _gradient_from_frame(model, theta, frame: _TracedFrame, scores: np.ndarray) -> np.ndarray:
    d = model.dim_theta
    contrib = frame.wbar.reshape(-1) @ scores.reshape(-1, d)
    return model.grad_log_prior(theta) + contrib


def _neg_hessian_from_frame(
    model, theta, output, frame: _TracedFrame, scores: np.ndarray, gradient: np.ndarray
) -> tuple[np.ndarray, bool]:
    T = output.n_steps
    d = model.dim_theta
    hess_steps = step_hessian(model, theta, frame.x_prev, frame.x_curr, frame.y_col)
    alpha = lineage_scores(model, theta, output)
    alpha_prev = alpha[np.arange(T)[:, None], frame.idx_prev]

    flat_w = frame.wbar.reshape(-1)
    flat_s = scores.reshape(-1, d)
    weighted_s = flat_w[:, None] * flat_s
    info_curvature = (flat_w @ hess_steps.reshape(-1, d * d)).reshape(d, d)
    outer_ss = weighted_s.T @ flat_s
    cross = weighted_s.T @ alpha_prev.reshape(-1, d)
    info_score = outer_ss + cross + cross.T
    return _assemble_raw(model, theta, gradient, info_curvature, info_score)


def estimate_gradient(model: StateSpaceModel, theta, output: FilterOutput, lag: int) -> np.ndarray:
    """Fixed-lag estimate of the gradient of the log-posterior."""
    theta = check_theta(theta, model.dim_theta)
    if not model.in_support(theta):
        raise ValueError("theta lies outside the prior support")
    if lag < 1:
        raise ValueError("lag must be a positive integer")
    fast = model.smoother_terms()
    if fast is not None:
        wbar = _anchored_weights(output, lag)
        idx_curr = lagged_ancestry(output.ancestors, lag)
        return model.grad_log_prior(theta) + fast[0](theta, output, wbar, idx_curr)
    frame = _traced_frame(output, lag)
    scores = step_score(model, theta, frame.x_prev, frame.x_curr, frame.y_col)
    return _gradient_from_frame(model, theta, frame, scores)


def _assemble_raw(model, theta, gradient, curvature, quadratic) -> tuple[np.ndarray, bool]:
    raw = -model.hess_log_prior(theta) + np.outer(gradient, gradient) - curvature - quadratic
    raw = 0.5 * (raw + raw.T)
    was_pd = bool(np.linalg.eigvalsh(raw)[0] > 0.0)
    return raw, was_pd


def estimate_neg_hessian(
    model: StateSpaceModel, theta, output: FilterOutput, lag: int, gradient
) -> tuple[np.ndarray, bool]:
    """Fixed-lag estimate of the negative Hessian of the log-posterior.

    ``gradient`` must be the matching estimate for the same (theta, output,
    lag).  Returns the symmetric raw estimate and whether it was positive
    definite; regularization is left to the caller.
    """
    theta = check_theta(theta, model.dim_theta)
    gradient = np.asarray(gradient, dtype=float)
    fast = model.smoother_terms()
    if fast is not None:
        wbar = _anchored_weights(output, lag)
        idx_curr = lagged_ancestry(output.ancestors, lag)
        _, curvature, quadratic = fast[1](theta, output, wbar, idx_curr)
        return _assemble_raw(model, theta, gradient, curvature, quadratic)
    frame = _traced_frame(output, lag)
    scores = step_score(model, theta, frame.x_prev, frame.x_curr, frame.y_col)
    return _neg_hessian_from_frame(model, theta, output, frame, scores, gradient)


def regularize_standard(raw: np.ndarray) -> np.ndarray:
    """Shift eigenvalues to make a symmetric matrix positive definite.

    Adds max(0, -2 lambda_min) * I, which mirrors a negative smallest
    eigenvalue to positive and leaves an already-PD matrix untouched
    (idempotent on its own output).  An exactly singular input gets a tiny
    trace-scaled jitter instead, so the result is always invertible.
    """
    m = np.asarray(raw, dtype=float)
    m = 0.5 * (m + m.T)
    lam_min = float(np.linalg.eigvalsh(m)[0])
    if lam_min > 0.0:
        return m
    d = m.shape[0]
    if lam_min == 0.0:
        scale = float(np.trace(m)) / d
        if scale <= 0.0:
            scale = 1.0
        return m + 1e-8 * scale * np.eye(d)
    return m + (-2.0 * lam_min) * np.eye(d)


def compute_posterior_info(
    model: StateSpaceModel,
    theta,
    observations,
    config: FilterConfig,
    lag: int,
    order: int = 2,
    regularization: str = "standard",
    rng: np.random.Generator | None = None,
) -> PosteriorInfo:
    """Run the filter once and derive all requested estimates from it.

    ``order`` gates the work: 0 keeps only the log-likelihood, 1 adds the
    gradient, 2 adds the negative Hessian.  ``regularization`` is either
    "standard" (eigenvalue shift applied here) or "none" (raw estimate
    returned; hybrid chains substitute their own replacement).  A filter
    collapse is reported as log_likelihood -inf with all estimates None.
    """
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    if regularization not in ("standard", "none"):
        raise ValueError("regularization must be 'standard' or 'none'")
    if lag < 1:
        raise ValueError("lag must be a positive integer")
    try:
        output = run_filter(model, theta, observations, config, rng=rng)
    except FilterCollapseError:
        return PosteriorInfo(-np.inf, None, None, None, None)
    if order == 0:
        return PosteriorInfo(output.log_likelihood, None, None, None, None)
    theta = check_theta(theta, model.dim_theta)

    fast = model.smoother_terms()
    if fast is not None:
        wbar = _anchored_weights(output, lag)
        idx_curr = lagged_ancestry(output.ancestors, lag)
        prior_grad = model.grad_log_prior(theta)
        if order == 1:
            gradient = prior_grad + fast[0](theta, output, wbar, idx_curr)
            return PosteriorInfo(output.log_likelihood, gradient, None, None, None)
        contrib, curvature, quadratic = fast[1](theta, output, wbar, idx_curr)
        gradient = prior_grad + contrib
        raw, was_pd = _assemble_raw(model, theta, gradient, curvature, quadratic)
    else:
        frame = _traced_frame(output, lag)
        scores = step_score(model, theta, frame.x_prev, frame.x_curr, frame.y_col)
        gradient = _gradient_from_frame(model, theta, frame, scores)
        if order == 1:
            return PosteriorInfo(output.log_likelihood, gradient, None, None, None)
        raw, was_pd = _neg_hessian_from_frame(model, theta, output, frame, scores, gradient)
    neg = regularize_standard(raw) if regularization == "standard" else raw
    return PosteriorInfo(output.log_likelihood, gradient, neg, raw, was_pd)
