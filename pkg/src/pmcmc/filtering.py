"""Auxiliary particle filter with bootstrap and fully adapted variants.

The filter resamples every step with systematic resampling, records the
full genealogy (particles, ancestor indices, importance and auxiliary
weights), and evaluates the unbiased likelihood estimator entirely in the
log domain.

Array layout: all per-step arrays have T+1 rows.  Row 0 holds the initial
particle system (ancestors row 0 is the identity, importance weights are
uniform); rows 1..T hold the resample/propagate/weight recursion.  For the
bootstrap variant the auxiliary weights equal the importance weights and
row 0 is uniform.  For the fully adapted variant the importance weights
are identically one, and the auxiliary weight at row t is the observation
predictive for y_{t+1} evaluated at the time-t particles; row 0 therefore
carries the predictive of the first observation given the initial state,
which puts the first observation's contribution into the likelihood
product (validated against the exact reference by the unbiasedness tests).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .models.base import StateSpaceModel
from .validation import check_observations, check_theta

_VARIANTS = ("bootstrap", "fully_adapted")


class FilterCollapseError(RuntimeError):
    """Every importance weight vanished at some step."""

    def __init__(self, t: int):
        self.t = t
        super().__init__(f"particle filter collapsed at step {t}: all weights are zero")


class DegenerateWeightsError(ValueError):
    """Resampling weights are unusable (all zero or negative)."""


@dataclass(frozen=True)
class FilterConfig:
    n_particles: int
    variant: str = "bootstrap"
    resampling: str = "systematic"
    seed: int = 0

    def __post_init__(self):
        # N = 1 is legal: the likelihood estimator stays unbiased and the
        # single-particle case anchors several degenerate-case tests.
        if self.n_particles < 1:
            raise ValueError("n_particles must be at least 1")
        if self.variant not in _VARIANTS:
            raise ValueError(f"variant must be one of {_VARIANTS}, got {self.variant!r}")
        if self.resampling != "systematic":
            raise ValueError("only systematic resampling is supported")


@dataclass(frozen=True)
class FilterOutput:
    """Complete particle system of one filter pass (immutable)."""

    particles: np.ndarray        # (T+1, N); row 0 is the initial system
    ancestors: np.ndarray        # (T+1, N) int; row 0 is arange(N)
    log_weights: np.ndarray      # (T+1, N)
    log_aux_weights: np.ndarray  # (T+1, N)
    log_likelihood: float
    observations: np.ndarray = field(repr=False, default=None)

    @property
    def n_steps(self) -> int:
        return self.particles.shape[0] - 1

    @property
    def n_particles(self) -> int:
        return self.particles.shape[1]


def systematic_resample(weights, u: float) -> np.ndarray:
    """Systematic resampling of normalized weights with one uniform draw.

    Positions (u + k) / N for k = 0..N-1 are walked through the cumulative
    weights; the output is sorted non-decreasing and has exactly N entries.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a non-empty vector")
    if not (0.0 <= u < 1.0):
        raise ValueError("u must lie in [0, 1)")
    if np.any(w < 0):
        raise DegenerateWeightsError("negative weights")
    total = w.sum()
    if total == 0.0:
        raise DegenerateWeightsError("all-zero weights")
    if abs(total - 1.0) > 1e-12:
        raise ValueError(f"weights must sum to one (got {total!r})")
    n = w.size
    # Work on the count scale (positions u + k against cumulative N * w):
    # the positions are exact floats, which keeps stratification intact at
    # weight boundaries (e.g. uniform weights map to the identity).
    cum = np.cumsum(n * w)
    cum[-1] = float(n)  # guard against round-off at the top end
    positions = u + np.arange(n)
    return np.searchsorted(cum, positions, side="right").astype(np.int64)


def _normalize(log_w: np.ndarray, t: int) -> tuple[np.ndarray, float]:
    """Exponentiate-and-normalize one row; returns (probs, log-sum-exp)."""
    m = log_w.max()
    if not np.isfinite(m):
        raise FilterCollapseError(t)
    w = np.exp(log_w - m)
    s = w.sum()
    return w / s, float(m + np.log(s))


def run_filter(
    model: StateSpaceModel,
    theta,
    observations,
    config: FilterConfig,
    rng: np.random.Generator | None = None,
) -> FilterOutput:
    """One pass of the auxiliary particle filter.

    Deterministic given (seed, inputs); when ``rng`` is omitted a fresh
    generator is built from ``config.seed``.  Raises FilterCollapseError
    when every weight vanishes at some step (callers treat this as a
    likelihood estimate of -inf).

    Noise is pre-drawn (initial states, one resampling uniform per step,
    one standard normal per particle-step) and fed to a compiled loop when
    the model provides one; models without a compiled loop or without a
    noise-driven propagation run through the generic vectorized loop.
    """
    theta = check_theta(theta, model.dim_theta)
    y = check_observations(observations)
    if not model.in_support(theta):
        raise ValueError("theta lies outside the prior support")
    fa = None
    if config.variant == "fully_adapted":
        fa = model.fully_adapted
        if fa is None:
            raise ValueError("model provides no fully adapted quantities")
    if rng is None:
        rng = np.random.default_rng(config.seed)

    T, N = y.size, config.n_particles
    particles = np.empty((T + 1, N))
    ancestors = np.empty((T + 1, N), dtype=np.int64)
    log_weights = np.zeros((T + 1, N))
    # Bootstrap auxiliary weights equal the importance weights, so the two
    # fields share one buffer; the fully adapted variant keeps them apart.
    log_aux = log_weights if config.variant == "bootstrap" else np.zeros((T + 1, N))

    x0 = model.sample_initial(theta, N, rng)
    us = rng.random(T)

    loop = model.filter_loop(config.variant)
    if loop is not None:
        zs = rng.standard_normal((T, N))
        loglik, fail = loop(theta, y, x0, us, zs, particles, ancestors, log_weights, log_aux)
        if fail:
            raise FilterCollapseError(int(fail))
    else:
        loglik = _generic_loop(
            model, fa, theta, y, x0, us, rng, particles, ancestors, log_weights, log_aux
        )

    return FilterOutput(
        particles=particles,
        ancestors=ancestors,
        log_weights=log_weights,
        log_aux_weights=log_aux,
        log_likelihood=float(loglik),
        observations=y,
    )


def _generic_loop(model, fa, theta, y, x0, us, rng, particles, ancestors, log_weights, log_aux):
    T = y.size
    N = x0.size
    if fa is not None:
        propagate_noise = fa.proposal_from_noise
    else:
        propagate_noise = model.transition_from_noise
    zs = rng.standard_normal((T, N)) if propagate_noise is not None else None

    x = x0
    particles[0] = x
    ancestors[0] = np.arange(N)
    if fa is not None:
        log_aux[0] = fa.log_predictive(theta, x, y[0])

    log_n = np.log(N)
    loglik = 0.0
    for t in range(1, T + 1):
        probs, lse = _normalize(log_aux[t - 1], t)
        loglik += lse - log_n
        a = systematic_resample(probs, us[t - 1])
        x_res = x[a]
        if fa is not None:
            if propagate_noise is not None:
                x = propagate_noise(theta, x_res, y[t - 1], zs[t - 1])
            else:
                x = fa.sample_optimal_proposal(theta, x_res, y[t - 1], rng)
            if t < T:
                log_aux[t] = fa.log_predictive(theta, x, y[t])
            # importance weights stay identically one (log zero rows)
        else:
            if propagate_noise is not None:
                x = propagate_noise(theta, x_res, zs[t - 1])
            else:
                x = model.sample_transition(theta, x_res, rng)
            lw = model.log_observation(theta, x, y[t - 1], t)
            if np.isnan(lw).any():
                raise ValueError(f"observation density returned NaN at step {t}")
            if not np.any(lw > -np.inf):
                raise FilterCollapseError(t)
            log_weights[t] = lw
            if log_aux is not log_weights:
                log_aux[t] = lw
        particles[t] = x
        ancestors[t] = a

    _, lse_final = _normalize(log_weights[T], T)
    return loglik + lse_final - log_n


def estimate_log_likelihood(output: FilterOutput) -> float:
    """Recompute the log of the likelihood estimator from the stored system.

    The estimator multiplies the mean final importance weight with the mean
    auxiliary weight of every step but the last; with bootstrap weights this
    collapses to the product of per-step normalized weight sums.
    """
    T, N = output.n_steps, output.n_particles
    log_n = np.log(N)
    total = 0.0
    for t in range(T):
        _, lse = _normalize(output.log_aux_weights[t], t)
        total += lse - log_n
    _, lse = _normalize(output.log_weights[T], T)
    return float(total + lse - log_n)


def dump_filter_output(output: FilterOutput, directory) -> None:
    """Debug dump as a CSV bundle; not a stability-guaranteed format."""
    import os

    os.makedirs(directory, exist_ok=True)
    np.savetxt(os.path.join(directory, "particles.csv"), output.particles, delimiter=",")
    np.savetxt(os.path.join(directory, "ancestors.csv"), output.ancestors, delimiter=",", fmt="%d")
    T, N = output.log_weights.shape
    with open(os.path.join(directory, "weights.csv"), "w", encoding="ascii") as fh:
        fh.write("t,particle,log_weight,log_aux_weight\n")
        for t in range(T):
            for i in range(N):
                fh.write(
                    f"{t},{i},{output.log_weights[t, i]:.17g},{output.log_aux_weights[t, i]:.17g}\n"
                )
