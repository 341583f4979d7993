"""Particle Metropolis-Hastings on the extended parameter space.

Three proposal variants share one chain loop: a Gaussian random walk
(pmh0), a Langevin-type proposal drifting along the estimated gradient
(pmh1), and a Newton-type proposal whose drift and covariance use the
estimated negative Hessian (pmh2).  Likelihood, gradient and Hessian
estimates all come from a single filter pass per proposed parameter; on
rejection the stored estimates are carried over and the filter is not
re-run for the current state.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np
from scipy.linalg import solve_triangular

from .models.base import StateSpaceModel
from .filtering import FilterConfig
from .smoothing import PosteriorInfo, compute_posterior_info, regularize_standard
from .validation import check_observations, check_spd, check_theta, cholesky_with_jitter

_LOG_2PI = float(np.log(2.0 * np.pi))
_VARIANTS = ("pmh0", "pmh1", "pmh2")


class ChainStartupError(RuntimeError):
    """The filter collapsed at the initial parameter value."""


@dataclass(frozen=True)
class StandardPolicy:
    """Non-PD Hessian estimates are shifted by the eigenvalue rule."""


@dataclass(frozen=True)
class HybridPolicy:
    """Non-PD estimates are replaced from recent chain history.

    During the first ``burn_in`` iterations a non-PD estimate rejects the
    proposed parameter outright; afterwards the negative Hessian is
    replaced by the inverse sample covariance of the most recent ``window``
    post-burn-in samples.
    """

    window: int
    burn_in: int

    def __post_init__(self):
        if self.window < 2:
            raise ValueError("hybrid window must be at least 2")
        if self.burn_in < 0:
            raise ValueError("burn_in must be non-negative")


@dataclass(frozen=True)
class PreconditionedPolicy:
    """Random-walk/Langevin step scaled by a fixed covariance estimate."""

    scale_matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "scale_matrix", check_spd(self.scale_matrix, "scale_matrix"))


Policy = Union[StandardPolicy, HybridPolicy, PreconditionedPolicy]


def step_matrix(step_size, dim: int) -> np.ndarray:
    """Step matrix from a scalar step length (or one per dimension)."""
    s = np.atleast_1d(np.asarray(step_size, dtype=float))
    if s.size == 1:
        return float(s[0]) ** 2 * np.eye(dim)
    if s.size != dim:
        raise ValueError(f"need 1 or {dim} step lengths, got {s.size}")
    if np.any(s <= 0):
        raise ValueError("step lengths must be positive")
    return np.diag(s**2)


@dataclass(frozen=True)
class ProposalSpec:
    """Proposal variant, step matrix and non-PD handling policy."""

    variant: str
    step: np.ndarray
    policy: Policy = field(default_factory=StandardPolicy)

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ValueError(f"variant must be one of {_VARIANTS}, got {self.variant!r}")
        object.__setattr__(self, "step", check_spd(self.step, "step"))
        if isinstance(self.policy, HybridPolicy) and self.variant != "pmh2":
            raise ValueError("the hybrid policy applies to pmh2 only")
        if isinstance(self.policy, PreconditionedPolicy) and self.variant == "pmh2":
            raise ValueError("preconditioning applies to pmh0/pmh1 only")

    @property
    def order(self) -> int:
        return _VARIANTS.index(self.variant)


def _effective_step(spec: ProposalSpec) -> np.ndarray:
    if isinstance(spec.policy, PreconditionedPolicy):
        g = spec.step @ spec.policy.scale_matrix
        return 0.5 * (g + g.T)
    return spec.step


def proposal_mean_cov(spec: ProposalSpec, theta, info: PosteriorInfo) -> tuple[np.ndarray, np.ndarray]:
    """Mean and covariance of the Gaussian proposal anchored at theta."""
    theta = np.asarray(theta, dtype=float)
    step = _effective_step(spec)
    if spec.variant == "pmh0":
        return theta.copy(), step
    if spec.variant == "pmh1":
        return theta + 0.5 * (step @ info.gradient), step
    # pmh2: natural gradient drift and scaled inverse Hessian covariance
    chol = cholesky_with_jitter(info.neg_hessian)
    eye = np.eye(theta.size)
    inv = np.linalg.solve(chol.T, np.linalg.solve(chol, eye))
    cov = spec.step @ inv
    cov = 0.5 * (cov + cov.T)
    mean = theta + 0.5 * (spec.step @ (inv @ info.gradient))
    return mean, cov


def _gaussian_logpdf(x, mean, chol) -> float:
    z = solve_triangular(chol, x - mean, lower=True)
    logdet = np.sum(np.log(np.diag(chol)))
    return float(-0.5 * x.size * _LOG_2PI - logdet - 0.5 * z @ z)


def log_proposal_density(spec: ProposalSpec, theta_to, theta_from, info_from: PosteriorInfo) -> float:
    """Gaussian proposal log-density of theta_to given (theta_from, info)."""
    theta_to = np.asarray(theta_to, dtype=float)
    mean, cov = proposal_mean_cov(spec, theta_from, info_from)
    return _gaussian_logpdf(theta_to, mean, cholesky_with_jitter(cov))


def acceptance_log_ratio(
    theta_prop,
    info_prop: PosteriorInfo,
    theta_curr,
    info_curr: PosteriorInfo,
    spec: ProposalSpec,
    model: StateSpaceModel,
) -> float:
    """Log acceptance ratio before truncation (antisymmetric in its arguments).

    The densities of the auxiliary filter variables cancel, leaving the
    estimated-likelihood-times-prior ratio and the proposal ratio.
    """
    if not model.in_support(np.asarray(theta_prop, dtype=float)):
        return -np.inf
    if info_prop.log_likelihood == -np.inf:
        return -np.inf
    target = (info_prop.log_likelihood + model.log_prior(theta_prop)) - (
        info_curr.log_likelihood + model.log_prior(theta_curr)
    )
    reverse = log_proposal_density(spec, theta_curr, theta_prop, info_prop)
    forward = log_proposal_density(spec, theta_prop, theta_curr, info_curr)
    return float(target + reverse - forward)


def acceptance_log_prob(theta_prop, info_prop, theta_curr, info_curr, spec, model) -> float:
    """Log of the Metropolis-Hastings acceptance probability (<= 0)."""
    return min(0.0, acceptance_log_ratio(theta_prop, info_prop, theta_curr, info_curr, spec, model))


def hybrid_replace(info: PosteriorInfo, window, phase: str) -> Optional[PosteriorInfo]:
    """Handle a non-PD Hessian estimate from chain history.

    PD estimates pass through untouched.  During burn-in a non-PD estimate
    returns None (reject the proposed parameter).  In the stationary phase
    the negative Hessian is replaced by the inverse sample covariance of
    the window; a singular covariance is jittered before inversion, and a
    window with fewer than two distinct samples also returns None.
    """
    if phase not in ("burn_in", "stationary"):
        raise ValueError("phase must be 'burn_in' or 'stationary'")
    if info.was_pd:
        return info
    if phase == "burn_in":
        return None
    w = np.atleast_2d(np.asarray(window, dtype=float))
    if w.shape[0] < 2 or np.unique(w, axis=0).shape[0] < 2:
        return None
    cov = np.atleast_2d(np.cov(w, rowvar=False, ddof=1))
    chol = cholesky_with_jitter(cov)
    eye = np.eye(cov.shape[0])
    inv = np.linalg.solve(chol.T, np.linalg.solve(chol, eye))
    return replace(info, neg_hessian=0.5 * (inv + inv.T))


@dataclass
class ChainTrace:
    """Per-iteration record of one chain; samples[k] is the state after step k+1."""

    samples: np.ndarray          # (M, d)
    accepted: np.ndarray         # (M,) bool
    log_likelihoods: np.ndarray  # (M,) estimate held by the chain state
    log_q_forward: np.ndarray    # (M,) proposal density theta_curr -> proposal (nan if skipped)
    log_q_reverse: np.ndarray    # (M,) proposal density proposal -> theta_curr
    infos: list                  # (M,) PosteriorInfo held by the chain state
    theta_init: np.ndarray
    seed: Optional[int]
    config: dict
    n_filter_runs: int

    @property
    def acceptance_rate(self) -> float:
        return float(np.mean(self.accepted))


def run_chain(
    model: StateSpaceModel,
    observations,
    spec: ProposalSpec,
    filter_config: FilterConfig,
    lag: int,
    n_iter: int,
    theta_init,
    seed: Optional[int] = None,
) -> ChainTrace:
    """Run one particle Metropolis-Hastings chain for n_iter steps.

    One filter pass per in-support proposal (plus one at theta_init);
    rejected iterations carry the stored estimates over unchanged.  Three
    independent generator substreams drive the filter, the proposal draws
    and the accept draws, so switching variants leaves unrelated draws
    untouched.
    """
    y = check_observations(observations)
    theta = check_theta(theta_init, model.dim_theta)
    if n_iter < 1:
        raise ValueError("n_iter must be at least 1")
    if not model.in_support(theta):
        raise ValueError("theta_init lies outside the prior support")
    dim = model.dim_theta
    order = spec.order
    hybrid = isinstance(spec.policy, HybridPolicy)
    regularization = "none" if hybrid else "standard"

    filter_rng, prop_rng, accept_rng = [
        np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3)
    ]

    info = compute_posterior_info(
        model, theta, y, filter_config, lag, order=order, regularization=regularization,
        rng=filter_rng,
    )
    n_filter_runs = 1
    if info.log_likelihood == -np.inf:
        raise ChainStartupError("filter collapsed at theta_init")
    if hybrid and not info.was_pd:
        # No history exists for the initial state; fall back to the shift rule.
        info = replace(info, neg_hessian=regularize_standard(info.raw_neg_hessian))

    samples = np.empty((n_iter, dim))
    accepted = np.zeros(n_iter, dtype=bool)
    log_liks = np.empty(n_iter)
    log_q_fwd = np.full(n_iter, np.nan)
    log_q_rev = np.full(n_iter, np.nan)
    infos: list[PosteriorInfo] = []

    for k in range(1, n_iter + 1):
        mean, cov = proposal_mean_cov(spec, theta, info)
        chol = cholesky_with_jitter(cov)
        proposal = mean + chol @ prop_rng.standard_normal(dim)
        omega = accept_rng.uniform()
        if model.in_support(proposal):
            cand = compute_posterior_info(
                model, proposal, y, filter_config, lag,
                order=order, regularization=regularization, rng=filter_rng,
            )
            n_filter_runs += 1
            if cand.log_likelihood > -np.inf:
                if hybrid and not cand.was_pd:
                    phase = "burn_in" if k <= spec.policy.burn_in else "stationary"
                    lo = max(spec.policy.burn_in, k - 1 - spec.policy.window)
                    cand = hybrid_replace(cand, samples[lo : k - 1], phase)
                if cand is not None:
                    fwd = _gaussian_logpdf(proposal, mean, chol)
                    rev = log_proposal_density(spec, theta, proposal, cand)
                    ratio = (
                        cand.log_likelihood
                        + model.log_prior(proposal)
                        - info.log_likelihood
                        - model.log_prior(theta)
                        + rev
                        - fwd
                    )
                    log_q_fwd[k - 1] = fwd
                    log_q_rev[k - 1] = rev
                    if np.log(omega) < min(0.0, ratio):
                        theta = np.asarray(proposal, dtype=float)
                        info = cand
                        accepted[k - 1] = True
        samples[k - 1] = theta
        log_liks[k - 1] = info.log_likelihood
        infos.append(info)

    snapshot = {
        "variant": spec.variant,
        "step": spec.step.tolist(),
        "policy": type(spec.policy).__name__,
        "n_particles": filter_config.n_particles,
        "filter_variant": filter_config.variant,
        "lag": lag,
        "n_iter": n_iter,
    }
    return ChainTrace(
        samples=samples,
        accepted=accepted,
        log_likelihoods=log_liks,
        log_q_forward=log_q_fwd,
        log_q_reverse=log_q_rev,
        infos=infos,
        theta_init=np.asarray(theta_init, dtype=float),
        seed=seed,
        config=snapshot,
        n_filter_runs=n_filter_runs,
    )


def save_chain_csv(trace: ChainTrace, path, param_names=None) -> None:
    """Write a chain as CSV: iteration, parameters, accepted, log_likelihood."""
    m, d = trace.samples.shape
    if param_names is None:
        param_names = [f"theta_{j + 1}" for j in range(d)]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("iteration," + ",".join(param_names) + ",accepted,log_likelihood\n")
        for k in range(m):
            values = ",".join(f"{v:.17g}" for v in trace.samples[k])
            fh.write(f"{k + 1},{values},{int(trace.accepted[k])},{trace.log_likelihoods[k]:.17g}\n")


def load_chain_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read back a chain CSV; returns (samples, accepted, log_likelihoods)."""
    rows = []
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip().split(",")
        if header[0] != "iteration" or header[-2:] != ["accepted", "log_likelihood"]:
            raise ValueError(f"unexpected chain header {header!r}")
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(v) for v in line.split(",")])
    data = np.asarray(rows)
    if data.size == 0:
        raise ValueError("chain file contains no rows")
    return data[:, 1:-2], data[:, -2].astype(bool), data[:, -1]
