"""Scikit-learn style front door for the samplers.

``ParticleMetropolisHastings`` is a ``BaseEstimator``: construction only
stores hyperparameters (so ``get_params``/``set_params``/``clone`` work),
``fit(y)`` runs the chain, and fitted state lives in trailing-underscore
attributes.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator

from .diagnostics import acceptance_rate
from .filtering import FilterConfig
from .models.base import StateSpaceModel
from .sampler import (
    HybridPolicy,
    PreconditionedPolicy,
    ProposalSpec,
    StandardPolicy,
    run_chain,
    step_matrix,
)
from .validation import check_observations


class ParticleMetropolisHastings(BaseEstimator):
    """Posterior sampling for a state space model via particle MCMC.

    Parameters
    ----------
    model : StateSpaceModel
        The model whose parameters are inferred.
    theta_init : array-like
        Chain starting point; must lie inside the prior support.
    variant : {"pmh0", "pmh1", "pmh2"}
        Random walk, gradient-informed, or Hessian-informed proposal.
    step_size : float or array-like
        Proposal step length (one value, or one per parameter).
    n_particles, filter_variant : filter settings.
    lag : fixed-lag smoother lag for the gradient/Hessian estimates.
    n_iter, burn_in : chain length and discarded prefix.
    policy : {"standard", "hybrid"} or a precomputed covariance matrix
        Non-PD Hessian handling for pmh2, or a preconditioning matrix for
        pmh0/pmh1.
    hybrid_window : history window length for the hybrid policy.
    seed : master seed for the chain's generator substreams.
    """

    def __init__(
        self,
        model: Optional[StateSpaceModel] = None,
        theta_init=None,
        variant: str = "pmh2",
        step_size=1.0,
        n_particles: int = 100,
        filter_variant: str = "bootstrap",
        lag: int = 12,
        n_iter: int = 10000,
        burn_in: int = 0,
        policy="standard",
        hybrid_window: int = 2500,
        seed: Optional[int] = None,
    ):
        self.model = model
        self.theta_init = theta_init
        self.variant = variant
        self.step_size = step_size
        self.n_particles = n_particles
        self.filter_variant = filter_variant
        self.lag = lag
        self.n_iter = n_iter
        self.burn_in = burn_in
        self.policy = policy
        self.hybrid_window = hybrid_window
        self.seed = seed

    def _build_spec(self) -> ProposalSpec:
        dim = self.model.dim_theta
        step = step_matrix(self.step_size, dim)
        if isinstance(self.policy, str):
            if self.policy == "standard":
                policy = StandardPolicy()
            elif self.policy == "hybrid":
                policy = HybridPolicy(window=self.hybrid_window, burn_in=self.burn_in)
            else:
                raise ValueError(f"unknown policy {self.policy!r}")
        else:
            policy = PreconditionedPolicy(scale_matrix=np.asarray(self.policy, dtype=float))
        return ProposalSpec(variant=self.variant, step=step, policy=policy)

    def fit(self, y):
        """Run the chain on an observation record y (1-D array-like)."""
        if self.model is None:
            raise ValueError("model must be set before fitting")
        if self.theta_init is None:
            raise ValueError("theta_init must be set before fitting")
        if not (0 <= self.burn_in < self.n_iter):
            raise ValueError("need 0 <= burn_in < n_iter")
        y = check_observations(y)
        spec = self._build_spec()
        config = FilterConfig(
            n_particles=self.n_particles,
            variant=self.filter_variant,
            seed=0 if self.seed is None else self.seed,
        )
        trace = run_chain(
            self.model, y, spec, config, self.lag, self.n_iter, self.theta_init, seed=self.seed
        )
        kept = trace.samples[self.burn_in :]
        self.trace_ = trace
        self.samples_ = kept
        self.acceptance_rate_ = acceptance_rate(trace.accepted[self.burn_in :])
        self.posterior_mean_ = kept.mean(axis=0)
        self.posterior_sd_ = kept.std(axis=0, ddof=1)
        self.n_filter_runs_ = trace.n_filter_runs
        return self
