"""State space model interface used by the filter, smoother and samplers.

A model bundles the transition kernel f(x_t | x_{t-1}), the observation
kernel g(y_t | x_t), their first and second derivatives with respect to the
parameter vector, samplers, and the parameter prior.  All density and
derivative methods are vectorized: state arguments may be arrays of any
broadcast-compatible shape, and derivative outputs append the parameter
dimension(s) to the broadcast shape.

The initial state distribution carries no parameter derivatives; models
whose initial sampler reads the parameter (for a stationary start) expose
that through ``sample_initial`` only.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


class ModelDomainError(ValueError):
    """A kernel density or derivative evaluated to a non-finite value."""


@dataclass(frozen=True)
class FullyAdapted:
    """Closed-form quantities required by the fully adapted filter.

    ``sample_optimal_proposal(theta, x_prev, y_t, rng)`` draws from the
    one-step optimal proposal p(x_t | y_t, x_{t-1}),
    ``log_optimal_proposal(theta, x_prev, x_curr, y_t)`` evaluates its
    log-density, and ``log_predictive(theta, x_curr, y_next)`` evaluates
    log p(y_{t+1} | x_t).  ``proposal_from_noise(theta, x_prev, y_t, z)``
    optionally maps pre-drawn standard normals through the proposal.
    """

    sample_optimal_proposal: Callable[..., np.ndarray]
    log_optimal_proposal: Callable[..., np.ndarray]
    log_predictive: Callable[..., np.ndarray]
    proposal_from_noise: Optional[Callable[..., np.ndarray]] = None


class StateSpaceModel(ABC):
    """Behavioural interface for a parametrized state space model."""

    dim_theta: int
    param_names: tuple[str, ...]
    fully_adapted: Optional[FullyAdapted] = None

    # Optional fast paths.  ``transition_from_noise(theta, x_prev, z)`` maps
    # pre-drawn standard normals through the transition; the two loop hooks
    # return compiled kernels (or None for the generic vectorized path).
    transition_from_noise: Optional[Callable[..., np.ndarray]] = None

    def filter_loop(self, variant: str):
        """Compiled filter loop for the given variant, or None."""
        return None

    def smoother_terms(self):
        """Compiled smoother accumulators (grad_fn, info_fn), or None."""
        return None

    @abstractmethod
    def log_transition(self, theta, x_prev, x_curr, t: int = 0) -> np.ndarray:
        """log f(x_curr | x_prev) under parameters theta."""

    @abstractmethod
    def log_observation(self, theta, x_curr, y, t: int = 0) -> np.ndarray:
        """log g(y | x_curr) under parameters theta."""

    @abstractmethod
    def grad_log_transition(self, theta, x_prev, x_curr, t: int = 0) -> np.ndarray:
        """Parameter gradient of log f; shape (..., dim_theta)."""

    @abstractmethod
    def grad_log_observation(self, theta, x_curr, y, t: int = 0) -> np.ndarray:
        """Parameter gradient of log g; shape (..., dim_theta)."""

    @abstractmethod
    def hess_log_transition(self, theta, x_prev, x_curr, t: int = 0) -> np.ndarray:
        """Parameter Hessian of log f; shape (..., dim_theta, dim_theta)."""

    @abstractmethod
    def hess_log_observation(self, theta, x_curr, y, t: int = 0) -> np.ndarray:
        """Parameter Hessian of log g; shape (..., dim_theta, dim_theta)."""

    @abstractmethod
    def sample_initial(self, theta, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw n initial states."""

    @abstractmethod
    def sample_transition(self, theta, x_prev, rng: np.random.Generator) -> np.ndarray:
        """Propagate states one step through the transition kernel."""

    @abstractmethod
    def in_support(self, theta) -> bool:
        """Whether theta lies inside the prior support."""

    @abstractmethod
    def log_prior(self, theta) -> float:
        """Log prior density; exactly -inf outside the support."""

    @abstractmethod
    def grad_log_prior(self, theta) -> np.ndarray:
        """Gradient of the log prior inside the support; shape (dim_theta,)."""

    @abstractmethod
    def hess_log_prior(self, theta) -> np.ndarray:
        """Hessian of the log prior inside the support; (dim_theta, dim_theta)."""


def step_score(model: StateSpaceModel, theta, x_prev, x_curr, y, t: int = 0) -> np.ndarray:
    """Parameter score of one complete step: grad log f + grad log g.

    Summed over t this is the gradient of the complete-data log-likelihood.
    """
    gf = model.grad_log_transition(theta, x_prev, x_curr, t)
    gg = model.grad_log_observation(theta, x_curr, y, t)
    out = gf + gg
    if not np.all(np.isfinite(out)):
        kernel = "transition" if not np.all(np.isfinite(gf)) else "observation"
        raise ModelDomainError(f"non-finite {kernel} score at theta={np.asarray(theta)!r}")
    return out


def step_hessian(model: StateSpaceModel, theta, x_prev, x_curr, y, t: int = 0) -> np.ndarray:
    """Parameter Hessian of one complete step: hess log f + hess log g."""
    hf = model.hess_log_transition(theta, x_prev, x_curr, t)
    hg = model.hess_log_observation(theta, x_curr, y, t)
    out = hf + hg
    if not np.all(np.isfinite(out)):
        kernel = "transition" if not np.all(np.isfinite(hf)) else "observation"
        raise ModelDomainError(f"non-finite {kernel} Hessian at theta={np.asarray(theta)!r}")
    return out
