"""Particle MCMC with gradient and Hessian-informed proposals.

Likelihood, gradient and negative-Hessian estimates of the log-posterior
of a state space model are obtained from a single auxiliary particle
filter pass combined with a fixed-lag smoother, and drive random-walk,
Langevin-type and Newton-type Metropolis-Hastings proposals.
"""

from .diagnostics import IactResult, iact, log_l1_error, summarize
from .estimator import ParticleMetropolisHastings
from .filtering import (
    DegenerateWeightsError,
    FilterCollapseError,
    FilterConfig,
    FilterOutput,
    estimate_log_likelihood,
    run_filter,
    systematic_resample,
)
from .models import (
    LgssParams,
    LinearGaussianModel,
    PoissonCountModel,
    StateSpaceModel,
    load_earthquake_data,
    make_lgss,
    make_poisson_model,
    simulate_lgss,
)
from .oracle import finite_diff, finite_diff_hessian, grid_posterior, kalman_loglik, rts_exact_gradient
from .sampler import (
    ChainTrace,
    HybridPolicy,
    PreconditionedPolicy,
    ProposalSpec,
    StandardPolicy,
    acceptance_log_prob,
    acceptance_log_ratio,
    hybrid_replace,
    log_proposal_density,
    proposal_mean_cov,
    run_chain,
    save_chain_csv,
    step_matrix,
)
from .smoothing import (
    PosteriorInfo,
    compute_posterior_info,
    estimate_gradient,
    estimate_neg_hessian,
    lagged_ancestry,
    lineage_scores,
    regularize_standard,
    trace_ancestor,
)

__version__ = "0.1.0"

__all__ = [
    "ChainTrace",
    "DegenerateWeightsError",
    "FilterCollapseError",
    "FilterConfig",
    "FilterOutput",
    "HybridPolicy",
    "IactResult",
    "LgssParams",
    "LinearGaussianModel",
    "ParticleMetropolisHastings",
    "PoissonCountModel",
    "PosteriorInfo",
    "PreconditionedPolicy",
    "ProposalSpec",
    "StandardPolicy",
    "StateSpaceModel",
    "acceptance_log_prob",
    "acceptance_log_ratio",
    "compute_posterior_info",
    "estimate_gradient",
    "estimate_log_likelihood",
    "estimate_neg_hessian",
    "finite_diff",
    "finite_diff_hessian",
    "grid_posterior",
    "hybrid_replace",
    "iact",
    "kalman_loglik",
    "lagged_ancestry",
    "lineage_scores",
    "load_earthquake_data",
    "log_l1_error",
    "log_proposal_density",
    "make_lgss",
    "make_poisson_model",
    "proposal_mean_cov",
    "regularize_standard",
    "rts_exact_gradient",
    "run_chain",
    "run_filter",
    "save_chain_csv",
    "simulate_lgss",
    "step_matrix",
    "summarize",
    "systematic_resample",
    "trace_ancestor",
]
